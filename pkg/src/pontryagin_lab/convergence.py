"""Ladder experiments: generalized strong convergence of the approximating evolutions.

For an operator ``A`` on the triple space and its approximations ``A_n`` on
``B_n`` the measured quantity is ``||P_n A v - A_n P_n v||`` in the majorant
norm of ``B_n``.  The verdict on a ladder of indices ``n`` is a trend test:
the least-squares slope of ``log error`` against ``log n`` must be negative
and the error must drop by at least ``drop`` from the first to the last rung.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .approx import ApproxSpace
from .errors import LabError, SingularResolventError
from .exact import LAMBDA0_CANDIDATES, Hamiltonian, a_limit, build_hamiltonian
from .pontryagin import PontryaginSpace, quadratic_norms
from .spectral import SpectralModel, build_family

__all__ = [
    "Probe",
    "Experiment",
    "LadderConfig",
    "Row",
    "Verdict",
    "ConvergenceReport",
    "trend_verdict",
    "pn_strong_error",
    "class_membership_error",
    "run_schrodinger_ladder",
    "run_parabolic_ladder",
    "run_hyperbolic_ladder",
    "run_resolvent_convergence",
    "run_projection_ladder",
    "run_m0_reduction",
    "worker_count",
]

WORKERS_ENV = "PONTRYAGIN_LAB_WORKERS"


def worker_count(default: int = 1) -> int:
    """Worker count from the environment, at least 1."""
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, default)))
    except ValueError:
        return default


@dataclass(frozen=True)
class Probe:
    name: str
    vector: np.ndarray


@dataclass(frozen=True)
class Row:
    """One ladder measurement.  ``param`` is ``t`` or ``lambda``."""

    check: str
    series: str
    n: int
    param: float
    probe: str
    error: float
    error_euclid: float
    status: str = "ok"


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    slope: float
    ratio: float
    detail: str = ""


@dataclass
class ConvergenceReport:
    check: str
    rows: list[Row] = field(default_factory=list)
    verdicts: list[Verdict] = field(default_factory=list)
    constants: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def series(self, series: str, param: float) -> tuple[np.ndarray, np.ndarray]:
        """Ladder indices and max-over-probes errors for one curve."""
        sel = [r for r in self.rows if r.series == series and r.param == param and r.status == "ok"]
        ns = sorted({r.n for r in sel})
        errs = [max(r.error for r in sel if r.n == n) for n in ns]
        return np.array(ns), np.array(errs)


def trend_verdict(
    name: str, ns: Sequence[int], errors: Sequence[float], *, drop: float = 10.0, zero_tol: float = 1e-12
) -> Verdict:
    """Negative log-log slope and at least ``drop``-fold decrease.

    A curve that is zero to ``zero_tol`` everywhere passes as exact.
    """
    ns = np.asarray(ns, dtype=float)
    e = np.asarray(errors, dtype=float)
    if e.size == 0:
        return Verdict(name, False, float("nan"), float("nan"), "no data")
    if not np.all(np.isfinite(e)):
        return Verdict(name, False, float("nan"), float("nan"), "non-finite error")
    if e.max() <= zero_tol:
        return Verdict(name, True, 0.0, float("inf"), "exact")
    if e.size < 2 or np.any(e <= 0):
        return Verdict(name, False, float("nan"), float("nan"), "cannot fit a trend")
    slope = float(np.polyfit(np.log(ns), np.log(e), 1)[0])
    ratio = float(e[0] / e[-1])
    ok = slope < 0 and ratio >= drop
    return Verdict(name, ok, slope, ratio, "trend")


# ----------------------------------------------------------------- setup

class Experiment:
    """Exact side of a ladder: space, operator, probes and majorant data.

    Parameters
    ----------
    model : SpectralModel
        Surrogate.
    g_targets : sequence of float
        Renormalized parameters ``g_1..g_k``.
    noise : float
        Amplitude of the ``noise / n`` perturbation of the counterterms.
    lambda0 : float, optional
        Construction point of the exact operator; also used to transport the
        negative subspace.  Default is the first admissible candidate.
    seed : int
        Seed for the random probes and, if requested, a random ``L_m``.
    n_random : int
        Number of random regular probes.
    random_subspace : bool
        Draw a random admissible negative subspace instead of the
        eigenvector choice.
    """

    def __init__(
        self,
        model: SpectralModel,
        g_targets: Sequence[float],
        *,
        alpha: float | None = None,
        noise: float = 0.0,
        lambda0: float | None = None,
        seed: int = 0,
        n_random: int = 3,
        random_subspace: bool = False,
    ):
        self.model = model
        self.g_targets = np.asarray(g_targets, dtype=float)
        self.alpha = alpha
        self.noise = noise
        self.seed = seed
        self.space = PontryaginSpace(model, self.g_targets)
        if random_subspace:
            rng = np.random.default_rng([seed, 1])
            basis = self.space.choose_negative_subspace(rng=rng)
            self.neg_basis = basis
            self.majorant = self.space.majorant_for(basis)
        else:
            self.neg_basis = self.space.negative_basis
            self.majorant = self.space.majorant
        self.hamiltonian: Hamiltonian = build_hamiltonian(self.space, lambda0)
        self.probes = default_probes(self.space, seed, n_random)
        self._g_scale = float(np.abs(self.space.gram_reg[1 : 2 * self.space.m + 2]).max())

    def approx(self, n: int) -> ApproxSpace:
        fam = build_family(self.model, n, self.g_targets, alpha=self.alpha, noise=self.noise)
        return ApproxSpace(fam)

    def norm_gram(self, approx: ApproxSpace):
        """Transported majorant, scanning the admissible construction points.

        The first candidate whose transported subspace is negative definite
        in ``B_n`` wins; if none is, the Euclidean fallback is returned.
        """
        h = self.hamiltonian
        cands = [h.lambda0] + [x for x in LAMBDA0_CANDIDATES if x != h.lambda0]
        result = None
        for lam in cands:
            if abs(a_limit(self.space, lam)) <= 1e-6 * self._g_scale:
                continue
            try:
                result = approx.transported_majorant(h, self.neg_basis, lam)
            except (LabError, np.linalg.LinAlgError):
                continue
            if not result.fallback:
                return result
        if result is None:
            result = approx.transported_majorant(h, self.neg_basis, h.lambda0)
        return result

    def probe_matrix(self, probes: Sequence[Probe] | None = None) -> tuple[list[str], np.ndarray]:
        probes = self.probes if probes is None else probes
        return [p.name for p in probes], np.array([p.vector for p in probes]).T


def default_probes(space: PontryaginSpace, seed: int, n_random: int = 3) -> list[Probe]:
    """Unit ``gamma``/``rho`` directions and seeded smooth random regular parts."""
    m, dim = space.m, space.dim
    probes = []
    for s in range(m):
        v = np.zeros(dim, complex)
        v[s] = 1.0
        probes.append(Probe(f"gamma{s + 1}", v))
    for s in range(m):
        v = np.zeros(dim, complex)
        v[m + s] = 1.0
        probes.append(Probe(f"rho{s + 1}", v))
    rng = np.random.default_rng(seed)
    lam = space.model.eigenvalues
    for i in range(n_random):
        p = rng.standard_normal(space.N) / lam**2
        v = np.zeros(dim, complex)
        v[2 * m :] = p / np.linalg.norm(p)
        probes.append(Probe(f"phi{i}", v))
    return probes


@dataclass(frozen=True)
class LadderConfig:
    n_values: tuple[int, ...] = (4, 8, 16, 32, 64, 128, 256)
    t_values: tuple[float, ...] = (0.5, 1.0)
    kind: str = "schrodinger"
    lambda_values: tuple[float, ...] = ()
    probes: tuple[Probe, ...] | None = None
    drop: float = 10.0

    def __post_init__(self):
        ns = tuple(int(n) for n in self.n_values)
        if not ns or list(ns) != sorted(set(ns)) or ns[0] < 1:
            raise ValueError("n_values must be nonempty, strictly ascending and positive")
        object.__setattr__(self, "n_values", ns)
        object.__setattr__(self, "t_values", tuple(float(t) for t in self.t_values))
        object.__setattr__(self, "lambda_values", tuple(float(x) for x in self.lambda_values))


# --------------------------------------------------------------- metrics

def pn_strong_error(space_n: ApproxSpace, a_n: np.ndarray, a: np.ndarray, v: np.ndarray, gram=None):
    """``||P_n A v - A_n P_n v||`` (columnwise for a matrix ``v``)."""
    g = np.eye(space_n.dim) if gram is None else gram
    diff = space_n.P @ (a @ v) - a_n @ (space_n.P @ v)
    return quadratic_norms(g, diff)


def class_membership_error(space_n: ApproxSpace, u_n: np.ndarray, u: np.ndarray, gram=None):
    """``||u_n - P_n u||``."""
    g = np.eye(space_n.dim) if gram is None else gram
    return quadratic_norms(g, np.asarray(u_n) - space_n.P @ np.asarray(u))


def _map(fn: Callable, items, workers: int | None):
    workers = worker_count() if workers is None else max(1, workers)
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _sorted_rows(rows: list[Row]) -> list[Row]:
    return sorted(rows, key=lambda r: (r.series, r.n, r.param, r.probe))


def _operator_norm(gram_out: np.ndarray, op: np.ndarray, gram_in: np.ndarray) -> float:
    co = np.linalg.cholesky(gram_out).conj().T
    ci = np.linalg.cholesky(gram_in).conj().T
    return float(np.linalg.norm(co @ op @ np.linalg.inv(ci), 2))


def _evolution_ladder(exp: Experiment, ladder: LadderConfig, check: str, workers: int | None):
    names, phi = exp.probe_matrix(ladder.probes)
    h = exp.hamiltonian
    kind = ladder.kind
    exact_ops = {}
    for t in ladder.t_values:
        if kind == "hyperbolic":
            v, w = h.cosine_family(t)
            exact_ops[("V", t)], exact_ops[("W", t)] = v, w
        else:
            exact_ops[("U", t)] = h.propagator(kind, t)

    def one(n):
        rows, consts = [], {}
        try:
            sp = exp.approx(n)
            norm = exp.norm_gram(sp)
        except LabError as err:
            return [Row(check, s, n, t, p, float("nan"), float("nan"), f"failed: {err}")
                    for (s, t) in exact_ops for p in names], {}
        consts["fallback"] = norm.fallback
        consts["P_norm"] = _operator_norm(norm.gram, sp.P, exp.majorant)
        growth = []
        for (series, t), op in exact_ops.items():
            try:
                if kind == "hyperbolic":
                    vn, wn = sp.cosine_family(t)
                    op_n = vn if series == "V" else wn
                else:
                    op_n = sp.propagator(kind, t)
                    if t > 0:
                        growth.append(float(np.log(_operator_norm(norm.gram, op_n, norm.gram)) / t))
            except LabError as err:
                rows += [Row(check, series, n, t, p, float("nan"), float("nan"), f"failed: {err}") for p in names]
                continue
            err_j = pn_strong_error(sp, op_n, op, phi, norm.gram)
            err_e = pn_strong_error(sp, op_n, op, phi)
            rows += [Row(check, series, n, t, p, float(a), float(b)) for p, a, b in zip(names, err_j, err_e)]
        consts["growth_rate"] = max(growth) if growth else 0.0
        return rows, consts

    results = _map(one, ladder.n_values, workers)
    report = ConvergenceReport(check)
    per_n = {}
    for n, (rows, consts) in zip(ladder.n_values, results):
        report.rows += rows
        per_n[n] = consts
    report.rows = _sorted_rows(report.rows)
    for series, t in exact_ops:
        ns, errs = report.series(series, t)
        name = f"{check} {series} t={t:g}"
        if len(ns) < len(ladder.n_values):
            report.verdicts.append(Verdict(name, False, float("nan"), float("nan"), "failed rows"))
        else:
            report.verdicts.append(trend_verdict(name, ns, errs, drop=ladder.drop))
    report.constants = {
        "majorant_fallback_n": [n for n, c in per_n.items() if c.get("fallback")],
        "max_P_norm": max((c.get("P_norm", 0.0) for c in per_n.values()), default=0.0),
        "max_growth_rate": max((c.get("growth_rate", 0.0) for c in per_n.values()), default=0.0),
    }
    if kind == "parabolic":
        report.constants["exact_growth_rate"] = exp.hamiltonian.growth_rate(
            [t for t in ladder.t_values if t > 0]
        )
    return report


def run_schrodinger_ladder(exp: Experiment, ladder: LadderConfig, workers: int | None = None) -> ConvergenceReport:
    """Schrodinger ladder: ``||U_n(t) P_n Phi - P_n U(t) Phi||``."""
    return _evolution_ladder(exp, _with_kind(ladder, "schrodinger"), "schrodinger", workers)


def run_parabolic_ladder(exp: Experiment, ladder: LadderConfig, workers: int | None = None) -> ConvergenceReport:
    """Parabolic ladder: ``||e^{-tA_n} P_n Phi - P_n e^{-tH} Phi||``."""
    return _evolution_ladder(exp, _with_kind(ladder, "parabolic"), "parabolic", workers)


def run_hyperbolic_ladder(exp: Experiment, ladder: LadderConfig, workers: int | None = None) -> ConvergenceReport:
    """Hyperbolic ladder for the ``V`` and ``W`` blocks separately."""
    return _evolution_ladder(exp, _with_kind(ladder, "hyperbolic"), "hyperbolic", workers)


def _with_kind(ladder: LadderConfig, kind: str) -> LadderConfig:
    if ladder.kind == kind:
        return ladder
    return LadderConfig(ladder.n_values, ladder.t_values, kind, ladder.lambda_values, ladder.probes, ladder.drop)


def run_resolvent_convergence(
    exp: Experiment, ladder: LadderConfig, workers: int | None = None, a_tol: float = 1e-8
) -> ConvergenceReport:
    """``||(A_n + lam)^-1 P_n Phi - P_n (H + lam)^-1 Phi||`` for each ``lam``.

    Values of ``lam`` where ``a(lam)`` (or any ``a_n(lam)``) nearly vanishes
    are recorded as skipped rows.
    """
    check = "resolvent"
    names, phi = exp.probe_matrix(ladder.probes)
    scale = max(1.0, float(np.abs(exp.space.gram_reg[1 : 2 * exp.space.m + 2]).max()))
    exact, skipped = {}, {}
    for lam in ladder.lambda_values:
        a_val = a_limit(exp.space, lam)
        if abs(a_val) <= a_tol * scale or lam <= -exp.model.eigenvalues[0]:
            skipped[lam] = f"skipped: a({lam:g}) = {a_val:.3g} is numerically zero"
            continue
        exact[lam] = exp.hamiltonian.resolvent(lam)

    def one(n):
        sp = exp.approx(n)
        norm = exp.norm_gram(sp)
        rows = []
        for lam in ladder.lambda_values:
            if lam in skipped:
                rows += [Row(check, "R", n, lam, p, float("nan"), float("nan"), skipped[lam]) for p in names]
                continue
            try:
                if abs(sp.a_n(lam)) <= a_tol * scale:
                    raise SingularResolventError(f"a_n({lam:g}) vanishes")
                rn = sp.resolvent_direct(lam)
            except LabError as err:
                rows += [Row(check, "R", n, lam, p, float("nan"), float("nan"), f"skipped: {err}") for p in names]
                continue
            ej = pn_strong_error(sp, rn, exact[lam], phi, norm.gram)
            ee = pn_strong_error(sp, rn, exact[lam], phi)
            rows += [Row(check, "R", n, lam, p, float(a), float(b)) for p, a, b in zip(names, ej, ee)]
        return rows

    report = ConvergenceReport(check)
    for rows in _map(one, ladder.n_values, workers):
        report.rows += rows
    report.rows = _sorted_rows(report.rows)
    for lam in exact:
        ns, errs = report.series("R", lam)
        name = f"{check} lambda={lam:g}"
        if len(ns) < len(ladder.n_values):
            report.verdicts.append(Verdict(name, False, float("nan"), float("nan"), "failed rows"))
        else:
            report.verdicts.append(trend_verdict(name, ns, errs, drop=ladder.drop))
    report.constants = {"skipped_lambda": {f"{k:g}": v for k, v in skipped.items()}}
    return report


def run_projection_ladder(
    exp: Experiment, ladder: LadderConfig, workers: int | None = None, exact_tol: float = 1e-12
) -> ConvergenceReport:
    """``||Q_n P_n Phi - Phi||`` and ``|<P_n Phi, P_n Phi> - <Phi, Phi>|`` along the ladder.

    For odd ``k`` both must vanish to ``exact_tol``; for even ``k`` they must
    decrease monotonically and drop by ``ladder.drop``.
    """
    check = "projection"
    names, phi = exp.probe_matrix(ladder.probes)
    g = exp.space.gram

    def one(n):
        sp = exp.approx(n)
        qp = quadratic_norms(exp.majorant, sp.Q @ sp.P @ phi - phi)
        pphi = sp.P @ phi
        lhs = np.einsum("ij,ik,kj->j", pphi.conj(), sp.gram, pphi)
        rhs = np.einsum("ij,ik,kj->j", phi.conj(), g, phi)
        defect = np.abs(lhs - rhs)
        qpe = np.linalg.norm(sp.Q @ sp.P @ phi - phi, axis=0)
        return [Row(check, "QP", n, 0.0, p, float(a), float(b)) for p, a, b in zip(names, qp, qpe)] + [
            Row(check, "product", n, 0.0, p, float(a), float(a)) for p, a in zip(names, defect)
        ]

    report = ConvergenceReport(check)
    for rows in _map(one, ladder.n_values, workers):
        report.rows += rows
    report.rows = _sorted_rows(report.rows)
    for series in ("QP", "product"):
        ns, errs = report.series(series, 0.0)
        name = f"{check} {series}"
        if errs.max() <= exact_tol:
            report.verdicts.append(Verdict(name, True, 0.0, float("inf"), "exact"))
        elif exp.model.k % 2 == 1:
            report.verdicts.append(Verdict(name, False, float("nan"), float("nan"), f"odd k but max {errs.max():.3g}"))
        else:
            v = trend_verdict(name, ns, errs, drop=ladder.drop)
            mono = bool(np.all(np.diff(errs) < 0))
            report.verdicts.append(Verdict(name, v.passed and mono, v.slope, v.ratio, "monotone" if mono else "not monotone"))
    return report


def run_m0_reduction(
    model: SpectralModel,
    g1: float,
    n_values: Sequence[int],
    t_values: Sequence[float],
    *,
    seed: int = 0,
    n_probes: int = 3,
    tol: float = 1e-9,
) -> ConvergenceReport:
    """Compare the ``k = 1`` system with the rank-one equation ``i psi' = (T + g_n chi_n chi_n^T) psi``.

    ``g_n = 1 / z_0``.  The reference is integrated through the eigenbasis of
    the real symmetric rank-one perturbed matrix, independent of the
    generator and of the matrix exponential.
    """
    if model.k != 1:
        raise ValueError("the rank-one comparison needs k = 1")
    rng = np.random.default_rng(seed)
    psi0 = rng.standard_normal((model.dim, n_probes)) / model.eigenvalues[:, None]
    psi0 /= np.linalg.norm(psi0, axis=0)
    report = ConvergenceReport("m0-reduction")
    worst = 0.0
    for n in n_values:
        fam = build_family(model, n, [g1])
        sp = ApproxSpace(fam)
        g_n = 1.0 / fam.z[0]
        w, v = np.linalg.eigh(np.diag(model.eigenvalues) + g_n * np.outer(fam.chi_n, fam.chi_n))
        for t in t_values:
            ref = v @ (np.exp(-1j * w * t)[:, None] * (v.T @ psi0))
            got = sp.propagator("schrodinger", t) @ psi0
            err = np.linalg.norm(got - ref, axis=0)
            worst = max(worst, float(err.max()))
            report.rows += [Row("m0-reduction", "U", n, float(t), f"psi{i}", float(e), float(e)) for i, e in enumerate(err)]
    report.rows = _sorted_rows(report.rows)
    report.verdicts.append(Verdict("m0-reduction", worst <= tol, float("nan"), float("nan"), f"max error {worst:.3g}"))
    report.constants = {"max_error": worst}
    return report
