"""Exact operator ``H`` on the indefinite space and its evolution groups.

``H`` is recovered from the closed-form resolvent ``R(lam) = (H + lam)^-1``.

For even ``k`` the surrogate introduces one artefact: the vector
``u = T^-m chi`` has finite norm, and ``R(lam)`` then annihilates the
direction ``v = (e_m, (G_{m+s})_s, u)`` while its range is the hyperplane
``Pi' = {rho_m = (u, phi)}``.  (With a genuinely divergent moment ``|u| = inf``
and the hyperplane is the whole space.)  ``H`` is taken to act as the inverse
resolvent on ``Pi'`` and to send the complementary direction
``e_w = (0, 0, u)`` to zero.  The result does not depend on ``lam``; it is
the limit of the approximating generators on every probe we tried.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import matfun
from .elimination import rescaled_a, solve_resolvent_system
from .errors import IllConditionedError, SingularResolventError
from .pontryagin import PontryaginSpace, PontryaginVector
from .spectral import moment

__all__ = [
    "ResolventExact",
    "Hamiltonian",
    "a_limit",
    "a_roots",
    "default_lambda0",
    "resolvent_exact",
    "build_hamiltonian",
    "evolve_schrodinger",
    "evolve_parabolic",
    "evolve_hyperbolic",
]

LAMBDA0_CANDIDATES = (0.0, 1.0, 2.0, 5.0, 10.0)


def _g_scale(space: PontryaginSpace) -> float:
    return float(np.max(np.abs(space.gram_reg[1 : 2 * space.m + 2])))


def a_limit(space: PontryaginSpace, lam: float) -> float:
    """Rescaled function ``(-lam)^{2m} a(lam)``.

    ``sum_{s=1}^{2m+1} G_s (-lam)^{s-1} - lam (-lam)^{2m} (chi, T^{-2m-1} (T+lam)^-1 chi)``;
    it equals ``g_1`` at ``lam = 0``.
    """
    return rescaled_a(space.gram_reg, space.chi, space.model.eigenvalues, space.m, lam)


def a_roots(space: PontryaginSpace, grid: np.ndarray) -> list[float]:
    """Zeros of ``a_limit`` bracketed by sign changes on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    vals = np.array([a_limit(space, x) for x in grid])
    roots = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        roots.append(float(brentq(lambda x: a_limit(space, x), grid[i], grid[i + 1], xtol=1e-14)))
    roots += [float(x) for x, v in zip(grid, vals) if v == 0.0]
    return sorted(roots)


def default_lambda0(space: PontryaginSpace) -> float:
    """Smallest candidate with ``|a(lam)| > 1e-6 max|g_s|``."""
    scale = _g_scale(space)
    for lam in LAMBDA0_CANDIDATES:
        if abs(a_limit(space, lam)) > 1e-6 * scale:
            return lam
    raise SingularResolventError("no admissible lambda0 among the candidates")


@dataclass(frozen=True)
class ResolventExact:
    lam: float
    matrix: np.ndarray
    a_value: float


def _limit_data(space: PontryaginSpace):
    m = space.m
    gs = space.gram_reg
    ztop = space.G(2 * m + 1) - moment(space.model, space.chi, 2 * m + 1)
    return gs, ztop


def resolvent_exact(space: PontryaginSpace, lam: float) -> ResolventExact:
    """Dense matrix of ``R(lam)`` on the flat layout."""
    a_val = a_limit(space, lam)
    if abs(a_val) <= 1e-12 * max(_g_scale(space), 1.0):
        raise SingularResolventError(f"a(lambda) vanishes at lambda = {lam}")
    if lam <= -space.model.eigenvalues[0]:
        raise SingularResolventError(f"T + lambda is not invertible at lambda = {lam}")
    gs, ztop = _limit_data(space)
    mat, _ = solve_resolvent_system(
        gs, space.chi, space.model.eigenvalues, space.m, ztop, lam, np.eye(space.dim)
    )
    return ResolventExact(float(lam), mat, a_val)


@dataclass(frozen=True)
class Hamiltonian:
    """Exact operator on the flat layout.

    ``constraint`` is the row functional ``ell`` whose kernel is the invariant
    hyperplane ``Pi'`` (``None`` for odd ``k``, where ``Pi' `` is everything).
    """

    matrix: np.ndarray
    lambda0: float
    space: PontryaginSpace = field(repr=False)
    constraint: np.ndarray | None = field(default=None, repr=False)

    def invariant_basis(self) -> np.ndarray:
        """Orthonormal (Euclidean) basis of ``Pi'`` as columns."""
        if self.constraint is None:
            return np.eye(self.space.dim, dtype=complex)
        _, _, vh = np.linalg.svd(self.constraint[None, :].conj())
        return vh[1:].conj().T

    def propagator(self, kind: str, t: float) -> np.ndarray:
        return matfun.propagator(self.matrix, kind, t)

    def cosine_family(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        return matfun.cosine_family(self.matrix, t)

    def resolvent(self, lam: float) -> np.ndarray:
        return np.linalg.inv(self.matrix + lam * np.eye(self.space.dim))

    def j_selfadjoint_defect(self, basis: np.ndarray | None = None) -> float:
        """``max |<H e_i, e_j> - <e_i, H e_j>|`` over ``basis`` (default ``Pi'``)."""
        b = self.invariant_basis() if basis is None else basis
        g = self.space.gram
        hb = self.matrix @ b
        lhs = hb.conj().T @ g @ b
        rhs = b.conj().T @ g @ hb
        return float(np.abs(lhs - rhs).max())

    def spectral_data(self) -> dict:
        w = np.linalg.eigvals(self.matrix)
        w = w[np.lexsort((w.imag, w.real))]
        return {
            "eigenvalues_real": w.real.tolist(),
            "eigenvalues_imag": w.imag.tolist(),
            "max_abs_imag": float(np.abs(w.imag).max()),
            "min_real": float(w.real.min()),
        }

    def growth_rate(self, ts, kind: str = "parabolic") -> float:
        """Measured ``max_t log(||e^{-tH}||) / t`` in the majorant norm."""
        rates = []
        for t in ts:
            if t <= 0:
                continue
            nrm = self.space.operator_norm(self.propagator(kind, t))
            rates.append(np.log(nrm) / t)
        return float(max(rates)) if rates else 0.0


def build_hamiltonian(space: PontryaginSpace, lambda0: float | None = None) -> Hamiltonian:
    """Invert the resolvent at ``lambda0`` (default: first admissible candidate)."""
    lam0 = default_lambda0(space) if lambda0 is None else float(lambda0)
    res = resolvent_exact(space, lam0)
    dim = space.dim
    eye = np.eye(dim)
    m = space.m
    if space.k % 2 == 1 or m == 0:
        if np.linalg.cond(res.matrix) > 1e12:
            raise IllConditionedError(f"R({lam0}) is numerically singular")
        h = np.linalg.inv(res.matrix) - lam0 * eye
        return Hamiltonian(h, lam0, space, None)

    lam_t, chi = space.model.eigenvalues, space.chi
    u = chi * lam_t ** (-m)
    mu = float(u @ u)
    e_w = np.zeros(dim)
    e_w[2 * m :] = u
    ell = np.zeros(dim)
    ell[2 * m - 1] = -1.0 / mu
    ell[2 * m :] = u / mu
    proj = eye - np.outer(e_w, ell)
    s_mat = res.matrix @ proj + np.outer(e_w, ell)
    if np.linalg.cond(s_mat) > 1e12:
        raise IllConditionedError(f"extended resolvent at {lam0} is numerically singular")
    h = np.linalg.inv(s_mat) - np.outer(e_w, ell) - lam0 * proj
    return Hamiltonian(h, lam0, space, ell)


def _flat(space: PontryaginSpace, v) -> np.ndarray:
    return v.flat() if isinstance(v, PontryaginVector) else np.asarray(v, dtype=complex)


def evolve_schrodinger(h: Hamiltonian, t: float, phi0) -> PontryaginVector:
    """``exp(-i H t) Phi0``."""
    return h.space.vector(h.propagator("schrodinger", t) @ _flat(h.space, phi0))


def evolve_parabolic(h: Hamiltonian, t: float, phi0) -> PontryaginVector:
    """``exp(-H t) Phi0``."""
    return h.space.vector(h.propagator("parabolic", t) @ _flat(h.space, phi0))


def evolve_hyperbolic(h: Hamiltonian, t: float, phi0, phidot0) -> tuple[PontryaginVector, PontryaginVector]:
    """Solution and velocity of ``-Phi'' = H Phi`` at time ``t``."""
    n = h.space.dim
    flow = matfun.second_order_flow(h.matrix, t)
    state = flow @ np.concatenate([_flat(h.space, phi0), _flat(h.space, phidot0)])
    return h.space.vector(state[:n]), h.space.vector(state[n:])
