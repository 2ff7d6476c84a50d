"""Finite diagonal surrogate of a positive operator ``T`` and a singular vector ``chi``.

Everything lives in the eigenbasis of ``T``: the operator is the vector of its
eigenvalues and ``chi`` is the vector of its coefficients.  Strong singularity
of ``chi`` is emulated by a heavy coefficient tail, so that the moment
``(chi, T^-k chi)`` is large while ``(chi, T^-(k+1) chi)`` stays moderate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import InvalidModelError

__all__ = [
    "SpectralModel",
    "RegularizedFamily",
    "SingularTrend",
    "build_model",
    "moment",
    "regularize",
    "counterterms",
    "build_family",
    "verify_singular_trend",
]


@dataclass(frozen=True)
class SpectralModel:
    """Diagonal surrogate of ``(T, chi)``.

    Attributes
    ----------
    eigenvalues : ndarray
        Spectrum of ``T``, strictly positive and nondecreasing.
    amplitudes : ndarray
        Coefficients of ``chi`` in the eigenbasis.
    k : int
        Singularity order, ``k >= 1``.
    a_shift : float
        Constant shift used by the generator law; informational only.
    """

    eigenvalues: np.ndarray
    amplitudes: np.ndarray
    k: int
    a_shift: float = 0.0

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float).copy()
        x = np.asarray(self.amplitudes, dtype=float).copy()
        if lam.ndim != 1 or x.ndim != 1:
            raise InvalidModelError("eigenvalues and amplitudes must be one-dimensional")
        if lam.size == 0:
            raise InvalidModelError("surrogate dimension must be positive")
        if lam.size != x.size:
            raise InvalidModelError(
                f"eigenvalues ({lam.size}) and amplitudes ({x.size}) differ in length"
            )
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise InvalidModelError("eigenvalues must be finite and strictly positive")
        if np.any(np.diff(lam) < 0):
            raise InvalidModelError("eigenvalues must be nondecreasing")
        if not np.all(np.isfinite(x)):
            raise InvalidModelError("amplitudes must be finite")
        if int(self.k) != self.k or self.k < 1:
            raise InvalidModelError(f"singularity order k must be a positive integer, got {self.k}")
        lam.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "amplitudes", x)
        object.__setattr__(self, "k", int(self.k))

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def m(self) -> int:
        """Number of negative squares, ``floor(k / 2)``."""
        return self.k // 2

    def apply_power(self, vec: np.ndarray, s: float) -> np.ndarray:
        """Return ``T^s vec`` (componentwise, works column-wise on 2-D input)."""
        w = self.eigenvalues**s
        vec = np.asarray(vec)
        return w * vec if vec.ndim == 1 else w[:, None] * vec

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "k": self.k,
            "m": self.m,
            "a_shift": self.a_shift,
            "eigenvalues": self.eigenvalues.tolist(),
            "amplitudes": self.amplitudes.tolist(),
        }


def moment(model: SpectralModel, chi: np.ndarray, s: float) -> float:
    """Raw moment ``(chi, T^-s chi) = sum_j chi_j**2 / lambda_j**s``."""
    chi = np.asarray(chi)
    return float(np.sum(np.abs(chi) ** 2 / model.eigenvalues**s))


def regularize(model: SpectralModel, n: int, chi: np.ndarray | None = None) -> np.ndarray:
    """Smoothed vector ``chi_n = exp(-T/n) chi``."""
    if n < 1:
        raise ValueError(f"regularization index must be >= 1, got {n}")
    chi = model.amplitudes if chi is None else np.asarray(chi)
    return chi * np.exp(-model.eigenvalues / n)


def counterterms(
    model: SpectralModel,
    chi_n: np.ndarray,
    g_targets: Sequence[float],
    *,
    noise: float = 0.0,
    n: int | None = None,
) -> np.ndarray:
    """Counterterms ``z_0 .. z_{k-1}`` cancelling the divergent moments of ``chi_n``.

    With the exact scheme ``z_{l-1} = g_l - (chi_n, T^-l chi_n)`` for
    ``l = 1..k``.  A nonzero ``noise`` adds ``noise / n`` to every entry.
    """
    g = np.asarray(g_targets, dtype=float)
    if g.shape != (model.k,):
        raise ValueError(f"expected {model.k} target values, got {g.size}")
    z = np.array([g[l - 1] - moment(model, chi_n, l) for l in range(1, model.k + 1)])
    if noise:
        if n is None:
            raise ValueError("the noisy scheme needs the regularization index n")
        z = z + noise / n
    return z


@dataclass(frozen=True)
class RegularizedFamily:
    """Data of the approximating problem at one regularization index ``n``."""

    n: int
    chi_n: np.ndarray
    z: np.ndarray
    g_targets: np.ndarray
    alpha: float | None
    g_n_moments: np.ndarray
    model: SpectralModel = field(repr=False)

    @property
    def k(self) -> int:
        return self.model.k

    @property
    def m(self) -> int:
        return self.model.m

    def z_at(self, l: int) -> float:
        """Counterterm ``z_l``, zero for ``l >= k``."""
        return float(self.z[l]) if 0 <= l < self.k else 0.0

    def g_n(self, l: int) -> float:
        """Regularized moment ``(chi_n, T^-l chi_n) + z_{l-1}`` for any ``l >= 1``."""
        return moment(self.model, self.chi_n, l) + self.z_at(l - 1)


def build_family(
    model: SpectralModel,
    n: int,
    g_targets: Sequence[float],
    *,
    alpha: float | None = None,
    noise: float = 0.0,
) -> RegularizedFamily:
    """Assemble ``chi_n`` and its counterterms for index ``n``."""
    g = np.asarray(g_targets, dtype=float)
    if alpha is not None:
        if alpha == 0:
            raise ValueError("alpha = 0 is outside the supported range")
        if not np.isclose(g[0], -1.0 / alpha, rtol=1e-12, atol=0.0):
            raise ValueError(f"g_1 = {g[0]} is inconsistent with alpha = {alpha} (need g_1 = -1/alpha)")
    chi_n = regularize(model, n)
    z = counterterms(model, chi_n, g, noise=noise, n=n)
    fam = RegularizedFamily(n, chi_n, z, g, alpha, np.empty(0), model)
    gm = np.array([fam.g_n(l) for l in range(1, 2 * model.m + 2)])
    return RegularizedFamily(n, chi_n, z, g, alpha, gm, model)


# ---------------------------------------------------------------- generators

def _power_law(cfg: Mapping[str, Any], d: float | None) -> tuple[np.ndarray, np.ndarray]:
    n_modes = int(cfg.get("N", 200))
    if n_modes <= 0:
        raise InvalidModelError("N must be positive")
    a = float(cfg.get("a", 1.0))
    if "exponent" in cfg:
        expo = float(cfg["exponent"])
    elif d is not None:
        expo = 2.0 / d
    else:
        raise InvalidModelError("the power law needs either 'exponent' or 'd'")
    j = np.arange(1, n_modes + 1, dtype=float)
    lam = a + j**expo
    x = j ** float(cfg.get("amplitude_exponent", 0.0))
    return lam, x


def _shell_law(cfg: Mapping[str, Any], d: float | None) -> tuple[np.ndarray, np.ndarray]:
    # Log-spaced radial shells: lambda = a + p^2, weight p^d * dlog(p).
    if d is None:
        raise InvalidModelError("the shell law needs 'd'")
    n_modes = int(cfg.get("N", 50))
    if n_modes <= 1:
        raise InvalidModelError("the shell law needs N >= 2")
    a = float(cfg.get("a", 1.0))
    p_min, p_max = float(cfg.get("p_min", 0.05)), float(cfg.get("p_max", 5.0))
    if not 0 < p_min < p_max:
        raise InvalidModelError("need 0 < p_min < p_max")
    lp = np.linspace(np.log(p_min), np.log(p_max), n_modes)
    p = np.exp(lp)
    lam = a + p**2
    x = np.sqrt(p**d * (lp[1] - lp[0]))
    return lam, x


def build_model(cfg: Mapping[str, Any]) -> SpectralModel:
    """Build a surrogate from a model configuration mapping.

    Either explicit ``eigenvalues`` and ``amplitudes`` are given, or a
    generator ``law`` (``"power"``: ``a + j**exponent`` with flat or power
    amplitudes, ``"shell"``: log-spaced radial shells).  The order ``k`` is
    taken from ``k`` or derived as ``floor(d / 2)``.
    """
    d = cfg.get("d")
    d = None if d is None else float(d)
    k = cfg.get("k")
    if k is None:
        if d is None:
            raise InvalidModelError("either k or d must be given")
        k = int(np.floor(d / 2))
    elif d is not None and int(k) != int(np.floor(d / 2)):
        raise InvalidModelError(f"k = {k} is inconsistent with d = {d}")
    if int(k) < 1:
        raise InvalidModelError(f"singularity order k must be >= 1, got {k}")

    if "eigenvalues" in cfg or "amplitudes" in cfg:
        lam = np.asarray(cfg.get("eigenvalues", []), dtype=float)
        x = np.asarray(cfg.get("amplitudes", []), dtype=float)
        a = float(cfg.get("a", 0.0))
    else:
        law = cfg.get("law", "power")
        if law == "power":
            lam, x = _power_law(cfg, d)
        elif law == "shell":
            lam, x = _shell_law(cfg, d)
        else:
            raise InvalidModelError(f"unknown eigenvalue law {law!r}")
        a = float(cfg.get("a", 1.0))
    if lam.shape != x.shape:
        raise InvalidModelError(f"eigenvalues ({lam.size}) and amplitudes ({x.size}) differ in length")
    order = np.argsort(lam, kind="stable")
    return SpectralModel(lam[order], x[order], int(k), a)


# ------------------------------------------------------------ singular trend

@dataclass(frozen=True)
class SingularTrend:
    """Growth of ``||T^{-k/2} chi||`` along a family of surrogates."""

    dims: tuple[int, ...]
    values: tuple[float, ...]
    increment_slope: float
    strongly_singular: bool
    reason: str


def verify_singular_trend(
    models: Sequence[SpectralModel], *, n: int | None = None, slope_tol: float = 0.05
) -> SingularTrend:
    """Check that ``||T^{-k/2} chi||`` keeps growing along ``models``.

    For a tail ``j**-p`` the partial sums grow per unit ``log N`` like
    ``N**(1 - p)``; they diverge iff that log-log slope is ``>= 0``.  A convergent tail shows decaying increments and is flagged.
    If ``n`` is given, the regularized vector ``chi_n`` is used instead.
    """
    dims = tuple(mod.dim for mod in models)
    vals = []
    for mod in models:
        chi = mod.amplitudes if n is None else regularize(mod, n)
        vals.append(float(np.sqrt(moment(mod, chi, mod.k))))
    vals_a = np.array(vals)
    if len(vals) < 2 or np.any(np.diff(vals_a) <= 0):
        return SingularTrend(dims, tuple(vals), float("nan"), False, "not strongly singular: no growth")
    sq = vals_a**2
    logn = np.log(np.array(dims, float))
    inc = np.diff(sq) / np.maximum(np.diff(logn), 1e-300)
    mids = np.sqrt(np.array(dims[1:], float) * np.array(dims[:-1], float))
    if len(inc) >= 2:
        slope = float(np.polyfit(np.log(mids), np.log(inc), 1)[0])
    else:
        slope = 0.0
    ok = slope >= -slope_tol
    reason = "growing" if ok else "not strongly singular: increments decay"
    return SingularTrend(dims, tuple(vals), slope, ok, reason)
