"""Matrix functions used by the evolution operators.

Exponentials go through ``scipy.linalg.expm`` (scaling and squaring with Pade
approximants), which is backward stable for the non-normal generators here.
Eigendecompositions are used only for cross-checks and spectral reports.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import NumericOverflowError

__all__ = [
    "propagator",
    "cosine_family",
    "second_order_flow",
    "cosine_family_eig",
    "KINDS",
]

KINDS = ("schrodinger", "parabolic", "hyperbolic")


def _checked(mat: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(mat)):
        raise NumericOverflowError(f"{what} produced non-finite entries")
    return mat


def propagator(gen: np.ndarray, kind: str, t: float) -> np.ndarray:
    """``exp(-i t A)`` for ``"schrodinger"``, ``exp(-t A)`` for ``"parabolic"``."""
    gen = np.asarray(gen)
    if kind == "schrodinger":
        return _checked(sla.expm(-1j * t * gen), "unitary propagator")
    if kind == "parabolic":
        return _checked(sla.expm(-t * gen.astype(complex)), "parabolic propagator")
    raise ValueError(f"unknown first-order kind {kind!r}")


def cosine_family(gen: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Blocks ``V(t)``, ``W(t)`` solving ``-u'' = A u``.

    ``exp(t [[0, I], [-A, 0]])`` has ``V`` in its top-left and ``W`` in its
    top-right block, so ``u(t) = V u(0) + W u'(0)``.
    """
    n = gen.shape[0]
    e = second_order_flow(gen, t)
    return e[:n, :n], e[:n, n:]


def second_order_flow(gen: np.ndarray, t: float) -> np.ndarray:
    """Flow of ``(u, u')`` for ``-u'' = A u``: ``exp(t [[0, I], [-A, 0]])``."""
    n = gen.shape[0]
    big = np.zeros((2 * n, 2 * n), dtype=complex)
    big[:n, n:] = np.eye(n)
    big[n:, :n] = -gen
    return _checked(sla.expm(t * big), "cosine family")


def cosine_family_eig(
    gen: np.ndarray, t: float, cond_max: float = 1e8, cut_tol: float = 1e-10
) -> tuple[np.ndarray, np.ndarray] | None:
    """``cos(sqrt(A) t)`` and ``sin(sqrt(A) t) / sqrt(A)`` via eigendecomposition.

    Uses the principal square root.  Returns ``None`` when the eigenvector
    matrix is too ill-conditioned or an eigenvalue sits on the branch cut.
    """
    w, v = np.linalg.eig(np.asarray(gen, dtype=complex))
    if np.linalg.cond(v) > cond_max:
        return None
    on_cut = (w.real < 0) & (np.abs(w.imag) <= cut_tol * max(1.0, np.abs(w).max()))
    if np.any(on_cut):
        return None
    r = np.sqrt(w)
    cos = np.cos(r * t)
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(np.abs(r) > 1e-12, np.sin(r * t) / np.where(r == 0, 1, r), t)
    vinv = np.linalg.inv(v)
    return (v * cos) @ vinv, (v * sinc) @ vinv
