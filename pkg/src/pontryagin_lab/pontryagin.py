"""The indefinite space of triples ``(gamma, rho, phi)`` built over a surrogate.

Vectors are stored flat as ``[gamma_1..gamma_m, rho_1..rho_m, phi_1..phi_N]``.
Operators on the space are dense matrices acting on that flat layout.

The product is

    <Phi, Psi> = sum_{s,u} conj(gamma_s) gamma'_u G_{s+u}
                 - sum_s (conj(gamma_s) rho'_s + conj(rho_s) gamma'_s) + (phi, phi')

where ``G_s`` are the regularized moments: free parameters ``g_s`` for
``s <= k`` and converged raw moments ``(chi, T^-s chi)`` for ``s > k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InconsistentGramError
from .spectral import SpectralModel, moment

__all__ = [
    "PontryaginVector",
    "PontryaginSpace",
    "negative_squares",
    "negative_squares_by_reduction",
    "majorant_gram",
    "quadratic_norms",
    "norm1",
]

NEG_TOL = 1e-10


@dataclass(frozen=True)
class PontryaginVector:
    gamma: np.ndarray
    rho: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gamma", np.atleast_1d(np.asarray(self.gamma, dtype=complex)))
        object.__setattr__(self, "rho", np.atleast_1d(np.asarray(self.rho, dtype=complex)))
        object.__setattr__(self, "phi", np.atleast_1d(np.asarray(self.phi, dtype=complex)))
        if self.gamma.shape != self.rho.shape:
            raise ValueError("gamma and rho must have the same length")

    @property
    def m(self) -> int:
        return self.gamma.size

    def flat(self) -> np.ndarray:
        return np.concatenate([self.gamma, self.rho, self.phi])

    @classmethod
    def from_flat(cls, v: np.ndarray, m: int) -> "PontryaginVector":
        v = np.asarray(v)
        return cls(v[:m], v[m : 2 * m], v[2 * m :])


def _as_hermitian(gram: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    gram = np.asarray(gram)
    if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
        raise ValueError("gram must be a square matrix")
    scale = max(np.abs(gram).max(), 1.0) if gram.size else 1.0
    if np.abs(gram - gram.conj().T).max(initial=0.0) > rtol * scale:
        raise ValueError("gram matrix is not Hermitian")
    return (gram + gram.conj().T) / 2


def negative_squares(gram: np.ndarray, rtol: float = NEG_TOL) -> int:
    """Number of eigenvalues below ``-rtol * spectral_radius``."""
    h = _as_hermitian(gram)
    if h.size == 0:
        return 0
    w = np.linalg.eigvalsh(h)
    radius = np.abs(w).max()
    return int(np.sum(w < -rtol * radius))


def negative_squares_by_reduction(gram: np.ndarray, rtol: float = NEG_TOL) -> int:
    """Negative-square count by Lagrange's completion of squares.

    A dominant diagonal entry is split off as a single square; otherwise the
    largest off-diagonal pair ``(i, j)`` is split off as a hyperbolic pair,
    which carries one positive and one negative square.  The remaining form
    is the Schur complement.  Independent of any eigensolver.
    """
    a = _as_hermitian(gram).astype(complex)
    if a.size == 0:
        return 0
    tol = rtol * np.abs(a).max()
    count = 0
    while a.shape[0]:
        diag = np.abs(np.diag(a).real)
        off = np.abs(a - np.diag(np.diag(a)))
        i = int(np.argmax(diag))
        if off.size and off.max() > 4 * diag[i] and off.max() > tol:
            i, j = np.unravel_index(int(np.argmax(off)), off.shape)
            idx = [int(i), int(j)]
            blk = a[np.ix_(idx, idx)]
            det = (blk[0, 0] * blk[1, 1]).real - abs(blk[0, 1]) ** 2
            if det < 0:
                count += 1
            elif blk[0, 0].real < 0:
                count += 2
            rest = [r for r in range(a.shape[0]) if r not in idx]
            c = a[np.ix_(rest, idx)]
            a = a[np.ix_(rest, rest)] - c @ np.linalg.solve(blk, c.conj().T)
        elif diag[i] > tol:
            piv = a[i, i].real
            if piv < 0:
                count += 1
            rest = [r for r in range(a.shape[0]) if r != i]
            c = a[rest, i]
            a = a[np.ix_(rest, rest)] - np.outer(c, c.conj()) / piv
        else:
            break
        a = (a + a.conj().T) / 2
    return count


def majorant_gram(gram: np.ndarray, neg: np.ndarray) -> np.ndarray:
    """Gram matrix of ``<Phi, J Phi>`` where ``J`` flips the sign on ``span(neg)``.

    ``neg`` holds basis columns of a negative definite subspace.  The
    ``G``-orthogonal projector onto it is ``F A^-1 F^H G`` with
    ``A = F^H G F``, so the majorant Gram is ``G - 2 G F A^-1 F^H G``.
    """
    gram = np.asarray(gram)
    if neg.shape[1] == 0:
        return gram.astype(complex)
    gf = gram @ neg
    a = neg.conj().T @ gf
    gj = gram - 2 * gf @ np.linalg.solve(a, gf.conj().T)
    return (gj + gj.conj().T) / 2


def quadratic_norms(gram: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """``sqrt(v^H G v)`` for a positive Gram and each column (or a single vector)."""
    vecs = np.asarray(vecs)
    single = vecs.ndim == 1
    v = vecs[:, None] if single else vecs
    q = np.real(np.einsum("ij,ik,kj->j", v.conj(), gram, v))
    out = np.sqrt(np.maximum(q, 0.0))
    return out[0] if single else out


def norm1(phi: PontryaginVector) -> float:
    """Max-type norm ``max(||phi||, |gamma_s|, |rho_s|)``."""
    parts = [np.linalg.norm(phi.phi)]
    parts += list(np.abs(phi.gamma)) + list(np.abs(phi.rho))
    return float(max(parts))


class PontryaginSpace:
    """Indefinite space with ``m = floor(k/2)`` negative squares over a surrogate.

    Parameters
    ----------
    model : SpectralModel
        Diagonal surrogate supplying ``T`` and ``chi``.
    g_targets : sequence of float
        Renormalized parameters ``g_1 .. g_k``.
    """

    def __init__(self, model: SpectralModel, g_targets: Sequence[float]):
        g = np.asarray(g_targets, dtype=float)
        if g.shape != (model.k,):
            raise ValueError(f"expected {model.k} target values, got {g.size}")
        self.model = model
        self.g_targets = g
        self.k = model.k
        self.m = model.m
        self.N = model.dim
        self.dim = 2 * self.m + self.N
        smax = max(3 * self.m + 1, 2 * self.m + 1, self.k)
        reg = np.full(smax + 1, np.nan)
        for s in range(1, smax + 1):
            reg[s] = g[s - 1] if s <= self.k else moment(model, model.amplitudes, s)
        reg.setflags(write=False)
        self.gram_reg = reg
        self.gram = self._gram_matrix()
        self.negative_basis = self.choose_negative_subspace()
        self.majorant = majorant_gram(self.gram, self.negative_basis)

    # ------------------------------------------------------------- basics
    def G(self, s: int) -> float:
        """Regularized moment ``(chi, T^-s chi)_reg``."""
        return float(self.gram_reg[s])

    @property
    def chi(self) -> np.ndarray:
        return self.model.amplitudes

    def _gram_matrix(self) -> np.ndarray:
        m, n = self.m, self.N
        g = np.zeros((self.dim, self.dim))
        for s in range(m):
            for u in range(m):
                g[s, u] = self.G(s + u + 2)
            g[s, m + s] = g[m + s, s] = -1.0
        g[2 * m :, 2 * m :] = np.eye(n)
        return g

    def vector(self, flat: np.ndarray) -> PontryaginVector:
        return PontryaginVector.from_flat(flat, self.m)

    def _flat(self, v) -> np.ndarray:
        f = v.flat() if isinstance(v, PontryaginVector) else np.asarray(v)
        if f.shape[0] != self.dim:
            raise ValueError(f"vector of length {f.shape[0]} does not fit a space of dimension {self.dim}")
        return f

    def indefinite_product(self, a, b) -> complex:
        """Sesquilinear product, conjugate-linear in the first slot."""
        return complex(self._flat(a).conj() @ self.gram @ self._flat(b))

    # ----------------------------------------------------------- embedding
    def embed(self, c: Sequence[complex], psi_reg: np.ndarray) -> PontryaginVector:
        """Image of ``sum_l c_l T^-l chi + psi_reg`` (``l = 1..2m``) in the space."""
        m = self.m
        c = np.asarray(c, dtype=complex)
        if c.shape != (2 * m,):
            raise ValueError(f"expected {2 * m} coefficients, got {c.size}")
        psi = np.asarray(psi_reg, dtype=complex)
        lam, chi = self.model.eigenvalues, self.chi
        gamma = -c[:m]
        high = range(m + 1, 2 * m + 1)
        phi = psi + sum((c[l - 1] * chi * lam ** (-l) for l in high), np.zeros(self.N, complex))
        rho = np.array(
            [
                sum(c[l - 1] * self.G(l + j) for l in high) + (chi * lam ** (-j)) @ psi
                for j in range(1, m + 1)
            ],
            dtype=complex,
        )
        return PontryaginVector(gamma, rho, phi)

    # ---------------------------------------------------- negative subspace
    def block_gram(self) -> np.ndarray:
        m = self.m
        return self.gram[: 2 * m, : 2 * m]

    def choose_negative_subspace(
        self, rng: np.random.Generator | None = None, mix: float = 0.5
    ) -> np.ndarray:
        """Basis (columns) of an ``m``-dimensional subspace of ``(gamma, rho, 0)``
        with product Gram equal to ``-I``.

        By default the eigenvectors of the ``(gamma, rho)`` block for its ``m``
        most negative eigenvalues are used.  With ``rng`` a random admissible
        subspace is drawn by tilting that basis towards the positive
        eigenvectors with a random contraction of norm ``mix < 1``.
        """
        m = self.m
        basis = np.zeros((self.dim, m), dtype=complex)
        if m == 0:
            return basis
        blk = self.block_gram()
        w, v = np.linalg.eigh(blk)
        radius = np.abs(w).max()
        neg = np.flatnonzero(w < -NEG_TOL * radius)
        if neg.size < m:
            raise InconsistentGramError(
                f"block Gram has {neg.size} negative directions, expected {m}"
            )
        order = np.argsort(w)
        ineg, ipos = order[:m], order[m:]
        e = v[:, ineg] / np.sqrt(-w[ineg])
        if rng is not None:
            p = v[:, ipos] / np.sqrt(np.abs(w[ipos]))
            kmat = rng.standard_normal((m, m))
            kmat *= mix / max(np.linalg.norm(kmat, 2), 1e-300)
            e = e + p @ kmat
        basis[: 2 * m] = e
        return self._orthonormalize_negative(basis)

    def _orthonormalize_negative(self, basis: np.ndarray) -> np.ndarray:
        # Gram-Schmidt in the indefinite metric: rescale so that the Gram is -I.
        a = basis.conj().T @ self.gram @ basis
        a = (a + a.conj().T) / 2
        lchol = np.linalg.cholesky(-a)
        return basis @ np.linalg.inv(lchol).conj().T

    # --------------------------------------------------------------- norms
    def majorant_for(self, basis: np.ndarray) -> np.ndarray:
        return majorant_gram(self.gram, basis)

    def majorant_norm(self, v, gram_j: np.ndarray | None = None) -> float:
        """Hilbert norm ``sqrt(<Phi, J Phi>)`` attached to the negative basis."""
        gj = self.majorant if gram_j is None else gram_j
        return float(quadratic_norms(gj, self._flat(v)))

    def operator_norm(self, op: np.ndarray, gram_j: np.ndarray | None = None) -> float:
        """Operator norm of ``op`` in the majorant norm."""
        gj = self.majorant if gram_j is None else gram_j
        c = np.linalg.cholesky(gj).conj().T
        return float(np.linalg.norm(c @ op @ np.linalg.inv(c), 2))

    def signature_audit(self) -> dict:
        blk = self.block_gram()
        return {
            "m": self.m,
            "negative_squares_eig": negative_squares(blk) if self.m else 0,
            "negative_squares_reduction": negative_squares_by_reduction(blk) if self.m else 0,
            "negative_squares_full": negative_squares(self.gram),
            "negative_basis_gram": (
                self.negative_basis.conj().T @ self.gram @ self.negative_basis
            ).real.tolist(),
            "gram_reg": {str(s): self.G(s) for s in range(1, self.gram_reg.size)},
        }
