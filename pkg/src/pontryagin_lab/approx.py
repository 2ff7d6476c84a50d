"""Approximating systems on ``B_n = C^{k-1} (+) H`` and the maps to and from the triple space.

A vector of ``B_n`` is ``(c^0, .., c^{k-2}, psi)`` stored flat in that order.
The variables ``c^l`` stand for ``i^l d^l c / dt^l`` of the scalar auxiliary
unknown ``c(t)``, so the higher-order equation for ``c`` becomes first order.

``H_n`` shifts the ``c`` block, closes it with the counterterm row
``(chi_n, psi) - sum_l z_l c^l`` and acts as ``T psi + c^0 chi_n`` on ``psi``.
``Z_n`` is the identity except for ``z_{k-1}`` on the last ``c`` slot.  The
generator of every evolution is ``A_n = Z_n^-1 H_n``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matfun
from .elimination import rescaled_a, solve_resolvent_system
from .errors import DegenerateGeneratorError, DegenerateProjectionError, SingularResolventError
from .pontryagin import PontryaginVector, majorant_gram, negative_squares
from .spectral import RegularizedFamily, SpectralModel

__all__ = [
    "ApproxVector",
    "ApproxSpace",
    "TransportedMajorant",
    "build_space",
    "rescaled_a",
]


@dataclass(frozen=True)
class ApproxVector:
    c: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "c", np.atleast_1d(np.asarray(self.c, dtype=complex)))
        object.__setattr__(self, "psi", np.atleast_1d(np.asarray(self.psi, dtype=complex)))

    def flat(self) -> np.ndarray:
        return np.concatenate([self.c, self.psi]) if self.c.size else self.psi.copy()

    @classmethod
    def from_flat(cls, v: np.ndarray, k: int) -> "ApproxVector":
        v = np.asarray(v)
        nc = max(k - 1, 0)
        return cls(v[:nc], v[nc:])


@dataclass(frozen=True)
class TransportedMajorant:
    """Majorant Gram on ``B_n`` built from a transported negative subspace.

    ``fallback`` is set when the transported subspace is not negative
    definite; ``gram`` is then the Euclidean identity.
    """

    gram: np.ndarray
    basis: np.ndarray
    fallback: bool
    min_eig: float
    lam: float = float("nan")


class ApproxSpace:
    """Approximating system at a single regularization index.

    Parameters
    ----------
    family : RegularizedFamily
        ``chi_n``, counterterms and targets at index ``n``.
    """

    def __init__(self, family: RegularizedFamily):
        self.family = family
        self.model: SpectralModel = family.model
        self.n = family.n
        self.k = family.k
        self.m = family.m
        self.N = self.model.dim
        self.nc = self.k - 1
        self.dim = self.nc + self.N
        self.chi_n = family.chi_n
        if self.k >= 2 and family.z_at(self.k - 1) == 0.0:
            raise DegenerateGeneratorError(f"z_{self.k - 1} vanishes at n = {self.n}")
        if self.k == 1 and family.z_at(0) == 0.0:
            raise DegenerateGeneratorError(f"z_0 vanishes at n = {self.n}")
        self.Z, self.H = self._generators()
        self.generator = self.H / np.diag(self.Z)[:, None]
        self.gram = self._gram()
        self.aux_gram = self._aux_gram()
        self.Q = self._q_matrix()
        self.P = self._p_matrix()

    # ---------------------------------------------------------- structure
    def _generators(self) -> tuple[np.ndarray, np.ndarray]:
        k, nc, lam_t, chi = self.k, self.nc, self.model.eigenvalues, self.chi_n
        z = self.family.z_at
        if k == 1:
            # Eliminating c = (chi_n, psi) / z_0 leaves a rank-one perturbation of T.
            return np.eye(self.N), np.diag(lam_t) + np.outer(chi, chi) / z(0)
        h = np.zeros((self.dim, self.dim))
        for l in range(nc - 1):
            h[l, l + 1] = 1.0
        h[nc - 1, nc:] = chi
        h[nc - 1, :nc] = [-z(l) for l in range(nc)]
        h[nc:, nc:] = np.diag(lam_t)
        h[nc:, 0] = chi
        zd = np.ones(self.dim)
        zd[nc - 1] = z(k - 1)
        return np.diag(zd), h

    def _gram(self) -> np.ndarray:
        g = np.zeros((self.dim, self.dim))
        for j in range(self.nc):
            for s in range(self.nc):
                g[j, s] = self.family.z_at(j + s + 1)
        g[self.nc :, self.nc :] = np.eye(self.N)
        return g

    def _aux_gram(self) -> np.ndarray:
        # Triple-space layout with the regularized moments g_l^(n).
        m, dim = self.m, 2 * self.m + self.N
        g = np.zeros((dim, dim))
        for s in range(m):
            for u in range(m):
                g[s, u] = self.family.g_n(s + u + 2)
            g[s, m + s] = g[m + s, s] = -1.0
        g[2 * m :, 2 * m :] = np.eye(self.N)
        return g

    def _q_matrix(self) -> np.ndarray:
        m, k, nc, N = self.m, self.k, self.nc, self.N
        lam_t, chi = self.model.eigenvalues, self.chi_n
        z = self.family.z_at
        q = np.zeros((2 * m + N, self.dim))
        q[2 * m :, nc:] = np.eye(N)
        for j in range(m):
            q[2 * m :, j] += chi * lam_t ** (-j - 1)
        for j in range(1, m + 1):
            q[j - 1, j - 1] = 1.0
            q[m + j - 1, :] = (chi * lam_t ** (-j)) @ q[2 * m :, :]
            for i in range(m - j + 1):
                if m + i <= k - 2:
                    q[m + j - 1, m + i] -= z(m + j + i)
        return q

    def _p_matrix(self) -> np.ndarray:
        m, k, nc, N = self.m, self.k, self.nc, self.N
        lam_t, chi = self.model.eigenvalues, self.chi_n
        z = self.family.z_at
        dim_pi = 2 * m + N
        if m == 0:
            return np.eye(N)
        eye = np.eye(dim_pi)
        gam, rho, phi = eye[:m], eye[m : 2 * m], eye[2 * m :]
        if k % 2 == 0:
            u = chi * lam_t ** (-m)
            uu = float(u @ u)
            if uu == 0.0:
                raise DegenerateProjectionError("T^-m chi_n vanishes")
            phin = phi + np.outer(u, rho[m - 1] - u @ phi) / uu
        else:
            phin = phi
        c = np.zeros((nc, dim_pi))
        c[:m] = gam
        psi = phin - sum(np.outer(chi * lam_t ** (-j - 1), gam[j]) for j in range(m))
        # Row j: sum_l z_{j+l} c^l (l >= m) = (T^-j chi_n, phi_n) - rho_j, solved bottom-up.
        for j in range(m, 0, -1):
            if k % 2 == 0 and j == m:
                continue
            unknown = 2 * m - j if k % 2 else 2 * m - 1 - j
            rhs = (chi * lam_t ** (-j)) @ phin - rho[j - 1]
            for l in range(m, nc):
                if l != unknown:
                    rhs = rhs - z(j + l) * c[l]
            c[unknown] = rhs / z(j + unknown)
        p = np.zeros((self.dim, dim_pi))
        p[:nc] = c
        p[nc:] = psi
        return p

    # --------------------------------------------------------- vectors
    def vector(self, flat: np.ndarray) -> ApproxVector:
        return ApproxVector.from_flat(flat, self.k)

    def product(self, a, b) -> complex:
        fa = a.flat() if isinstance(a, ApproxVector) else np.asarray(a)
        fb = b.flat() if isinstance(b, ApproxVector) else np.asarray(b)
        return complex(fa.conj() @ self.gram @ fb)

    def aux_product(self, a, b) -> complex:
        fa = a.flat() if isinstance(a, PontryaginVector) else np.asarray(a)
        fb = b.flat() if isinstance(b, PontryaginVector) else np.asarray(b)
        return complex(fa.conj() @ self.aux_gram @ fb)

    def project_Pn(self, phi) -> ApproxVector:
        f = phi.flat() if isinstance(phi, PontryaginVector) else np.asarray(phi)
        return self.vector(self.P @ f)

    def lift_Qn(self, phi_n) -> PontryaginVector:
        f = phi_n.flat() if isinstance(phi_n, ApproxVector) else np.asarray(phi_n)
        return PontryaginVector.from_flat(self.Q @ f, self.m)

    def negative_squares(self) -> int:
        return negative_squares(self.gram)

    # -------------------------------------------------------- resolvent
    def n_data(self):
        m = self.m
        gs = np.full(2 * m + 2, np.nan)
        gs[1:] = self.family.g_n_moments
        return gs, self.family.z_at(2 * m)

    def a_n(self, lam: float) -> float:
        """Rescaled ``(-lam)^{2m} a_n(lam)`` from the index-``n`` data."""
        gs, _ = self.n_data()
        return rescaled_a(gs, self.chi_n, self.model.eigenvalues, self.m, lam)

    def resolvent_direct(self, lam: float) -> np.ndarray:
        """Dense ``(A_n + lam)^-1``."""
        mat = self.generator + lam * np.eye(self.dim)
        if np.linalg.cond(mat) > 1e13:
            raise SingularResolventError(f"A_n + {lam} is numerically singular at n = {self.n}")
        return np.linalg.inv(mat)

    def resolvent_closed(self, lam: float) -> np.ndarray:
        """The same resolvent transported to the triple space, in closed form."""
        gs, ztop = self.n_data()
        scale = max(1.0, float(np.max(np.abs(gs[1:]))))
        if abs(self.a_n(lam)) <= 1e-12 * scale:
            raise SingularResolventError(f"a_n({lam}) vanishes at n = {self.n}")
        mat, _ = solve_resolvent_system(
            gs, self.chi_n, self.model.eigenvalues, self.m, ztop, lam, np.eye(2 * self.m + self.N)
        )
        return mat

    def intertwining_defect(self, lam: float, vecs: np.ndarray) -> np.ndarray:
        """Columnwise ``||Q (A_n+lam)^-1 v - R_n(lam) Q v|| / ||v||``."""
        d = self.Q @ self.resolvent_direct(lam) @ vecs - self.resolvent_closed(lam) @ self.Q @ vecs
        return np.linalg.norm(d, axis=0) / np.linalg.norm(vecs, axis=0)

    # -------------------------------------------------------- evolution
    def propagator(self, kind: str, t: float) -> np.ndarray:
        return matfun.propagator(self.generator, kind, t)

    def cosine_family(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        return matfun.cosine_family(self.generator, t)

    def evolve_n(self, kind: str, t: float, phi_n, phidot_n=None):
        """Evolve ``phi_n`` (and ``phidot_n`` for ``"hyperbolic"``) to time ``t``."""
        f = phi_n.flat() if isinstance(phi_n, ApproxVector) else np.asarray(phi_n, dtype=complex)
        if kind == "hyperbolic":
            if phidot_n is None:
                raise ValueError("hyperbolic evolution needs an initial velocity")
            fd = phidot_n.flat() if isinstance(phidot_n, ApproxVector) else np.asarray(phidot_n)
            state = matfun.second_order_flow(self.generator, t) @ np.concatenate([f, fd])
            return self.vector(state[: self.dim]), self.vector(state[self.dim :])
        return self.vector(self.propagator(kind, t) @ f)

    # ----------------------------------------------------------- norms
    def transported_majorant(self, hamiltonian, neg_basis: np.ndarray, lam: float) -> TransportedMajorant:
        """Majorant from ``F = (A_n + lam)^-1 P_n (H + lam) L``.

        ``L`` is the negative subspace chosen on the triple space.  When ``F``
        fails to be negative definite in the product of ``B_n`` the Euclidean
        Gram is returned with ``fallback=True``.
        """
        if self.m == 0:
            return TransportedMajorant(self.gram.astype(complex), np.zeros((self.dim, 0)), False, 1.0, lam)
        h = hamiltonian.matrix
        rhs = self.P @ ((h + lam * np.eye(h.shape[0])) @ neg_basis)
        f = np.linalg.solve(self.generator + lam * np.eye(self.dim), rhs)
        a = f.conj().T @ self.gram @ f
        a = (a + a.conj().T) / 2
        if np.linalg.eigvalsh(a).max() >= 0:
            return TransportedMajorant(np.eye(self.dim, dtype=complex), f, True, float("nan"), lam)
        gj = majorant_gram(self.gram, f)
        w = np.linalg.eigvalsh(gj)
        if w.min() <= 0:
            return TransportedMajorant(np.eye(self.dim, dtype=complex), f, True, float(w.min()), lam)
        return TransportedMajorant(gj, f, False, float(w.min()), lam)


def build_space(family: RegularizedFamily, model: SpectralModel | None = None) -> ApproxSpace:
    """Build the approximating system for ``family``."""
    if model is not None and model is not family.model:
        raise ValueError("family was built for a different spectral model")
    return ApproxSpace(family)
