"""Closed-form solution of the resolvent equations on the triple space.

For data ``(g_1..g_{2m+1}, chi, z_top)`` and a right-hand side
``(gamma, rho, phi)`` this solves for ``(gamma~, rho~, phi~)`` with

    gamma~_{s+1} = gamma_s - lam gamma~_s        (s = 1..m-1)
    c~           = gamma_m - lam gamma~_m        (the auxiliary c^m)
    phi~         = (T + lam)^-1 (phi - c~ T^-m chi)
    rho~_m       = ((T+lam)^-1 T^-m chi, phi) - c~ E
    rho~_{j-1}   = rho_j - lam rho~_j - g_{j+m} c~
    0            = sum_s g_s gamma~_s + g_{m+1} c~ + lam rho~_1 - rho_1

with ``E = z_top + (chi, T^-2m (T+lam)^-1 chi)``.  All unknowns are affine in
``t = gamma~_1``; the last equation fixes ``t``.  Its coefficient (the pivot)
is the rescaled function ``(-lam)^{2m} a(lam)``.

The same routine serves the exact operator (limit data) and the approximating
systems (data at index ``n``).
"""

from __future__ import annotations

import numpy as np

__all__ = ["solve_resolvent_system", "pivot_value", "rescaled_a"]


def rescaled_a(gs, chi, lam_t, m: int, lam: float) -> float:
    """``sum_{s=1}^{2m+1} g_s (-lam)^{s-1} - lam (-lam)^{2m} (chi, T^{-2m-1} (T+lam)^-1 chi)``.

    Written out directly, independent of the elimination; it should agree
    with the pivot.
    """
    poly = sum(gs[s] * (-lam) ** (s - 1) for s in range(1, 2 * m + 2))
    tail = np.sum(chi**2 * lam_t ** (-2 * m - 1) / (lam_t + lam))
    return float(poly - lam * (-lam) ** (2 * m) * tail)


def pivot_value(gs, chi, lam_t, m: int, lam: float, ztop: float) -> complex:
    """Pivot of the elimination; it does not depend on the right-hand side."""
    zero = np.zeros(2 * m + len(lam_t))
    return solve_resolvent_system(gs, chi, lam_t, m, ztop, lam, zero)[1]


def solve_resolvent_system(gs, chi, lam_t, m: int, ztop: float, lam: float, rhs: np.ndarray):
    """Apply the resolvent to the columns of ``rhs`` (flat layout).

    Parameters
    ----------
    gs : indexable
        ``gs[s]`` for ``s = 1..2m+1``; index 0 is ignored.
    chi : ndarray
        Coefficients of the singular vector (``chi`` or ``chi_n``).
    lam_t : ndarray
        Eigenvalues of ``T``.
    m : int
        Number of ``gamma`` (and ``rho``) components.
    ztop : float
        Top counterterm entering ``E``.
    lam : float
        Spectral parameter.
    rhs : ndarray
        Columns ``(gamma, rho, phi)``.

    Returns
    -------
    cols : ndarray
        Result columns.
    pivot : complex
        Coefficient that was divided by; zero means the resolvent does not exist.
    """
    rhs = np.asarray(rhs, dtype=complex)
    single = rhs.ndim == 1
    x = rhs[:, None] if single else rhs
    d = 1.0 / (lam_t + lam)
    u = chi * lam_t ** (-m)
    e = ztop + np.sum(chi**2 * lam_t ** (-2 * m) * d)
    gam, rho, phi = x[:m], x[m : 2 * m], x[2 * m :]
    beta = (u * d) @ phi
    if m == 0:
        c = beta / e
        out = d[:, None] * (phi - np.outer(u, c))
        return (out[:, 0] if single else out), e

    ncol = x.shape[1]
    # affine representation value = p + q * t, t = gamma~_1
    gp = [np.zeros(ncol, complex)]
    gq = [1.0]
    for s in range(1, m + 1):
        gp.append(gam[s - 1] - lam * gp[-1])
        gq.append(-lam * gq[-1])
    cp, cq = gp[m], gq[m]
    rp = {m: beta - cp * e}
    rq = {m: -cq * e}
    for j in range(m, 1, -1):
        rp[j - 1] = rho[j - 1] - lam * rp[j] - gs[j + m] * cp
        rq[j - 1] = -lam * rq[j] - gs[j + m] * cq
    p = sum(gs[s] * gp[s - 1] for s in range(1, m + 1)) + gs[m + 1] * cp + lam * rp[1] - rho[0]
    q = sum(gs[s] * gq[s - 1] for s in range(1, m + 1)) + gs[m + 1] * cq + lam * rq[1]
    t = -p / q
    gt = np.array([gp[s] + gq[s] * t for s in range(m)])
    c = cp + cq * t
    rt = np.array([rp[j] + rq[j] * t for j in range(1, m + 1)])
    ph = d[:, None] * (phi - np.outer(u, c))
    out = np.vstack([gt, rt, ph])
    return (out[:, 0] if single else out), q
