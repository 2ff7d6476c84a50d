import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pontryagin_lab import matfun
from pontryagin_lab.convergence import default_probes
from pontryagin_lab.errors import NumericOverflowError, SingularResolventError
from pontryagin_lab.exact import (
    a_limit,
    a_roots,
    build_hamiltonian,
    default_lambda0,
    evolve_hyperbolic,
    evolve_parabolic,
    evolve_schrodinger,
    resolvent_exact,
)
from pontryagin_lab.pontryagin import PontryaginSpace
from pontryagin_lab.spectral import SpectralModel, moment

from conftest import small_model


def r0_components(sp, v):
    """Action of the inverse operator written out component by component."""
    m, lam, chi, G = sp.m, sp.model.eigenvalues, sp.chi, sp.G
    gam, rho, phi = v[:m], v[m : 2 * m], v[2 * m :]
    if m == 0:
        alpha = -1.0 / G(1)
        return phi / lam + alpha * (chi / lam) * ((chi / lam) @ phi)
    a = rho[0] - sum(G(s + 1) * gam[s - 1] for s in range(1, m + 1))
    gt = np.empty(m, complex)
    rt = np.empty(m, complex)
    gt[0] = a / G(1)
    gt[1:] = gam[:-1]
    for s in range(1, m):
        rt[s - 1] = -G(m + s + 1) * gam[m - 1] + rho[s]
    rt[m - 1] = -G(2 * m + 1) * gam[m - 1] + (chi * lam ** (-m - 1)) @ phi
    pt = -gam[m - 1] * chi * lam ** (-m - 1) + phi / lam
    return np.concatenate([gt, rt, pt])


def pi_probes(h, n=6, seed=0):
    """Smooth probes inside the invariant hyperplane of ``h``."""
    basis = h.invariant_basis()
    vecs = np.array([p.vector for p in default_probes(h.space, seed, n)]).T
    return basis @ (basis.conj().T @ vecs)


def form(g, v):
    return np.einsum("ij,ik,kj->j", v.conj(), g, v)


# ------------------------------------------------------------------ a(lambda)

def test_a_at_zero_is_g1(small):
    mod, g = small
    sp = PontryaginSpace(mod, g)
    assert a_limit(sp, 0.0) == pytest.approx(g[0], rel=1e-14)


def test_a_m0_at_one():
    mod, g = small_model(1)
    sp = PontryaginSpace(mod, g)
    lam = mod.eigenvalues
    expected = g[0] - np.sum(mod.amplitudes**2 / (lam * (lam + 1.0)))
    assert a_limit(sp, 1.0) == pytest.approx(expected, rel=1e-13)


def test_a_root_bracketing_and_singular_resolvent():
    mod, g = small_model(1)
    sp = PontryaginSpace(mod, g)
    # a(lam) = g_1 - lam (chi, T^-1 (T+lam)^-1 chi) tends to +inf as lam -> -lambda_1
    grid = np.linspace(-mod.eigenvalues[0] + 1e-3, 0.0, 400)
    roots = a_roots(sp, grid)
    assert len(roots) == 1
    assert abs(a_limit(sp, roots[0])) < 1e-10
    with pytest.raises(SingularResolventError):
        resolvent_exact(sp, roots[0])
    with pytest.raises(SingularResolventError):
        resolvent_exact(sp, -mod.eigenvalues[0] - 1.0)


def test_default_lambda0_is_zero_for_nonzero_g1(small):
    mod, g = small
    assert default_lambda0(PontryaginSpace(mod, g)) == 0.0


# ------------------------------------------------------------------ resolvent

def test_r0_component_formulas(small, rng):
    mod, g = small
    sp = PontryaginSpace(mod, g)
    r0 = resolvent_exact(sp, 0.0).matrix
    for _ in range(5):
        v = rng.standard_normal(sp.dim) + 1j * rng.standard_normal(sp.dim)
        ref = r0_components(sp, v)
        assert np.abs(r0 @ v - ref).max() <= 1e-10 * np.abs(ref).max()


def test_r0_rank_one_form():
    mod, g = small_model(1)
    sp = PontryaginSpace(mod, g)
    alpha = -1.0 / g[0]
    tinv = np.diag(1.0 / mod.eigenvalues)
    u = mod.amplitudes / mod.eigenvalues
    ref = tinv + alpha * np.outer(u, u)
    assert np.allclose(resolvent_exact(sp, 0.0).matrix, ref, rtol=0, atol=1e-12)


def test_resolvent_rank_one_any_lambda():
    mod, g = small_model(1)
    sp = PontryaginSpace(mod, g)
    lam = 1.7
    chi, t = mod.amplitudes, mod.eigenvalues
    # (T + lam + chi chi^T / (g_1 - (chi, T^-1 chi)))^-1, the k = 1 operator with g = 1/z_0
    z0 = g[0] - moment(mod, chi, 1)
    ref = np.linalg.inv(np.diag(t + lam) + np.outer(chi, chi) / z0)
    assert np.allclose(resolvent_exact(sp, lam).matrix, ref, rtol=0, atol=1e-12)


def test_pseudoresolvent_identity(small):
    mod, g = small
    sp = PontryaginSpace(mod, g)
    grid = (0.5, 1.0, 3.0)
    rs = {lam: resolvent_exact(sp, lam).matrix for lam in grid}
    for lam in grid:
        for mu in grid:
            res = rs[lam] - rs[mu] - (mu - lam) * rs[lam] @ rs[mu]
            assert np.abs(res).max() <= 1e-8


def test_hamiltonian_inverts_resolvent(small):
    mod, g = small
    sp = PontryaginSpace(mod, g)
    h = build_hamiltonian(sp)
    b = h.invariant_basis()
    r = resolvent_exact(sp, h.lambda0).matrix
    eye = np.eye(sp.dim)
    assert np.abs((h.matrix @ r + h.lambda0 * r - eye) @ b).max() <= 1e-9
    for lam in (0.5, 2.0):
        rl = resolvent_exact(sp, lam).matrix
        assert np.abs(((h.matrix + lam * eye) @ rl - eye) @ b).max() <= 1e-8


def test_hamiltonian_independent_of_lambda0(small):
    mod, g = small
    sp = PontryaginSpace(mod, g)
    h0 = build_hamiltonian(sp, 0.0).matrix
    h1 = build_hamiltonian(sp, 2.0).matrix
    assert np.linalg.norm(h0 - h1) <= 1e-8 * np.linalg.norm(h0)


def test_j_selfadjoint(small):
    mod, g = small
    h = build_hamiltonian(PontryaginSpace(mod, g))
    assert h.j_selfadjoint_defect() <= 1e-9 * max(1.0, np.abs(h.matrix).max())


def test_scalar_hamiltonian():
    sp = PontryaginSpace(SpectralModel(np.array([2.0]), np.array([1.0]), 1), [-1.0])
    h = build_hamiltonian(sp)
    # inverse is 1/2 + alpha/4 with alpha = 1
    assert h.matrix.shape == (1, 1)
    assert h.matrix[0, 0] == pytest.approx(4.0 / 3.0, rel=1e-14)


def test_spectral_data_keys(small):
    mod, g = small
    data = build_hamiltonian(PontryaginSpace(mod, g)).spectral_data()
    assert len(data["eigenvalues_real"]) == mod.dim + 2 * mod.m
    assert data["max_abs_imag"] >= 0


# ------------------------------------------------------------------ evolution

def test_evolution_at_zero(small, rng):
    mod, g = small
    sp = PontryaginSpace(mod, g)
    h = build_hamiltonian(sp)
    v = rng.standard_normal(sp.dim)
    assert np.allclose(evolve_schrodinger(h, 0.0, v).flat(), v)
    assert np.allclose(evolve_parabolic(h, 0.0, v).flat(), v)
    u, ud = evolve_hyperbolic(h, 0.0, v, 2 * v)
    assert np.allclose(u.flat(), v) and np.allclose(ud.flat(), 2 * v)


def test_conservation(small):
    mod, g = small
    sp = PontryaginSpace(mod, g)
    h = build_hamiltonian(sp)
    v = pi_probes(h)
    q0 = form(sp.gram, v)
    for t in np.linspace(0.0, 1.0, 6):
        vt = h.propagator("schrodinger", t) @ v
        assert np.abs(form(sp.gram, vt) - q0).max() <= 1e-8


def test_group_and_semigroup_laws(small):
    mod, g = small
    h = build_hamiltonian(PontryaginSpace(mod, g))
    for kind in ("schrodinger", "parabolic"):
        lhs = h.propagator(kind, 0.7)
        rhs = h.propagator(kind, 0.3) @ h.propagator(kind, 0.4)
        assert np.abs(lhs - rhs).max() <= 1e-9 * max(1.0, np.abs(lhs).max())
    u = h.propagator("schrodinger", 0.4)
    assert np.allclose(u @ h.propagator("schrodinger", -0.4), np.eye(u.shape[0]), atol=1e-9)


def test_parabolic_growth_rate_measured(small):
    mod, g = small
    h = build_hamiltonian(PontryaginSpace(mod, g))
    rate = h.growth_rate(np.linspace(0.1, 1.0, 5))
    assert np.isfinite(rate)
    for t in (0.25, 1.0):
        nrm = h.space.operator_norm(h.propagator("parabolic", t))
        assert nrm <= np.exp(rate * t) * (1 + 1e-9)


def test_hyperbolic_finite_difference(small):
    mod, g = small
    sp = PontryaginSpace(mod, g)
    h = build_hamiltonian(sp)
    v = pi_probes(h, 3)
    step = 1e-3
    for t in (0.3, 1.0):
        traj = [matfun.cosine_family(h.matrix, s)[0] @ v for s in (t - step, t, t + step)]
        second = (traj[0] - 2 * traj[1] + traj[2]) / step**2
        hv = h.matrix @ traj[1]
        resid = np.linalg.norm(second + hv, axis=0)
        assert np.all(resid <= 1e-5 * np.maximum(1.0, np.linalg.norm(hv, axis=0)))


@settings(max_examples=40, deadline=None)
@given(omega=st.floats(0.05, 20.0), t=st.floats(0.0, 3.0))
def test_scalar_cosine_family(omega, t):
    v, w = matfun.cosine_family(np.array([[omega**2]]), t)
    assert v[0, 0] == pytest.approx(np.cos(omega * t), abs=1e-10)
    assert w[0, 0] == pytest.approx(np.sin(omega * t) / omega, abs=1e-10)


def test_cosine_family_eig_cross_check(small):
    mod, g = small
    h = build_hamiltonian(PontryaginSpace(mod, g))
    ref = matfun.cosine_family_eig(h.matrix, 0.8)
    if ref is None:
        # routed to the block exponential only: negative real eigenvalue present
        w = np.linalg.eigvals(h.matrix)
        assert np.any((w.real < 0) & (np.abs(w.imag) <= 1e-10 * np.abs(w).max()))
        return
    v, w = h.cosine_family(0.8)
    assert np.abs(v - ref[0]).max() <= 1e-6
    assert np.abs(w - ref[1]).max() <= 1e-6


def test_cosine_family_eig_rejects_branch_cut():
    assert matfun.cosine_family_eig(np.diag([1.0, -4.0]), 1.0) is None


def test_overflow_detected():
    with np.errstate(over="ignore"), pytest.raises(NumericOverflowError):
        matfun.propagator(np.array([[-1e300]]), "parabolic", 10.0)
    with pytest.raises(ValueError):
        matfun.propagator(np.eye(2), "hyperbolic", 1.0)
