import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pontryagin_lab.convergence import (
    Experiment,
    LadderConfig,
    class_membership_error,
    pn_strong_error,
    run_m0_reduction,
    run_projection_ladder,
    run_resolvent_convergence,
    run_schrodinger_ladder,
    trend_verdict,
    worker_count,
)
from pontryagin_lab.exact import a_roots
from pontryagin_lab.spectral import build_model

from conftest import ACCEPT, small_model

SHORT = (4, 16, 64, 256)


def accept_experiment(k, **kw):
    cfg, g = ACCEPT[k]
    return Experiment(build_model(cfg), g, seed=1, **kw)


# ------------------------------------------------------------------ metrics

def test_pn_strong_error_identity_is_zero(small):
    mod, g = small
    exp = Experiment(mod, g)
    sp = exp.approx(16)
    _, phi = exp.probe_matrix()
    assert np.all(pn_strong_error(sp, np.eye(sp.dim), np.eye(exp.space.dim), phi) <= 1e-14)
    u0 = exp.hamiltonian.propagator("schrodinger", 0.0)
    un0 = sp.propagator("schrodinger", 0.0)
    assert np.all(pn_strong_error(sp, un0, u0, phi) <= 1e-14)


def test_class_membership():
    mod, g = small_model(3)
    exp = Experiment(mod, g)
    _, phi = exp.probe_matrix()
    u = phi[:, 0]
    exact, offset, perturbed = [], [], []
    bump = np.zeros(exp.approx(4).dim)
    bump[-1] = 1.0
    for n in SHORT:
        sp = exp.approx(n)
        exact.append(class_membership_error(sp, sp.P @ u, u))
        offset.append(class_membership_error(sp, sp.P @ u + bump, u))
        perturbed.append(class_membership_error(sp, sp.P @ u + bump / n, u))
    assert max(exact) == 0.0
    assert min(offset) == pytest.approx(1.0)
    assert perturbed[-1] < perturbed[0] / 32


def test_trend_verdict_cases():
    ns = [4, 8, 16, 32]
    assert trend_verdict("a", ns, [1.0, 0.5, 0.25, 0.125], drop=8).passed
    assert not trend_verdict("b", ns, [1.0, 0.5, 0.25, 0.125], drop=10).passed
    assert not trend_verdict("c", ns, [1.0, 2.0, 4.0, 8.0]).passed
    z = trend_verdict("d", ns, [0.0, 1e-15, 0.0, 0.0])
    assert z.passed and z.detail == "exact"
    assert not trend_verdict("e", ns, [1.0, np.nan, 0.1, 0.01]).passed
    assert not trend_verdict("f", [], []).passed
    assert not trend_verdict("g", ns, [1.0, 0.0, 0.1, 0.01]).passed


@settings(max_examples=40, deadline=None)
@given(p=st.floats(0.2, 3.0), c=st.floats(1e-3, 1e3))
def test_trend_verdict_power_laws(p, c):
    ns = np.array([4, 8, 16, 32, 64, 128, 256], float)
    v = trend_verdict("pow", ns, c * ns**-p)
    assert v.slope == pytest.approx(-p, rel=1e-9)
    assert v.passed == (64.0**p >= 10.0)


def test_ladder_config_validation():
    with pytest.raises(ValueError):
        LadderConfig(n_values=(8, 4))
    with pytest.raises(ValueError):
        LadderConfig(n_values=())


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("PONTRYAGIN_LAB_WORKERS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("PONTRYAGIN_LAB_WORKERS", "nope")
    assert worker_count() == 1


# ------------------------------------------------------------------ ladders

def test_schrodinger_ladder_k2_short():
    rep = run_schrodinger_ladder(accept_experiment(2), LadderConfig(SHORT, (1.0,)))
    ns, errs = rep.series("U", 1.0)
    assert list(ns) == list(SHORT)
    assert errs[-1] < errs[0]
    assert rep.constants["majorant_fallback_n"] == []


def test_negative_subspace_choice_does_not_matter():
    ladder = LadderConfig((4, 16, 64, 256), (1.0,))
    base = run_schrodinger_ladder(accept_experiment(2), ladder)
    tilted = run_schrodinger_ladder(accept_experiment(2, random_subspace=True), ladder)
    assert [v.passed for v in base.verdicts] == [v.passed for v in tilted.verdicts]
    _, e1 = base.series("U", 1.0)
    _, e2 = tilted.series("U", 1.0)
    ratio = e2 / e1
    # majorant norms for different L_m are equivalent; the ratio stays in a fixed band
    assert ratio.max() / ratio.min() < 10


def test_workers_do_not_change_rows():
    ladder = LadderConfig((4, 16, 64), (0.5,))
    a = run_schrodinger_ladder(accept_experiment(3), ladder, workers=1)
    b = run_schrodinger_ladder(accept_experiment(3), ladder, workers=3)
    assert a.rows == b.rows


def test_m0_reduction_matches_rank_one_equation():
    cfg, g = ACCEPT[1]
    rep = run_m0_reduction(build_model(cfg), g[0], SHORT, (0.0, 0.5, 1.0), seed=2)
    assert rep.passed
    assert rep.constants["max_error"] <= 1e-9
    with pytest.raises(ValueError):
        run_m0_reduction(small_model(2)[0], -1.0, SHORT, (1.0,))


def test_singular_lambda_is_skipped():
    exp = accept_experiment(1)
    grid = np.linspace(-exp.model.eigenvalues[0] + 1e-3, 0.0, 400)
    root = a_roots(exp.space, grid)[0]
    rep = run_resolvent_convergence(exp, LadderConfig(SHORT, (1.0,), lambda_values=(root, 1.0)))
    skipped = [r for r in rep.rows if r.status != "ok"]
    assert skipped and all(r.status.startswith("skipped") for r in skipped)
    assert {r.param for r in skipped} == {root}
    assert [v.name for v in rep.verdicts] == ["resolvent lambda=1"]
    assert rep.passed


def test_projection_ladder_odd_exact():
    rep = run_projection_ladder(accept_experiment(3), LadderConfig(SHORT))
    assert rep.passed
    assert all(v.detail == "exact" for v in rep.verdicts if v.name.endswith("QP"))
