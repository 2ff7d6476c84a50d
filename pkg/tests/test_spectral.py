from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pontryagin_lab.errors import InvalidModelError
from pontryagin_lab.spectral import (
    SpectralModel,
    build_family,
    build_model,
    counterterms,
    moment,
    regularize,
    verify_singular_trend,
)


def test_order_from_dimension():
    mod = build_model({"d": 5, "N": 10})
    assert mod.k == 2
    assert mod.m == 1


def test_explicit_single_mode_moment():
    mod = build_model({"eigenvalues": [2.0], "amplitudes": [1.0], "k": 1})
    assert moment(mod, mod.amplitudes, 1) == 0.5


def test_harmonic_surrogate_second_moment():
    mod = build_model({"law": "power", "exponent": 1.0, "a": 0.0, "N": 3, "k": 2})
    assert np.allclose(mod.eigenvalues, [1, 2, 3])
    expected = sum(Fraction(1, j * j) for j in (1, 2, 3))
    assert expected == Fraction(49, 36)
    assert moment(mod, mod.amplitudes, 2) == pytest.approx(float(expected), rel=1e-15)


@pytest.mark.parametrize(
    "cfg",
    [
        {"eigenvalues": [1.0, -2.0], "amplitudes": [1, 1], "k": 1},
        {"eigenvalues": [0.0], "amplitudes": [1], "k": 1},
        {"eigenvalues": [], "amplitudes": [], "k": 1},
        {"law": "power", "N": 0, "k": 1, "exponent": 1.0},
        {"eigenvalues": [1.0], "amplitudes": [1.0, 2.0], "k": 1},
        {"eigenvalues": [1.0], "amplitudes": [np.inf], "k": 1},
        {"d": 1},
        {"k": 2, "d": 7},
        {"law": "bogus", "k": 1},
    ],
)
def test_invalid_models_rejected(cfg):
    with pytest.raises(InvalidModelError):
        build_model(cfg)


def test_eigenvalues_sorted_with_amplitudes():
    mod = build_model({"eigenvalues": [3.0, 1.0, 2.0], "amplitudes": [30.0, 10.0, 20.0], "k": 1})
    assert mod.eigenvalues.tolist() == [1.0, 2.0, 3.0]
    assert mod.amplitudes.tolist() == [10.0, 20.0, 30.0]


def test_model_is_immutable():
    mod = build_model({"d": 5, "N": 4})
    with pytest.raises(ValueError):
        mod.eigenvalues[0] = 7.0


def test_moment_examples():
    mod = SpectralModel(np.array([1.0, 2.0]), np.array([1.0, 1.0]), 1)
    assert moment(mod, mod.amplitudes, 1) == 1.5
    assert moment(mod, mod.amplitudes, 0) == 2.0
    mod4 = SpectralModel(np.array([4.0]), np.array([2.0]), 1)
    assert moment(mod4, mod4.amplitudes, 2) == 0.25


def test_regularize_examples():
    mod = SpectralModel(np.array([1.0]), np.array([1.0]), 1)
    assert regularize(mod, 1) == pytest.approx([0.36787944117144233], rel=1e-15)
    mod2 = SpectralModel(np.array([2.0]), np.array([3.0]), 1)
    assert regularize(mod2, 2) == pytest.approx([3 * np.exp(-1.0)], rel=1e-15)
    big = build_model({"d": 5, "N": 50})
    assert np.allclose(regularize(big, 10**12), big.amplitudes, rtol=1e-9)
    with pytest.raises(ValueError):
        regularize(mod, 0)


def test_counterterm_arithmetic():
    mod = SpectralModel(np.array([10.0 / 3.0]), np.array([1.0]), 1)
    z = counterterms(mod, mod.amplitudes, [-1.0])
    assert z[0] == pytest.approx(-1.3, rel=1e-14)


def test_exact_scheme_reproduces_targets(small):
    mod, g = small
    for n in (1, 5, 50):
        fam = build_family(mod, n, g)
        rebuilt = [moment(mod, fam.chi_n, l) + fam.z[l - 1] for l in range(1, mod.k + 1)]
        assert np.allclose(rebuilt, g, rtol=0, atol=1e-13)
        for l in range(mod.k + 1, mod.k + 4):
            assert fam.z_at(l - 1) == 0.0
            assert fam.g_n(l) == moment(mod, fam.chi_n, l)


def test_heavy_tail_counterterm_negative():
    mod = build_model({"law": "power", "exponent": 1.0, "a": 0.0, "N": 200, "k": 2})
    for n in (1, 2, 10, 100, 1000):
        fam = build_family(mod, n, [-1.0, 0.0])
        assert fam.z[1] < 0


def test_noisy_scheme_shifts_moments():
    mod = build_model({"d": 5, "N": 30})
    fam = build_family(mod, 8, [-1.0, -1.0], noise=0.4)
    assert np.allclose(fam.g_n_moments[:2], [-1.0 + 0.05, -1.0 + 0.05], atol=1e-13)


def test_alpha_must_match_first_target():
    mod = build_model({"d": 3, "N": 10})
    build_family(mod, 4, [-0.5], alpha=2.0)
    with pytest.raises(ValueError):
        build_family(mod, 4, [-1.0], alpha=2.0)
    with pytest.raises(ValueError):
        build_family(mod, 4, [-1.0], alpha=0.0)


def test_singular_trend_detects_divergence():
    models = [build_model({"d": 5, "N": n, "a": 1.0}) for n in (50, 100, 200, 400, 800)]
    rep = verify_singular_trend(models)
    assert all(b > a for a, b in zip(rep.values, rep.values[1:]))
    assert rep.strongly_singular


def test_singular_trend_flags_convergent_tail():
    models = [build_model({"law": "power", "exponent": 1.0, "a": 0.0, "N": n, "k": 2}) for n in (50, 100, 200, 400)]
    rep = verify_singular_trend(models)
    assert not rep.strongly_singular
    assert "not strongly singular" in rep.reason


def test_singular_trend_constant_family_flagged():
    mod = SpectralModel(np.array([2.0]), np.array([1.0]), 1)
    rep = verify_singular_trend([mod, mod, mod])
    assert not rep.strongly_singular
    rep1 = verify_singular_trend([mod])
    assert not rep1.strongly_singular


def test_singular_trend_in_regularization_index():
    mod = build_model({"d": 5, "N": 400})
    vals = [np.sqrt(moment(mod, regularize(mod, n), 2)) for n in (4, 16, 64, 256)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


@settings(max_examples=50, deadline=None)
@given(
    lam=st.lists(st.floats(1.0, 50.0), min_size=1, max_size=8),
    s=st.integers(0, 5),
)
def test_moment_nonincreasing_in_order(lam, s):
    lam = np.sort(np.array(lam))
    mod = SpectralModel(lam, np.ones_like(lam), 1)
    assert moment(mod, mod.amplitudes, s + 1) <= moment(mod, mod.amplitudes, s) * (1 + 1e-12)


@settings(max_examples=50, deadline=None)
@given(
    amps=st.lists(st.floats(-5, 5), min_size=3, max_size=3),
    c=st.floats(-10, 10),
    n=st.integers(1, 1000),
)
def test_regularize_commutes_with_scaling(amps, c, n):
    mod = SpectralModel(np.array([0.5, 2.0, 7.0]), np.array(amps), 1)
    lhs = regularize(mod, n, c * mod.amplitudes)
    rhs = c * regularize(mod, n)
    assert np.allclose(lhs, rhs, rtol=1e-14, atol=1e-300)
    assert np.all(np.abs(regularize(mod, n)) <= np.abs(mod.amplitudes))
