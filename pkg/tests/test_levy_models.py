import math

import numpy as np
import pytest
from scipy import integrate, stats

from levynet.errors import MomentDiverges, NotSimulable
from levynet.levy_models import (CommonJump, LevyModel1D, LevyModelD, SymbolSector, check_sector,
                                 exp_moment, exp_moment_bound, martingale_drift, model_from_dict,
                                 rng_stream, sample_increment, sample_increments, symbol, triplet_bounds)


def test_symbol_black_scholes_hand_value():
    m = LevyModel1D.black_scholes(0.2, gamma=-0.02)
    assert symbol(m, 1.0) == pytest.approx(0.02 + 0.02j, abs=1e-15)


def test_symbol_matches_levy_khintchine_quadrature():
    # psi(xi) = A xi^2/2 - i gamma xi - int (e^{i xi y} - 1 - i xi y 1{|y|<=1}) nu(dy)
    m = LevyModel1D.merton(0.15, 0.7, -0.2, 0.3, gamma=0.05)
    lam, mu, s = 0.7, -0.2, 0.3
    dens = lambda y: lam * stats.norm.pdf(y, mu, s)
    for xi in (0.3, 1.0, 4.0):
        re = integrate.quad(lambda y: (math.cos(xi * y) - 1) * dens(y), -10, 10, limit=200)[0]
        im = integrate.quad(lambda y: (math.sin(xi * y) - xi * y * (abs(y) <= 1)) * dens(y), -10, 10,
                            points=[-1, 1], limit=200)[0]
        want = 0.5 * 0.15**2 * xi**2 - 1j * 0.05 * xi - (re + 1j * im)
        assert symbol(m, xi) == pytest.approx(want, abs=1e-10)


@pytest.mark.parametrize("model", [
    LevyModel1D.black_scholes(0.2),
    LevyModel1D.merton(0.1, 1.0, -0.1, 0.15),
    LevyModel1D.kou(0.1, 1.0, 0.4, 10.0, 5.0),
    LevyModel1D.tempered_stable(1.0, 5.0, 8.0, 0.5, sigma=0.1),
])
def test_symbol_at_zero_and_conjugate_symmetry(model):
    assert abs(symbol(model, 0.0)) < 1e-14
    xi = np.random.default_rng(0).uniform(-30, 30, 200)
    psi = symbol(model, xi)
    assert np.all(psi.real >= -1e-12)
    np.testing.assert_allclose(symbol(model, -xi), np.conj(psi), atol=1e-12)


def test_merton_zero_intensity_reduces_to_black_scholes():
    xi = np.linspace(-20, 20, 41)
    a = symbol(LevyModel1D.merton(0.2, 0.0, -0.1, 0.3, gamma=0.01), xi)
    b = symbol(LevyModel1D.black_scholes(0.2, gamma=0.01), xi)
    np.testing.assert_allclose(a, b, atol=0)


def test_martingale_drift_examples():
    assert martingale_drift(LevyModel1D(0.2)) == pytest.approx(-0.02, abs=1e-15)
    assert martingale_drift(LevyModel1D.merton(0.0, 1.0, 0.0, 0.0, gamma=0.0)) == pytest.approx(0.0, abs=1e-15)
    for m in (LevyModel1D.merton(0.1, 1.0, -0.1, 0.15), LevyModel1D.kou(0.1, 1.0, 0.4, 10.0, 5.0),
              LevyModel1D.tempered_stable(1.0, 5.0, 8.0, 0.5)):
        assert abs(symbol(m, -1j)) < 1e-12


def test_exp_moment_examples():
    m = LevyModel1D.black_scholes(0.2, gamma=-0.02)
    assert exp_moment(m, 2.0, 1.0) == pytest.approx(math.exp(0.04), rel=1e-14)
    assert exp_moment(LevyModel1D.merton(0.1, 1.0, -0.1, 0.15), 1.0, 3.7) == pytest.approx(1.0, abs=1e-12)
    assert exp_moment_bound(0.04, 2.0, 1.0) == pytest.approx(math.exp(0.4 + 0.16 * math.e**2), rel=1e-14)


def test_exp_moment_diverges_outside_strip():
    with pytest.raises(MomentDiverges):
        exp_moment(LevyModel1D.kou(0.1, 1.0, 0.4, 1.5, 5.0, gamma=0.0), 2.0, 1.0)


def test_check_sector_examples():
    grid = np.linspace(-100, 100, 2001)
    assert check_sector(LevyModel1D.black_scholes(0.2), SymbolSector(1.0, 0.02), grid).holds
    assert check_sector(LevyModel1D.merton(0.1, 1.0, -0.1, 0.15), SymbolSector(1.0, 0.0), grid).holds
    assert not check_sector(LevyModel1D.merton(0.0, 1.0, -0.1, 0.15), SymbolSector(1.0, 0.01), grid).holds


def test_triplet_bounds_examples():
    m = LevyModelD.independent(LevyModel1D.black_scholes(0.2, gamma=-0.02), 3)
    assert triplet_bounds(m, 2.0) == pytest.approx(0.04, abs=1e-15)
    assert triplet_bounds(LevyModelD(np.zeros((2, 2)), np.zeros(2)), 2.0) == 0.0


def test_triplet_bounds_common_factor_against_quadrature():
    beta = np.array([0.6, 0.8])  # unit norm, so |y| > 1 iff |J| > 1
    lam, mu, s, p = 0.8, -0.3, 0.5, 2.0
    m = LevyModelD(0.01 * np.eye(2), np.zeros(2), None, CommonJump(lam, beta, mu, s))
    pdf = lambda y: lam * stats.norm.pdf(y, mu, s)
    want = 0.01
    for b in beta:
        tail = (integrate.quad(lambda y: math.exp(p * b * y) * pdf(y), -30, -1)[0]
                + integrate.quad(lambda y: math.exp(p * b * y) * pdf(y), 1, 30)[0])
        small = integrate.quad(lambda y: (b * y) ** 2 * pdf(y), -1, 1)[0]
        want = max(want, tail, small)
    assert triplet_bounds(m, p) == pytest.approx(want, rel=1e-8)


def test_sample_increment_deterministic_drift():
    m = LevyModelD(np.zeros((2, 2)), [0.1, -0.1])
    for t in range(5):
        np.testing.assert_allclose(sample_increment(m, 2.0, rng_stream(0, t)), [0.2, -0.2], atol=1e-15)


def test_black_scholes_martingale_sample_mean():
    m = LevyModel1D.black_scholes(0.2)
    X = sample_increments(m, 1.0, 1_000_000, rng_stream(1))[:, 0]
    e = np.exp(X)
    assert abs(e.mean() - 1.0) < 4 * e.std() / math.sqrt(e.size)


def test_merton_jump_counts_are_poisson():
    m = LevyModel1D.merton(0.1, 1.5, -0.1, 0.15)
    _, counts = sample_increments(m, 2.0, 100_000, rng_stream(2), return_counts=True)
    N = counts[0]
    kmax = 8
    obs = np.bincount(np.minimum(N, kmax), minlength=kmax + 1)
    pk = stats.poisson.pmf(np.arange(kmax), 3.0)
    exp_ = 100_000 * np.append(pk, 1 - pk.sum())
    assert stats.chisquare(obs, exp_).pvalue > 0.01


def test_tempered_stable_is_not_simulable():
    with pytest.raises(NotSimulable):
        sample_increments(LevyModel1D.tempered_stable(1.0, 5.0, 8.0, 0.5), 1.0, 10, rng_stream(0))


def test_rng_streams_are_reproducible_and_distinct():
    a = rng_stream(5, 1, 2).standard_normal(4)
    np.testing.assert_array_equal(a, rng_stream(5, 1, 2).standard_normal(4))
    assert not np.array_equal(a, rng_stream(5, 1, 3).standard_normal(4))


def test_model_from_dict_installs_martingale_drift():
    m = model_from_dict({"variant": "Kou", "sigma": 0.1, "lambda": 1.0, "pUp": 0.4, "etaPlus": 10.0,
                         "etaMinus": 5.0})
    assert abs(symbol(m, -1j)) < 1e-12
    md = model_from_dict({"variant": "BlackScholes", "sigma": 0.2, "d": 3})
    assert md.d == 3 and np.allclose(md.gamma, -0.02)
