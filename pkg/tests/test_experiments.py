import numpy as np
import pytest

from levynet.constructive import linear_fit, loglog_fit, rate_study
from levynet.experiments import (basket_spec, calib_experiment, calibration_mse, call_chain, dimension_sweep,
                                 separable_check, strike_range)
from levynet.levy_models import LevyModel1D
from levynet.pricing_oracle import closed_form_reference
from levynet.payoffs import PayoffSpec
from levynet.relu_net import payoff_net

BS = LevyModel1D.black_scholes(0.2)
MERTON = LevyModel1D.merton(0.2, 0.5, -0.1, 0.15)


def test_fits_on_exact_laws():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    slope, icpt, r2 = loglog_fit(x, 3.0 * x**-0.5)
    assert slope == pytest.approx(-0.5, abs=1e-14) and icpt == pytest.approx(np.log(3.0), abs=1e-14)
    assert r2 == pytest.approx(1.0, abs=1e-14)
    slope, _, r2 = linear_fit(x, 2.0 * x + 1.0)
    assert slope == pytest.approx(2.0, abs=1e-14) and r2 == pytest.approx(1.0, abs=1e-14)


def test_call_chain_matches_closed_form():
    K = strike_range(0.8, 1.25, 5)
    C = call_chain(BS, 1.1, K, 0.5)
    want = [closed_form_reference("BlackScholesCall", {"sigma": 0.2, "tau": 0.5, "s": 1.1, "K": k}) for k in K]
    np.testing.assert_allclose(C, want, atol=1e-9)
    assert strike_range(0.8, 1.2, 1).tolist() == [1.0]


def test_single_strike_at_the_money():
    _, res = calib_experiment(BS, 1.0, [1.0], 1.0, 1e-3)
    assert res.N == 1 and res.mse <= 1e-3 and res.met_target


def test_self_fit_has_zero_mse():
    phi = payoff_net(PayoffSpec.call(1.0))[0]
    K = strike_range(0.8, 1.25, 7)
    C = K * phi(1.0 / K)
    assert calibration_mse(phi, 1.0, K, C) == 0.0


def test_calibration_is_strike_count_independent():
    for N in (10, 20):
        _, res = calib_experiment(MERTON, 1.0, strike_range(0.8, 1.25, N), 1.0, 1e-3)
        assert res.met_target and res.mse <= 1e-3
    assert res.weights_times_eps == pytest.approx(res.M * 1e-3)
    with pytest.raises(ValueError):
        calib_experiment(MERTON, 1.0, [1.0, -1.0], 1.0, 1e-3)


def test_sweep_first_row_reproduces_rate_study():
    sw = dimension_sweep(0.2, [1, 2], 0.05, trials=4, n_hi=256, oracle_samples=1 << 14)
    row = sw.rows[0]
    rs = rate_study(BS, basket_spec(1, 1.0), 1.0, (0.5, 1.5), [row.n], trials=4, seed=0,
                    grid_points_per_dim=201)
    assert rs.mean_error[0] == row.error and rs.M[0] == row.M
    assert np.isnan(rs.slope)
    assert all(r.error <= 0.8 * 0.05 for r in sw.rows)
    assert sw.rows[1].sampling == "grid" and sw.rows[1].B == pytest.approx(0.04)
    for d, ev in sw.evaluations.items():
        n_ok = min(n for n, e in ev if e <= 0.04)
        assert n_ok == sw.rows[[r.d for r in sw.rows].index(d)].n


def test_separable_basket_matches_one_dimensional_prices():
    S = np.random.default_rng(0).uniform(0.5, 1.5, size=(4, 3))
    chk = separable_check(0.2, 3, 1.0, 1.0, S, 1 << 16, seed=1)
    assert chk.max_z <= 3.0
