import math

import numpy as np
import pytest
from scipy import integrate

from levynet.barron import (BarronFunction, barron_bound, barron_norm, evolved_norm, fit_two_layer,
                            fit_two_layer_path, gaussian_function, sample_points)
from levynet.errors import DimensionTooLarge, Diverges
from levynet.levy_models import LevyModel1D, LevyModelD
from levynet.relu_net import metrics


def scaled(f: BarronFunction, lam: float) -> BarronFunction:
    # g(x) = f(lam x) has g_hat(xi) = f_hat(xi / lam) / lam in one dimension
    return BarronFunction(1, lambda xi: f.fhat(np.asarray(xi) / lam) / lam,
                          lambda r: f.envelope(np.asarray(r) / lam) / lam)


def test_gaussian_norm_closed_form():
    g = gaussian_function()
    assert barron_norm(g) == pytest.approx(2.0, rel=1e-10)
    assert g.exact_norm == pytest.approx(2.0, rel=1e-15)
    g3 = gaussian_function(3, width=0.7, amplitude=1.3)
    assert barron_norm(g3) == pytest.approx(g3.exact_norm, rel=1e-8)


def test_zero_function_and_scaling():
    zero = BarronFunction(1, lambda xi: np.zeros_like(np.asarray(xi, float)), lambda r: np.zeros_like(r))
    assert barron_norm(zero) == 0.0
    g = gaussian_function()
    for lam in (0.5, 2.0, 3.0):
        assert barron_norm(scaled(g, lam)) == pytest.approx(lam * 2.0, rel=1e-8)


def test_non_radial_box_quadrature():
    a, b = 1.0, 0.6
    fhat = lambda X: np.exp(-0.5 * (a * a * X[:, 0] ** 2 + b * b * X[:, 1] ** 2))
    f = BarronFunction(2, fhat, lambda r: np.exp(-0.5 * b * b * np.asarray(r) ** 2))
    # radial part in closed form: int_0^inf r^2 exp(-c r^2 / 2) dr = sqrt(pi / 2) c^{-3/2}
    c = lambda t: a * a * math.cos(t) ** 2 + b * b * math.sin(t) ** 2
    want = math.sqrt(math.pi / 2) * integrate.quad(lambda t: c(t) ** -1.5, 0, 2 * math.pi, epsrel=1e-13)[0]
    assert barron_norm(f) == pytest.approx(want, rel=1e-10)


def test_diverging_norm():
    f = BarronFunction(1, lambda xi: 1 / (1 + np.asarray(xi) ** 2), lambda r: 1 / (1 + np.asarray(r) ** 2))
    with pytest.raises(Diverges):
        barron_norm(f)


def test_evolved_norm_examples():
    g = gaussian_function()
    bs = LevyModel1D.black_scholes(0.2)
    assert evolved_norm(g, bs, 0.0) == pytest.approx(barron_norm(g), rel=1e-12)
    # int |xi| exp(-(1/2 + 0.02) xi^2) dxi = 2 / 1.04
    assert evolved_norm(g, bs, 1.0) == pytest.approx(2 / 1.04, rel=1e-10)
    vals = [evolved_norm(g, LevyModel1D.merton(0.1, 1.0, -0.1, 0.15), t) for t in (0.0, 0.5, 1.0, 2.0)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < vals[0]


@pytest.mark.parametrize("d", [2, 3])
def test_evolved_norm_never_exceeds_norm(d):
    g = gaussian_function(d, width=0.8)
    m = LevyModelD.independent(LevyModel1D.kou(0.1, 1.0, 0.4, 10.0, 5.0), d)
    base = barron_norm(g)
    assert evolved_norm(g, m, 0.0) == pytest.approx(g.exact_norm, rel=1e-10)
    for tau in (0.5, 1.0):
        assert evolved_norm(g, m, tau) <= base * (1 + 1e-8)
    with pytest.raises(ValueError):
        evolved_norm(g, LevyModel1D.black_scholes(0.2), 1.0)


def test_non_radial_integrals_limited_to_three_dimensions():
    g = gaussian_function(4)
    with pytest.raises(DimensionTooLarge):
        evolved_norm(g, LevyModelD.independent(LevyModel1D.black_scholes(0.2), 4), 1.0)


def test_realizable_target_is_recovered():
    W = np.ones((4, 1))
    b = np.array([1.5, 0.3, -0.4, -1.2])
    a = np.array([0.7, -1.1, 0.9, 0.4])
    f = lambda x: np.maximum(np.outer(x, W[:, 0]) + b, 0) @ a
    fit = fit_two_layer(f, 1, 2.0, 16, n_points=4096)
    assert fit.l2pi_error <= 1e-8


def test_zero_target():
    fit = fit_two_layer(lambda x: np.zeros(np.shape(x)[0]), 1, 2.0, 8, n_points=2048)
    assert fit.l2pi_error == 0.0 and np.all(fit.a == 0)


def test_greedy_gaussian_meets_bound_at_every_m():
    g = gaussian_function()
    norm = barron_norm(g)
    ms = [64, 128, 256, 512, 1024, 2048, 4096]
    fits = fit_two_layer_path(g, 1, 2.0, ms)
    errs = [f.l2pi_error for f in fits]
    for m, f in zip(ms, fits):
        assert f.l2pi_error <= barron_bound(norm, 2.0, m)
        met = metrics(f.net)
        assert met.L == 2 and met.M <= m * (1 + 2)
    assert all(b <= a for a, b in zip(errs, errs[1:]))
    assert np.polyfit(np.log(ms), np.log(errs), 1)[0] <= -0.4


def test_fit_net_realizes_reported_error():
    g = gaussian_function()
    fit = fit_two_layer(g, 1, 2.0, 64, n_points=8192, seed=3)
    X = sample_points(1, 2.0, 8192, 3)
    r = fit.net(X) - g.f(X[:, 0])
    assert math.sqrt(np.mean(r * r)) == pytest.approx(fit.l2pi_error, rel=1e-8)


def test_two_dimensional_fits():
    g = gaussian_function(2)
    path = fit_two_layer_path(g, 2, 1.0, [8, 32], n_points=4096, seed=1)
    assert path[1].l2pi_error <= path[0].l2pi_error
    rf = fit_two_layer(g, 2, 1.0, 64, method="RandomFeatures", n_points=4096)
    assert np.isfinite(rf.l2pi_error)
    assert metrics(rf.net).M <= 64 * 4 and rf.net.depth == 2
    with pytest.raises(ValueError):
        fit_two_layer(g, 2, 1.0, 8, method="Newton", n_points=256)
