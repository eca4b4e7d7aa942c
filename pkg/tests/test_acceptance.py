"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy import stats

from levynet.barron import barron_bound, barron_norm, evolved_norm, fit_two_layer_path, gaussian_function
from levynet.chaos import (build_index_set, index_sequence, is_downward_closed, sparse_eval_and_error,
                           summability_certificate, taylor_coeffs, tau0)
from levynet.cli import main
from levynet.constructive import ConstructionConfig, InfeasibleConstruction, constants_report, construct, rate_study
from levynet.experiments import calib_experiment, dimension_sweep, separable_check, strike_range
from levynet.levy_models import (CommonJump, LevyModel1D, LevyModelD, MertonJumps, SymbolSector, exp_moment,
                                 martingale_drift, symbol)
from levynet.payoffs import GaussianLog, PayoffSpec
from levynet.pricing_oracle import price_fourier_1d
from levynet.relu_net import average, metrics
from levynet.spectral import cheb_approx, derivative_l2_norm, gevrey_bound, max_exp_opt, spectral_emulate
from oracles import constants_fixtures
from test_relu_net import random_net, reference_realize
from test_spectral import grid_max


@pytest.fixture
def criterion(capsys):
    @contextmanager
    def run(number: int, title: str, limit: float = math.inf):
        t0 = time.perf_counter()
        ok = False
        try:
            yield
            elapsed = time.perf_counter() - t0
            assert elapsed < limit, f"runtime {elapsed:.1f} s exceeds {limit:g} s"
            ok = True
        finally:
            elapsed = time.perf_counter() - t0
            with capsys.disabled():
                print(f"\ncriterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}  ({elapsed:.1f} s)")
    return run


def bs_call(s, K, sigma, tau):
    v = sigma * math.sqrt(tau)
    d1 = (math.log(s / K) + 0.5 * v * v) / v
    return s * stats.norm.cdf(d1) - K * stats.norm.cdf(d1 - v)


def merton_series(s, K, sigma, lam, mj, sj, tau, terms=50):
    kappa = math.exp(mj + 0.5 * sj * sj) - 1
    out = 0.0
    for j in range(terms):
        v = sigma * sigma * tau + j * sj * sj
        m = math.log(s) - 0.5 * sigma * sigma * tau - lam * kappa * tau + j * mj
        d1 = (m - math.log(K) + v) / math.sqrt(v)
        out += stats.poisson.pmf(j, lam * tau) * (math.exp(m + 0.5 * v) * stats.norm.cdf(d1)
                                                  - K * stats.norm.cdf(d1 - math.sqrt(v)))
    return out


def test_01_oracle_correctness(criterion):
    with criterion(1, "Fourier oracle vs Black-Scholes and Merton series", 5.0):
        s = np.linspace(0.5, 1.5, 50)
        for sigma in (0.2, 0.4):
            for tau in (0.25, 1.0):
                got = price_fourier_1d(LevyModel1D.black_scholes(sigma), PayoffSpec.call(1.0), tau, s).value
                want = [bs_call(x, 1.0, sigma, tau) for x in s]
                assert np.max(np.abs(got - want)) <= 1e-7
        for K, tau in ((1.0, 0.5), (0.9, 1.0), (1.2, 0.25)):
            model = LevyModel1D.merton(0.1, 1.0, -0.1, 0.15)
            got = price_fourier_1d(model, PayoffSpec.call(K), tau, s).value
            want = [merton_series(x, K, 0.1, 1.0, -0.1, 0.15, tau) for x in s]
            assert np.max(np.abs(got - want)) <= 1e-6


def random_instance(rng):
    n = int(rng.integers(1, 6))
    L = int(rng.integers(1, 5))
    d = int(rng.integers(1, 5))
    general = rng.random() < 0.5
    k = int(rng.integers(1, 5)) if general else d
    nets = [random_net(rng, d, L) for _ in range(n)]
    w = rng.normal(size=n)
    if general:
        D = [rng.normal(size=(d, k)) for _ in range(n)]
    else:
        D = [np.exp(rng.normal(scale=0.5, size=d)) for _ in range(n)]
    c = [rng.normal(size=d) for _ in range(n)]
    return nets, w, D, c, k, general


def test_02_averaging_property_suite(criterion):
    with criterion(2, "averaging construction: realization identity and weight counts", 10.0):
        rng = np.random.default_rng(2024)
        for _ in range(500):
            nets, w, D, c, k, general = random_instance(rng)
            psi = average(nets, w, D, c)
            X = rng.normal(size=(20, k))
            parts = []
            for net, wi, Di, ci in zip(nets, w, D, c):
                Y = X @ Di.T + ci if general else X * Di + ci
                parts.append(wi * reference_realize(net, Y))
            want = np.sum(parts, axis=0)
            scale = np.maximum(np.sum(np.abs(parts), axis=0), 1.0)
            assert np.all(np.abs(psi(X).reshape(want.shape) - want) <= 1e-10 * scale)
            mp = metrics(psi)
            ms = [metrics(net) for net in nets]
            if not general:
                assert mp.M <= sum(m.M for m in ms)
            for j in range(1, len(mp.per_layer)):
                assert mp.per_layer[j] <= sum(m.per_layer[j] for m in ms)


def test_03_monte_carlo_rate(criterion):
    with criterion(3, "construction error rate in n and M = 3n", 120.0):
        ns = [2**k for k in range(6, 15)]
        rs = rate_study(LevyModel1D.black_scholes(0.2), PayoffSpec.call(1.0), 1.0, (0.5, 1.5), ns, trials=8,
                        seed=0)
        print(f"\n  slope = {rs.slope:.4f}  r2 = {rs.r2:.4f}")
        assert -0.65 <= rs.slope <= -0.35
        assert rs.M == [3 * n for n in ns]


@pytest.mark.parametrize("fixture", constants_fixtures(), ids=lambda f: f[0])
def test_04_multivariate_constants(criterion, fixture):
    name, model, pc, T, eps, b, want = fixture
    with criterion(4, f"multivariate constants match re-derivation [{name}]"):
        r = constants_report(model, pc, T, eps, b)
        for got, ref in zip((r.eps_bar, r.n, r.D, r.size_bound), want):
            assert abs(got - ref) <= 1e-12 * abs(ref)


def test_04_bound_driven_mode_is_not_executed(criterion):
    with criterion(4, "bound-driven construction is reported as infeasible"):
        _, model, _, T, eps, b, _ = constants_fixtures()[0]
        spec = PayoffSpec.basket_call([0.5, 0.5], 1.0)
        with pytest.raises(InfeasibleConstruction):
            construct(model, spec, T, ConstructionConfig(epsilon=eps, b=b, mode="paper"))


def test_05_dimension_sweep(criterion):
    with criterion(5, "network size grows polynomially in d; separable prices agree", 600.0):
        sw = dimension_sweep(0.2, [1, 2, 5, 10, 20], 0.02)
        for r in sw.rows:
            print(f"\n  d = {r.d:2d}  n = {r.n:5d}  M = {r.M:7d}  error = {r.error:.4e}", end="")
        print(f"\n  polynomial r2 = {sw.poly_r2:.4f}  exponential r2 = {sw.exp_r2:.4f}")
        assert all(r.error <= 0.02 for r in sw.rows)
        assert sw.poly_r2 > sw.exp_r2
        S = np.random.default_rng([0, 11]).uniform(0.5, 1.5, size=(8, 5))
        chk = separable_check(0.2, 5, 1.0, 1.0, S, 1 << 16, 0)
        assert chk.max_z <= 3.0


SIMULABLE = [
    LevyModel1D.black_scholes(0.2),
    LevyModel1D.merton(0.1, 1.0, -0.1, 0.15),
    LevyModel1D.merton(0.3, 3.0, 0.2, 0.4),
    LevyModel1D.kou(0.1, 1.0, 0.4, 10.0, 5.0),
    LevyModel1D.kou(0.0, 2.0, 0.6, 4.0, 3.0),
    LevyModelD.independent(LevyModel1D.merton(0.2, 0.5, -0.1, 0.15), 3),
    LevyModelD(np.array([[0.04, 0.01], [0.01, 0.09]]), np.zeros(2),
               (MertonJumps(0.5, -0.1, 0.15), None), CommonJump(0.7, np.array([0.5, -0.3]), 0.05, 0.2)),
]


@pytest.mark.parametrize("model", SIMULABLE, ids=lambda m: f"{type(m).__name__}-{m.d}")
def test_06_martingale_and_moment_identities(criterion, model):
    with criterion(6, f"martingale and moment identities [d = {model.d}]"):
        assert model.simulable
        m = model.with_gamma(martingale_drift(model))
        rng = np.random.default_rng(6)
        if model.d == 1:
            assert abs(symbol(m, -1j)) <= 1e-12
            assert abs(exp_moment(m, 1.0, 1.0) - 1) <= 1e-10
            xi = rng.uniform(-40, 40, 500)
        else:
            assert np.all(np.abs(symbol(m, -1j * np.eye(m.d))) <= 1e-12)
            assert np.all(np.abs(exp_moment(m, 1.0, 1.0) - 1) <= 1e-10)
            xi = rng.uniform(-40, 40, (500, m.d))
        psi = symbol(m, xi)
        assert np.all(psi.real >= -1e-12)
        np.testing.assert_allclose(symbol(m, -xi), np.conj(psi), rtol=0, atol=1e-10)


def test_07_gevrey_suite(criterion):
    with criterion(7, "derivative norms below Gevrey bounds; max_exp_opt vs grid search", 30.0):
        spec = PayoffSpec.butterfly(0.8, 1.0, 1.25)
        v0 = spec.log_payoff()
        model = LevyModel1D.black_scholes(0.3)
        sec = SymbolSector(1.0, 0.045)
        for tau in (0.25, 1.0):
            for k in range(11):
                assert derivative_l2_norm(model, v0, tau, k) <= gevrey_bound(k, tau, sec, v0.l2_norm()) * (1 + 1e-6)
        rng = np.random.default_rng(7)
        for _ in range(20):
            m, kappa, mu = rng.uniform(0.5, 6), rng.uniform(0.2, 3), rng.uniform(0.5, 2.5)
            want = grid_max(m, kappa, mu)
            assert abs(max_exp_opt(m, kappa, mu) - want) <= 1e-6 * want


def test_08_spectral_rate(criterion):
    with criterion(8, "Chebyshev spectral rate and emulation error", 60.0):
        model = LevyModel1D.black_scholes(0.3)
        spec = PayoffSpec.butterfly(0.8, 1.0, 1.25)
        r = cheb_approx(model, spec, 0.25, (0.5, 1.5), list(range(4, 33, 4)), SymbolSector(1.0, 0.045), 2000)
        e = {row.p: row.sup_error for row in r.rows}
        print(f"\n  e(24) = {e[24]:.3e}  max relative residual = {r.fit_max_rel_residual:.3f}")
        assert r.delta == 1.0
        assert e[24] < 1e-8
        assert r.fit_max_rel_residual <= 0.1
        for p in (8, 16, 24):
            em = spectral_emulate(r, p, 1e-6)
            assert em.measured_error <= em.cheb_error + 1e-6


def test_09_chaos_suite(criterion):
    with criterion(9, "sparse chaos bounds, index sets and certificate", 120.0):
        sector = SymbolSector(1.0, 0.5)
        model = LevyModelD.independent(LevyModel1D.black_scholes(1.0), 2)
        t0 = tau0(2, 1.0, 1.0, 0.5)
        exp = taylor_coeffs(model, GaussianLog(d=2), 2 * t0, sector, max_order=8)
        assert exp.indices.sum(axis=1).max() == 8
        assert np.all(np.abs(exp.t) <= exp.bounds * (1 + 1e-6))
        groups = index_sequence(exp.indices, exp.bounds, 64)
        prev: list = []
        for n in range(1, 65):
            lam = build_index_set(exp.indices, exp.bounds, n, groups)
            assert is_downward_closed(lam) and set(prev) <= set(lam)
            prev = lam
        g = np.linspace(-1, 1, 21)
        X = np.array([[a, b] for a in g for b in g])
        for r in sparse_eval_and_error(exp, list(range(1, 65)), X):
            assert r.sup_error <= r.tail_bound + r.oracle_error
        for tau in (0.5 * t0, t0, 1.01 * t0, 2 * t0):
            assert summability_certificate(2, tau, sector, exp.v0hat_l1, 1.0).finite == (tau > t0)


def test_10_barron_suite(criterion):
    with criterion(10, "evolved Barron norms and two-layer fit rate", 180.0):
        g = gaussian_function()
        norm = barron_norm(g)
        for model in (LevyModel1D.black_scholes(0.2), LevyModel1D.merton(0.1, 1.0, -0.1, 0.15),
                      LevyModel1D.kou(0.1, 1.0, 0.4, 10.0, 5.0)):
            for tau in (0.0, 0.5, 1.0):
                assert evolved_norm(g, model, tau) <= norm * (1 + 1e-8)
        g2 = gaussian_function(2, width=0.8)
        m2 = LevyModelD.independent(LevyModel1D.kou(0.1, 1.0, 0.4, 10.0, 5.0), 2)
        for tau in (0.0, 0.5, 1.0):
            assert evolved_norm(g2, m2, tau) <= barron_norm(g2) * (1 + 1e-8)
        R = 2.0
        ms = [64, 128, 256, 512, 1024, 2048, 4096]
        for m, fit in zip(ms, fit_two_layer_path(g, 1, R, ms)):
            assert fit.l2pi_error <= barron_bound(norm, R, m)
            assert barron_bound(norm, R, m) == pytest.approx(max(1.0, R) * norm / math.sqrt(m), rel=1e-14)
            met = metrics(fit.net)
            assert met.L == 2 and met.M <= m * (1 + 2)


def test_11_calibration(criterion):
    with criterion(11, "calibration mse below epsilon for N = 20 and N = 40", 60.0):
        model = LevyModel1D.merton(0.2, 0.5, -0.1, 0.15)
        for N in (20, 40):
            _, res = calib_experiment(model, 1.0, strike_range(0.8, 1.25, N), 1.0, 1e-3)
            print(f"\n  N = {N}  mse = {res.mse:.3e}  M = {res.M}", end="")
            assert res.mse <= 1e-3 and res.met_target and res.M > 0


RERUNS = [
    ("price", {"s": [0.8, 1.0, 1.2]}),
    ("construct", {"epsilon": 0.05}),
    ("rate-study", {"nList": [64, 256], "trials": 2}),
    ("spectral", {"pList": [4, 8], "emulateP": 8, "kMax": 3, "gridPoints": 200}),
    ("chaos", {"maxOrder": 4, "nList": [1, 4, 8], "emulateN": 4, "gridPoints": 5}),
    ("barron", {"mList": [8, 16], "nPoints": 2000}),
    ("calib", {"strikeRange": {"lo": 0.8, "hi": 1.25, "N": 10}}),
]


@pytest.mark.parametrize("sub, cfg", RERUNS, ids=[r[0] for r in RERUNS])
def test_12_determinism(criterion, tmp_path, sub, cfg):
    with criterion(12, f"byte-identical rerun [{sub}]"):
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg))
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main([sub, "--config", str(path), "--seed", "5", "--out", str(out)]) == 0
            outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        assert outs[0] == outs[1]
        assert any(k.endswith(".csv") for k in outs[0]) and "report.json" in outs[0]
