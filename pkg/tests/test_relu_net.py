from pathlib import Path

import numpy as np
import pytest

from levynet import kernels
from levynet.errors import DimensionMismatch, LayerMismatch, OutputDimMismatch, ParseError
from levynet.payoffs import PayoffSpec
from levynet.relu_net import (ReluNetwork, average, average_diagonal, chebyshev_eval, compose, deserialize,
                              identity_net, load, metrics, pad_depth, payoff_net, polynomial_emulator,
                              product_error, product_net, realize, serialize)

FIXTURES = Path(__file__).parent / "fixtures"
CALL = ReluNetwork([([[1.0]], [-1.0]), ([[1.0]], [0.0])])


def random_net(rng, d, L, out=1, width=(1, 5)):
    dims = [d] + [int(rng.integers(*width)) for _ in range(L - 1)] + [out]
    return ReluNetwork([(rng.normal(size=(dims[i + 1], dims[i])), rng.normal(size=dims[i + 1]))
                        for i in range(L)])


def reference_realize(net, X):
    h = np.asarray(X, float)
    for A, b in net.layers[:-1]:
        h = np.maximum(h @ A.T + b, 0)
    A, b = net.layers[-1]
    return h @ A.T + b


def test_call_net_hand_values():
    assert realize(CALL, 2.0) == pytest.approx(1.0)
    assert realize(CALL, 0.5) == 0.0
    m = metrics(CALL)
    assert (m.M, m.L) == (3, 2)


def test_affine_single_layer_and_zero_net():
    A, b = np.array([[1.0, -2.0], [0.5, 3.0]]), np.array([0.1, -0.2])
    x = np.array([-3.0, 2.0])
    np.testing.assert_array_equal(realize(ReluNetwork([(A, b)]), x), A @ x + b)
    assert metrics(ReluNetwork([(np.zeros((2, 3)), np.zeros(2)), (np.zeros((1, 2)), [0.0])])).M == 0


def test_realize_rejects_wrong_dimension():
    net = random_net(np.random.default_rng(0), 3, 2)
    with pytest.raises(DimensionMismatch):
        net(np.ones((4, 2)))


def test_average_identity_case():
    rng = np.random.default_rng(1)
    net = random_net(rng, 3, 3)
    psi = average([net], [1.0], [np.eye(3)], [np.zeros(3)])
    X = rng.normal(size=(100, 3))
    np.testing.assert_allclose(psi(X), net(X), atol=1e-12)


def test_average_of_shifted_calls():
    rng = np.random.default_rng(2)
    x = rng.normal(scale=0.3, size=2)
    psi = average([CALL, CALL], [0.5, 0.5], [np.array([np.exp(x[0])]), np.array([np.exp(x[1])])])
    s = rng.uniform(0.2, 3.0, 50)
    want = 0.5 * np.maximum(s * np.exp(x[0]) - 1, 0) + 0.5 * np.maximum(s * np.exp(x[1]) - 1, 0)
    np.testing.assert_allclose(psi(s), want, atol=1e-12)


def test_average_zero_weight_drops_last_layer_block():
    rng = np.random.default_rng(3)
    a, b = random_net(rng, 2, 3), random_net(rng, 2, 3)
    psi = average([a, b], [0.0, 0.7])
    assert metrics(psi).per_layer[-1] <= metrics(b).per_layer[-1]


def test_average_count_and_errors():
    rng = np.random.default_rng(4)
    nets = [random_net(rng, 2, 3) for _ in range(4)]
    psi = average(nets, rng.normal(size=4))
    assert metrics(psi).M <= sum(metrics(n).M for n in nets)
    with pytest.raises(LayerMismatch):
        average([random_net(rng, 2, 2), random_net(rng, 2, 3)], [1, 1])
    with pytest.raises(OutputDimMismatch):
        average([random_net(rng, 2, 2, out=1), random_net(rng, 2, 2, out=2)], [1, 1])


def test_average_diagonal_matches_general_average():
    rng = np.random.default_rng(5)
    phi, _ = payoff_net(PayoffSpec.basket_call([0.3, 0.7], 1.0), 2)
    diags = np.exp(rng.normal(scale=0.2, size=(6, 2)))
    w = np.full(6, 1 / 6)
    a = average_diagonal(phi, w, diags)
    b = average([phi] * 6, w, list(diags))
    for (A1, b1), (A2, b2) in zip(a.layers, b.layers):
        np.testing.assert_allclose(A1, A2, atol=1e-15)
        np.testing.assert_allclose(b1, b2, atol=1e-15)
    assert metrics(a).M <= 6 * metrics(phi).M


def test_pad_depth():
    assert pad_depth(CALL, 2) is CALL
    s = np.linspace(0, 3, 1000)
    padded = pad_depth(CALL, 4)
    assert padded.depth == 4
    np.testing.assert_allclose(padded(s), CALL(s), atol=1e-12)
    width = max(CALL.widths)
    assert metrics(padded).M <= metrics(CALL).M + 4 * width * 2
    lin = ReluNetwork([(np.array([[2.0, -1.0]]), [0.5])])
    X = np.random.default_rng(6).normal(size=(50, 2))
    np.testing.assert_allclose(pad_depth(lin, 3)(X), lin(X), atol=1e-12)


def test_identity_net():
    X = np.random.default_rng(7).normal(size=(20, 3))
    np.testing.assert_allclose(identity_net(3, 4)(X), X, atol=1e-15)


def test_compose_merges_affine_maps():
    rng = np.random.default_rng(8)
    f, g = random_net(rng, 2, 3, out=2), random_net(rng, 2, 2)
    X = rng.normal(size=(30, 2))
    np.testing.assert_allclose(compose(g, f)(X), g(f(X)), atol=1e-12)
    assert compose(g, f).depth == f.depth + g.depth - 1


def test_payoff_nets():
    phi, pc = payoff_net(PayoffSpec.call(1.0))
    assert phi(1.0) == 0.0 and phi(2.0) == 1.0
    assert pc.c == 3.0 and pc.q == 0.0
    phi, _ = payoff_net(PayoffSpec.basket_call([0.5, 0.5], 1.0), 2)
    assert phi(np.array([1.0, 1.0])) == 0.0 and phi(np.array([2.0, 2.0])) == 1.0
    phi, _ = payoff_net(PayoffSpec.call_on_max(0.0), 4)
    assert phi(np.array([1.0, 3.0, 2.0, 0.0])) == pytest.approx(3.0)
    X = np.random.default_rng(9).uniform(0, 3, size=(200, 4))
    np.testing.assert_allclose(phi(X), X.max(axis=1), atol=1e-12)
    bf = PayoffSpec.butterfly(0.8, 1.0, 1.25)
    s = np.linspace(0.5, 1.5, 101)
    np.testing.assert_allclose(payoff_net(bf)[0](s), bf.evaluate(s), atol=1e-14)
    with pytest.raises(DimensionMismatch):
        payoff_net(PayoffSpec.call(1.0), 2)


def test_product_net_error():
    g = np.linspace(-1, 1, 201)
    X, Y = np.meshgrid(g, g)
    P = np.column_stack([X.ravel(), Y.ravel()])
    for m in (1, 3, 6):
        err = np.max(np.abs(product_net(m)(P) - P[:, 0] * P[:, 1]))
        assert err <= product_error(m) * (1 + 1e-9)


def test_polynomial_emulator_exact_low_degree_and_T4():
    x = np.linspace(-1, 1, 10_001)
    np.testing.assert_array_equal(polynomial_emulator([0.7], 1e-3)(x), np.full(x.size, 0.7))
    np.testing.assert_array_equal(polynomial_emulator([0.0, 1.0], 1e-3)(x), x)
    c = np.zeros(5)
    c[4] = 1.0
    net = polynomial_emulator(c, 1e-3)
    assert np.max(np.abs(net(x) - chebyshev_eval(c, x))) <= 1e-3


def test_polynomial_emulator_random_coefficients():
    rng = np.random.default_rng(10)
    x = np.linspace(-1, 1, 4001)
    for p in (2, 5, 9, 16):
        c = rng.normal(size=p + 1) / (1 + np.arange(p + 1))
        for delta in (1e-2, 1e-6):
            assert np.max(np.abs(polynomial_emulator(c, delta)(x) - chebyshev_eval(c, x))) <= delta


def test_serialize_round_trip_and_fixture():
    rng = np.random.default_rng(11)
    net = random_net(rng, 3, 4)
    back = deserialize(serialize(net))
    X = rng.normal(size=(100, 3))
    np.testing.assert_array_equal(back(X), net(X))
    assert metrics(back) == metrics(net)
    bf = load(FIXTURES / "butterfly_net.json")
    assert (metrics(bf).M, metrics(bf).L) == (9, 2)
    pn = load(FIXTURES / "product_net_m3.json")
    assert (metrics(pn).M, metrics(pn).L) == (124, 5)
    assert pn(np.array([0.5, -0.5])) == pytest.approx(-0.25, abs=product_error(3))


@pytest.mark.parametrize("doc, where", [
    ('{"inputDim": 2, "layers": [{"A": [[1.0]], "b": [0.0]}]}', "$.layers[0].A"),
    ('{"inputDim": 1, "layers": [{"A": [[1.0]], "b": [0.0, 1.0]}]}', "$.layers[0].b"),
    ('{"layers": []}', "$"),
    ('{"inputDim": 1, "layers": [', "line 1"),
])
def test_deserialize_errors(doc, where):
    with pytest.raises(ParseError) as e:
        deserialize(doc)
    assert e.value.location.startswith(where)


def test_kernel_backends_agree():
    rng = np.random.default_rng(12)
    W1, b1 = rng.normal(size=(300, 1)), rng.normal(size=300)
    W2, b2 = rng.normal(size=(1, 300)), rng.normal(size=1)
    X = rng.normal(size=(500, 1))
    want = kernels.shallow_realize(W1, b1, W2, b2, X, backend="python")
    np.testing.assert_allclose(reference_realize(ReluNetwork([(W1, b1), (W2, b2)]), X), want, atol=1e-12)
    s, scale = np.linspace(0.5, 1.5, 40), np.exp(rng.normal(size=1000))
    ref = np.maximum(np.outer(s, scale) - 1.0, 0).mean(axis=1)
    np.testing.assert_allclose(kernels.scaled_call_average(scale, s, 1.0, backend="python"), ref, atol=1e-14)
    if kernels.BACKEND == "compiled":
        np.testing.assert_allclose(kernels.shallow_realize(W1, b1, W2, b2, X, backend="compiled"), want,
                                   atol=1e-12)
        np.testing.assert_allclose(kernels.scaled_call_average(scale, s, 1.0, backend="compiled"), ref,
                                   atol=1e-14)
