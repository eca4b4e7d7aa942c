"""Feed-forward ReLU networks as data: evaluation, size accounting, combinators.

A network is a list of affine layers (A_l, b_l); ReLU acts after every layer
except the last. M counts exact nonzero entries of all A_l and b_l.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.linalg import block_diag

from . import kernels
from .errors import DimensionMismatch, LayerMismatch, OutputDimMismatch, ParseError
from .payoffs import PayoffSpec


class ReluNetwork:
    __slots__ = ("layers",)

    def __init__(self, layers: Iterable[tuple]):
        frozen = []
        prev = None
        for i, (A, b) in enumerate(layers):
            A = np.array(A, dtype=float, ndmin=2)
            b = np.array(b, dtype=float).reshape(-1)
            if A.shape[0] != b.shape[0]:
                raise DimensionMismatch(f"layer {i}: A has {A.shape[0]} rows, b has {b.shape[0]} entries")
            if prev is not None and A.shape[1] != prev:
                raise DimensionMismatch(f"layer {i}: expects {A.shape[1]} inputs, previous layer gives {prev}")
            A.setflags(write=False)
            b.setflags(write=False)
            frozen.append((A, b))
            prev = A.shape[0]
        if not frozen:
            raise DimensionMismatch("a network needs at least one layer")
        self.layers = tuple(frozen)

    @property
    def input_dim(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1][0].shape[0]

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def widths(self) -> list[int]:
        return [self.input_dim] + [A.shape[0] for A, _ in self.layers]

    def __call__(self, x) -> np.ndarray:
        return realize(self, x)

    def __repr__(self) -> str:
        m = metrics(self)
        return f"ReluNetwork(widths={self.widths}, M={m.M}, L={m.L})"


@dataclass(frozen=True)
class NetMetrics:
    M: int
    L: int
    per_layer: tuple
    output_dim: int


def realize(net: ReluNetwork, x) -> np.ndarray:
    """Realization at a point (shape (d,)) or at the rows of x (shape (P, d)).

    For d = 1 networks a flat array is read as P points.
    """
    x = np.asarray(x, dtype=float)
    d = net.input_dim
    single = False
    if x.ndim == 0:
        x, single = x.reshape(1, 1), True
    elif x.ndim == 1:
        if d == 1:
            x = x.reshape(-1, 1)
        elif x.shape[0] == d:
            x, single = x.reshape(1, d), True
        else:
            raise DimensionMismatch(f"input has length {x.shape[0]}, network expects {d}")
    if x.shape[1] != d:
        raise DimensionMismatch(f"input has {x.shape[1]} columns, network expects {d}")
    if net.depth == 2 and x.shape[0] * net.layers[0][0].shape[0] > 4096:
        (A1, b1), (A2, b2) = net.layers
        out = kernels.shallow_realize(A1, b1, A2, b2, x)
    else:
        h = x.T
        for A, b in net.layers[:-1]:
            h = np.maximum(A @ h + b[:, None], 0.0)
        A, b = net.layers[-1]
        out = (A @ h + b[:, None]).T
    if single:
        out = out[0]
    if net.output_dim == 1:
        out = out[..., 0]
    return out


def metrics(net: ReluNetwork) -> NetMetrics:
    per = tuple(int(np.count_nonzero(A) + np.count_nonzero(b)) for A, b in net.layers)
    return NetMetrics(sum(per), net.depth, per, net.output_dim)


# ---------------------------------------------------------------------------
# elementary networks and combinators
# ---------------------------------------------------------------------------


def linear_net(A, b=None) -> ReluNetwork:
    A = np.array(A, dtype=float, ndmin=2)
    b = np.zeros(A.shape[0]) if b is None else b
    return ReluNetwork([(A, b)])


def constant_net(c: float, d: int = 1) -> ReluNetwork:
    return ReluNetwork([(np.zeros((1, d)), [c])])


def identity_net(k: int, L: int) -> ReluNetwork:
    """Depth-L identity on R^k using x = relu(x) - relu(-x)."""
    I = np.eye(k)
    if L == 1:
        return ReluNetwork([(I, np.zeros(k))])
    layers = [(np.vstack([I, -I]), np.zeros(2 * k))]
    layers += [(np.eye(2 * k), np.zeros(2 * k))] * (L - 2)
    layers.append((np.hstack([I, -I]), np.zeros(k)))
    return ReluNetwork(layers)


def compose(outer: ReluNetwork, inner: ReluNetwork) -> ReluNetwork:
    """Network realizing outer(inner(x)); the two touching affine maps are merged."""
    if outer.input_dim != inner.output_dim:
        raise DimensionMismatch(f"cannot feed {inner.output_dim} outputs into {outer.input_dim} inputs")
    Ao, bo = outer.layers[0]
    Ai, bi = inner.layers[-1]
    merged = (Ao @ Ai, Ao @ bi + bo)
    return ReluNetwork(list(inner.layers[:-1]) + [merged] + list(outer.layers[1:]))


def stack(nets: Sequence[ReluNetwork]) -> ReluNetwork:
    """Parallel networks on concatenated inputs, concatenated outputs (equal depth)."""
    L = nets[0].depth
    if any(n.depth != L for n in nets):
        raise LayerMismatch("stack needs equal depths")
    layers = []
    for l in range(L):
        layers.append((block_diag(*[n.layers[l][0] for n in nets]),
                       np.concatenate([n.layers[l][1] for n in nets])))
    return ReluNetwork(layers)


def pad_depth(net: ReluNetwork, target_L: int) -> ReluNetwork:
    """Same realization with depth target_L.

    For L >= 2 the last hidden layer is nonnegative, so identity layers are
    inserted in front of the output layer (cost N_{L-1} per layer). A depth-1
    net is first split as A x + b = relu(Ax + b) - relu(-Ax - b).
    """
    L = net.depth
    if target_L < L:
        raise ValueError("target depth is smaller than current depth")
    if target_L == L:
        return net
    if L == 1:
        A, b = net.layers[0]
        k = A.shape[0]
        first = (np.vstack([A, -A]), np.concatenate([b, -b]))
        ident = [(np.eye(2 * k), np.zeros(2 * k))] * (target_L - 2)
        last = (np.hstack([np.eye(k), -np.eye(k)]), np.zeros(k))
        return ReluNetwork([first] + ident + [last])
    w = net.layers[-2][0].shape[0]
    ident = [(np.eye(w), np.zeros(w))] * (target_L - L)
    return ReluNetwork(list(net.layers[:-1]) + ident + [net.layers[-1]])


def average(nets: Sequence[ReluNetwork], w, D=None, c=None) -> ReluNetwork:
    """Network psi with R(psi)(x) = sum_i w_i R(nets[i])(D_i x + c_i).

    Block construction: first layer stacks A_1^i D_i, hidden layers are block
    diagonal, the output layer concatenates w_i A_L^i. D_i default to the
    identity and c_i to zero; D may also be given as an (n, d) array of diagonals.
    """
    n = len(nets)
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape[0] != n:
        raise ValueError("need one weight per network")
    L = nets[0].depth
    out_dim = nets[0].output_dim
    for i, net in enumerate(nets):
        if net.depth != L:
            raise LayerMismatch(f"network {i} has depth {net.depth}, expected {L}")
        if net.output_dim != out_dim:
            raise OutputDimMismatch(f"network {i} has output dim {net.output_dim}, expected {out_dim}")
    d_in = _input_dim_after(nets[0], D, 0)
    firsts_A, firsts_b = [], []
    for i, net in enumerate(nets):
        A1, b1 = net.layers[0]
        Di = _Dmat(D, i, A1.shape[1])
        ci = np.zeros(A1.shape[1]) if c is None else np.asarray(c[i], dtype=float)
        AD = A1 * Di[None, :] if Di.ndim == 1 else A1 @ Di
        if AD.shape[1] != d_in:
            raise DimensionMismatch(f"network {i}: input map has {AD.shape[1]} columns, expected {d_in}")
        firsts_A.append(AD)
        firsts_b.append(A1 @ ci + b1)
    if L == 1:
        A = sum(wi * Ai for wi, Ai in zip(w, firsts_A))
        b = np.array([math.fsum(col) for col in np.array([wi * bi for wi, bi in zip(w, firsts_b)]).T])
        return ReluNetwork([(A, b)])
    layers = [(np.vstack(firsts_A), np.concatenate(firsts_b))]
    for l in range(1, L - 1):
        layers.append((block_diag(*[net.layers[l][0] for net in nets]),
                       np.concatenate([net.layers[l][1] for net in nets])))
    AL = np.hstack([wi * net.layers[-1][0] for wi, net in zip(w, nets)])
    bL = np.array([math.fsum(col) for col in np.array([wi * net.layers[-1][1] for wi, net in zip(w, nets)]).T])
    layers.append((AL, bL))
    return ReluNetwork(layers)


def average_diagonal(net: ReluNetwork, w, diags) -> ReluNetwork:
    """average() of n copies of one net with D_i = diag(diags[i]), c_i = 0.

    Vectorized over the copies; produces the same matrices as average().
    """
    diags = np.asarray(diags, dtype=float)
    n = diags.shape[0]
    w = np.broadcast_to(np.asarray(w, dtype=float), (n,))
    L = net.depth
    A1, b1 = net.layers[0]
    first_A = (A1[None, :, :] * diags[:, None, :]).reshape(n * A1.shape[0], A1.shape[1])
    if L == 1:
        A = np.einsum("i,ijk->jk", w, (A1[None] * diags[:, None, :]))
        b = np.array([math.fsum(w * bj) for bj in b1])
        return ReluNetwork([(A, b)])
    layers = [(first_A, np.tile(b1, n))]
    for l in range(1, L - 1):
        Al, bl = net.layers[l]
        layers.append((block_diag(*([Al] * n)), np.tile(bl, n)))
    AL, bL = net.layers[-1]
    last_A = (w[:, None, None] * AL[None]).transpose(1, 0, 2).reshape(AL.shape[0], n * AL.shape[1])
    last_b = np.array([math.fsum(w * bj) for bj in bL])
    layers.append((last_A, last_b))
    return ReluNetwork(layers)


def _Dmat(D, i, d):
    if D is None:
        return np.ones(d)
    Di = np.asarray(D[i], dtype=float)
    return Di


def _input_dim_after(net, D, i):
    if D is None:
        return net.input_dim
    Di = np.asarray(D[i], dtype=float)
    return Di.shape[-1]


# ---------------------------------------------------------------------------
# payoff networks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PayoffConstants:
    c: float
    q: float
    q_tilde: float
    p: float
    lipschitz: float


def _max_tree(d: int) -> Optional[ReluNetwork]:
    """Network (without output activation) computing max(x_1..x_d) for d >= 2."""
    net = None
    k = d
    while k > 1:
        pairs, odd = k // 2, k % 2
        rows, bias = [], []
        # per pair (a, b): relu(a-b), relu(b), relu(-b); odd tail: relu(c), relu(-c)
        for j in range(pairs):
            a, b = 2 * j, 2 * j + 1
            for coef in ((a, 1.0, b, -1.0), (b, 1.0, None, 0.0), (b, -1.0, None, 0.0)):
                r = np.zeros(k)
                r[coef[0]] = coef[1]
                if coef[2] is not None:
                    r[coef[2]] = coef[3]
                rows.append(r)
        if odd:
            for s in (1.0, -1.0):
                r = np.zeros(k)
                r[k - 1] = s
                rows.append(r)
        hidden = np.array(rows)
        out_k = pairs + odd
        post = np.zeros((out_k, hidden.shape[0]))
        for j in range(pairs):
            post[j, 3 * j: 3 * j + 3] = (1.0, 1.0, -1.0)
        if odd:
            post[out_k - 1, 3 * pairs: 3 * pairs + 2] = (1.0, -1.0)
        level = ReluNetwork([(hidden, np.zeros(hidden.shape[0])), (post, np.zeros(out_k))])
        net = level if net is None else compose(level, net)
        k = out_k
    return net


def payoff_net(spec: PayoffSpec, d: int = 1) -> tuple[ReluNetwork, PayoffConstants]:
    """Exact ReLU realization of the payoff and its growth constants (c, q, q~, p)."""
    k = spec.kind
    if spec.fixed_dim is not None and spec.fixed_dim != d:
        raise DimensionMismatch(f"{k} payoff has dimension {spec.fixed_dim}, requested {d}")
    if k == "Call":
        net = ReluNetwork([([[1.0]], [-spec.K]), ([[1.0]], [0.0])])
    elif k == "Butterfly":
        w1, w2 = spec.butterfly_weights
        net = ReluNetwork([([[1.0], [1.0], [1.0]], [-spec.K1, -spec.K, -spec.K2]),
                           ([[1.0, -w1, w2]], [0.0])])
    elif k == "BasketCall":
        net = ReluNetwork([(np.array(spec.weights)[None, :], [-spec.K]), ([[1.0]], [0.0])])
    elif k == "SeparableCalls":
        net = ReluNetwork([(np.eye(d), np.full(d, -spec.K)), (np.array(spec.weights)[None, :], [0.0])])
    elif k == "CallOnMax":
        if d == 1:
            net = ReluNetwork([([[1.0]], [-spec.K]), ([[1.0]], [0.0])])
        else:
            net = compose(ReluNetwork([([[1.0]], [-spec.K]), ([[1.0]], [0.0])]), _max_tree(d))
    elif k == "Constant":
        net = constant_net(spec.value, d)
    else:  # pragma: no cover
        raise ValueError(k)
    q_tilde = 0.0 if spec.fixed_dim == 1 or d == 1 else 1.0
    lip = spec.lipschitz(d)
    M = metrics(net).M
    c = max(M, lip) / d**q_tilde if M else 0.0
    return net, PayoffConstants(c=float(c), q=0.0, q_tilde=q_tilde, p=2.0, lipschitz=lip)


# ---------------------------------------------------------------------------
# product network and polynomial emulation
# ---------------------------------------------------------------------------


def product_net(m: int) -> ReluNetwork:
    """Approximate (x, y) -> x y on [-1,1]^2 within 2^{-2m-1}; depth m + 2.

    Inputs are clipped to [-1,1]. Uses x y = u^2 - v^2 with u = (x+y)/2,
    v = (x-y)/2 and the sawtooth approximation of t^2 on [0,1].
    """
    if m < 1:
        raise ValueError("product_net needs m >= 1")
    # layer 1: clipped |u| and |v| pieces: relu(z), relu(-z), relu(z-1), relu(-z-1)
    T = np.array([[0.5, 0.5], [0.5, -0.5]])  # (u, v) from (x, y)
    rows, bias = [], []
    for r in T:
        for s, beta in ((1, 0.0), (-1, 0.0), (1, -1.0), (-1, -1.0)):
            rows.append(s * r)
            bias.append(beta)
    layers = [(np.array(rows), np.array(bias))]
    # |z| clipped at 1: relu(z) + relu(-z) - relu(z-1) - relu(-z-1)
    absrow = np.array([1.0, 1.0, -1.0, -1.0])
    # layer 2 for each of u, v: a=relu(t), b=relu(t-1/2), c=relu(t-1), acc=relu(t)
    A2 = np.zeros((8, 8))
    b2 = np.zeros(8)
    for blk in range(2):
        src = slice(4 * blk, 4 * blk + 4)
        for j, off in enumerate((0.0, -0.5, -1.0, 0.0)):
            A2[4 * blk + j, src] = absrow
            b2[4 * blk + j] = off
    layers.append((A2, b2))
    # layers 3..m+1: from (a, b, c, acc) of stage s-1 produce stage s
    g = np.array([2.0, -4.0, 2.0, 0.0])
    for s in range(1, m):
        A = np.zeros((8, 8))
        bb = np.zeros(8)
        for blk in range(2):
            src = slice(4 * blk, 4 * blk + 4)
            for j, off in enumerate((0.0, -0.5, -1.0)):
                A[4 * blk + j, src] = g
                bb[4 * blk + j] = off
            A[4 * blk + 3, src] = np.array([0.0, 0.0, 0.0, 1.0]) - g / 4.0**s
        layers.append((A, bb))
    last = np.zeros((1, 8))
    last[0, 0:4] = np.array([0.0, 0.0, 0.0, 1.0]) - g / 4.0**m
    last[0, 4:8] = -(np.array([0.0, 0.0, 0.0, 1.0]) - g / 4.0**m)
    layers.append((last, np.zeros(1)))
    return ReluNetwork(layers)


def product_error(m: int) -> float:
    return 2.0 ** (-2 * m - 1)


def chebyshev_levels(p: int) -> int:
    return 0 if p <= 1 else math.ceil(math.log2(p))


def _emulator_error(m: int, levels: int, coef_l1: float) -> float:
    # per level e' = 4 e + 2 eps_m; all T_k at level j are within 2 eps_m (4^j - 1)/3
    return coef_l1 * 2.0 * product_error(m) * (4.0**levels - 1.0) / 3.0


def polynomial_emulator(cheb_coeffs, delta: float) -> ReluNetwork:
    """Network with sup_{[-1,1]} |R - sum_k c_k T_k| <= delta.

    T_k are generated by T_{2n} = 2 T_n^2 - 1 and T_{2n+1} = 2 T_n T_{n+1} - x
    with clipped product networks; terms no longer needed are folded into a
    running partial sum carried alongside x.
    """
    c = np.asarray(cheb_coeffs, dtype=float).reshape(-1)
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0,1)")
    nz = np.nonzero(c)[0]
    p = int(nz[-1]) if nz.size else 0
    c = c[: p + 1]
    if p <= 1:
        slope = c[1] if p == 1 else 0.0
        return ReluNetwork([([[slope]], [c[0]])])
    J = chebyshev_levels(p)
    coef_l1 = float(np.abs(c[2:]).sum())
    m = 1
    while _emulator_error(m, J, coef_l1) > delta:
        m += 1
    Lm = m + 2
    prod = product_net(m)

    # live vector layout: ['x', 'S', k...]; S is the running partial sum
    live = ["x", "S"]
    net = ReluNetwork([(np.array([[1.0], [c[1]]]), np.array([0.0, c[0]]))])
    for j in range(J):
        lo = 2**j
        hi = min(2 ** (j + 1), p)
        new_ks = list(range(lo + 1, hi + 1))
        pairs = [(k // 2, k - k // 2) for k in new_ks]
        last_level = j == J - 1
        nxt_need = set() if last_level else set(range(2**j, 2 ** (j + 1) + 1))
        passed = ["x", "S"] + [k for k in live if isinstance(k, int) and k in nxt_need]
        dropped = [k for k in live if isinstance(k, int) and k not in nxt_need]
        idx = {key: i for i, key in enumerate(live)}

        def val(key, row):
            # coefficient row selecting T_key (T_1 is x) from the live vector
            if key == 1:
                row[idx["x"]] += 1.0
            else:
                row[idx[key]] += 1.0

        # pre map: live -> [product inputs..., passed values...]
        pre_rows = []
        for a, b in pairs:
            ra, rb = np.zeros(len(live)), np.zeros(len(live))
            val(a, ra)
            val(b, rb)
            pre_rows += [ra, rb]
        for key in passed:
            r = np.zeros(len(live))
            r[idx[key]] = 1.0
            if key == "S":
                for k in dropped:
                    r[idx[k]] += c[k]
            pre_rows.append(r)
        pre = ReluNetwork([(np.array(pre_rows), np.zeros(len(pre_rows)))])
        body = stack([prod] * len(pairs) + [identity_net(len(passed), Lm)])
        # post map: [products..., passed...] -> new live
        new_live = ["x", "S"] + [k for k in passed[2:]] + [k for k in new_ks if k in nxt_need]
        P = len(pairs)
        width_in = P + len(passed)
        post_A = np.zeros((len(new_live), width_in))
        post_b = np.zeros(len(new_live))
        pos_passed = {key: P + i for i, key in enumerate(passed)}
        for i, key in enumerate(new_live):
            if key in pos_passed and not (isinstance(key, int) and key in new_ks):
                post_A[i, pos_passed[key]] = 1.0
        s_row = new_live.index("S")
        for t, k in enumerate(new_ks):
            # T_k = 2 prod - 1 (even) or 2 prod - x (odd)
            coeffs = np.zeros(width_in)
            coeffs[t] = 2.0
            const = 0.0
            if k % 2 == 0:
                const = -1.0
            else:
                coeffs[pos_passed["x"]] -= 1.0
            if k in nxt_need:
                i = new_live.index(k)
                post_A[i] += coeffs
                post_b[i] += const
            else:
                post_A[s_row] += c[k] * coeffs
                post_b[s_row] += c[k] * const
        post = ReluNetwork([(post_A, post_b)])
        net = compose(post, compose(body, compose(pre, net)))
        live = new_live
    # final readout: S plus any T_k still live
    r = np.zeros(len(live))
    r[live.index("S")] = 1.0
    for i, key in enumerate(live):
        if isinstance(key, int):
            r[i] += c[key]
    return compose(ReluNetwork([(r[None, :], np.zeros(1))]), net)


def chebyshev_eval(c, x) -> np.ndarray:
    return np.polynomial.chebyshev.chebval(np.asarray(x, dtype=float), c)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def to_document(net: ReluNetwork) -> dict:
    return {
        "inputDim": net.input_dim,
        "layers": [{"A": [[float(v) for v in row] for row in A], "b": [float(v) for v in b]}
                   for A, b in net.layers],
    }


def serialize(net: ReluNetwork) -> str:
    # json writes floats with repr, which round-trips exactly
    return json.dumps(to_document(net), separators=(",", ":"))


def deserialize(doc) -> ReluNetwork:
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ParseError(str(exc), f"line {exc.lineno} col {exc.colno}") from None
    if not isinstance(doc, dict):
        raise ParseError("document must be an object", "$")
    if "inputDim" not in doc or "layers" not in doc:
        raise ParseError("missing inputDim or layers", "$")
    prev = doc["inputDim"]
    if not isinstance(prev, int) or prev < 1:
        raise ParseError("inputDim must be a positive integer", "$.inputDim")
    layers = doc["layers"]
    if not isinstance(layers, list) or not layers:
        raise ParseError("layers must be a nonempty list", "$.layers")
    out = []
    for i, lay in enumerate(layers):
        loc = f"$.layers[{i}]"
        try:
            A = np.array(lay["A"], dtype=float, ndmin=2)
            b = np.array(lay["b"], dtype=float).reshape(-1)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad layer ({exc})", loc) from None
        if A.ndim != 2 or A.shape[1] != prev:
            raise ParseError(f"A must be {A.shape[0]}x{prev}, got shape {A.shape}", loc + ".A")
        if b.shape[0] != A.shape[0]:
            raise ParseError(f"b has {b.shape[0]} entries, A has {A.shape[0]} rows", loc + ".b")
        out.append((A, b))
        prev = A.shape[0]
    return ReluNetwork(out)


def save(net: ReluNetwork, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize(net))
        fh.write("\n")


def load(path) -> ReluNetwork:
    with open(path) as fh:
        return deserialize(fh.read())
