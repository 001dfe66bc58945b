"""Shared builders for randomized networks."""

import numpy as np

from mononet import Activation, LayeredNetwork, ShallowExpSum


def random_relu(rng: np.random.Generator, d: int, n: int, L: int, scale: float = 1.0) -> LayeredNetwork:
    sizes = [d] + [n] * L + [1]
    ws = [rng.normal(size=(sizes[i + 1], sizes[i])) * scale for i in range(L + 1)]
    bs = [rng.normal(size=sizes[i + 1]) * scale for i in range(L + 1)]
    return LayeredNetwork(Activation.RELU, ws, bs)


def random_exp_sum(rng: np.random.Generator, d: int, n: int, wscale: float = 0.5) -> ShallowExpSum:
    terms = tuple(
        (float(rng.normal()), tuple(float(v) for v in rng.uniform(-wscale, wscale, size=d)))
        for _ in range(n)
    )
    return ShallowExpSum(d, terms)


def _value_and_derivative(net: LayeredNetwork, t: np.ndarray):
    """Forward pass of a one-input ReLU net carrying d/dt alongside the value."""
    a, da = t[None, :], np.ones((1, t.size))
    n_layers = len(net.weights)
    for i in range(n_layers):
        z = net.weights[i] @ a + net.biases[i][:, None]
        dz = net.weights[i] @ da
        if i == n_layers - 1:
            return z[0], dz[0]
        a, da = np.maximum(z, 0.0), np.where(z > 0, dz, 0.0)


def sampled_piece_count(net: LayeredNetwork, a: float, b: float, cells: int = 4096, fan: int = 8, min_width: float = 1e-9) -> int:
    """Piece count of a one-input ReLU net from dense sampling alone.

    Cells whose interior samples leave the chord are refined until they
    are linear or narrower than ``min_width * (b - a)``.  Slopes are taken at
    midpoints of linear cells and a piece boundary is counted wherever
    consecutive slopes differ.
    """
    qs = np.array([0.25, 0.5, 0.75])

    def linear(lo, w):
        ends = np.concatenate([lo, lo + w])
        inner = (lo[:, None] + qs[None, :] * w[:, None]).ravel()
        v = net.evaluate_batch(np.concatenate([ends, inner])[:, None])
        vl, vr = v[: lo.size], v[lo.size : 2 * lo.size]
        vi = v[2 * lo.size :].reshape(lo.size, 3)
        chord = vl[:, None] + qs[None, :] * (vr - vl)[:, None]
        scale = 1.0 + np.maximum(np.abs(vl), np.abs(vr))
        return np.all(np.abs(vi - chord) <= 1e-10 * scale[:, None], axis=1)

    lo = a + (b - a) * np.arange(cells) / cells
    w = np.full(cells, (b - a) / cells)
    leaves_lo, leaves_w = [], []
    while lo.size:
        ok = linear(lo, w)
        tiny = w < min_width * (b - a)
        leaves_lo.append(lo[ok])
        leaves_w.append(w[ok])
        bad = ~ok & ~tiny
        sub = w[bad] / fan
        lo = (lo[bad][:, None] + sub[:, None] * np.arange(fan)[None, :]).ravel()
        w = np.repeat(sub, fan)
    lo, w = np.concatenate(leaves_lo), np.concatenate(leaves_w)
    order = np.argsort(lo)
    mids = lo[order] + w[order] / 2
    _, s = _value_and_derivative(net, mids)
    jumps = np.abs(np.diff(s)) > 1e-9 * (1.0 + np.maximum(np.abs(s[:-1]), np.abs(s[1:])))
    return int(np.count_nonzero(jumps)) + 1


def interpolant_net(knots, values, d: int = 1) -> LayeredNetwork:
    """ReLU net whose restriction ``t -> net(t, ..., t)`` interpolates ``values`` at ``knots``.

    Outside the knots the end pieces are extended linearly.
    """
    x = np.asarray(knots, dtype=float)
    y = np.asarray(values, dtype=float)
    s = np.diff(y) / np.diff(x)
    w_in = [1.0, -1.0] + [1.0] * (x.size - 2)
    b_in = [-x[0], x[0]] + [-v for v in x[1:-1]]
    w_out = [s[0], -s[0]] + list(np.diff(s))
    first = np.repeat(np.asarray(w_in)[:, None] / d, d, axis=1)
    return LayeredNetwork(Activation.RELU, [first, [w_out]], [b_in, [y[0]]])


def exact_forward(net: LayeredNetwork, x):
    """Forward pass in rational arithmetic on the float64 weights."""
    from fractions import Fraction

    a = [Fraction(v) for v in x]
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = [sum((Fraction(float(wij)) * aj for wij, aj in zip(row, a)), Fraction(float(bi))) for row, bi in zip(w, b)]
        a = z if i == len(net.weights) - 1 else [max(v, Fraction(0)) for v in z]
    return a[0]
