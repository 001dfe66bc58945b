"""Linear-piece analysis of univariate ReLU networks and width lower bounds.

A ReLU network restricted to a line is continuous piecewise linear.  The
functions here recover that representation exactly, count its pieces and
turn the longest piece into a lower bound on the sup error of any network
approximating the product ``x_1 ... x_d`` on ``[-k, k]^d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InputError
from .network import Activation, LayeredNetwork, restrict_diagonal

SLOPE_TOL = 1e-12
BREAK_TOL = 1e-12


@dataclass(frozen=True)
class PiecewiseLinearFunction:
    """Continuous linear interpolant of ``values`` at ``breakpoints``.

    ``slopes`` optionally stores per-piece slopes computed exactly from the
    network weights; otherwise they are derived from the values.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    slopes: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise InputError("need at least two breakpoints with matching values")
        if np.any(np.diff(t) <= 0):
            raise InputError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", t)
        object.__setattr__(self, "values", v)
        if self.slopes is not None:
            s = np.asarray(self.slopes, dtype=float)
            if s.shape != (t.size - 1,):
                raise InputError("need one slope per piece")
            object.__setattr__(self, "slopes", s)

    @property
    def n_pieces(self) -> int:
        return self.breakpoints.size - 1

    @property
    def piece_slopes(self) -> np.ndarray:
        if self.slopes is not None:
            return self.slopes
        return np.diff(self.values) / np.diff(self.breakpoints)

    def __call__(self, t) -> np.ndarray:
        return np.interp(t, self.breakpoints, self.values)

    def merged(self, tol: float = SLOPE_TOL) -> "PiecewiseLinearFunction":
        """Drop breakpoints between adjacent pieces whose slopes agree within ``tol``."""
        s = self.piece_slopes
        keep = [0]
        for j in range(1, self.n_pieces):
            if abs(s[j] - s[keep[-1]]) > tol:
                keep.append(j)
        idx = keep + [self.n_pieces]
        new_slopes = s[keep]
        return PiecewiseLinearFunction(self.breakpoints[idx], self.values[idx], new_slopes)


def _forward_value_and_slope(net: LayeredNetwork, t: np.ndarray):
    """Values and exact derivatives at points strictly inside linear pieces."""
    a = t[None, :]
    da = np.ones_like(a)
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = w @ a + b[:, None]
        dz = w @ da
        if i == len(net.weights) - 1:
            return z[0], dz[0]
        on = z > 0
        a, da = np.where(on, z, 0.0), np.where(on, dz, 0.0)
    raise AssertionError("unreachable")


def extract_cpwl(net: LayeredNetwork, a: float, b: float) -> PiecewiseLinearFunction:
    """Exact CPWL representation of a one-input ReLU network on ``[a, b]``.

    Breakpoints are propagated layer by layer: each pre-activation is linear
    between the current breakpoints, so its sign changes are found by linear
    interpolation and inserted before applying the ReLU.
    """
    if net.activation is not Activation.RELU:
        raise InputError("piece extraction needs a ReLU network")
    if net.d != 1:
        raise InputError(f"piece extraction needs a one-input network, got d = {net.d}")
    if not a < b:
        raise InputError("need a < b")
    t = np.array([a, b], dtype=float)
    merge_tol = BREAK_TOL * (b - a)
    act = t[None, :]
    for w, bias in zip(net.weights[:-1], net.biases[:-1]):
        z = w @ act + bias[:, None]
        new = []
        z0, z1 = z[:, :-1], z[:, 1:]
        cross = (z0 * z1 < 0)
        for u, j in zip(*np.nonzero(cross)):
            frac = z0[u, j] / (z0[u, j] - z1[u, j])
            new.append(t[j] + frac * (t[j + 1] - t[j]))
        if new:
            cand = np.union1d(t, np.asarray(new))
            keep = [cand[0]]
            for v in cand[1:-1]:
                if v - keep[-1] > merge_tol and b - v > merge_tol:
                    keep.append(v)
            keep.append(cand[-1])
            t_new = np.asarray(keep)
            # pre-activations are linear between old breakpoints
            z = np.stack([np.interp(t_new, t, row) for row in z])
            t = t_new
        act = np.maximum(z, 0.0)
    values = net.weights[-1] @ act + net.biases[-1][:, None]
    mids = (t[:-1] + t[1:]) / 2
    _, slopes = _forward_value_and_slope(net, mids)
    return PiecewiseLinearFunction(t, values[0], slopes)


def count_linear_pieces(f: PiecewiseLinearFunction, tol: float = SLOPE_TOL) -> int:
    """Number of maximal linear pieces after merging equal-slope neighbours."""
    return f.merged(tol).n_pieces


def piece_cap(n: int, L: int) -> int:
    """Upper bound ``(2n)^L`` on the pieces of a width-``n`` depth-``L`` ReLU net."""
    return (2 * n) ** L


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(repr(float(x)))


def strong_convexity(d: int, k) -> Fraction:
    """``m = d (d - 1) ((k + 1)/2)^(d - 2)`` for ``t^d`` on ``[(k+1)/2, k]``."""
    return d * (d - 1) * ((_frac(k) + 1) / 2) ** (d - 2)


@dataclass(frozen=True)
class LowerBoundCertificate:
    """Three-point certificate on the longest linear piece ``[a, b]``."""

    d: int
    k: float
    a: float
    b: float
    gap: float
    strong_convexity: float
    implied_lower_bound: float
    structural_bound: float
    n_pieces: int
    width: int | None = None
    depth: int | None = None
    length_floor: float | None = None

    @property
    def length_floor_holds(self) -> bool | None:
        if self.length_floor is None:
            return None
        return self.b - self.a >= self.length_floor * (1 - 1e-12)

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["length_floor_holds"] = self.length_floor_holds
        return out


def _gap(d: int, a: Fraction, b: Fraction) -> Fraction:
    mid = (a + b) / 2
    return (b**d - mid**d) + (a**d - mid**d)


def _round_down(q: Fraction) -> float:
    v = float(q)
    if Fraction(v) > q:
        v = math.nextafter(v, -math.inf)
    return v


def three_point_from_pieces(f: PiecewiseLinearFunction, d: int, k: float, tol: float = SLOPE_TOL) -> LowerBoundCertificate:
    """Certificate from the longest linear piece of ``f`` against ``t^d``.

    On a linear piece the approximant's three-point combination vanishes, so
    the gap is evaluated on the target alone, in exact rational arithmetic.
    Ties between equally long pieces go to the leftmost one.
    """
    if d < 1:
        raise InputError("d must be positive")
    g = f.merged(tol)
    lengths = np.diff(g.breakpoints)
    j = int(np.argmax(lengths))
    a, b = _frac(g.breakpoints[j]), _frac(g.breakpoints[j + 1])
    G = _gap(d, a, b)
    m = strong_convexity(d, k)
    return LowerBoundCertificate(
        d=d,
        k=float(k),
        a=float(a),
        b=float(b),
        gap=_round_down(G),
        strong_convexity=float(m),
        implied_lower_bound=_round_down(G / 4),
        structural_bound=_round_down(m * (b - a) ** 2 / 16),
        n_pieces=g.n_pieces,
    )


def three_point_lower_bound(net: LayeredNetwork, d: int, k: float, L: int | None = None) -> LowerBoundCertificate:
    """Lower bound on the sup error of ``net`` against the product on ``[-k, k]^d``."""
    if not k > 1:
        raise InputError("the width bound needs k > 1")
    if net.d != d:
        raise InputError(f"network has {net.d} inputs, expected {d}")
    g = restrict_diagonal(net, np.ones(d))
    lo, hi = (float(k) + 1) / 2, float(k)
    cert = three_point_from_pieces(extract_cpwl(g, lo, hi), d, k)
    n = net.width
    L = net.depth if L is None else L
    floor = (float(k) - 1) / (2 * (2 * n) ** L)
    return LowerBoundCertificate(**{**cert.__dict__, "width": n, "depth": L, "length_floor": floor})


def min_width_lower_bound(d: int, k: float, eps: float, L: int) -> int:
    """Least width ``n`` for which the explicit width inequality fails.

    A width-``n`` depth-``L`` ReLU net with sup error ``eps`` must satisfy
    ``(2n)^(2L) > Q`` with ``Q = d (d-1) (k-1)^2 ((k+1)/2)^(d-2) / (64 eps)``;
    the returned value is the least ``n`` with ``(2n)^(2L) > Q``.  ``eps`` and
    ``k`` are read as the decimals they print as, and the comparison is
    exact.
    """
    if d < 2:
        raise InputError("need d >= 2 (the product is linear for d = 1)")
    if not k > 1:
        raise InputError("need k > 1")
    if L < 1:
        raise InputError("need L >= 1")
    if not eps > 0:
        raise InputError("need eps > 0")
    K, E = _frac(k), _frac(eps)
    Q = d * (d - 1) * (K - 1) ** 2 * ((K + 1) / 2) ** (d - 2) / (64 * E)
    # log-domain estimate, then exact correction
    logq = math.log(Q.numerator) - math.log(Q.denominator)
    n = max(1, int(math.floor(math.exp(logq / (2 * L)) / 2)))
    while n > 1 and (2 * (n - 1)) ** (2 * L) > Q:
        n -= 1
    while (2 * n) ** (2 * L) <= Q:
        n += 1
    return n


def min_width_table(ds: Sequence[int], k: float, epss: Sequence[float], Ls: Sequence[int]) -> list:
    return [
        {"d": d, "k": k, "eps": e, "L": L, "n_min": min_width_lower_bound(d, k, e, L)}
        for d in ds
        for e in epss
        for L in Ls
    ]
