"""Certified sup-norm error bounds on boxes.

The error ``e(x) = |net(x) - target(x)|`` is Lipschitz with constant
``Lambda = Lambda_net + Lambda_target``.  Sampling ``e`` on a corner-anchored
lattice whose cells have half-diagonal ``r`` gives::

    sup_box e <= max_grid e + Lambda * r + (float64 evaluation error)

and every term on the right is computed as an upper bound.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from mpmath import mp, mpf

from .errors import InputError, ResourceError
from .network import Box, LayeredNetwork, ShallowExpSum, double_error_bound, exp_sum_upper, lipschitz_upper_bound
from .taylor import UNIT_ROUNDOFF, gamma, round_up

DEFAULT_MAX_POINTS = 20_000_000
CHUNK = 1 << 16
MP_POINTWISE_LIMIT = 20_000


@dataclass(frozen=True)
class Target:
    """Named target: ``product``, ``monomial`` (``x^n``), ``polynomial``, ``log`` or ``exp``."""

    name: str
    n: int = 1
    coeffs: tuple = ()

    def __post_init__(self):
        if self.name not in ("product", "monomial", "polynomial", "log", "exp"):
            raise InputError(f"unknown target {self.name!r}")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if self.name == "monomial" and self.n < 0:
            raise InputError("monomial degree must be non-negative")

    def check_box(self, box: Box) -> None:
        if self.name != "product" and box.d != 1:
            raise InputError(f"target {self.name} is univariate, box has dimension {box.d}")
        if self.name == "log" and box.lo[0] <= 0:
            raise InputError("log target needs a box inside (0, inf)")

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.name == "product":
            return np.prod(X, axis=1)
        x = X[:, 0]
        if self.name == "monomial":
            return x**self.n
        if self.name == "polynomial":
            out = np.zeros_like(x)
            for c in reversed(self.coeffs):
                out = out * x + c
            return out
        if self.name == "log":
            return np.log(x)
        return np.exp(x)

    def mp_value(self, x) -> mpf:
        if self.name == "product":
            out = mpf(1)
            for v in x:
                out *= mpf(float(v))
            return out
        t = mpf(float(x[0]))
        if self.name == "monomial":
            return t**self.n
        if self.name == "polynomial":
            return mp.polyval(list(reversed([mpf(c) for c in self.coeffs])), t) if self.coeffs else mpf(0)
        if self.name == "log":
            return mp.log(t)
        return mp.exp(t)

    def lipschitz(self, box: Box) -> float:
        """Closed-form gradient-norm bound on ``box``."""
        m = box.max_abs
        if self.name == "product":
            if box.d == 1:
                return 1.0
            sq = sum(float(np.prod(np.delete(m, k))) ** 2 for k in range(box.d))
            return math.sqrt(sq) * (1 + 1e-12)
        if self.name == "monomial":
            return self.n * float(m[0]) ** max(self.n - 1, 0) * (1 + 1e-12)
        if self.name == "polynomial":
            return sum(i * abs(c) * float(m[0]) ** (i - 1) for i, c in enumerate(self.coeffs) if i) * (1 + 1e-12)
        if self.name == "log":
            return 1.0 / box.lo[0] * (1 + 1e-12)
        return math.exp(box.hi[0]) * (1 + 1e-12)

    def rounding(self, box: Box) -> float:
        """Bound on |float64 evaluation - exact value| on ``box``."""
        m = box.max_abs
        if self.name == "product":
            return gamma(box.d + 1) * float(np.prod(m))
        if self.name == "monomial":
            return gamma(2 * self.n + 2) * float(m[0]) ** self.n
        if self.name == "polynomial":
            scale = sum(abs(c) * float(m[0]) ** i for i, c in enumerate(self.coeffs))
            return gamma(2 * len(self.coeffs) + 2) * scale
        if self.name == "log":
            return 2 * UNIT_ROUNDOFF * max(abs(math.log(box.lo[0])), abs(math.log(box.hi[0]))) + 1e-300
        return 2 * UNIT_ROUNDOFF * math.exp(box.hi[0])

    def to_dict(self) -> dict:
        out = {"name": self.name, "n": self.n}
        if self.coeffs:
            out["coeffs"] = list(self.coeffs)
        return out


@dataclass
class CertifiedErrorReport:
    """Grid sup error plus Lipschitz slack; ``certified_bound >= grid_sup``."""

    box: Box
    spacing: tuple
    grid_points: int
    grid_sup: float
    argmax: tuple
    lipschitz_net: float
    lipschitz_target: float
    slack: float
    rounding: float
    certified_bound: float
    path: str = "double"
    meta: dict = field(default_factory=dict)

    @property
    def lipschitz_total(self) -> float:
        return self.lipschitz_net + self.lipschitz_target

    def certifies(self, eps: float) -> bool:
        return self.certified_bound < eps

    def to_dict(self) -> dict:
        out = asdict(self)
        out["box"] = self.box.to_dict()
        out["spacing"] = list(self.spacing)
        out["argmax"] = list(self.argmax)
        return out


@dataclass(frozen=True)
class Evaluator:
    """float64 evaluation routine with an a-priori absolute error bound."""

    fn: Callable[[np.ndarray], np.ndarray]
    error: float
    path: str


def lattice_shape(box: Box, spacing: float) -> tuple:
    """Points per axis of the corner-anchored lattice with spacing <= ``spacing``."""
    shape = []
    for w in box.widths:
        shape.append(1 if w == 0 else int(math.ceil(w / spacing)) + 1)
    return tuple(shape)


def lattice_axes(box: Box, shape: tuple) -> list:
    axes = []
    for lo, hi, n in zip(box.lo, box.hi, shape):
        ax = np.linspace(lo, hi, n) if n > 1 else np.array([lo])
        ax[0], ax[-1] = lo, hi
        axes.append(ax)
    return axes


def iter_lattice(box: Box, shape: tuple, chunk: int = CHUNK):
    """Yield the lattice points in row-major chunks of shape ``(m, d)``."""
    axes = lattice_axes(box, shape)
    total = int(np.prod(shape, dtype=np.int64))
    for start in range(0, total, chunk):
        idx = np.unravel_index(np.arange(start, min(total, start + chunk)), shape)
        yield np.stack([ax[i] for ax, i in zip(axes, idx)], axis=1)


def exp_sum_evaluator(f: ShallowExpSum, box: Box, tolerance: float, n_points: int) -> Evaluator:
    """Pick the cheapest float64 path whose error bound is below ``tolerance``.

    Order of preference: direct compensated summation, a Taylor model of the
    exp-sum on the box (immune to cancellation between huge terms), then
    extended-precision pointwise evaluation for small grids.
    """
    if not f.terms:
        return Evaluator(lambda X: np.zeros(np.atleast_2d(X).shape[0]), 0.0, "zero")
    direct = f.double_error_bound(box)
    if direct <= tolerance:
        return Evaluator(f.evaluate_batch, direct, "double")
    tm = f.taylor_model(box)
    tm_err = tm.eval_error_bound()
    if tm_err <= tolerance:
        return Evaluator(tm.evaluate, tm_err, f"taylor(order={tm.order})")
    if n_points <= MP_POINTWISE_LIMIT:
        # mp error of each exp is relative 2^-prec; result rounding is added per value
        with mp.workprec(f.prec):
            work = round_up(mp.fsum(f.term_magnitudes(box)) * mpf(2) ** (-(f.prec - 8)))
        return Evaluator(f.evaluate_batch_mp, work, "extended")
    best = min(direct, tm_err)
    return Evaluator(f.evaluate_batch, direct, "double") if best == direct else Evaluator(tm.evaluate, tm_err, "taylor")


def _mp_rounding(values: np.ndarray) -> float:
    return float(np.max(np.abs(values), initial=0.0)) * UNIT_ROUNDOFF * 1.01


def net_evaluator(net, box: Box, tolerance: float, n_points: int) -> Evaluator:
    if isinstance(net, ShallowExpSum):
        return exp_sum_evaluator(net, box, tolerance, n_points)
    decomposed = net.exp_of_shallow()
    if decomposed is not None:
        plain = double_error_bound(net, box)
        if plain <= tolerance:
            return Evaluator(net.evaluate_batch, plain, "double")
        s, c, b = decomposed
        inner = exp_sum_evaluator(s, box, tolerance / max(1.0, abs(c)) / 4, n_points)
        top = math.exp(exp_sum_upper(s, box))
        err = abs(c) * top * (math.expm1(inner.error) + 2 * UNIT_ROUNDOFF) + 2 * UNIT_ROUNDOFF * (abs(c) * top + abs(b))

        def fn(X, _inner=inner.fn):
            return c * np.exp(_inner(X)) + b

        return Evaluator(fn, err * (1 + 1e-12), f"exp({inner.path})")
    return Evaluator(net.evaluate_batch, double_error_bound(net, box), "double")


def certify_sup_error(
    net,
    target: Target,
    box: Box,
    margin: float,
    max_points: int = DEFAULT_MAX_POINTS,
    lipschitz: float | None = None,
    track: Callable[[np.ndarray], None] | None = None,
) -> CertifiedErrorReport:
    """Rigorous upper bound on ``sup_box |net - target|``.

    ``margin`` bounds the Lipschitz slack.  ``lipschitz`` overrides the
    network's constant (it must itself be sound).  ``track`` is called with
    every chunk of lattice points (used to record inner-sum ranges).
    """
    if margin <= 0:
        raise InputError("margin must be positive")
    if box.d != net.d:
        raise InputError(f"box has dimension {box.d}, network expects {net.d}")
    target.check_box(box)
    lip_net = lipschitz_upper_bound(net, box, method="tight") if lipschitz is None else float(lipschitz)
    lip_t = target.lipschitz(box)
    lam = lip_net + lip_t
    spacing = 2 * margin / (lam * math.sqrt(box.d)) if lam > 0 else math.inf
    shape = lattice_shape(box, spacing) if math.isfinite(spacing) else (1,) * box.d
    total = int(np.prod(shape, dtype=np.int64)) if shape else 1
    if total > max_points:
        raise ResourceError(
            f"certification grid needs {total:.3g} points (cap {max_points:.3g}); "
            f"Lipschitz constant {lam:.4g}; use a larger margin"
        )
    ev = net_evaluator(net, box, 1e-2 * margin, total)
    t_round = target.rounding(box)
    sup, arg = -1.0, tuple(box.lo)
    mp_round = 0.0
    for X in iter_lattice(box, shape):
        vals = ev.fn(X)
        if ev.path == "extended":
            mp_round = max(mp_round, _mp_rounding(vals))
        err = np.abs(vals - target(X))
        i = int(np.argmax(err))
        if err[i] > sup:
            sup, arg = float(err[i]), tuple(float(v) for v in X[i])
        if track is not None:
            track(X)
    steps = [w / (n - 1) if n > 1 else 0.0 for w, n in zip(box.widths, shape)]
    slack = lam * math.sqrt(sum(s * s for s in steps)) / 2 * (1 + 1e-12)
    # |fl(a - b)| and the comparison add one more rounding of the difference
    rounding = (ev.error + mp_round + t_round) * (1 + 1e-12) + sup * 2 * UNIT_ROUNDOFF
    bound = (sup + slack + rounding) * (1 + 4 * UNIT_ROUNDOFF)
    return CertifiedErrorReport(
        box=box,
        spacing=tuple(steps),
        grid_points=total,
        grid_sup=sup,
        argmax=arg,
        lipschitz_net=lip_net,
        lipschitz_target=lip_t,
        slack=slack,
        rounding=rounding,
        certified_bound=bound,
        path=ev.path,
        meta={"target": target.to_dict(), "margin": margin},
    )


def measure_sup_error(net, target: Target, box: Box, points_per_axis: int, mp_exact: bool = False) -> float:
    """Plain (uncertified) sup error on a uniform lattice."""
    shape = (points_per_axis,) * box.d
    worst = 0.0
    for X in iter_lattice(box, shape):
        vals = net.evaluate_batch_mp(X) if mp_exact and isinstance(net, ShallowExpSum) else _eval(net, box, X)
        worst = max(worst, float(np.max(np.abs(vals - target(X)))))
    return worst


def _eval(net, box: Box, X: np.ndarray) -> np.ndarray:
    ev = net_evaluator(net, box, 1e-12, X.shape[0])
    return ev.fn(X)


def interval_sup_error(
    fn: Callable[[mpf], mpf],
    target: Callable[[mpf], mpf],
    a: float,
    b: float,
    lipschitz: float | None,
    margin: float,
    prec: int = 128,
    max_points: int = 2_000_000,
    curvature: float | None = None,
) -> tuple:
    """Certified ``sup_[a,b] |fn - target|`` for univariate extended-precision callables.

    With ``lipschitz`` (a bound on ``|(fn - target)'|``) the slack is
    ``L s / 2``; with ``curvature`` (a bound on ``|(fn - target)''|``) it is
    the interpolation remainder ``M s^2 / 8``, which needs far fewer points.
    Returns ``(bound, grid_sup, points)``.
    """
    if b < a:
        raise InputError("empty interval")
    if (lipschitz is None) == (curvature is None):
        raise InputError("give exactly one of lipschitz and curvature")
    if b == a or (lipschitz or curvature) == 0:
        n = 1 if b == a else 2
    elif curvature is not None:
        n = int(math.ceil((b - a) * math.sqrt(curvature / (8 * margin)))) + 1
    else:
        n = int(math.ceil((b - a) * lipschitz / (2 * margin))) + 1
    if n > max_points:
        raise ResourceError(f"interval certification needs {n} points; use a larger margin")
    sup = mpf(0)
    with mp.workprec(prec):
        A, B = mpf(a), mpf(b)
        for i in range(n):
            t = A + (B - A) * i / (n - 1) if n > 1 else A
            sup = max(sup, abs(fn(t) - target(t)))
        step = (B - A) / (n - 1) if n > 1 else mpf(0)
        if curvature is not None:
            bound = sup + mpf(curvature) * step**2 / 8
        else:
            bound = sup + mpf(lipschitz) * step / 2
        bound = bound * (1 + mpf(2) ** (-prec + 8))
    return round_up(bound), float(sup), n
