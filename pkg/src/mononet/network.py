"""Networks as data.

Two network families are modelled:

* :class:`ShallowExpSum` -- ``x -> sum_i nu_i exp(w_i . x)`` with coefficients
  and weights held as extended-precision ``mpmath`` floats.  No bias slot is
  needed since ``exp(w.x + b) = exp(b) exp(w.x)``.
* :class:`LayeredNetwork` -- ``L`` hidden affine+activation layers (ReLU or
  exp) followed by an affine identity output, stored in float64.

Both evaluate exactly in their precision, restrict to a line through the
origin, report a sound Lipschitz constant on a box and round-trip through
a JSON exchange document.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from mpmath import mp, mpf
from mpmath.libmp import repr_dps, to_str

from .errors import InputError, ParseError, RangeError
from .taylor import UNIT_ROUNDOFF, build_taylor_model, gamma, round_up

DEFAULT_PREC = 256
EXP_ARG_LIMIT = 709.0  # float64 exp overflows just above 709.78


class Activation(enum.Enum):
    RELU = "relu"
    EXP = "exp"
    IDENTITY = "identity"

    def __call__(self, z: np.ndarray) -> np.ndarray:
        if self is Activation.RELU:
            return np.maximum(z, 0.0)
        if self is Activation.EXP:
            return np.exp(z)
        return z


@dataclass(frozen=True)
class NumericPrecision:
    """Mantissa length used by synthesis, and the float64 summation mode."""

    bits: int = DEFAULT_PREC
    summation: str = "extended"

    def __post_init__(self):
        if self.bits < 53:
            raise InputError(f"precision must be at least 53 bits, got {self.bits}")
        if self.summation not in ("extended", "compensated"):
            raise InputError(f"unknown summation mode {self.summation!r}")


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``prod_i [lo_i, hi_i]``."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise InputError("box bounds must be non-empty and of equal length")
        if any(a > b for a, b in zip(lo, hi)):
            raise InputError(f"box has lo > hi: {lo} vs {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, d: int, lo: float, hi: float) -> "Box":
        return cls((lo,) * d, (hi,) * d)

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def widths(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    @property
    def max_abs(self) -> np.ndarray:
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    def contains(self, other: "Box") -> bool:
        return all(a <= c and d <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def linear_range(self, w: Sequence) -> tuple:
        """Exact ``(min, max)`` of ``w . x`` over the box (works for mpf ``w``)."""
        lo = hi = 0
        for wk, a, b in zip(w, self.lo, self.hi):
            p, q = wk * a, wk * b
            lo += min(p, q)
            hi += max(p, q)
        return lo, hi

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}


def _mpf(value, prec: int) -> mpf:
    with mp.workprec(prec):
        if isinstance(value, str):
            return mpf(value.strip())
        return mpf(value)


@dataclass(frozen=True)
class ShallowExpSum:
    """One-hidden-layer exp network ``sum_i nu_i exp(w_i . x)``.

    ``terms`` is a tuple of ``(nu, w)`` pairs with ``w`` a length-``d`` tuple.
    Construction never merges terms; call :meth:`merged` for the canonical
    form.
    """

    d: int
    terms: tuple = ()
    prec: int = DEFAULT_PREC
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.d < 0:
            raise InputError("dimension must be non-negative")
        terms = []
        for i, (nu, w) in enumerate(self.terms):
            w = tuple(_mpf(v, self.prec) for v in w)
            if len(w) != self.d:
                raise InputError(f"term {i} has {len(w)} weights, expected {self.d}")
            terms.append((_mpf(nu, self.prec), w))
        object.__setattr__(self, "terms", tuple(terms))

    @classmethod
    def constant(cls, d: int, value=1, prec: int = DEFAULT_PREC) -> "ShallowExpSum":
        if value == 0:
            return cls(d, (), prec)
        return cls(d, ((value, (0,) * d),), prec)

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def nus(self) -> list:
        return [t[0] for t in self.terms]

    @property
    def ws(self) -> list:
        return [t[1] for t in self.terms]

    def weight_matrix(self) -> np.ndarray:
        return np.array([[float(v) for v in w] for w in self.ws], dtype=float).reshape(-1, self.d)

    def coefficient_vector(self) -> np.ndarray:
        return np.array([float(nu) for nu in self.nus], dtype=float)

    def merged(self) -> "ShallowExpSum":
        """Canonical form: bit-equal weight vectors merged, zero terms dropped."""
        acc: dict = {}
        with mp.workprec(self.prec):
            for nu, w in self.terms:
                acc[w] = acc[w] + nu if w in acc else nu
        terms = tuple((nu, w) for w, nu in acc.items() if nu != 0)
        return ShallowExpSum(self.d, terms, self.prec, dict(self.meta))

    def is_canonical(self) -> bool:
        ws = self.ws
        return len(set(ws)) == len(ws) and all(nu != 0 for nu in self.nus)

    def scaled(self, c) -> "ShallowExpSum":
        with mp.workprec(self.prec):
            c = _mpf(c, self.prec)
            return ShallowExpSum(self.d, tuple((c * nu, w) for nu, w in self.terms), self.prec)

    def __add__(self, other: "ShallowExpSum") -> "ShallowExpSum":
        if other.d != self.d:
            raise InputError("cannot add exp-sums of different dimension")
        return ShallowExpSum(self.d, self.terms + other.terms, max(self.prec, other.prec))

    def partial(self, k: int) -> "ShallowExpSum":
        """Exp-sum for the partial derivative along coordinate ``k``."""
        with mp.workprec(self.prec):
            terms = tuple((nu * w[k], w) for nu, w in self.terms if w[k] != 0)
        return ShallowExpSum(self.d, terms, self.prec)

    def _check_point(self, x) -> list:
        x = list(np.atleast_1d(x)) if not isinstance(x, (list, tuple)) else list(x)
        if len(x) != self.d:
            raise InputError(f"input has length {len(x)}, network expects {self.d}")
        return x

    def __call__(self, x) -> mpf:
        """Extended-precision evaluation at a single point."""
        x = self._check_point(x)
        with mp.workprec(self.prec):
            xs = [_mpf(v, self.prec) for v in x]
            return mp.fsum(nu * mp.exp(mp.fsum(wk * xk for wk, xk in zip(w, xs))) for nu, w in self.terms)

    def evaluate_batch_mp(self, X: np.ndarray) -> np.ndarray:
        """Extended-precision evaluation at each row of ``X``, rounded to float64."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise InputError(f"input has {X.shape[1]} columns, network expects {self.d}")
        return np.array([float(self(row)) for row in X])

    def evaluate_batch(self, X: np.ndarray, summation: str = "compensated") -> np.ndarray:
        """float64 evaluation at each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise InputError(f"input has {X.shape[1]} columns, network expects {self.d}")
        if not self.terms:
            return np.zeros(X.shape[0])
        args = X @ self.weight_matrix().T
        over = np.nonzero(args.max(axis=0) > EXP_ARG_LIMIT)[0]
        if over.size:
            i = int(over[0])
            raise RangeError(f"term {i}: exp argument {args[:, i].max():.6g} overflows float64", term=i)
        vals = np.exp(args) * self.coefficient_vector()[None, :]
        if summation != "compensated":
            return vals.sum(axis=1)
        s = np.zeros(X.shape[0])
        comp = np.zeros(X.shape[0])
        for j in range(vals.shape[1]):
            v = vals[:, j]
            t = s + v
            big = np.abs(s) >= np.abs(v)
            comp += np.where(big, (s - t) + v, (v - t) + s)
            s = t
        return s + comp

    def term_magnitudes(self, box: Box) -> list:
        """Per-term ``sup_box |nu_i| exp(w_i . x)`` (mpf)."""
        with mp.workprec(self.prec):
            return [abs(nu) * mp.exp(box.linear_range(w)[1]) for nu, w in self.terms]

    def max_abs_argument(self, box: Box) -> float:
        """``max_i sup_box |w_i . x|`` (the ``C_1`` constant of the ReLU conversion)."""
        best = 0.0
        with mp.workprec(self.prec):
            for _, w in self.terms:
                lo, hi = box.linear_range(w)
                best = max(best, round_up(max(abs(lo), abs(hi))))
        return best

    def double_error_bound(self, box: Box, summation: str = "compensated") -> float:
        """A-priori bound on |evaluate_batch - exact| for points in ``box``."""
        if not self.terms:
            return 0.0
        with mp.workprec(self.prec):
            mags = self.term_magnitudes(box)
            mass = mp.fsum(mags)
            arg_mass = max(
                mp.fsum(abs(wk) * m for wk, m in zip(w, box.max_abs)) for w in self.ws
            )
        rel = 5 * UNIT_ROUNDOFF + gamma(self.d + 1) * float(arg_mass) * (1 + 1e-9)
        if summation == "compensated":
            summ = 2 * UNIT_ROUNDOFF + self.n_terms**2 * UNIT_ROUNDOFF**2
        else:
            summ = gamma(self.n_terms + 1)
        return round_up(mass) * (rel * (1 + 4 * UNIT_ROUNDOFF) + summ) * (1 + 1e-12)

    def taylor_model(self, box: Box, **kwargs):
        return build_taylor_model(self.nus, self.ws, box.lo, box.hi, self.prec, **kwargs)


def _as_matrix(a, ndim: int) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise InputError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LayeredNetwork:
    """Affine+activation stack; every hidden layer uses ``activation``.

    ``weights[l]`` has shape ``(out, in)``; the last layer is the identity
    output layer and must have a single output.
    """

    activation: Activation
    weights: tuple
    biases: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        act = Activation(self.activation)
        if act is Activation.IDENTITY:
            raise InputError("identity is only legal as the output activation")
        ws = tuple(_as_matrix(w, 2) for w in self.weights)
        bs = tuple(_as_matrix(b, 1) for b in self.biases)
        if len(ws) != len(bs):
            raise InputError("weights and biases differ in length")
        if len(ws) < 2:
            raise InputError("a network needs at least one hidden layer and an output layer")
        for i, (w, b) in enumerate(zip(ws, bs)):
            if w.shape[0] != b.shape[0]:
                raise InputError(f"layer {i}: bias length {b.shape[0]} != {w.shape[0]} rows")
            if i and w.shape[1] != ws[i - 1].shape[0]:
                raise InputError(f"layer {i}: expects {w.shape[1]} inputs, previous layer has {ws[i-1].shape[0]}")
            if w.shape[0] < 1:
                raise InputError(f"layer {i} is empty")
        if ws[-1].shape[0] != 1:
            raise InputError("output layer must have exactly one unit")
        object.__setattr__(self, "activation", act)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LayeredNetwork):
            return NotImplemented
        return (
            self.activation is other.activation
            and len(self.weights) == len(other.weights)
            and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
            and all(np.array_equal(a, b) for a, b in zip(self.biases, other.biases))
        )

    @property
    def d(self) -> int:
        return self.weights[0].shape[1]

    @property
    def depth(self) -> int:
        return len(self.weights) - 1

    @property
    def width(self) -> int:
        return max(w.shape[0] for w in self.weights[:-1])

    @property
    def n_neurons(self) -> int:
        return sum(w.shape[0] for w in self.weights[:-1])

    def evaluate_batch(self, X: np.ndarray, chunk: int = 2_000_000) -> np.ndarray:
        """float64 forward pass; ``chunk`` caps the hidden activations held at once."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise InputError(f"input has {X.shape[1]} columns, network expects {self.d}")
        out = np.empty(X.shape[0])
        step = max(1, chunk // self.width)
        for s in range(0, X.shape[0], step):
            a = X[s : s + step].T
            for i, (w, b) in enumerate(zip(self.weights, self.biases)):
                z = w @ a + b[:, None]
                if i == len(self.weights) - 1:
                    a = z
                    break
                if self.activation is Activation.EXP and z.size and z.max() > EXP_ARG_LIMIT:
                    j = int(np.unravel_index(np.argmax(z), z.shape)[0])
                    raise RangeError(f"layer {i} unit {j}: exp argument overflows float64", term=j)
                a = self.activation(z)
            out[s : s + step] = a[0]
        return out

    def __call__(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.d,):
            raise InputError(f"input has shape {x.shape}, network expects ({self.d},)")
        return float(self.evaluate_batch(x[None, :])[0])

    def exp_of_shallow(self):
        """Decompose ``c * exp(s(x)) + b`` with ``s`` a shallow exp-sum, if possible.

        Applies to exp networks with two hidden layers whose second hidden
        layer is a single unit.  Returns ``(s, c, b)`` or ``None``.
        """
        if self.activation is not Activation.EXP or self.depth != 2 or self.weights[1].shape[0] != 1:
            return None
        w1, b1 = self.weights[0], self.biases[0]
        w2, b2 = self.weights[1][0], self.biases[1][0]
        with mp.workprec(DEFAULT_PREC):
            terms = [(mpf(float(c)) * mp.exp(mpf(float(bb))), tuple(float(v) for v in row)) for c, bb, row in zip(w2, b1, w1)]
            if b2 != 0:
                terms.append((mpf(float(b2)), (0.0,) * self.d))
        s = ShallowExpSum(self.d, tuple(terms)).merged()
        return s, float(self.weights[2][0, 0]), float(self.biases[2][0])


def evaluate(net, x, precision: str = "extended"):
    """Forward pass at a single point.

    ``precision`` selects the extended (mpmath) or float64 path for exp-sums;
    layered networks always evaluate in float64.
    """
    if isinstance(net, ShallowExpSum):
        if precision == "double":
            return float(net.evaluate_batch(np.atleast_1d(np.asarray(x, dtype=float))[None, :])[0])
        return net(x)
    return net(x)


def restrict_diagonal(net, direction: Sequence[float]):
    """One-input network ``t -> net(t * direction)``."""
    direction = np.asarray(direction, dtype=float)
    if direction.shape != (net.d,):
        raise InputError(f"direction has shape {direction.shape}, network expects ({net.d},)")
    if not np.any(direction):
        raise InputError("direction must be non-zero")
    if isinstance(net, ShallowExpSum):
        with mp.workprec(net.prec):
            dirs = [mpf(float(v)) for v in direction]
            terms = tuple((nu, (mp.fsum(wk * dk for wk, dk in zip(w, dirs)),)) for nu, w in net.terms)
        return ShallowExpSum(1, terms, net.prec)
    first = net.weights[0] @ direction[:, None]
    return LayeredNetwork(net.activation, (first,) + net.weights[1:], net.biases, dict(net.meta))


# --- Lipschitz bounds -------------------------------------------------------


def _spectral_bound(w: np.ndarray) -> float:
    fro = float(np.linalg.norm(w))
    if w.size == 0:
        return 0.0
    spec = float(np.linalg.norm(w, 2)) * (1 + 1e-10) + 1e-300
    return min(fro * (1 + 1e-12), spec)


def _termwise_lipschitz(f: ShallowExpSum, box: Box) -> float:
    with mp.workprec(f.prec):
        total = mp.fsum(
            abs(nu) * mp.sqrt(mp.fsum(wk**2 for wk in w)) * mp.exp(box.linear_range(w)[1])
            for nu, w in f.terms
        )
    return round_up(total)


def _taylor_lipschitz(f: ShallowExpSum, box: Box) -> float:
    sq = 0.0
    for k in range(f.d):
        g = f.partial(k)
        if g.terms:
            sq += g.taylor_model(box).majorant() ** 2
    return math.sqrt(sq) * (1 + 1e-12)


def exp_sum_upper(f: ShallowExpSum, box: Box, tight: bool = True) -> float:
    """Upper bound on ``sup_box f``."""
    if not f.terms:
        return 0.0
    if tight:
        return f.taylor_model(box).range_bound()[1]
    with mp.workprec(f.prec):
        return round_up(mp.fsum(nu * mp.exp(box.linear_range(w)[1 if nu > 0 else 0]) for nu, w in f.terms))


def _interval_forward(net: LayeredNetwork, box: Box, layers: int | None = None):
    """Interval bounds on the hidden pre-activations over ``box``."""
    lo, hi = np.asarray(box.lo), np.asarray(box.hi)
    bounds = []
    stop = net.depth if layers is None else layers
    for w, b in zip(net.weights[:stop], net.biases[:stop]):
        wp, wn = np.maximum(w, 0), np.minimum(w, 0)
        zlo = wp @ lo + wn @ hi + b
        zhi = wp @ hi + wn @ lo + b
        pad = gamma(w.shape[1] + 1) * (np.abs(w) @ np.maximum(np.abs(lo), np.abs(hi)) + np.abs(b))
        zlo, zhi = zlo - pad, zhi + pad
        bounds.append((zlo, zhi))
        with np.errstate(over="ignore"):
            lo, hi = net.activation(zlo), net.activation(zhi)
    return bounds


def lipschitz_upper_bound(net, box: Box, method: str = "termwise") -> float:
    """Sound constant ``L`` with ``|f(x) - f(y)| <= L |x - y|_2`` on ``box``.

    ``method="termwise"`` uses the closed forms (sum of term gradients for
    exp-sums, product of per-layer operator-norm bounds for layered nets);
    ``method="tight"`` additionally tries Taylor models, which stay
    informative when coefficients cancel, and returns the smaller bound.
    """
    if box.d != net.d:
        raise InputError(f"box has dimension {box.d}, network expects {net.d}")
    tight = method == "tight"
    if isinstance(net, ShallowExpSum):
        bound = _termwise_lipschitz(net, box)
        if tight and net.terms:
            bound = min(bound, _taylor_lipschitz(net, box))
        return bound
    if net.activation is Activation.RELU:
        bound = 1.0
        for w in net.weights:
            bound *= _spectral_bound(w)
        if net.depth == 1:
            path = float(np.abs(net.weights[1][0]) @ np.linalg.norm(net.weights[0], axis=1))
            bound = min(bound, path * (1 + 1e-12))
        return bound
    decomposed = net.exp_of_shallow()
    if decomposed is not None:
        s, c, _ = decomposed
        top = exp_sum_upper(s, box, tight)
        inner = lipschitz_upper_bound(s, box, method)
        return abs(c) * math.exp(top) * inner * (1 + 1e-12)
    bound = 1.0
    for w, (_, zhi) in zip(net.weights[:-1], _interval_forward(net, box)):
        bound *= _spectral_bound(w) * float(np.exp(zhi.max()))
    return bound * _spectral_bound(net.weights[-1])


def double_error_bound(net, box: Box) -> float:
    """A-priori bound on the float64 evaluation error of ``net`` over ``box``."""
    if isinstance(net, ShallowExpSum):
        return net.double_error_bound(box)
    mag = np.asarray(box.max_abs)
    decomposed = net.exp_of_shallow()
    if decomposed is not None:
        s, c, b = decomposed
        w1, b1 = net.weights[0], net.biases[0]
        w2, b2 = net.weights[1][0], net.biases[1][0]
        zmag = np.abs(w1) @ mag + np.abs(b1)
        zlo, zhi = _interval_forward(net, box, 1)[0]
        emag = np.exp(zhi)
        # float64 inner sum vs exact inner sum
        term_err = emag * (np.expm1(gamma(w1.shape[1] + 1) * zmag) + 2 * UNIT_ROUNDOFF)
        mass = float(np.abs(w2) @ emag) + abs(b2)
        es = float(np.abs(w2) @ term_err) * (1 + UNIT_ROUNDOFF) + gamma(len(w2) + 2) * mass
        top = math.exp(exp_sum_upper(s, box))
        return (abs(c) * top * (math.expm1(es) + 4 * UNIT_ROUNDOFF) + 2 * UNIT_ROUNDOFF * (abs(c) * top + abs(b))) * (1 + 1e-12)
    err = np.zeros_like(mag)
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        zmag = np.abs(w) @ mag + np.abs(b)
        zerr = np.abs(w) @ err + gamma(w.shape[1] + 1) * zmag
        if i == len(net.weights) - 1:
            return float(zerr.max()) * (1 + 1e-12)
        if net.activation is Activation.RELU:
            mag, err = zmag, zerr
        else:
            mag = np.exp(zmag)
            err = mag * (np.expm1(zerr) + 2 * UNIT_ROUNDOFF)
    raise AssertionError("unreachable")


# --- exchange format ----------------------------------------------------------


def _mp_str(x: mpf, prec: int) -> str:
    return to_str(x._mpf_, repr_dps(prec))


def to_document(net) -> dict:
    if isinstance(net, ShallowExpSum):
        doc = {
            "kind": "shallow_exp",
            "d": net.d,
            "precision_bits": net.prec,
            "terms": [{"nu": _mp_str(nu, net.prec), "w": [_mp_str(v, net.prec) for v in w]} for nu, w in net.terms],
        }
    else:
        doc = {
            "kind": "layered",
            "d": net.d,
            "activation": net.activation.value,
            "layers": [
                {"weights": w.tolist(), "bias": b.tolist()} for w, b in zip(net.weights, net.biases)
            ],
        }
    if net.meta:
        doc["meta"] = net.meta
    return doc


def serialize(net, indent: int | None = None) -> str:
    """JSON exchange document for ``net``."""
    return json.dumps(to_document(net), indent=indent)


def _need(obj: dict, key: str, kind, where: str):
    if not isinstance(obj, dict):
        raise ParseError("expected an object", where)
    if key not in obj:
        raise ParseError(f"missing required field {key!r}", where)
    val = obj[key]
    if kind is not None and not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
        raise ParseError(f"field {key!r} has the wrong type", f"{where}.{key}")
    return val


def _number(v, where: str, prec: int | None = None):
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise ParseError("expected a number or decimal string", where)
    try:
        if prec is not None:
            out = _mpf(v, prec)
            if not mp.isfinite(out):
                raise ValueError
            return out
        out = float(v)
        if not math.isfinite(out):
            raise ValueError
        return out
    except (ValueError, TypeError):
        raise ParseError(f"not a finite number: {v!r}", where) from None


def from_document(doc) -> ShallowExpSum | LayeredNetwork:
    kind = _need(doc, "kind", str, "$")
    d = _need(doc, "d", int, "$")
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise ParseError("meta must be an object", "$.meta")
    if kind == "shallow_exp":
        prec = _need(doc, "precision_bits", int, "$")
        if prec < 53:
            raise ParseError("precision_bits must be >= 53", "$.precision_bits")
        terms = []
        for i, t in enumerate(_need(doc, "terms", list, "$")):
            where = f"$.terms[{i}]"
            nu = _number(_need(t, "nu", None, where), f"{where}.nu", prec)
            w = _need(t, "w", list, where)
            if len(w) != d:
                raise ParseError(f"expected {d} weights, got {len(w)}", f"{where}.w")
            terms.append((nu, tuple(_number(v, f"{where}.w[{j}]", prec) for j, v in enumerate(w))))
        return ShallowExpSum(d, tuple(terms), prec, dict(meta))
    if kind == "layered":
        act = _need(doc, "activation", str, "$")
        if act not in ("relu", "exp"):
            raise ParseError(f"unknown activation {act!r}", "$.activation")
        ws, bs = [], []
        for i, layer in enumerate(_need(doc, "layers", list, "$")):
            where = f"$.layers[{i}]"
            rows = _need(layer, "weights", list, where)
            w = []
            for r, row in enumerate(rows):
                if not isinstance(row, list):
                    raise ParseError("expected a list of numbers", f"{where}.weights[{r}]")
                w.append([_number(v, f"{where}.weights[{r}][{c}]") for c, v in enumerate(row)])
            b = [_number(v, f"{where}.bias[{j}]") for j, v in enumerate(_need(layer, "bias", list, where))]
            if len({len(r) for r in w}) > 1:
                raise ParseError("ragged weight matrix", f"{where}.weights")
            ws.append(np.array(w, dtype=float).reshape(len(w), -1 if w else 0))
            bs.append(np.array(b, dtype=float))
        if ws and ws[0].shape[1] != d:
            raise ParseError(f"first layer takes {ws[0].shape[1]} inputs but d = {d}", "$.layers[0].weights")
        try:
            return LayeredNetwork(Activation(act), tuple(ws), tuple(bs), dict(meta))
        except InputError as exc:
            raise ParseError(str(exc), "$.layers") from None
    raise ParseError(f"unknown kind {kind!r}", "$.kind")


def deserialize(text: str) -> ShallowExpSum | LayeredNetwork:
    """Parse a JSON exchange document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"{exc.lineno}:{exc.colno}") from None
    return from_document(doc)
