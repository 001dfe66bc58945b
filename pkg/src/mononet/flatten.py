"""From two-layer exp networks to one-hidden-layer ReLU networks.

1. :func:`approx_exp_poly` fits ``exp`` on an interval by Chebyshev
   interpolation and certifies the fit.
2. :func:`compose_poly_with_shallow` expands ``p(f(x))`` for an exp-sum ``f``
   into another exp-sum, using ``exp(u)^k exp(v)^l = exp(k u + l v)``.
3. :func:`flatten_two_layer` combines the two to replace ``exp(s(x))``.
4. :func:`exp_to_relu_shallow` replaces each neuron ``mu exp(w.x)`` by a
   monotone piecewise-linear interpolant of ``t -> mu exp(t)`` laid out as
   ReLU units on ``t = w.x``.
5. :func:`synth_product_shallow_relu` chains everything for the product.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from mpmath import mp, mpf
from numpy.polynomial import Chebyshev, Polynomial

from .certify import Target, interval_sup_error, measure_sup_error
from .errors import BudgetError, InputError, SynthesisError
from .network import Activation, Box, LayeredNetwork, NumericPrecision, ShallowExpSum, double_error_bound
from .synthesis import PolynomialCoeffs, SynthesisResult, product_domain, synth_product_two_layer
from .taylor import round_up

DEFAULT_MAX_TERMS = 200_000
DEFAULT_MAX_NEURONS = 2_000_000


@dataclass(frozen=True)
class FlattenBudget:
    """Caps for the multinomial expansion and the ReLU conversion.

    ``prune_threshold=None`` selects ``eps * 1e-3 / terms`` at use time.
    """

    max_terms: int = DEFAULT_MAX_TERMS
    prune_threshold: float | None = None
    max_neurons: int = DEFAULT_MAX_NEURONS

    def __post_init__(self):
        if self.max_terms < 1:
            raise InputError("max_terms must be at least 1")
        if self.prune_threshold is not None and self.prune_threshold < 0:
            raise InputError("prune threshold must be non-negative")


# --- polynomial approximation of exp ----------------------------------------------


@dataclass(frozen=True)
class ExpPolynomialFit:
    coeffs: PolynomialCoeffs
    interval: tuple
    degree: int
    certified_error: float
    degree_cap: int
    grid_points: int = 0


def exp_poly_degree_cap(a: float, b: float, eps: float) -> int:
    """A-priori degree ``ceil(4 (b - a) eps^-3 e^(3b))`` (Lipschitz constant ``e^b``)."""
    with mp.workprec(64):
        return int(mp.ceil(4 * (mpf(b) - mpf(a)) * mpf(eps) ** -3 * mp.exp(3 * mpf(b))))


def _cheb_power_coeffs(a: float, b: float, degree: int) -> np.ndarray:
    cheb = Chebyshev.interpolate(np.exp, degree, domain=[a, b])
    return cheb.convert(kind=Polynomial).coef


def _float_error(coef: np.ndarray, a: float, b: float) -> float:
    t = np.linspace(a, b, 2001)
    return float(np.max(np.abs(Polynomial(coef)(t) - np.exp(t))))


def _certify_exp_poly(p: PolynomialCoeffs, a: float, b: float, margin: float, prec: int = 128):
    m = max(abs(a), abs(b))
    d2p = sum(i * (i - 1) * abs(float(c)) * m ** (i - 2) for i, c in enumerate(p.a) if i > 1)
    curv = (d2p + math.exp(b)) * (1 + 1e-12)
    return interval_sup_error(lambda t: p(t), mp.exp, a, b, None, margin, prec, curvature=curv)


def approx_exp_poly(a: float, b: float, eps: float, max_degree: int = 200) -> ExpPolynomialFit:
    """Least-degree Chebyshev interpolant of ``exp`` on ``[a, b]`` with certified error < ``eps``.

    Degrees are bracketed by doubling and refined by bisection on a float
    estimate; the chosen polynomial (in power basis) is then certified on an
    extended-precision lattice with a curvature remainder and its degree bumped until certified.
    """
    if not eps > 0:
        raise InputError("eps must be positive")
    if b < a:
        raise InputError("need a <= b")
    cap = exp_poly_degree_cap(a, b, eps) if b > a else 0
    if a == b:
        p = PolynomialCoeffs((mp.exp(mpf(a)),))
        return ExpPolynomialFit(p, (a, b), 0, float(abs(p.a[0] - mp.exp(mpf(a)))), cap)
    goal = 0.9 * eps

    def ok(deg: int) -> bool:
        return _float_error(_cheb_power_coeffs(a, b, deg), a, b) <= goal

    hi = 1
    while not ok(hi):
        hi *= 2
        if hi > max_degree:
            raise SynthesisError(f"no polynomial of degree <= {max_degree} fits exp within {eps:g} on [{a}, {b}]")
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    # hi is the least passing degree unless the doubling passed at once
    deg = 0 if hi == 1 and ok(0) else hi
    while deg <= max_degree:
        p = PolynomialCoeffs(tuple(_cheb_power_coeffs(a, b, deg)))
        bound, _, pts = _certify_exp_poly(p, a, b, margin=0.04 * eps)
        if bound < eps:
            return ExpPolynomialFit(p, (a, b), p.degree, bound, cap, pts)
        deg += 1
    raise SynthesisError(f"could not certify an exp polynomial within {eps:g} on [{a}, {b}]")


# --- multinomial composition --------------------------------------------------------


@dataclass
class CompositionResult:
    net: ShallowExpSum
    pre_merge_terms: int
    merged_terms: int
    pruned_terms: int
    pruned_mass: float
    term_cap: int
    threshold: float


def projected_terms(p: PolynomialCoeffs, n: int) -> int:
    """Number of multisets enumerated before merging."""
    return sum(math.comb(n + i - 1, i) for i, a in enumerate(p.a) if a != 0)


def compose_poly_with_shallow(
    p: PolynomialCoeffs,
    f: ShallowExpSum,
    budget: FlattenBudget = FlattenBudget(),
    box: Box | None = None,
    eps: float | None = None,
) -> CompositionResult:
    """Exp-sum equal to ``p(f(x))``.

    Monomials ``f^i`` expand over multisets ``k`` of size ``i`` with
    coefficient ``a_i multinomial(i; k) prod nu_j^k_j`` and weight
    ``sum k_j w_j``.  Terms with identical summed weights are merged.  When
    ``box`` is given, terms whose sup on the box is under the prune
    threshold are dropped and their total sup is reported.
    """
    n = f.n_terms
    projected = projected_terms(p, n)
    if projected > budget.max_terms:
        raise BudgetError(f"multinomial expansion would enumerate {projected} terms (budget {budget.max_terms})", projected)
    prec = f.prec
    acc: dict = {}
    zero = (mpf(0),) * f.d
    with mp.workprec(prec):
        nus, ws = f.nus, f.ws
        for i, a in enumerate(p.a):
            if a == 0:
                continue
            fact_i = math.factorial(i)
            for combo in itertools.combinations_with_replacement(range(n), i):
                counts: dict = {}
                for j in combo:
                    counts[j] = counts.get(j, 0) + 1
                multi = fact_i
                coef = a
                for j, k in counts.items():
                    multi //= math.factorial(k)
                    coef *= nus[j] ** k
                coef *= multi
                w = zero
                for j in sorted(counts):
                    k = counts[j]
                    w = tuple(wa + k * wb for wa, wb in zip(w, ws[j]))
                acc[w] = acc[w] + coef if w in acc else coef
        terms = [(c, w) for w, c in acc.items() if c != 0]
        merged = len(terms)
        pruned_mass, pruned, threshold = mpf(0), 0, 0.0
        if box is not None and terms:
            if budget.prune_threshold is not None:
                threshold = budget.prune_threshold
            elif eps is not None:
                threshold = eps * 1e-3 / len(terms)
            if threshold > 0:
                kept = []
                for c, w in terms:
                    size = abs(c) * mp.exp(box.linear_range(w)[1])
                    if size < threshold:
                        pruned_mass += size
                        pruned += 1
                    else:
                        kept.append((c, w))
                terms = kept
    net = ShallowExpSum(f.d, tuple(terms), prec)
    return CompositionResult(
        net=net,
        pre_merge_terms=projected,
        merged_terms=merged,
        pruned_terms=pruned,
        pruned_mass=round_up(pruned_mass),
        term_cap=(n + 1) ** max(p.degree, 0),
        threshold=threshold,
    )


# --- flattening -------------------------------------------------------------------


@dataclass
class FlattenResult:
    net: ShallowExpSum
    fit: ExpPolynomialFit
    composition: CompositionResult
    inner_range: tuple
    inner_enclosure: tuple
    certified_error: float
    outer_scale: float = 1.0
    outer_shift: float = 0.0

    def summary(self) -> dict:
        return {
            "poly_degree": self.fit.degree,
            "poly_degree_cap": self.fit.degree_cap,
            "poly_error": self.fit.certified_error,
            "inner_range": list(self.inner_range),
            "inner_enclosure": list(self.inner_enclosure),
            "pre_merge_terms": self.composition.pre_merge_terms,
            "terms": self.net.n_terms,
            "term_cap": self.composition.term_cap,
            "pruned_terms": self.composition.pruned_terms,
            "pruned_mass": self.composition.pruned_mass,
            "certified_error": self.certified_error,
        }


def flatten_two_layer(
    g: LayeredNetwork,
    box: Box,
    inner_range: tuple,
    eps: float,
    budget: FlattenBudget = FlattenBudget(),
) -> FlattenResult:
    """One-hidden-layer exp network within ``eps`` of ``g = c exp(s(x)) + b`` on ``box``.

    ``exp`` is replaced by a certified polynomial on ``inner_range``, which
    must contain a rigorous enclosure of ``s`` over the box.
    """
    decomposed = g.exp_of_shallow()
    if decomposed is None:
        raise InputError("flattening needs an exp network with a single second-layer neuron")
    s, c, b = decomposed
    lo, hi = float(inner_range[0]), float(inner_range[1])
    if s.terms:
        enc = s.taylor_model(box).range_bound()
    else:
        enc = (0.0, 0.0)
    if not (lo <= enc[0] and enc[1] <= hi):
        raise SynthesisError(f"inner sum enclosure {enc} is not inside the polynomial interval {(lo, hi)}")
    scale = max(1.0, abs(c))
    fit = approx_exp_poly(lo, hi, eps * 0.99 / scale)
    p = fit.coeffs
    if c != 1.0:
        p = PolynomialCoeffs(tuple(mpf(c) * v for v in p.a))
    comp = compose_poly_with_shallow(p, s.merged(), budget, box=box, eps=eps)
    net = comp.net
    if b != 0:
        net = ShallowExpSum(net.d, net.terms + ((mpf(b), (0,) * net.d),), net.prec).merged()
    with mp.workprec(net.prec):
        # extended-precision rounding of the expanded coefficients
        work = mp.fsum(net.term_magnitudes(box)) * mpf(2) ** (-(net.prec - 8))
        bound = round_up(abs(mpf(c)) * mpf(fit.certified_error) + mpf(comp.pruned_mass) + work)
    return FlattenResult(net, fit, comp, (lo, hi), enc, bound, c, b)


# --- exp to ReLU ----------------------------------------------------------------------


def _greedy_knots(scale: float, t0: float, t1: float, budget: float) -> list:
    """Knots with ``scale e^(t_b) (t_b - t_a)^2 / 8 <= budget`` on every piece."""
    knots = [t0]
    t = t0
    while t < t1:
        # largest step with Delta^2 e^Delta <= 8 budget / (scale e^t)
        rhs = 8 * budget / (scale * math.exp(t))
        # Newton on the concave 2 ln D + D - ln rhs: iterates stay below the root
        log_rhs = math.log(rhs)
        step = math.sqrt(rhs)
        for _ in range(6):
            step -= (2 * math.log(step) + step - log_rhs) / (2 / step + 1)
        step *= 1 - 1e-9
        while step * step * math.exp(step) > rhs:
            step *= 0.999
        nxt = t + step
        if nxt <= t:
            raise SynthesisError("knot spacing underflows float64")
        if nxt >= t1:
            nxt = t1
        knots.append(nxt)
        t = nxt
    return knots


def _range_knots(scale: float, t0: float, t1: float, budget: float) -> list:
    """Knots uniform in the range ``[scale e^t0, scale e^t1]`` with increments <= budget."""
    a, b = scale * math.exp(t0), scale * math.exp(t1)
    pieces = max(1, math.ceil((b - a) / budget))
    knots = [t0]
    for j in range(1, pieces):
        y = a + (b - a) * j / pieces
        t = math.log(y / scale)
        if t > knots[-1]:
            knots.append(t)
    if t1 > knots[-1]:
        knots.append(t1)
    return knots


@dataclass
class TermConversion:
    neurons: int
    chord_error: float
    knot_error: float
    weight_error: float

    @property
    def error(self) -> float:
        return self.chord_error + self.knot_error + self.weight_error


def _convert_term(nu: mpf, w: tuple, box: Box, budget: float, knots: str, t_range: tuple | None, prec: int):
    """ReLU layout of ``t -> nu e^t`` on the range of ``t = w_f . x``.

    Returns the hidden biases, output weights, output-bias contribution and
    the error accounting for the float64 weight vector ``w_f``.
    """
    wf = tuple(float(v) for v in w)
    with mp.workprec(prec):
        lo, hi = box.linear_range([mpf(v) for v in wf])
        if t_range is not None:
            lo, hi = min(lo, mpf(t_range[0])), max(hi, mpf(t_range[1]))
        t0 = float(lo)
        if t0 > lo:
            t0 = math.nextafter(t0, -math.inf)
        t1 = round_up(hi)
        if t1 <= t0:
            t1 = math.nextafter(t0, math.inf)
        delta = mp.fsum(abs(mpf(a) - b) * m for a, b, m in zip(wf, w, box.max_abs))
        rng = box.linear_range(w)
        weight_err = round_up(abs(nu) * mp.exp(max(rng[1], hi)) * mp.expm1(delta))
    scale = float(abs(nu))
    ks = _greedy_knots(scale, t0, t1, budget) if knots == "greedy" else _range_knots(scale, t0, t1, budget)
    ks = np.asarray(ks)
    with mp.workprec(prec):
        phi = [nu * mp.exp(mpf(t)) for t in ks]
        slopes = [(phi[j + 1] - phi[j]) / (mpf(ks[j + 1]) - mpf(ks[j])) for j in range(len(ks) - 1)]
        coefs = [float(slopes[0])] + [float(slopes[j] - slopes[j - 1]) for j in range(1, len(slopes))]
        bias = float(phi[0])
        # exact knot values of the float64 layout
        value = mpf(bias)
        cum = mpf(0)
        knot_err = abs(value - phi[0])
        for j in range(len(ks) - 1):
            cum += mpf(coefs[j])
            value += cum * (mpf(ks[j + 1]) - mpf(ks[j]))
            knot_err = max(knot_err, abs(value - phi[j + 1]))
        dts = np.diff(ks)
        chord = max(
            (abs(nu) * mp.exp(mpf(ks[j + 1])) * mpf(dts[j]) ** 2 / 8 for j in range(len(dts))),
            default=mpf(0),
        )
        conv = TermConversion(len(coefs), round_up(chord * (1 + mpf(2) ** -50)), round_up(knot_err), weight_err)
    return wf, ks[:-1], np.asarray(coefs), bias, conv


@dataclass
class ReluConversion:
    net: LayeredNetwork
    neurons: int
    term_errors: list
    rounding: float
    certified_error: float
    neuron_cap: int
    C1: float
    C2: float

    def summary(self) -> dict:
        return {
            "neurons": self.neurons,
            "neuron_cap": self.neuron_cap,
            "C1": self.C1,
            "C2": self.C2,
            "rounding": self.rounding,
            "certified_error": self.certified_error,
        }


def projected_neurons(f: ShallowExpSum, box: Box, eps: float, knots: str, symmetric: bool) -> int:
    """Neuron count of the range-uniform layout (an upper bound for greedy knots)."""
    moving = [(nu, w) for nu, w in f.terms if any(w)]
    if not moving:
        return 0
    budget = eps / len(moving)
    c1 = f.max_abs_argument(box)
    total = 0
    with mp.workprec(f.prec):
        for nu, w in moving:
            lo, hi = (-c1, c1) if symmetric else tuple(float(v) for v in box.linear_range(w))
            span = abs(nu) * (mp.exp(hi) - mp.exp(lo))
            total += int(mp.ceil(span / budget)) + 1
    return total


def exp_to_relu_shallow(
    f: ShallowExpSum,
    box: Box,
    eps: float,
    knots: str = "range",
    t_range: str = "symmetric",
    budget: FlattenBudget = FlattenBudget(),
    allocation: str = "equal",
) -> ReluConversion:
    """One-hidden-layer ReLU network within ``eps`` of the exp-sum ``f`` on ``box``.

    With ``allocation="equal"`` every non-constant neuron gets the budget
    ``eps / n``; ``"weighted"`` splits ``eps`` in proportion to
    ``K_i^(2/3)``, where ``K_i / sqrt(b)`` is the knot count of neuron ``i``
    at chord budget ``b``, which minimises the total count.  ``t_range`` is
    ``"symmetric"`` (``[-C1, C1]`` for every neuron) or ``"box"`` (the exact
    range of ``w.x``).  ``knots`` is ``"range"`` (uniform in function value)
    or ``"greedy"`` (widest pieces meeting the chord-error budget).
    """
    if not eps > 0:
        raise InputError("eps must be positive")
    if knots not in ("range", "greedy") or t_range not in ("symmetric", "box") or allocation not in ("equal", "weighted"):
        raise InputError("unknown knot, range or allocation mode")
    if box.d != f.d:
        raise InputError("box dimension does not match the network")
    moving = [(nu, w) for nu, w in f.terms if any(w)]
    c1 = f.max_abs_argument(box)
    c2 = float(max((abs(nu) * mp.exp(c1) for nu, _ in moving), default=0))
    cap = math.ceil(2 * len(moving) ** 2 * c2 / eps) if moving else 0
    if knots == "range":
        need = projected_neurons(f, box, eps * 0.99, knots, t_range == "symmetric")
        if need > budget.max_neurons:
            raise BudgetError(f"ReLU conversion would need {need} neurons (budget {budget.max_neurons})", need)
    sym = (-c1, c1) if t_range == "symmetric" else None
    shares = _budget_shares(moving, box, sym, allocation)
    if knots == "greedy":
        # knot density sqrt(|nu| e^t / 8b) integrates to K_i / sqrt(b_i); only
        # reject when clearly out of reach, the exact count decides otherwise
        need = sum(_knot_constant(nu, w, box, sym) / math.sqrt(eps * 0.99 * sh) for (nu, w), sh in zip(moving, shares))
        if need > 1.25 * budget.max_neurons:
            raise BudgetError(f"ReLU conversion would need about {need:.3g} neurons (budget {budget.max_neurons})", int(need))
    rows, biases, outs, errs, b0s = [], [], [], [], []
    total = 0
    for (nu, w), share in zip(moving, shares):
        wf, ks, coefs, b0, conv = _convert_term(nu, w, box, eps * 0.99 * share, knots, sym, f.prec)
        total += conv.neurons
        if total > budget.max_neurons:
            raise BudgetError(f"ReLU conversion exceeded {budget.max_neurons} neurons", total)
        rows.append(np.tile(np.asarray(wf), (len(ks), 1)))
        biases.append(-ks)
        outs.append(coefs)
        b0s.append(b0)
        errs.append(conv)
    with mp.workprec(f.prec):
        exact_bias = mp.fsum([nu for nu, w in f.terms if not any(w)] + [mpf(b) for b in b0s])
        out_bias = float(exact_bias)
        bias_err = round_up(abs(exact_bias - mpf(out_bias)))
    if rows:
        W1 = np.vstack(rows)
        b1 = np.concatenate(biases)
        W2 = np.concatenate(outs)[None, :]
    else:
        W1, b1, W2 = np.zeros((1, f.d)), np.zeros(1), np.zeros((1, 1))
    net = LayeredNetwork(Activation.RELU, (W1, W2), (b1, np.array([out_bias])))
    rounding = double_error_bound(net, box)
    with mp.workprec(f.prec):
        certified = round_up(mp.fsum([mpf(e.error) for e in errs]) + mpf(rounding) + mpf(bias_err))
    return ReluConversion(net, net.n_neurons if rows else 0, errs, rounding, certified, cap, c1, c2)


def _knot_constant(nu, w, box: Box, sym) -> float:
    """``K`` with greedy knot count about ``K / sqrt(b)`` at chord budget ``b``."""
    lo, hi = sym if sym is not None else tuple(float(v) for v in box.linear_range(w))
    return math.sqrt(float(abs(nu)) / 8) * 2 * (math.exp(hi / 2) - math.exp(lo / 2))


def _budget_shares(moving: list, box: Box, sym, allocation: str) -> list:
    n = len(moving)
    if allocation == "equal" or n == 0:
        return [1.0 / max(1, n)] * n
    weights = [max(_knot_constant(nu, w, box, sym), 1e-300) ** (2 / 3) for nu, w in moving]
    total = math.fsum(weights)
    # floats may sum marginally above one; shrink so the shares never overshoot
    return [wt / total * (1 - 1e-12) for wt in weights]


def exp_to_relu_univariate(nu, c1: float, c2: float, eps: float, knots: str = "range") -> ReluConversion:
    """ReLU network interpolating ``t -> nu e^t`` on ``[c1, c2]`` within ``eps``."""
    if not c1 < c2:
        raise InputError("need c1 < c2")
    f = ShallowExpSum(1, ((nu, (1,)),)).merged()
    return exp_to_relu_shallow(f, Box((c1,), (c2,)), eps, knots=knots, t_range="box")


# --- end-to-end pipeline --------------------------------------------------------------------


@dataclass
class PipelineReport:
    d: int
    C: float
    eps: float
    box: Box
    stage_bounds: dict
    neurons: dict
    terms: dict
    caps: dict
    certified_bound: float
    measured_box: float
    measured_cube: float
    details: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.certified_bound < self.eps

    def to_dict(self) -> dict:
        out = asdict(self)
        out["box"] = self.box.to_dict()
        return out


def apriori_inner_range(C: float) -> tuple:
    return (-C - 1.0, 1.0)


def synth_product_shallow_relu(
    d: int,
    C: float,
    eps: float,
    budget: FlattenBudget = FlattenBudget(),
    precision: NumericPrecision = NumericPrecision(),
    inner_range: str = "apriori",
    knots: str = "greedy",
    allocation: str = "weighted",
    carry: bool = True,
    measure_points: int | None = None,
    measure_work: float = 5e8,
) -> SynthesisResult:
    """One-hidden-layer ReLU network for the product on ``(exp(-C/d), 1]^d``.

    Three stages with ``eps / 3`` each: two-layer exp network, flattening,
    ReLU conversion.  The certified bound is the sum of the stage bounds.
    ``inner_range`` is ``"apriori"`` (``(-C-1, 1)``) or ``"certified"`` (the
    enclosure ``(-C - eps/3, eps/3)`` padded to contain the computed one).
    With ``carry`` the conversion stage also receives the budget the first
    two stages did not use.  Measurements use at most ``measure_work``
    point-neuron products per box.
    """
    if not 0 < eps < 1:
        raise InputError("eps must lie in (0, 1)")
    third = eps / 3
    stage1 = synth_product_two_layer(d, C, third, precision)
    g = stage1.net
    box = product_domain(d, C)
    if inner_range == "apriori":
        rng = apriori_inner_range(C)
    elif inner_range == "certified":
        enc = stage1.info["inner_sum_certified"]
        rng = (min(-C - third, enc[0]), max(third, enc[1]))
    else:
        raise InputError(f"unknown inner range mode {inner_range!r}")
    flat = flatten_two_layer(g, box, rng, third, budget)
    # whatever the first two stages leave unused goes to the conversion
    relu_eps = max(third, (eps - stage1.certified_bound - flat.certified_error) * 0.95) if carry else third
    relu = exp_to_relu_shallow(flat.net, box, relu_eps, knots=knots, t_range="box", budget=budget, allocation=allocation)
    bounds = {
        "two_layer": stage1.certified_bound,
        "flatten": flat.certified_error,
        "relu": relu.certified_error,
    }
    total = round_up(mpf(bounds["two_layer"]) + mpf(bounds["flatten"]) + mpf(bounds["relu"]))
    n_points = min(200_000, measure_work / max(1, relu.neurons))
    pts = measure_points or max(3, int(round(n_points ** (1 / d))))
    measured_box = measure_sup_error(relu.net, Target("product"), box, pts)
    measured_cube = measure_sup_error(relu.net, Target("product"), Box.cube(d, 0.0, 1.0), pts)
    neurons = {
        "two_layer": g.n_neurons,
        "flatten": flat.net.n_terms,
        "relu": relu.neurons,
    }
    terms = {
        "log": stage1.info["log_terms"],
        "inner": g.weights[0].shape[0],
        "pre_merge": flat.composition.pre_merge_terms,
        "flattened": flat.net.n_terms,
    }
    caps = {
        "log_degree": stage1.info["log_degree_cap"],
        "poly_degree": flat.fit.degree_cap,
        "flatten_terms": flat.composition.term_cap,
        "relu_neurons": relu.neuron_cap,
    }
    report = PipelineReport(
        d=d,
        C=C,
        eps=eps,
        box=box,
        stage_bounds=bounds,
        neurons=neurons,
        terms=terms,
        caps=caps,
        certified_bound=total,
        measured_box=measured_box,
        measured_cube=measured_cube,
        details={
            "log_degree": stage1.info["log_degree"],
            "inner_sum_grid": list(stage1.info["inner_sum_grid"]),
            "flatten": flat.summary(),
            "relu": relu.summary(),
            "inner_range_mode": inner_range,
            "knots": knots,
            "allocation": allocation,
            "relu_budget": relu_eps,
            "measure_points_per_axis": pts,
        },
    )
    meta = {
        "stage": "productReLU",
        "certified_box": box.to_dict(),
        "certified_bound": total,
    }
    net = LayeredNetwork(relu.net.activation, relu.net.weights, relu.net.biases, meta)
    return SynthesisResult(net, report, {"stages": bounds, "neurons": neurons})
