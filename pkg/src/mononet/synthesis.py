"""Explicit exp-activation constructions of monomials, polynomials, ln and products.

All builders return a :class:`SynthesisResult` holding the network, its
certificate and the construction parameters.  Coefficients are built in
extended precision; step sizes are found by geometric halving against a
closed-form error, then certified independently.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from mpmath import mp, mpf

from .certify import CertifiedErrorReport, Target, certify_sup_error
from .errors import InputError, PrecisionError, ResourceError
from .network import Activation, Box, LayeredNetwork, NumericPrecision, ShallowExpSum
from .taylor import round_up

MAX_HALVINGS = 200


@dataclass(frozen=True)
class StencilParams:
    """Finite-difference stencil: degree ``n``, step ``h`` and centre ``x0``."""

    n: int
    h: mpf
    x0: float = 0.0

    def __post_init__(self):
        if self.n < 0:
            raise InputError("stencil degree must be non-negative")
        if not self.h > 0:
            raise InputError("stencil step must be positive")

    def to_dict(self) -> dict:
        return {"n": self.n, "h": float(self.h), "x0": self.x0}


@dataclass(frozen=True)
class PolynomialCoeffs:
    """``sum_i a_i x^i``; trailing zeros are stripped, so ``a`` may be empty."""

    a: tuple

    def __post_init__(self):
        with mp.workprec(256):
            a = [mpf(v) if not isinstance(v, str) else mpf(v.strip()) for v in self.a]
        while a and a[-1] == 0:
            a.pop()
        object.__setattr__(self, "a", tuple(a))

    @property
    def degree(self) -> int:
        return len(self.a) - 1

    @property
    def xi(self) -> float:
        """Coefficient bound ``max |a_i|``."""
        return round_up(max((abs(v) for v in self.a), default=mpf(0)))

    def __call__(self, x):
        out = 0
        for c in reversed(self.a):
            out = out * x + c
        return out

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(np.asarray(x, dtype=float))
        for c in reversed(self.a):
            out = out * x + float(c)
        return out


@dataclass
class SynthesisResult:
    net: object
    report: CertifiedErrorReport | None
    info: dict = field(default_factory=dict)

    @property
    def certified_bound(self) -> float:
        return self.report.certified_bound if self.report is not None else math.nan


def _required_bits(mass, eps: float) -> int:
    """Mantissa bits needed so cancellation in a sum of size ``mass`` stays below ``eps``."""
    return int(math.ceil(math.log2(max(float(mass), 1.0) / eps))) + 40


def _check_precision(mass, eps: float, prec: int) -> None:
    need = _required_bits(mass, eps)
    if need > prec:
        raise PrecisionError(f"coefficient mass {float(mass):.3g} cancels to below eps = {eps:g}", need)


def monomial_stencil(n: int, h, prec: int) -> ShallowExpSum:
    """``h^-n sum_i binom(n, i) (-1)^(n-i) exp((i - n/2) h x)``."""
    with mp.workprec(prec):
        h = mpf(h)
        scale = h ** (-n)
        terms = tuple(
            (scale * math.comb(n, i) * (-1) ** (n - i), ((i - mpf(n) / 2) * h,)) for i in range(n + 1)
        )
    return ShallowExpSum(1, terms, prec)


def monomial_stencil_error(n: int, h, prec: int = 256) -> mpf:
    """Exact ``sup_[0,1]`` error of the monomial stencil.

    The stencil equals ``(2 sinh(h x / 2) / h)^n``, which exceeds ``x^n`` by an
    amount increasing in ``x``, so the sup sits at ``x = 1``.
    """
    with mp.workprec(prec):
        h = mpf(h)
        return (2 * mp.sinh(h / 2) / h) ** n - 1


def _choose_monomial_step(n: int, target: float, prec: int):
    with mp.workprec(prec):
        h = mpf(1) / n
        for _ in range(MAX_HALVINGS):
            if monomial_stencil_error(n, h, prec) < target:
                return h
            h /= 2
    raise PrecisionError(f"no step size reaches {target:g} for degree {n}", 2 * prec)


def synth_monomial_exp(
    n: int,
    eps: float,
    precision: NumericPrecision = NumericPrecision(),
    margin: float = 0.1,
    certify: bool = True,
) -> SynthesisResult:
    """Shallow exp network for ``x^n`` on ``[0, 1]`` with ``n + 1`` neurons.

    The step starts at ``1/n`` and halves until the error is below
    ``eps (1 - margin)``; the result is then grid-certified.
    """
    if n < 0:
        raise InputError("degree must be non-negative")
    if not eps > 0:
        raise InputError("eps must be positive")
    prec = precision.bits
    box = Box.cube(1, 0.0, 1.0)
    if n == 0:
        net = ShallowExpSum.constant(1, 1, prec)
        h = mpf(1)
    else:
        h = _choose_monomial_step(n, eps * (1 - margin), prec)
        net = monomial_stencil(n, h, prec)
        with mp.workprec(prec):
            _check_precision(mp.fsum(abs(nu) for nu in net.nus) * mp.e, eps, prec)
    params = StencilParams(n, h)
    info = {
        "stencil": params.to_dict(),
        "precision_bits": prec,
        "terms": net.n_terms,
        "max_abs_inner": net.max_abs_argument(box),
        "closed_form_error": float(monomial_stencil_error(n, h, prec)) if n else 0.0,
        "max_abs_coefficient": float(max(abs(v) for v in net.nus)),
    }
    report = certify_sup_error(net, Target("monomial", n), box, margin=eps * margin / 4) if certify else None
    return SynthesisResult(ShallowExpSum(1, net.terms, prec, {"stage": "monomial", "certified_box": box.to_dict(), **info}), report, info)


def _polynomial_terms(p: PolynomialCoeffs, eps: float, prec: int, margin: float):
    active = [i for i, a in enumerate(p.a) if i > 0 and a != 0]
    n_active = len(active)
    terms = []
    steps = {}
    with mp.workprec(prec):
        if p.a and p.a[0] != 0:
            terms.append((p.a[0], (mpf(0),)))
        for i in active:
            a = p.a[i]
            budget = eps / (n_active * max(1.0, float(abs(a))))
            h = _choose_monomial_step(i, budget * (1 - margin), prec)
            steps[i] = float(h)
            terms.extend((a * nu, w) for nu, w in monomial_stencil(i, h, prec).terms)
    net = ShallowExpSum(1, tuple(terms), prec).merged()
    return net, steps


def synth_polynomial_exp(
    p: PolynomialCoeffs,
    eps: float,
    precision: NumericPrecision = NumericPrecision(),
    margin: float = 0.1,
    certify: bool = True,
) -> SynthesisResult:
    """Shallow exp network for the polynomial ``p`` on ``[0, 1]``.

    Each non-constant monomial ``a_i x^i`` gets the budget
    ``eps / (N max(1, |a_i|))`` with ``N`` the number of such monomials; the
    constant is represented exactly by a zero-weight neuron.
    """
    if not eps > 0:
        raise InputError("eps must be positive")
    prec = precision.bits
    net, steps = _polynomial_terms(p, eps, prec, margin)
    if net.terms:
        with mp.workprec(prec):
            _check_precision(mp.fsum(abs(nu) for nu in net.nus) * mp.e, eps, prec)
    box = Box.cube(1, 0.0, 1.0)
    info = {
        "degree": p.degree,
        "steps": steps,
        "terms": net.n_terms,
        "term_cap": (p.degree + 1) ** 2 if p.a else 0,
        "precision_bits": prec,
        "xi": p.xi,
    }
    report = certify_sup_error(net, Target("polynomial", coeffs=tuple(float(a) for a in p.a)), box, margin=eps * margin / 4) if certify else None
    return SynthesisResult(ShallowExpSum(1, net.terms, prec, {"stage": "polynomial", "certified_box": box.to_dict(), **info}), report, info)


def log_apriori_degree(delta: float, eps: float) -> int:
    """Degree ``ceil(2 / (eps delta) - 1)`` of the ln Taylor polynomial."""
    return max(1, math.ceil(2 / (eps * delta) - 1))


def log_taylor_tail(delta, r: int, prec: int = 256) -> mpf:
    """Exact ``sup_[delta,1] |ln x - g_r(x)| = -ln(delta) - sum_{i<=r} (1-delta)^i / i``."""
    with mp.workprec(prec):
        q = 1 - mpf(delta)
        return -mp.log(mpf(delta)) - mp.fsum(q**i / i for i in range(1, r + 1))


def log_taylor_coeffs(r: int, prec: int = 256) -> PolynomialCoeffs:
    """Power-basis coefficients of ``sum_{i=1}^r (-1)^(i+1) (x - 1)^i / i``."""
    with mp.workprec(prec):
        a = [mpf(0)] * (r + 1)
        for i in range(1, r + 1):
            c = mpf((-1) ** (i + 1)) / i
            for j in range(i + 1):
                a[j] += c * math.comb(i, j) * (-1) ** (i - j)
    return PolynomialCoeffs(tuple(a))


def synth_log_exp(
    delta: float,
    eps: float,
    precision: NumericPrecision = NumericPrecision(),
    margin: float = 0.1,
    certify: bool = True,
) -> SynthesisResult:
    """Shallow exp network for ``ln x`` on ``[delta, 1]``.

    The Taylor degree is the least one whose exact tail is at most ``eps/2``
    (never above the a-priori degree); the remaining budget goes to the
    polynomial stage.
    """
    if not 0 < delta < 1:
        raise InputError("delta must lie in (0, 1)")
    if not eps > 0:
        raise InputError("eps must be positive")
    prec = precision.bits
    r_cap = log_apriori_degree(delta, eps)
    r = 1
    while r < r_cap and log_taylor_tail(delta, r, prec) > eps / 2:
        r += 1
    tail = float(log_taylor_tail(delta, r, prec))
    p = log_taylor_coeffs(r, prec)
    poly_eps = eps - tail
    net, steps = _polynomial_terms(p, poly_eps, prec, margin)
    with mp.workprec(prec):
        _check_precision(mp.fsum(abs(nu) for nu in net.nus) * mp.e, eps, prec)
    box = Box.cube(1, float(delta), 1.0)
    info = {
        "degree": r,
        "degree_cap": r_cap,
        "taylor_tail": tail,
        "polynomial_budget": poly_eps,
        "steps": steps,
        "terms": net.n_terms,
        "term_cap": (r + 1) ** 2,
        "precision_bits": prec,
        "max_abs_coefficient": float(max(abs(v) for v in net.nus)),
        "max_abs_inner": net.max_abs_argument(Box.cube(1, 0.0, 1.0)),
    }
    report = certify_sup_error(net, Target("log"), box, margin=eps * margin / 4) if certify else None
    return SynthesisResult(ShallowExpSum(1, net.terms, prec, {"stage": "log", "certified_box": box.to_dict(), **info}), report, info)


def product_two_layer_network(log_net: ShallowExpSum, d: int) -> LayeredNetwork:
    """``x -> exp(sum_k log_net(x_k))`` as a two-hidden-layer exp network."""
    const = sum((float(nu) for nu, w in log_net.terms if w[0] == 0), 0.0)
    moving = [(float(nu), float(w[0])) for nu, w in log_net.terms if w[0] != 0]
    rows, coefs = [], []
    for k in range(d):
        for nu, w in moving:
            row = [0.0] * d
            row[k] = w
            rows.append(row)
            coefs.append(nu)
    if not rows:
        rows, coefs = [[0.0] * d], [0.0]
    return LayeredNetwork(
        Activation.EXP,
        (np.array(rows), np.array([coefs]), np.array([[1.0]])),
        (np.zeros(len(rows)), np.array([d * const]), np.zeros(1)),
    )


def product_domain(d: int, C: float) -> Box:
    """Certification box ``[exp(-C/d) + 1e-9, 1]^d``."""
    return Box.cube(d, math.exp(-C / d) + 1e-9, 1.0)


def synth_product_two_layer(
    d: int,
    C: float,
    eps: float,
    precision: NumericPrecision = NumericPrecision(),
    margin: float = 0.1,
    grid_margin: float = 0.25,
) -> SynthesisResult:
    """Two-hidden-layer exp network for ``x_1 ... x_d`` on ``(exp(-C/d), 1]^d``.

    Each coordinate passes through an ln network with error ``eps / (d e)``;
    one exp neuron turns the sum of logs into the product.  The product
    error is then at most about ``eps / e``, which leaves ``grid_margin * eps``
    for the lattice slack.
    """
    if d < 1:
        raise InputError("d must be positive")
    if not 0 < eps < 1:
        raise InputError("eps must lie in (0, 1)")
    if not C > 0:
        raise InputError("C must be positive")
    delta = math.exp(-C / d)
    log_eps = eps / (d * math.e)
    log_res = synth_log_exp(delta, log_eps, precision, margin)
    net = product_two_layer_network(log_res.net, d)
    box = product_domain(d, C)
    inner, _, _ = net.exp_of_shallow()
    seen = [math.inf, -math.inf]

    def track(X):
        v = inner.evaluate_batch(X) if inner.terms else np.zeros(X.shape[0])
        seen[0] = min(seen[0], float(v.min()))
        seen[1] = max(seen[1], float(v.max()))

    report = certify_sup_error(net, Target("product"), box, margin=eps * grid_margin, track=track)
    rng = inner.taylor_model(box).range_bound() if inner.terms else (0.0, 0.0)
    info = {
        "delta": delta,
        "log_eps": log_eps,
        "log_degree": log_res.info["degree"],
        "log_degree_cap": log_res.info["degree_cap"],
        "log_terms": log_res.net.n_terms,
        "log_certified": log_res.certified_bound,
        "neurons_layer1": net.weights[0].shape[0],
        "inner_sum_grid": tuple(seen),
        "inner_sum_certified": tuple(rng),
        "inner_sum_ok": -C - eps < seen[0] and seen[1] < eps,
        "precision_bits": precision.bits,
    }
    meta = {"stage": "product2", "certified_box": box.to_dict(), "certified_bound": report.certified_bound}
    net = LayeredNetwork(net.activation, net.weights, net.biases, meta)
    return SynthesisResult(net, report, info)


def exact_smooth_stencil(d: int, h, prec: int) -> ShallowExpSum:
    """``(2h)^-d sum_s (-1)^(d-|s|) exp(h (2s - 1) . x)`` over ``s in {0,1}^d``."""
    with mp.workprec(prec):
        h = mpf(h)
        scale = 1 / (2 * h) ** d
        terms = []
        for s in itertools.product((0, 1), repeat=d):
            sign = -1 if (d - sum(s)) % 2 else 1
            terms.append((sign * scale, tuple(h if b else -h for b in s)))
    return ShallowExpSum(d, tuple(terms), prec)


def exact_smooth_error(d: int, k, h, prec: int = 256) -> mpf:
    """Exact ``sup_[-k,k]^d`` error of the stencil against the product.

    The stencil equals ``prod_i sinh(h x_i) / h``; every factor
    ``sinh(h x)/(h x)`` grows with ``|x|``, so the sup is at a corner.
    """
    with mp.workprec(prec):
        h, k = mpf(h), mpf(k)
        return k**d * ((mp.sinh(h * k) / (h * k)) ** d - 1)


def _analytic_report(net: ShallowExpSum, box: Box, exact_err: mpf) -> CertifiedErrorReport:
    # coefficients are exact stencil values up to one rounding at net.prec;
    # the bound is for the extended-precision net, float64 error is reported apart
    target = Target("product")
    with mp.workprec(net.prec):
        mass = mp.fsum(net.term_magnitudes(box))
        bound = round_up((exact_err + mass * mpf(2) ** (-(net.prec - 4))) * (1 + mpf(2) ** -100))
    float_err = net.double_error_bound(box) + target.rounding(box)
    return CertifiedErrorReport(
        box=box,
        spacing=(),
        grid_points=0,
        grid_sup=float(exact_err),
        argmax=tuple(box.hi),
        lipschitz_net=math.nan,
        lipschitz_target=math.nan,
        slack=0.0,
        rounding=bound - float(exact_err),
        certified_bound=bound,
        path="closed-form",
        meta={"target": target.to_dict(), "float64_eval_error": float_err},
    )


def synth_exact_smooth(
    d: int,
    eps: float,
    k: float,
    precision: NumericPrecision = NumericPrecision(),
    margin: float = 0.1,
    grid_max_points: int = 2_000_000,
) -> SynthesisResult:
    """``2^d``-neuron exp network for ``x_1 ... x_d`` on ``[-k, k]^d``.

    The neuron count does not depend on ``k`` or ``eps``; only the step
    ``h`` shrinks.  The certificate is a lattice bound when the lattice is
    small enough and the closed-form corner error otherwise.
    """
    if d < 1:
        raise InputError("d must be positive")
    if not eps > 0 or not k > 0:
        raise InputError("eps and k must be positive")
    prec = precision.bits
    with mp.workprec(prec):
        h = mpf(1) / (d * mpf(k))
        for _ in range(MAX_HALVINGS):
            if exact_smooth_error(d, k, h, prec) < eps * (1 - margin):
                break
            h /= 2
        else:
            raise PrecisionError("step size search did not converge", 2 * prec)
    net = exact_smooth_stencil(d, h, prec)
    box = Box.cube(d, -float(k), float(k))
    with mp.workprec(prec):
        mass = mp.fsum(net.term_magnitudes(box))
    _check_precision(mass, eps, prec)
    exact = exact_smooth_error(d, k, h, prec)
    report = None
    if d <= 2:
        try:
            report = certify_sup_error(net, Target("product"), box, margin=eps * margin / 4, max_points=grid_max_points)
        except ResourceError:
            report = None
    if report is None:
        report = _analytic_report(net, box, exact)
    info = {
        "stencil": StencilParams(d, h).to_dict(),
        "terms": net.n_terms,
        "closed_form_error": float(exact),
        "precision_bits": prec,
        "required_bits": _required_bits(mass, eps),
    }
    return SynthesisResult(ShallowExpSum(d, net.terms, prec, {"stage": "exact_smooth", "certified_box": box.to_dict(), **info}), report, info)
