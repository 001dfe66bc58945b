import itertools
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mononet import Box, NumericPrecision, PolynomialCoeffs, ShallowExpSum
from mononet.errors import InputError, PrecisionError
from mononet.synthesis import (
    exact_smooth_error,
    exact_smooth_stencil,
    log_apriori_degree,
    log_taylor_tail,
    monomial_stencil,
    monomial_stencil_error,
    product_domain,
    synth_exact_smooth,
    synth_log_exp,
    synth_monomial_exp,
    synth_polynomial_exp,
    synth_product_two_layer,
)


def grid_error_mp(f: ShallowExpSum, target, box: Box, pts: int, prec: int = 200) -> mp.mpf:
    """Max deviation from an independent mp evaluation of the stencil sum."""
    axes = [np.linspace(lo, hi, pts) for lo, hi in zip(box.lo, box.hi)]
    worst = mp.mpf(0)
    with mp.workprec(prec):
        for x in itertools.product(*axes):
            xs = [mp.mpf(float(v)) for v in x]
            val = mp.fsum(nu * mp.exp(mp.fsum(wk * xk for wk, xk in zip(w, xs))) for nu, w in f.terms)
            worst = max(worst, abs(val - target(xs)))
    return worst


def product(xs):
    out = mp.mpf(1)
    for v in xs:
        out *= v
    return out


# --- univariate monomials -----------------------------------------------------------


@pytest.mark.parametrize("n", range(1, 7))
def test_monomial_stencil_matches_binomial_formula(n):
    h = mp.mpf(1) / (4 * n)
    f = monomial_stencil(n, h, 256)
    with mp.workprec(256):
        for x in [mp.mpf(0), mp.mpf("0.3"), mp.mpf(1)]:
            direct = h**-n * mp.fsum(
                mp.binomial(n, i) * (-1) ** (n - i) * mp.exp((i - mp.mpf(n) / 2) * h * x) for i in range(n + 1)
            )
            assert abs(f([x]) - direct) < mp.mpf(10) ** -60
            # closed form of the centred difference of exp
            assert abs(direct - (2 * mp.sinh(h * x / 2) / h) ** n) < mp.mpf(10) ** -60


@pytest.mark.parametrize("n", range(1, 7))
def test_monomial_stencil_error_is_attained_at_one(n):
    h = mp.mpf(1) / n
    err = monomial_stencil_error(n, h)
    grid = grid_error_mp(monomial_stencil(n, h, 256), lambda xs: xs[0] ** n, Box.cube(1, 0, 1), 201)
    assert abs(err - grid) < mp.mpf(10) ** -40


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_monomial_stencil_second_order(n):
    box = Box.cube(1, 0, 1)
    h = mp.mpf(1) / n
    errs = []
    for _ in range(4):
        errs.append(grid_error_mp(monomial_stencil(n, h, 256), lambda xs: xs[0] ** n, box, 101))
        h /= 2
    ratios = [float(errs[i] / errs[i + 1]) for i in range(3)]
    for r in ratios[1:]:
        assert 3.5 <= r <= 4.5


@pytest.mark.parametrize("n", range(0, 7))
def test_synth_monomial_certified(n):
    res = synth_monomial_exp(n, 1e-3)
    assert res.net.n_terms == n + 1
    assert res.certified_bound < 1e-3
    assert res.info["max_abs_inner"] <= 1
    grid = grid_error_mp(res.net, lambda xs: xs[0] ** n, Box.cube(1, 0, 1), 401)
    assert float(grid) <= res.certified_bound


def test_monomial_weight_constraint_from_terms():
    for n in range(1, 7):
        net = synth_monomial_exp(n, 1e-3, certify=False).net
        assert max(abs(float(w[0])) for _, w in net.terms) <= 1


def test_monomial_precision_guard():
    with pytest.raises(PrecisionError) as info:
        synth_monomial_exp(6, 1e-12, NumericPrecision(53), certify=False)
    assert info.value.required_bits > 53


@pytest.mark.parametrize("bad", [dict(n=-1, eps=1e-3), dict(n=2, eps=0.0)])
def test_monomial_input_validation(bad):
    with pytest.raises(InputError):
        synth_monomial_exp(**bad)


# --- polynomials and log ---------------------------------------------------------------


@pytest.mark.parametrize(
    "coeffs",
    [(1.0,), (0.0, 1.0), (1.0, -2.0, 0.0, 3.0), (0.5, 0.0, -1.5, 0.25, 1.0)],
)
def test_synth_polynomial(coeffs):
    p = PolynomialCoeffs(coeffs)
    res = synth_polynomial_exp(p, 1e-3)
    assert res.certified_bound < 1e-3
    x = np.linspace(0, 1, 1001)
    vals = res.net.evaluate_batch(x[:, None])
    assert np.max(np.abs(vals - np.polyval(coeffs[::-1], x))) <= res.certified_bound


def test_polynomial_coeffs_strip_and_evaluate():
    p = PolynomialCoeffs((1, 2, 0, 0))
    assert p.degree == 1
    assert p.xi == 2
    assert float(p(3)) == 7
    assert np.allclose(p.evaluate(np.array([0.0, 1.0])), [1.0, 3.0])


def test_log_degree_cap_frozen():
    # ceil(2 / (0.05 * 0.5) - 1) = 79
    assert log_apriori_degree(0.5, 0.05) == 79
    assert log_apriori_degree(0.25, 0.1) == 79


@given(delta=st.floats(0.05, 0.95), r=st.integers(1, 30))
def test_log_tail_matches_series_oracle(delta, r):
    with mp.workprec(200):
        q = 1 - mp.mpf(delta)
        # truncated where q^i < 1e-32
        stop = int(75 / -math.log(float(q))) + r + 2
        oracle = mp.fsum(q**i / i for i in range(r + 1, stop))
        assert abs(log_taylor_tail(delta, r) - oracle) < mp.mpf(10) ** -25


def test_synth_log():
    res = synth_log_exp(0.5, 0.05)
    assert res.certified_bound < 0.05
    assert res.info["degree"] <= res.info["degree_cap"] == 79
    assert res.info["max_abs_inner"] <= 1
    x = np.linspace(0.5, 1, 2001)
    err = np.max(np.abs(res.net.evaluate_batch(x[:, None]) - np.log(x)))
    assert err <= res.certified_bound


# --- product constructions -----------------------------------------------------------------


def test_product_two_layer_inner_sum_and_bound():
    d, C, eps = 2, 1.0, 0.2
    res = synth_product_two_layer(d, C, eps)
    lo, hi = res.info["inner_sum_grid"]
    assert -C - eps < lo and hi < eps
    assert res.info["inner_sum_ok"]
    tlo, thi = res.info["inner_sum_certified"]
    box = product_domain(d, C)
    inner, _, _ = res.net.exp_of_shallow()
    # grid values are float64; the enclosure is for exact values
    slack = inner.double_error_bound(box)
    assert tlo - slack <= lo and hi <= thi + slack
    assert tlo <= float(inner(box.lo)) <= thi
    assert res.certified_bound < eps
    rng = np.random.default_rng(0)
    X = rng.uniform(box.lo, box.hi, size=(2000, d))
    assert np.max(np.abs(res.net.evaluate_batch(X) - X.prod(axis=1))) <= res.certified_bound


@pytest.mark.parametrize("d", range(1, 11))
def test_exact_smooth_term_count_independent_of_k(d):
    counts = {synth_exact_smooth(d, 1e-2, k).net.n_terms for k in (1, 2, 4)}
    assert counts == {2**d}


@pytest.mark.parametrize("d", [1, 2, 3])
def test_exact_smooth_closed_form_matches_grid(d):
    h, k = mp.mpf("0.2"), 2
    f = exact_smooth_stencil(d, h, 256)
    grid = grid_error_mp(f, product, Box.cube(d, -k, k), 5)
    # the corner is a lattice point, where the closed form is attained
    assert abs(grid - exact_smooth_error(d, k, h)) < mp.mpf(10) ** -30


def test_exact_smooth_step_shrinks_with_k():
    hs = [float(synth_exact_smooth(3, 1e-2, k).info["stencil"]["h"]) for k in (1, 2, 4)]
    assert hs[0] > hs[1] > hs[2]


def test_exact_smooth_certified_dominates_sampling():
    res = synth_exact_smooth(2, 1e-2, 2)
    assert res.certified_bound < 1e-2
    rng = np.random.default_rng(1)
    X = rng.uniform(-2, 2, size=(5000, 2))
    assert np.max(np.abs(res.net.evaluate_batch(X) - X.prod(axis=1))) <= res.certified_bound


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_riemann_derivative_oracle(d):
    rng = np.random.default_rng(d)
    h = mp.mpf("0.01")
    f = exact_smooth_stencil(d, h, 128)
    with mp.workprec(128):
        for _ in range(20):
            x = [mp.mpf(float(v)) for v in rng.uniform(-1, 1, size=d)]
            target = product(x)
            # numerically differentiate w -> exp(w . x) once in every coordinate at w = 0
            deriv = mp.diff(lambda *w: mp.exp(mp.fsum(a * b for a, b in zip(w, x))), [0] * d, tuple([1] * d))
            assert abs(deriv - target) < mp.mpf(10) ** -20
            # the stencil is the central difference of the same map with step h
            assert abs(f(x) - target) <= d * h**2
