import itertools
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import random_exp_sum
from mononet import (
    Box,
    FlattenBudget,
    PolynomialCoeffs,
    ShallowExpSum,
    approx_exp_poly,
    compose_poly_with_shallow,
    exp_to_relu_shallow,
    exp_to_relu_univariate,
    flatten_two_layer,
    synth_product_shallow_relu,
)
from mononet.certify import Target, measure_sup_error
from mononet.errors import BudgetError, InputError, SynthesisError
from mononet.synthesis import product_domain, synth_product_two_layer


# --- polynomial approximation of exp ---------------------------------------------------


@pytest.mark.parametrize("a, b, eps", [(0.0, 1.0, 1e-3), (-2.0, 1.0, 1e-3), (-3.0, 1.0, 0.05), (-1.0, 1.0, 1e-8)])
def test_exp_poly_certified(a, b, eps):
    fit = approx_exp_poly(a, b, eps)
    assert fit.certified_error < eps
    assert fit.degree <= fit.degree_cap
    t = np.linspace(a, b, 10_001)
    assert np.max(np.abs(fit.coeffs.evaluate(t) - np.exp(t))) <= fit.certified_error


def test_exp_poly_degree_is_small():
    # Taylor at the midpoint already needs only a handful of terms here
    assert approx_exp_poly(0.0, 1.0, 1e-3).degree <= 5


def test_exp_poly_rejects_bad_interval():
    with pytest.raises(InputError):
        approx_exp_poly(1.0, 0.0, 1e-3)


# --- polynomial of an exp-sum ----------------------------------------------------------------


def direct_composition(p: PolynomialCoeffs, f: ShallowExpSum, x) -> mp.mpf:
    with mp.workprec(200):
        v = f(x)
        return mp.fsum(c * v**i for i, c in enumerate(p.a))


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("r", [0, 1, 2, 3, 4])
def test_flattening_identity(n, r):
    rng = np.random.default_rng(10 * n + r)
    d = 2
    f = random_exp_sum(rng, d, n)
    p = PolynomialCoeffs(tuple(rng.normal(size=r + 1)))
    res = compose_poly_with_shallow(p, f, FlattenBudget(prune_threshold=0.0))
    assert res.pre_merge_terms == math.comb(n + r, r)
    assert res.net.n_terms <= (n + 1) ** r
    for x in rng.uniform(-1, 1, size=(100, d)):
        want = direct_composition(p, f, x)
        got = res.net(x)
        assert abs(got - want) <= 1e-9 * max(abs(want), mp.mpf(1e-300))


@pytest.mark.parametrize("n, r", [(n, r) for n in range(1, 6) for r in range(0, 6)])
def test_pre_merge_count_is_binomial(n, r):
    # distinct weight vectors keep every multiset apart
    f = ShallowExpSum(1, tuple((1.0, (float(2**j) / 64,)) for j in range(n)))
    p = PolynomialCoeffs((1.0,) * (r + 1))
    res = compose_poly_with_shallow(p, f, FlattenBudget(prune_threshold=0.0))
    assert res.pre_merge_terms == math.comb(n + r, r)
    assert res.merged_terms <= res.pre_merge_terms
    assert res.term_cap == (n + 1) ** r


def test_merging_collapses_equal_weights():
    # (e^x + e^{2x})^2 = e^{2x} + 2 e^{3x} + e^{4x}: three terms after merging
    f = ShallowExpSum(1, ((1.0, (1.0,)), (1.0, (2.0,))))
    res = compose_poly_with_shallow(PolynomialCoeffs((0.0, 0.0, 1.0)), f, FlattenBudget(prune_threshold=0.0))
    assert res.pre_merge_terms == 3
    assert res.net.n_terms == 3
    assert sorted(float(nu) for nu in res.net.nus) == [1.0, 1.0, 2.0]


def test_composition_budget_is_enforced():
    f = random_exp_sum(np.random.default_rng(0), 2, 10)
    p = PolynomialCoeffs((1.0,) * 6)
    with pytest.raises(BudgetError) as info:
        compose_poly_with_shallow(p, f, FlattenBudget(max_terms=100))
    assert info.value.projected > 100


def test_pruning_reports_dropped_mass():
    f = ShallowExpSum(1, ((1.0, (0.1,)), (1e-9, (0.3,))))
    p = PolynomialCoeffs((0.0, 1.0, 1.0))
    box = Box.cube(1, 0, 1)
    res = compose_poly_with_shallow(p, f, FlattenBudget(prune_threshold=1e-6), box=box)
    assert res.pruned_terms >= 1
    x = np.linspace(0, 1, 101)
    exact = np.array([float(direct_composition(p, f, [t])) for t in x])
    assert np.max(np.abs(res.net.evaluate_batch(x[:, None]) - exact)) <= res.pruned_mass * (1 + 1e-9) + 1e-14


def test_flatten_two_layer_product():
    eps = 0.1
    g = synth_product_two_layer(2, 1.0, eps).net
    box = product_domain(2, 1.0)
    flat = flatten_two_layer(g, box, (-2.0, 1.0), eps)
    assert flat.certified_error < eps
    assert flat.inner_range[0] <= flat.inner_enclosure[0] and flat.inner_enclosure[1] <= flat.inner_range[1]
    X = np.random.default_rng(0).uniform(box.lo, box.hi, size=(5000, 2))
    assert np.max(np.abs(flat.net.evaluate_batch(X) - g.evaluate_batch(X))) <= flat.certified_error


def test_flatten_rejects_short_inner_range():
    g = synth_product_two_layer(2, 1.0, 0.1).net
    with pytest.raises(SynthesisError):
        flatten_two_layer(g, product_domain(2, 1.0), (-0.5, 0.5), 0.1)


# --- exp to ReLU -------------------------------------------------------------------------------


def test_exp_on_unit_interval_needs_four_neurons():
    # value range e - 1 split into pieces of height 0.5
    conv = exp_to_relu_univariate(1.0, 0.0, 1.0, 0.5)
    assert conv.neurons <= 4
    assert conv.certified_error <= 0.5


@given(
    nu=st.floats(0.1, 5.0).flatmap(lambda v: st.sampled_from([v, -v])),
    c1=st.floats(-3.0, 1.0),
    width=st.floats(0.1, 3.0),
    eps=st.sampled_from([0.5, 0.1, 0.01]),
    knots=st.sampled_from(["range", "greedy"]),
)
def test_monotone_conversion(nu, c1, width, eps, knots):
    c2 = c1 + width
    conv = exp_to_relu_univariate(nu, c1, c2, eps, knots=knots)
    t = np.linspace(c1, c2, 10_000)
    vals = conv.net.evaluate_batch(t[:, None])
    steps = np.diff(vals)
    tol = 1e-12 * abs(nu) * math.exp(c2)
    if nu > 0:
        assert np.all(steps >= -tol)
    else:
        assert np.all(steps <= tol)
    assert np.max(np.abs(vals - nu * np.exp(t))) <= conv.certified_error <= eps


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("allocation", ["equal", "weighted"])
def test_shallow_conversion_random_sum(seed, allocation):
    rng = np.random.default_rng(seed)
    f = random_exp_sum(rng, 2, 3, wscale=1.0)
    box = Box.cube(2, -1, 1)
    conv = exp_to_relu_shallow(f, box, 0.05, knots="greedy", t_range="box", allocation=allocation)
    assert conv.certified_error <= 0.05
    X = rng.uniform(-1, 1, size=(20_000, 2))
    assert np.max(np.abs(conv.net.evaluate_batch(X) - f.evaluate_batch(X))) <= conv.certified_error


def test_weighted_allocation_uses_fewer_neurons():
    f = ShallowExpSum(1, ((10.0, (1.0,)), (0.01, (0.5,))))
    box = Box.cube(1, 0, 1)
    eq = exp_to_relu_shallow(f, box, 1e-3, knots="greedy", t_range="box", allocation="equal")
    wt = exp_to_relu_shallow(f, box, 1e-3, knots="greedy", t_range="box", allocation="weighted")
    assert wt.neurons < eq.neurons


def test_conversion_budget_is_enforced():
    f = ShallowExpSum(1, ((1.0, (1.0,)),))
    with pytest.raises(BudgetError):
        exp_to_relu_shallow(f, Box.cube(1, 0, 1), 1e-9, knots="range", budget=FlattenBudget(max_neurons=1000))
    with pytest.raises(BudgetError):
        exp_to_relu_shallow(f, Box.cube(1, 0, 1), 1e-12, knots="greedy", budget=FlattenBudget(max_neurons=1000))


def test_constant_terms_go_to_bias():
    f = ShallowExpSum(1, ((2.5, (0.0,)), (1.0, (1.0,))))
    conv = exp_to_relu_shallow(f, Box.cube(1, 0, 1), 0.01, knots="greedy", t_range="box")
    t = np.linspace(0, 1, 1001)
    assert np.max(np.abs(conv.net.evaluate_batch(t[:, None]) - 2.5 - np.exp(t))) <= conv.certified_error


# --- end to end -------------------------------------------------------------------------------


def _check_pipeline(res, eps):
    rep = res.report
    stages = rep.stage_bounds
    assert set(stages) == {"two_layer", "flatten", "relu"}
    assert rep.certified_bound >= stages["two_layer"] + stages["flatten"] + stages["relu"]
    assert rep.certified_bound <= (stages["two_layer"] + stages["flatten"] + stages["relu"]) * (1 + 1e-12)
    assert rep.measured_box <= rep.certified_bound
    assert rep.certified_bound < eps
    assert res.net.depth == 1


def test_pipeline_certified_inner_range_d2():
    res = synth_product_shallow_relu(2, 1.0, 0.5, inner_range="certified")
    _check_pipeline(res, 0.5)
    box = product_domain(2, 1.0)
    X = np.random.default_rng(0).uniform(box.lo, box.hi, size=(20_000, 2))
    assert np.max(np.abs(res.net.evaluate_batch(X) - X.prod(axis=1))) <= res.report.certified_bound


def test_pipeline_d3_certified_inner_range():
    res = synth_product_shallow_relu(3, 2.0, 0.6, inner_range="certified", measure_points=9)
    _check_pipeline(res, 0.6)


def test_pipeline_d3_apriori_range_exceeds_default_budget():
    with pytest.raises(BudgetError):
        synth_product_shallow_relu(3, 2.0, 0.6, inner_range="apriori")


def test_pipeline_full_cube_is_only_measured():
    res = synth_product_shallow_relu(2, 1.0, 0.5, inner_range="certified", measure_points=41)
    # the certificate covers the log domain only; the cube figure is a plain lattice max
    assert res.net.meta["certified_box"] == product_domain(2, 1.0).to_dict()
    cube = measure_sup_error(res.net, Target("product"), Box.cube(2, 0, 1), 41)
    assert res.report.measured_cube == cube
