import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import random_exp_sum, random_relu
from mononet import Activation, Box, LayeredNetwork, ShallowExpSum, Target, certify_sup_error
from mononet.certify import interval_sup_error, lattice_shape, measure_sup_error
from mononet.errors import InputError, ResourceError
from mononet.synthesis import product_domain, synth_exact_smooth, synth_log_exp, synth_monomial_exp, synth_product_two_layer


def denser_sup(net, target: Target, box: Box, report, factor: int = 4) -> float:
    per_axis = [int(round(w / s)) + 1 if s > 0 else 1 for w, s in zip(box.widths, report.spacing)]
    worst = 0.0
    axes = [np.linspace(lo, hi, factor * (n - 1) + 1) for lo, hi, n in zip(box.lo, box.hi, per_axis)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, box.d)
    for X in np.array_split(mesh, max(1, mesh.shape[0] // 200_000)):
        if isinstance(net, ShallowExpSum) and X.shape[0] <= 5000:
            vals = net.evaluate_batch_mp(X)
        else:
            vals = net.evaluate_batch(X)
        worst = max(worst, float(np.max(np.abs(vals - target(X)))))
    return worst


def relu_identity() -> LayeredNetwork:
    return LayeredNetwork(Activation.RELU, [[[1.0]], [[1.0]]], [[0.0], [0.0]])


def relu_zero() -> LayeredNetwork:
    return LayeredNetwork(Activation.RELU, [[[0.0]], [[0.0]]], [[0.0], [0.0]])


def test_exact_net_certifies_near_zero():
    rep = certify_sup_error(relu_identity(), Target("monomial", 1), Box.cube(1, 0, 1), margin=1e-6)
    assert rep.grid_sup == 0.0
    assert rep.certified_bound <= 1e-6 + 1e-12


def test_known_error_is_bracketed():
    # sup_[0,1] |0 - x^2| = 1, attained at the lattice corner
    rep = certify_sup_error(relu_zero(), Target("monomial", 2), Box.cube(1, 0, 1), margin=1e-3)
    assert rep.grid_sup == 1.0
    assert 1.0 <= rep.certified_bound <= 1.0 + 1e-3 + 1e-9


def test_lattice_includes_corners():
    shape = lattice_shape(Box.cube(2, 0, 1), 0.3)
    assert all(n >= 5 for n in shape)


@pytest.mark.parametrize(
    "build, target, box",
    [
        (lambda: synth_monomial_exp(3, 1e-3, certify=False).net, Target("monomial", 3), Box.cube(1, 0, 1)),
        (lambda: synth_log_exp(0.5, 0.05, certify=False).net, Target("log"), Box.cube(1, 0.5, 1)),
        (lambda: synth_product_two_layer(2, 1.0, 0.2).net, Target("product"), product_domain(2, 1.0)),
        (lambda: random_relu(np.random.default_rng(3), 2, 6, 2), Target("product"), Box.cube(2, 0, 1)),
        (lambda: random_exp_sum(np.random.default_rng(4), 1, 4), Target("exp"), Box.cube(1, -1, 1)),
    ],
    ids=["monomial", "log", "product2", "relu", "exp_sum"],
)
def test_certified_bound_dominates_denser_grid(build, target, box):
    net = build()
    rep = certify_sup_error(net, target, box, margin=0.01)
    assert rep.certified_bound >= rep.grid_sup
    assert rep.certified_bound >= denser_sup(net, target, box, rep)
    assert rep.slack <= 0.01 * (1 + 1e-9)


def test_exact_smooth_bound_dominates_samples():
    res = synth_exact_smooth(3, 1e-2, 2)
    rng = np.random.default_rng(5)
    X = np.vstack([rng.uniform(-2, 2, size=(2000, 3)), [[2, 2, 2], [-2, 2, -2]]])
    # the closed-form certificate is for the extended-precision net
    # values are rounded to float64 once before the comparison
    assert np.max(np.abs(res.net.evaluate_batch_mp(X) - X.prod(axis=1))) <= res.certified_bound + 1e-14
    slack = res.report.meta["float64_eval_error"]
    assert np.max(np.abs(res.net.evaluate_batch(X) - X.prod(axis=1))) <= res.certified_bound + slack


def test_resource_cap_is_enforced():
    net = random_relu(np.random.default_rng(0), 3, 8, 2)
    with pytest.raises(ResourceError):
        certify_sup_error(net, Target("product"), Box.cube(3, 0, 1), margin=1e-4, max_points=1000)


@pytest.mark.parametrize(
    "kwargs",
    [dict(margin=0.0), dict(margin=0.1, box=Box.cube(2, 0, 1))],
)
def test_certify_input_validation(kwargs):
    box = kwargs.pop("box", Box.cube(1, 0, 1))
    with pytest.raises(InputError):
        certify_sup_error(relu_identity(), Target("monomial", 1), box, **kwargs)


def test_target_validation():
    with pytest.raises(InputError):
        Target("sine")
    with pytest.raises(InputError):
        Target("log").check_box(Box.cube(1, 0, 1))
    with pytest.raises(InputError):
        Target("exp").check_box(Box.cube(2, 0, 1))


@given(st.floats(0.5, 3.0))
def test_interval_certificate_brackets_sine(b):
    bound, sup, _ = interval_sup_error(mp.sin, lambda t: mp.mpf(0), 0.0, b, 1.0, 1e-3)
    true = math.sin(min(b, math.pi / 2))
    assert sup <= true + 1e-15
    assert true <= bound <= true + 1.1e-3


def test_measure_sup_error_mp_path_agrees():
    f = synth_monomial_exp(2, 1e-3, certify=False).net
    box = Box.cube(1, 0, 1)
    a = measure_sup_error(f, Target("monomial", 2), box, 101)
    b = measure_sup_error(f, Target("monomial", 2), box, 101, mp_exact=True)
    assert a == pytest.approx(b, rel=1e-6)


@given(st.floats(0.5, 3.0))
def test_interval_curvature_certificate_brackets_sine(b):
    bound, _, n = interval_sup_error(mp.sin, lambda t: mp.mpf(0), 0.0, b, None, 1e-6, curvature=1.0)
    true = math.sin(min(b, math.pi / 2))
    assert true <= bound <= true + 1.1e-6
    assert n <= 2000


def test_interval_needs_one_slope_bound():
    with pytest.raises(InputError):
        interval_sup_error(mp.sin, mp.cos, 0.0, 1.0, None, 1e-3)
