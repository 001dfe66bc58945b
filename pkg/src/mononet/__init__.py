"""Constructive exp and ReLU monomial networks with certified error bounds."""

from .certify import CertifiedErrorReport, Target, certify_sup_error
from .flatten import (
    FlattenBudget,
    approx_exp_poly,
    compose_poly_with_shallow,
    exp_to_relu_shallow,
    exp_to_relu_univariate,
    flatten_two_layer,
    synth_product_shallow_relu,
)
from .lower_bound import (
    LowerBoundCertificate,
    PiecewiseLinearFunction,
    count_linear_pieces,
    extract_cpwl,
    min_width_lower_bound,
    three_point_lower_bound,
)
from .network import (
    Activation,
    Box,
    LayeredNetwork,
    NumericPrecision,
    ShallowExpSum,
    deserialize,
    evaluate,
    lipschitz_upper_bound,
    restrict_diagonal,
    serialize,
)
from .synthesis import (
    PolynomialCoeffs,
    StencilParams,
    synth_exact_smooth,
    synth_log_exp,
    synth_monomial_exp,
    synth_polynomial_exp,
    synth_product_two_layer,
)

__all__ = [name for name in dir() if not name.startswith("_")]
