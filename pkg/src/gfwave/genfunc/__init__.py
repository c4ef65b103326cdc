"""Raw piecewise coefficients, mollification, ε-indexed nets and norms."""

from .expr import ClosedForm, parse_expression, parse_field
from .mollifier import Mollifier, mollify, profile_constant
from .nets import (
    CoefficientNet,
    as_spd,
    derived_net,
    callable_net,
    constant_net,
    divergence,
    expr_net,
    gradient,
    net_arithmetic,
    partial,
    sqrt_spd_net,
    stack_nets,
    time_derivative,
)
from .norms import (
    NormRequest,
    SampledField,
    compute_norm,
    net_norm,
    read_table,
    sample_axes,
    sample_net,
    write_table,
)
from .piecewise import PiecewiseExpr, Poly, Region, heaviside

__all__ = [
    "ClosedForm", "CoefficientNet", "as_spd", "derived_net", "Mollifier", "NormRequest", "PiecewiseExpr", "Poly", "Region",
    "SampledField", "callable_net", "compute_norm", "constant_net", "divergence", "expr_net",
    "gradient", "heaviside", "mollify", "net_arithmetic", "net_norm", "parse_expression",
    "parse_field", "partial", "profile_constant", "read_table", "sample_axes", "sample_net",
    "sqrt_spd_net", "stack_nets", "time_derivative", "write_table",
]
