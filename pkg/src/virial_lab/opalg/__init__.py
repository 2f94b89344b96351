"""Exact symbolic algebra of canonical position/momentum operators."""

from .expr import (
    DEFAULT_CAP,
    CanonicalFactor,
    ExpressionBlowup,
    Kind,
    Monomial,
    OperatorExpr,
    add,
    adjoint,
    commutator,
    equals,
    hbar,
    imag_unit,
    lam,
    mul,
    normal_order,
    one,
    p,
    rational,
    scale,
    to_string,
    x,
    zero,
)
from .parser import ExprSyntaxError, parse, parse_tree
from .scalar import GaussianRational, ScalarCoeff, i_hbar

__all__ = [
    "DEFAULT_CAP",
    "CanonicalFactor",
    "ExprSyntaxError",
    "ExpressionBlowup",
    "GaussianRational",
    "Kind",
    "Monomial",
    "OperatorExpr",
    "ScalarCoeff",
    "add",
    "adjoint",
    "commutator",
    "equals",
    "hbar",
    "i_hbar",
    "imag_unit",
    "lam",
    "mul",
    "normal_order",
    "one",
    "p",
    "parse",
    "parse_tree",
    "rational",
    "scale",
    "to_string",
    "x",
    "zero",
]
