"""Symbolic expression core: parse, differentiate, simplify, evaluate, compare."""
from .calculus import differentiate, substitute
from .equivalence import AllSamplesRejected, EquivReport, ExcludeRule, SampleDomain, equivalent
from .evaluate import DomainError, EvalError, Point, PoleError, UnboundSymbolError, evaluate
from .lambertw import lambert_w, lambert_w_complex
from .nodes import (
    FUNCTIONS,
    Apply,
    Const,
    Expr,
    Power,
    Product,
    Quotient,
    Sum,
    SymConst,
    Var,
    as_expr,
    const,
    free_constants,
    free_symbols,
    free_variables,
    iter_terms,
    neg,
    render,
)
from .normal import NormalizationError, as_constant, is_zero, poly_in_var, ratform, simplify
from .numeric import compile_expr
from .parser import ExpressionError, SyntaxError_, UndeclaredVariableError, parse_expr

__all__ = [
    "Apply", "Const", "Expr", "Power", "Product", "Quotient", "Sum", "SymConst", "Var",
    "FUNCTIONS", "as_expr", "const", "neg", "render", "iter_terms",
    "free_constants", "free_symbols", "free_variables",
    "parse_expr", "ExpressionError", "SyntaxError_", "UndeclaredVariableError",
    "simplify", "is_zero", "as_constant", "ratform", "poly_in_var", "NormalizationError",
    "differentiate", "substitute",
    "evaluate", "EvalError", "PoleError", "DomainError", "UnboundSymbolError", "Point",
    "compile_expr", "lambert_w", "lambert_w_complex",
    "equivalent", "SampleDomain", "ExcludeRule", "EquivReport", "AllSamplesRejected",
]
