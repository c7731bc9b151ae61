"""Symbolic expressions: parse, normalize, differentiate, integrate, evaluate, zero-test."""
from .calculus import differentiate, gradient
from .domain import DEFAULT_SEED, Domain, sample_points
from .evaluate import (
    RealDomainError, SingularityError, UnboundSymbolError, compile_scalar, evaluate,
    evaluate_batch,
)
from .integrate import antiderivative, definite_integral, is_closed_form, table_antiderivative
from .nodes import (
    FUNCTIONS, Add, Const, Expr, Func, Integral, Mul, Pow, Symbol, add, as_expr, const, expand,
    func, has_integral, integral, mul, neg, normalize, power, substitute, sym, symbols,
)
from .parser import ParseError, UnknownFunctionError, parse
from .quadrature import adaptive_simpson
from .render import render
from .zerotest import (
    DEFAULT_SAMPLES, DEFAULT_TOL, Certificate, EmptyDomainError, Verdict, nonvanishing, resolve_abs, zero_test,
)

__all__ = [
    "Add", "Certificate", "Const", "DEFAULT_SAMPLES", "DEFAULT_SEED", "DEFAULT_TOL", "Domain", "EmptyDomainError", "Expr",
    "FUNCTIONS", "Func", "Integral", "Mul", "ParseError", "Pow", "RealDomainError",
    "SingularityError", "Symbol", "UnboundSymbolError", "UnknownFunctionError", "Verdict",
    "adaptive_simpson", "add", "antiderivative", "as_expr", "compile_scalar", "const",
    "definite_integral", "differentiate", "evaluate", "evaluate_batch", "expand", "func",
    "gradient", "has_integral", "integral", "is_closed_form", "mul", "neg", "nonvanishing",
    "normalize", "parse", "power", "render", "resolve_abs", "sample_points", "substitute", "sym", "symbols",
    "table_antiderivative", "zero_test",
]
