"""
EXPRESSIONS
Purpose: Smooth functions that define algebroids, metrics and Lagrangians, held as
         sympy expressions with exact differentiation, pointwise evaluation and a
         canonical printer in the config grammar
Grammar atoms: numbers, variables, + - * /, integer powers, sin cos tan exp log sqrt
"""

from __future__ import annotations

import math

import sympy as sp
from sympy.printing.precedence import PRECEDENCE
from sympy.printing.str import StrPrinter

from src.utils.errors import ExpressionDomainError, UndeclaredVariableError

INTRINSICS = {
    "sin": sp.sin,
    "cos": sp.cos,
    "tan": sp.tan,
    "exp": sp.exp,
    "log": sp.log,
    "sqrt": sp.sqrt,
}

Expression = sp.Expr

ZERO = sp.Integer(0)
ONE = sp.Integer(1)

NON_FINITE = (sp.zoo, sp.oo, -sp.oo, sp.nan)


# ============================================================================
# CONSTRUCTORS
# ============================================================================

def Variable(name):
    return sp.Symbol(name)


def Number(value):
    """Constant node; integers stay exact, everything else becomes a Float."""
    if isinstance(value, int) and not isinstance(value, bool):
        return sp.Integer(value)
    value = float(value)
    if not math.isfinite(value):
        raise ExpressionDomainError(f"non-finite constant {value!r}")
    return sp.Float(value)


def as_expression(value):
    if isinstance(value, sp.Basic):
        return value
    if isinstance(value, (int, float)) or hasattr(value, "__float__"):
        return Number(value)
    raise TypeError(f"cannot use {type(value).__name__} as an expression")


def _finite(e, context=None):
    """Reject constants that folded to a complex or infinite value."""
    if e.is_number and (e.has(*NON_FINITE) or e.is_extended_real is False):
        raise ExpressionDomainError(f"{context or 'expression'} is not a finite real value", e)
    return e


def is_constant(e, value=None):
    if not e.is_number:
        return False
    return value is None or e == value


def add(a, b):
    return as_expression(a) + as_expression(b)


def sub(a, b):
    return as_expression(a) - as_expression(b)


def mul(a, b):
    return as_expression(a) * as_expression(b)


def div(a, b):
    a, b = as_expression(a), as_expression(b)
    if b.is_zero:
        raise ExpressionDomainError("division by zero", a)
    return _finite(a / b, "quotient")


def neg(a):
    return -as_expression(a)


def power(base, exponent):
    base = as_expression(base)
    exponent = float(exponent)
    if not exponent.is_integer():
        raise ValueError(f"non-integer exponent {exponent}")
    exponent = int(exponent)
    if base.is_zero and exponent < 0:
        raise ExpressionDomainError("zero raised to a negative power", base)
    return _finite(base ** exponent, "power")


def call(function, argument):
    if function not in INTRINSICS:
        raise ValueError(f"unknown function '{function}'")
    return _finite(INTRINSICS[function](as_expression(argument)), f"{function} of a constant")


def sum_expressions(terms):
    return sp.Add(*(as_expression(t) for t in terms))


# ============================================================================
# PRINTER (canonical form)
# ============================================================================

class GrammarPrinter(StrPrinter):
    """StrPrinter restricted to the config grammar: ^ for powers, sqrt for half powers."""

    def _print_Float(self, expr):
        return repr(float(expr))

    def _print_Exp1(self, expr):
        return "exp(1)"

    def _print_Pow(self, expr, rational=False):
        base = self.parenthesize(expr.base, PRECEDENCE["Pow"], strict=False)
        exponent = expr.exp
        if exponent.is_Integer:
            n = int(exponent)
            return f"{base}^{n}" if n >= 0 else f"{base}^({n})"
        if exponent.is_Rational and exponent.q == 2:
            root = f"sqrt({self._print(expr.base)})"
            p = int(exponent.p)
            if p == 1:
                return root
            return f"{root}^{p}" if p > 0 else f"{root}^({p})"
        raise ValueError(f"exponent {exponent} has no form in the expression grammar")

    def _print_Infinity(self, expr):
        raise ExpressionDomainError("cannot print an infinite constant")

    _print_NegativeInfinity = _print_Infinity
    _print_ComplexInfinity = _print_Infinity
    _print_NaN = _print_Infinity


_PRINTER = GrammarPrinter()


def print_expression(e):
    """Canonical text form; parse(print_expression(e)) reproduces e."""
    return _PRINTER.doprint(as_expression(e))


# ============================================================================
# VARIABLES
# ============================================================================

def free_variables(e):
    return frozenset(s.name for s in as_expression(e).free_symbols)


def check_declared(e, variables, field="expression"):
    declared = set(variables)
    for name in sorted(free_variables(e)):
        if name not in declared:
            raise UndeclaredVariableError(name, variables, field=field)


def symbols_of(variables):
    return [sp.Symbol(v) for v in variables]


# ============================================================================
# EVALUATION AND DIFFERENTIATION
# ============================================================================

def evaluate(e, assignment):
    """Evaluate e at a point given as a name -> value mapping."""
    e = as_expression(e)
    for name in sorted(free_variables(e)):
        if name not in assignment:
            raise UndeclaredVariableError(name, assignment.keys())
    point = {sp.Symbol(name): sp.Float(float(value)) for name, value in assignment.items()}
    value = sp.N(e.xreplace(point))
    if value.has(*NON_FINITE) or not value.is_number or value.is_extended_real is False:
        raise ExpressionDomainError(f"{print_expression(e)} is undefined at {dict(assignment)}", e)
    return float(value)


def differentiate(e, var):
    """Exact partial derivative of e with respect to the variable named var."""
    return sp.diff(as_expression(e), sp.Symbol(var))


def gradient(e, variables):
    return [differentiate(e, v) for v in variables]
