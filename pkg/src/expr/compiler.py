"""
EXPRESSION COMPILER
Purpose: Lambdify a bundle of expressions into one function of a value vector,
         so hot loops (RK4 stages, quadrature points) avoid symbolic evaluation
"""

import logging

import numpy as np
import sympy as sp

from src.expr.expression import as_expression, check_declared, symbols_of
from src.utils.errors import ExpressionDomainError

logger = logging.getLogger(__name__)

# scalar loops; math raises on log/sqrt of out-of-domain arguments where numpy returns nan
MODULES = ["math"]


def _common_subexpressions(expressions):
    return sp.cse(expressions, symbols=sp.numbered_symbols("_cse"))


class CompiledBundle:
    """A list of expressions evaluated together; returns an array of the given shape."""

    def __init__(self, expressions, variables, shape=None, name="bundle"):
        self.expressions = [as_expression(e) for e in expressions]
        self.variables = tuple(variables)
        self.shape = tuple(shape) if shape is not None else (len(self.expressions),)
        self.name = name
        for e in self.expressions:
            check_declared(e, self.variables)

        self.constant = all(e.is_number for e in self.expressions)
        if self.constant:
            self._values = np.array([float(e) for e in self.expressions], dtype=float).reshape(self.shape)
            self._function = None
        else:
            self._function = sp.lambdify(
                symbols_of(self.variables), self.expressions, modules=MODULES, cse=_common_subexpressions
            )
        logger.debug("compiled %s: %d expressions over %d variables (constant=%s)",
                     name, len(self.expressions), len(self.variables), self.constant)

    def __call__(self, values):
        if self.constant:
            return self._values.copy()
        values = np.asarray(values, dtype=float).ravel().tolist()
        try:
            out = np.array(self._function(*values), dtype=float)
        except (ValueError, ZeroDivisionError, OverflowError) as e:
            raise ExpressionDomainError(
                f"{self.name}: {e} at {dict(zip(self.variables, values))}"
            ) from e
        if not np.all(np.isfinite(out)):
            raise ExpressionDomainError(f"{self.name}: non-finite value at {dict(zip(self.variables, values))}")
        return out.reshape(self.shape)


def compile_expressions(expressions, variables, shape=None, name="bundle"):
    """Compile a flat list of expressions; each call returns an array of the given shape."""
    return CompiledBundle(expressions, variables, shape=shape, name=name)
