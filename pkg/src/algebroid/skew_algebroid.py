"""
SKEW-SYMMETRIC ALGEBROIDS IN COORDINATES
Purpose: Anchor rho^a_i(x) and structure functions c^i_{jk}(x) of a local frame,
         points of the bundle, local sections and their bracket
Output: StructureData (frame data plus first derivatives) at any base point
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from src.expr.compiler import compile_expressions
from src.expr.parser import parse
from src.expr.expression import (
    ZERO,
    Expression,
    add,
    as_expression,
    check_declared,
    differentiate,
    evaluate,
    is_constant,
    mul,
    neg,
    sub,
    sum_expressions,
)
from src.utils.errors import ConfigError, DimensionError, ExpressionDomainError

logger = logging.getLogger(__name__)

DEFAULT_BOX = (-1.0, 1.0)


def base_variables(n):
    return [f"x{a + 1}" for a in range(n)]


def fiber_variables(k):
    return [f"y{i + 1}" for i in range(k)]


# ============================================================================
# POINTS
# ============================================================================

def _finite_vector(values, field):
    array = np.asarray(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(array)):
        raise ConfigError(field, "entries must be finite")
    return array


@dataclass(frozen=True, eq=False)
class BasePoint:
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _finite_vector(self.x, "x"))


@dataclass(frozen=True, eq=False)
class FiberVector:
    base: BasePoint
    y: np.ndarray

    def __post_init__(self):
        if not isinstance(self.base, BasePoint):
            object.__setattr__(self, "base", BasePoint(self.base))
        object.__setattr__(self, "y", _finite_vector(self.y, "y"))

    @property
    def x(self):
        return self.base.x


def fiber_vector(x, y):
    return FiberVector(BasePoint(x), y)


@dataclass(frozen=True, eq=False)
class StructureData:
    """Frame data at one base point.

    rho[a, i]      = rho^a_i
    drho[a, i, b]  = d rho^a_i / d x^b
    c[i, j, l]     = c^i_{jl}
    dc[i, j, l, a] = d c^i_{jl} / d x^a
    """

    rho: np.ndarray
    drho: np.ndarray
    c: np.ndarray
    dc: np.ndarray


# ============================================================================
# ALGEBROID
# ============================================================================

class SkewAlgebroid:
    """Skew algebroid of rank k over an n-dimensional chart.

    The structure functions are stored antisymmetrized: only the entries with
    j < l of the input are read, the rest are their negatives.
    """

    def __init__(self, n, k, rho, c, label="", domain=None):
        if int(n) != n or n < 0:
            raise DimensionError("n", "an integer >= 0", n)
        if int(k) != k or k < 1:
            raise DimensionError("k", "an integer >= 1", k)
        self.n = int(n)
        self.k = int(k)
        self.label = label or f"skew({self.n},{self.k})"
        self.variables = tuple(base_variables(self.n))

        self.domain = self._read_domain(domain)
        self.rho = self._read_rho(rho)
        self.c = self._read_structure(c)

    # --- construction helpers ----------------------------------------------

    def _entry(self, value, field):
        """Expression from an Expression, a number or source text over the base variables."""
        if isinstance(value, str):
            return parse(value, self.variables, field=field)
        try:
            e = as_expression(value)
        except (TypeError, ValueError, ExpressionDomainError) as exc:
            raise ConfigError(field, f"not an expression: {exc}") from exc
        check_declared(e, self.variables, field=field)
        return e

    def _read_rho(self, rho):
        rho = [] if rho is None else rho
        if len(rho) != self.n:
            raise DimensionError("rho", f"{self.n} rows", len(rho))
        rows = []
        for a, row in enumerate(rho):
            if len(row) != self.k:
                raise DimensionError(f"rho[{a}]", f"{self.k} entries", len(row))
            entries = tuple(self._entry(e, f"rho[{a}][{i}]") for i, e in enumerate(row))
            rows.append(entries)
        return tuple(rows)

    def _read_structure(self, c):
        if len(c) != self.k:
            raise DimensionError("c", f"{self.k} blocks", len(c))
        full = [[[ZERO] * self.k for _ in range(self.k)] for _ in range(self.k)]
        center = {v: 0.5 * (lo + hi) for v, (lo, hi) in zip(self.variables, self.domain)}
        for i, block in enumerate(c):
            if len(block) != self.k or any(len(row) != self.k for row in block):
                raise DimensionError(f"c[{i}]", f"{self.k}x{self.k} block", [len(row) for row in block])
            for j in range(self.k):
                for l in range(self.k):
                    e = self._entry(block[j][l], f"c[{i}][{j}][{l}]")
                    if j < l:
                        full[i][j][l] = e
                        full[i][l][j] = neg(e)
            for j in range(self.k):
                for l in range(j, self.k):
                    lower = self._entry(block[l][j], f"c[{i}][{l}][{j}]")
                    if is_constant(lower, 0):
                        continue
                    upper = self._entry(block[j][l], f"c[{i}][{j}][{l}]")
                    try:
                        defect = evaluate(upper, center) + evaluate(lower, center)
                    except ExpressionDomainError:
                        continue
                    if abs(defect) > 1e-12:
                        logger.warning("c[%d][%d][%d] is not the negative of c[%d][%d][%d]; using the upper entry",
                                       i, l, j, i, j, l)
        return tuple(tuple(tuple(row) for row in block) for block in full)

    def _read_domain(self, domain):
        if domain is None:
            return tuple(DEFAULT_BOX for _ in range(self.n))
        if len(domain) != self.n:
            raise DimensionError("domain", f"{self.n} intervals", len(domain))
        box = []
        for a, (lo, hi) in enumerate(domain):
            if not lo < hi:
                raise ConfigError(f"domain[{a}]", "interval must satisfy lo < hi")
            box.append((float(lo), float(hi)))
        return tuple(box)

    # --- compiled evaluation -----------------------------------------------

    def _flat_rho(self):
        return [e for row in self.rho for e in row]

    def _flat_c(self):
        return [e for block in self.c for row in block for e in row]

    @cached_property
    def _rho_fn(self):
        return compile_expressions(self._flat_rho(), self.variables, (self.n, self.k), "rho")

    @cached_property
    def _c_fn(self):
        return compile_expressions(self._flat_c(), self.variables, (self.k, self.k, self.k), "c")

    @cached_property
    def _drho_fn(self):
        derivs = [differentiate(e, v) for e in self._flat_rho() for v in self.variables]
        return compile_expressions(derivs, self.variables, (self.n, self.k, self.n), "drho")

    @cached_property
    def _dc_fn(self):
        derivs = [differentiate(e, v) for e in self._flat_c() for v in self.variables]
        return compile_expressions(derivs, self.variables, (self.k, self.k, self.k, self.n), "dc")

    def rho_at(self, x):
        return self._rho_fn(x)

    def c_at(self, x):
        return self._c_fn(x)

    def structure_at(self, x):
        return StructureData(
            rho=self._rho_fn(x),
            drho=self._drho_fn(x),
            c=self._c_fn(x),
            dc=self._dc_fn(x),
        )

    @property
    def is_skew_algebra(self):
        return self.n == 0

    def __repr__(self):
        return f"SkewAlgebroid(label={self.label!r}, n={self.n}, k={self.k})"


# ============================================================================
# SECTIONS
# ============================================================================

@dataclass(frozen=True)
class SectionField:
    """Local section X = X^i(x) e_i."""

    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(as_expression(e) for e in self.components))

    @classmethod
    def constant(cls, values):
        return cls(tuple(float(v) for v in values))

    def scaled(self, factor):
        factor = as_expression(factor)
        return SectionField(tuple(mul(factor, e) for e in self.components))

    def at(self, A, x):
        bundle = compile_expressions(list(self.components), A.variables, (A.k,), "section")
        return bundle(x)


def _check_section(A, X, name):
    if len(X.components) != A.k:
        raise DimensionError(name, f"{A.k} components", len(X.components))
    for i, e in enumerate(X.components):
        check_declared(e, A.variables, field=f"{name}[{i}]")


def anchor_apply(A, v):
    """Tangent vector rho(x) y of a FiberVector."""
    if v.x.size != A.n or v.y.size != A.k:
        raise DimensionError("fiber vector", (A.n, A.k), (v.x.size, v.y.size))
    return A.rho_at(v.x) @ v.y


def anchor_derivation(A, X: SectionField, f: Expression):
    """rho(X)(f) = rho^a_j X^j df/dx^a."""
    terms = []
    for a, var in enumerate(A.variables):
        df = differentiate(f, var)
        for j in range(A.k):
            terms.append(mul(mul(A.rho[a][j], X.components[j]), df))
    return sum_expressions(terms)


def bracket(A, X: SectionField, Y: SectionField):
    """[X, Y]^i = c^i_{jl} X^j Y^l + rho(X)(Y^i) - rho(Y)(X^i)."""
    _check_section(A, X, "X")
    _check_section(A, Y, "Y")
    components = []
    for i in range(A.k):
        algebraic = sum_expressions(
            mul(A.c[i][j][l], mul(X.components[j], Y.components[l]))
            for j in range(A.k)
            for l in range(A.k)
        )
        differential = sub(anchor_derivation(A, X, Y.components[i]), anchor_derivation(A, Y, X.components[i]))
        components.append(add(algebraic, differential))
    return SectionField(tuple(components))
