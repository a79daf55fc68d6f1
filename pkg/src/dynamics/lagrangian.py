"""
LAGRANGIANS ON A SKEW ALGEBROID
Purpose: L(x, y) with exact partials, the Legendre map, the Tulczyjew differential,
         the energy and the Euler-Lagrange residual
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from src.algebroid.skew_algebroid import BasePoint, base_variables, fiber_variables
from src.expr.compiler import compile_expressions
from src.expr.expression import as_expression, check_declared, differentiate, print_expression
from src.expr.parser import parse
from src.utils.errors import DimensionError, SingularHessianError

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class LagrangianDerivatives:
    """Values at one state; dxy[a, i] = d2L/dx^a dy^i."""

    value: float
    dx: np.ndarray
    dy: np.ndarray
    dxx: np.ndarray
    dxy: np.ndarray
    dyy: np.ndarray


@dataclass(frozen=True, eq=False)
class ThirdDerivatives:
    """dxxy[a, b, i], dxyy[a, i, j], dyyy[i, j, l]."""

    dxxy: np.ndarray
    dxyy: np.ndarray
    dyyy: np.ndarray


@dataclass(frozen=True, eq=False)
class Momentum:
    base: BasePoint
    z: np.ndarray


@dataclass(frozen=True, eq=False)
class TangentCovector:
    """Point of T E* in coordinates (x, z, xdot, zdot)."""

    x: np.ndarray
    z: np.ndarray
    xdot: np.ndarray
    zdot: np.ndarray


class Lagrangian:
    def __init__(self, expression, n, k, label=""):
        self.n = int(n)
        self.k = int(k)
        self.x_variables = tuple(base_variables(self.n))
        self.y_variables = tuple(fiber_variables(self.k))
        self.variables = self.x_variables + self.y_variables
        if isinstance(expression, str):
            expression = parse(expression, self.variables, field="lagrangian")
        self.expression = as_expression(expression)
        check_declared(self.expression, self.variables, field="lagrangian")
        self.label = label or print_expression(self.expression)

        self.dx = [differentiate(self.expression, v) for v in self.x_variables]
        self.dy = [differentiate(self.expression, v) for v in self.y_variables]
        self.dxx = [[differentiate(e, v) for v in self.x_variables] for e in self.dx]
        self.dxy = [[differentiate(e, v) for v in self.y_variables] for e in self.dx]
        self.dyy = [[differentiate(e, v) for v in self.y_variables] for e in self.dy]

    @cached_property
    def _bundle(self):
        flat = (
            [self.expression]
            + self.dx
            + self.dy
            + [e for row in self.dxx for e in row]
            + [e for row in self.dxy for e in row]
            + [e for row in self.dyy for e in row]
        )
        return compile_expressions(flat, self.variables, (len(flat),), "lagrangian")

    @cached_property
    def _third_bundle(self):
        flat = (
            [differentiate(e, v) for row in self.dxx for e in row for v in self.y_variables]
            + [differentiate(e, v) for row in self.dxy for e in row for v in self.y_variables]
            + [differentiate(e, v) for row in self.dyy for e in row for v in self.y_variables]
        )
        return compile_expressions(flat, self.variables, (len(flat),), "lagrangian_third")

    def _point(self, x, y):
        x = np.asarray(x, dtype=float).reshape(-1)
        y = np.asarray(y, dtype=float).reshape(-1)
        if x.size != self.n or y.size != self.k:
            raise DimensionError("state", (self.n, self.k), (x.size, y.size))
        return np.concatenate([x, y])

    def derivatives(self, x, y):
        n, k = self.n, self.k
        values = self._bundle(self._point(x, y))
        offsets = np.cumsum([1, n, k, n * n, n * k, k * k])
        return LagrangianDerivatives(
            value=float(values[0]),
            dx=values[1:offsets[1]],
            dy=values[offsets[1]:offsets[2]],
            dxx=values[offsets[2]:offsets[3]].reshape(n, n),
            dxy=values[offsets[3]:offsets[4]].reshape(n, k),
            dyy=values[offsets[4]:offsets[5]].reshape(k, k),
        )

    def third_derivatives(self, x, y):
        n, k = self.n, self.k
        values = self._third_bundle(self._point(x, y))
        a, b = n * n * k, n * n * k + n * k * k
        return ThirdDerivatives(
            dxxy=values[:a].reshape(n, n, k),
            dxyy=values[a:b].reshape(n, k, k),
            dyyy=values[b:].reshape(k, k, k),
        )

    def value(self, x, y):
        return self.derivatives(x, y).value

    def __repr__(self):
        return f"Lagrangian({self.label!r}, n={self.n}, k={self.k})"


def check_compatible(A, L):
    if (A.n, A.k) != (L.n, L.k):
        raise DimensionError("lagrangian", f"variables for n={A.n}, k={A.k}", f"n={L.n}, k={L.k}")


# ============================================================================
# MAPS
# ============================================================================

def legendre(L, v):
    """z_i = dL/dy^i."""
    return Momentum(base=v.base, z=L.derivatives(v.x, v.y).dy.copy())


def tulczyjew_differential(A, L, v):
    """(x, dL/dy, rho y, c^k_{ij} y^i dL/dy^k + rho^a_j dL/dx^a)."""
    check_compatible(A, L)
    D = L.derivatives(v.x, v.y)
    rho = A.rho_at(v.x)
    c = A.c_at(v.x)
    zdot = np.einsum("kij,i,k->j", c, v.y, D.dy) + rho.T @ D.dx
    return TangentCovector(x=v.x.copy(), z=D.dy.copy(), xdot=rho @ v.y, zdot=zdot)


def energy(L, v):
    D = L.derivatives(v.x, v.y)
    return float(D.dy @ v.y - D.value)


def el_residual(A, L, state):
    """Admissibility and dynamical residuals of a state (x, y, xdot, ydot)."""
    check_compatible(A, L)
    x, y, xdot, ydot = (np.asarray(s, dtype=float).reshape(-1) for s in state)
    D = L.derivatives(x, y)
    rho = A.rho_at(x)
    c = A.c_at(x)
    admissibility = xdot - rho @ y
    momentum_rate = D.dxy.T @ xdot + D.dyy @ ydot
    force = rho.T @ D.dx + np.einsum("kji,j,k->i", c, y, D.dy)
    return admissibility, momentum_rate - force


def solve_fiber_hessian(W, rhs, state=None, limit=CONDITION_LIMIT):
    """Solve W u = rhs, refusing singular or ill-conditioned fiber Hessians."""
    with np.errstate(divide="ignore", invalid="ignore"):
        condition = np.linalg.cond(W)
    if not np.isfinite(condition) or condition >= limit:
        raise SingularHessianError(state, float(condition), limit)
    return np.linalg.solve(W, rhs), float(condition)
