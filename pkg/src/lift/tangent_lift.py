"""
TANGENT LIFTS
Purpose: Lift functions, sections and the algebroid structure of E to T E, and check
         that the Jacobi equation of (A, L) is the EL equation of the lifted system

Lifted coordinates:
    base  x1..xn (x), x(n+1)..x(2n) (xdot)
    fiber y1..yk (complete lifts e_i), y(k+1)..y(2k) (vertical lifts e^_i)
Brackets:
    [e_i, e_j]   = c^l_ij e_l + (d c^l_ij / dx^a) xdot^a e^_l
    [e_i, e^_j]  = c^l_ij e^_l
    [e^_i, e^_j] = 0
"""

from __future__ import annotations

import logging

import numpy as np

from src.algebroid.skew_algebroid import SectionField, SkewAlgebroid
from src.dynamics.lagrangian import Lagrangian, check_compatible, el_residual
from src.dynamics.trajectory import Trajectory
from src.expr.expression import ZERO, Variable, differentiate, mul, sum_expressions
from src.jacobi.jacobi_fields import jacobi_residual
from src.utils.errors import DimensionError
from src.variation.variations import kappa_variation

logger = logging.getLogger(__name__)

VELOCITY_BOX = (-1.0, 1.0)


def _velocity_variables(n):
    return [Variable(f"x{n + a + 1}") for a in range(n)]


def _total_derivative(e, variables, rates):
    """sum_a de/dv_a * rate_a for symbolic rates."""
    return sum_expressions(mul(differentiate(e, v), r) for v, r in zip(variables, rates))


def lift_function(L):
    """d_T L = dL/dx^a xdot^a + dL/dy^i ydot^i as a Lagrangian on the lifted algebroid"""
    n, k = L.n, L.k
    xdot = _velocity_variables(n)
    ydot = [Variable(f"y{k + i + 1}") for i in range(k)]
    expression = sum_expressions(
        [mul(d, v) for d, v in zip(L.dx, xdot)] + [mul(d, v) for d, v in zip(L.dy, ydot)]
    )
    return Lagrangian(expression, 2 * n, 2 * k, label=f"d_T({L.label})")


class LiftedAlgebroid(SkewAlgebroid):
    """Algebroid structure on T E over T M, in the frame of complete and vertical lifts."""

    def __init__(self, source: SkewAlgebroid, velocity_box=VELOCITY_BOX):
        self.source = source
        n, k = source.n, source.k
        xdot = _velocity_variables(n)

        rho = []
        for a in range(n):
            rho.append(list(source.rho[a]) + [ZERO] * k)
        for a in range(n):
            lower = [_total_derivative(source.rho[a][i], source.variables, xdot) for i in range(k)]
            rho.append(lower + list(source.rho[a]))

        c = [[[ZERO] * (2 * k) for _ in range(2 * k)] for _ in range(2 * k)]
        for l in range(k):
            for i in range(k):
                for j in range(i + 1, k):
                    c[l][i][j] = source.c[l][i][j]
                    c[k + l][i][j] = _total_derivative(source.c[l][i][j], source.variables, xdot)
            for i in range(k):
                for j in range(k):
                    c[k + l][i][k + j] = source.c[l][i][j]

        domain = list(source.domain) + [velocity_box] * n
        super().__init__(2 * n, 2 * k, rho, c, label=f"lift({source.label})", domain=domain)


def lift_algebroid(A):
    return LiftedAlgebroid(A)


# ============================================================================
# SECTIONS
# ============================================================================

def _check_section(A, X):
    if len(X.components) != A.k:
        raise DimensionError("section", f"{A.k} components", len(X.components))


def complete_lift(A, X: SectionField):
    """X^c = X^i e_i + (dX^i/dx^a xdot^a) e^_i."""
    _check_section(A, X)
    xdot = _velocity_variables(A.n)
    vertical = [_total_derivative(e, A.variables, xdot) for e in X.components]
    return SectionField(tuple(X.components) + tuple(vertical))


def vertical_lift(A, X: SectionField):
    """X^v = X^i e^_i."""
    _check_section(A, X)
    return SectionField((ZERO,) * A.k + tuple(X.components))


# ============================================================================
# LIFTED TRAJECTORIES
# ============================================================================

def lift_state(host, variation):
    """Curve (x, dx; y, dy) in the lifted algebroid, time derivatives by centered differences."""
    times = host.times
    x = np.hstack([variation.x, variation.dx])
    y = np.hstack([variation.y, variation.dy])
    if host.n:
        xdot = np.gradient(x, times, axis=0, edge_order=2)
    else:
        xdot = np.zeros((len(times), 0))
    ydot = np.gradient(y, times, axis=0, edge_order=2)
    return Trajectory(times, x, y, xdot, ydot)


def lifted_jacobi_crosscheck(A, L, host, eta, lifted=None):
    """EL residual of the lifted system along the variation generated by a Jacobi field eta.

    eta is a JacobiField or a GeneratorCurve on the host grid.  Returns the sup-norms of
    the lifted EL residual and of the direct Jacobi residual, and their pointwise gap.
    """
    check_compatible(A, L)
    generator = eta.generator() if hasattr(eta, "generator") else eta
    lifted = lifted if lifted is not None else lift_algebroid(A)
    lifted_L = lift_function(L)
    curve = lift_state(host, kappa_variation(A, host, generator))
    xiddot = np.gradient(generator.derivative, host.times, axis=0, edge_order=2)

    worst_lifted = 0.0
    worst_adm = 0.0
    worst_direct = 0.0
    worst_gap = 0.0
    k = A.k
    for m, t in enumerate(host.times):
        adm, dyn = el_residual(lifted, lifted_L, curve.state(m))
        if adm.size:
            worst_adm = max(worst_adm, float(np.max(np.abs(adm))))
        worst_lifted = max(worst_lifted, float(np.max(np.abs(dyn))))
        _, direct = jacobi_residual(A, L, host, t, generator.values[m], generator.derivative[m], xiddot[m])
        worst_direct = max(worst_direct, float(np.max(np.abs(direct))))
        worst_gap = max(worst_gap, float(np.max(np.abs(dyn[:k] - direct))))

    logger.info("lifted EL residual %.3e, direct Jacobi residual %.3e, gap %.3e",
                worst_lifted, worst_direct, worst_gap)
    return {
        "el_lifted_residual": max(worst_lifted, worst_adm),
        "lifted_admissibility_residual": worst_adm,
        "jacobi_residual": worst_direct,
        "agreement": worst_gap,
    }
