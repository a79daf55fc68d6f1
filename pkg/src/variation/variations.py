"""
ADMISSIBLE VARIATIONS
Purpose: kappa-generated variations of an admissible curve, the first variation with
         its boundary decomposition, the second-order variation vector and the value
         of the second variation by two independent routes
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from src.algebroid.checks import jacobiator_from_structure
from src.dynamics.lagrangian import check_compatible, el_residual
from src.jacobi.jacobi_fields import (
    HOST_RESIDUAL_LIMIT,
    fiber_action,
    kappa,
    linearized_force,
    require_el_host,
)
from src.utils.errors import DimensionError, PreconditionError
from src.utils.quadrature import QuadratureRule
from src.variation.generators import GeneratorCurve, PointwiseGenerator

logger = logging.getLogger(__name__)

ROUTE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class VariationTE:
    """Infinitesimal variation (x, y, dx, dy) along the host grid."""

    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    dx: np.ndarray
    dy: np.ndarray


@dataclass(frozen=True, eq=False)
class SecondOrderVariation:
    """Eight coordinate slots of the second-order variation at every grid node.

    (x, y, dx_xi, dy_xi, dx_eta, dy_eta, ddx, ddy)
    """

    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    dx_xi: np.ndarray
    dy_xi: np.ndarray
    dx_eta: np.ndarray
    dy_eta: np.ndarray
    ddx: np.ndarray
    ddy: np.ndarray


@dataclass(frozen=True)
class SecondVariationValue:
    value: float
    alternative: float
    discrepancy: float
    rule: str


def _check_generator(A, host, g, name):
    if g.k != A.k or len(g.times) != len(host.times):
        raise DimensionError(name, f"{len(host.times)} x {A.k} samples", g.values.shape)


def _pick_rule(rule, *generators):
    if rule is not None:
        return rule
    return "gauss" if any(g is not None and g.piecewise_linear for g in generators) else "simpson"


class _HostPoint:
    """Host state, frame data and Lagrangian derivatives at one quadrature point."""

    def __init__(self, A, L, host, point):
        if point.node is not None:
            self.x, self.y, self.xdot, self.ydot = host.state(point.node)
        else:
            self.x, self.y, self.xdot, self.ydot = host.interpolate(point.t)
        self.S = A.structure_at(self.x)
        self.D = L.derivatives(self.x, self.y) if L is not None else None
        self.Cy = fiber_action(self.S.c, self.y)


# ============================================================================
# FIRST-ORDER VARIATIONS
# ============================================================================

def kappa_variation(A, host, g):
    """(x, y, rho f, fdot + c(y, f)) at every grid node"""
    _check_generator(A, host, g, "generator")
    dx = np.empty((len(host.times), A.n))
    dy = np.empty((len(host.times), A.k))
    for m in range(len(host.times)):
        S = A.structure_at(host.x[m])
        dx[m], dy[m] = kappa(S, host.y[m], g.values[m], g.derivative[m])
    return VariationTE(host.times, host.x, host.y, dx, dy)


def first_variation(A, L, host, g, rule=None):
    """Integral and boundary parts of the first variation, checked against the direct pairing"""
    check_compatible(A, L)
    _check_generator(A, host, g, "generator")
    quad = QuadratureRule(host.times, _pick_rule(rule, g))
    integrand = np.empty(len(quad))
    direct = np.empty(len(quad))
    for p, point in enumerate(quad.points):
        hp = _HostPoint(A, L, host, point)
        f, fdot = g.at(point.t, point.cell, point.node)
        _, dyn = el_residual(A, L, (hp.x, hp.y, hp.xdot, hp.ydot))
        integrand[p] = -f @ dyn
        dx, dy = kappa(hp.S, hp.y, f, fdot)
        direct[p] = hp.D.dx @ dx + hp.D.dy @ dy

    end = L.derivatives(host.x[-1], host.y[-1]).dy
    start = L.derivatives(host.x[0], host.y[0]).dy
    integral_term = float(quad.integrate(integrand))
    boundary_term = float(g.values[-1] @ end - g.values[0] @ start)
    total = integral_term + boundary_term
    direct_value = float(quad.integrate(direct))
    return {
        "integral_term": integral_term,
        "boundary_term": boundary_term,
        "total": total,
        "direct": direct_value,
        "discrepancy": abs(direct_value - total),
    }


# ============================================================================
# SECOND-ORDER VARIATIONS
# ============================================================================

def _second_slots(S, y, Cy, f, fdot, h, hdot, df, dfdot):
    dx_xi, dy_xi = S.rho @ f, fdot + Cy @ f
    dx_eta, dy_eta = S.rho @ h, hdot + Cy @ h
    ddx = np.einsum("aib,b,i->a", S.drho, dx_eta, f) + S.rho @ df
    ddy = (
        dfdot
        + Cy @ df
        + np.einsum("sli,l,i->s", S.c, dy_eta, f)
        + np.einsum("slia,a,l,i->s", S.dc, dx_eta, y, f)
    )
    return dx_xi, dy_xi, dx_eta, dy_eta, ddx, ddy


def second_variation_vector(A, host, g_xi, g_eta, delta_f=None):
    """Second-order variation generated by (delta_f, eta) over the variation of xi"""
    for name, g in (("g_xi", g_xi), ("g_eta", g_eta)):
        _check_generator(A, host, g, name)
    delta_f = delta_f if delta_f is not None else GeneratorCurve.zeros(host.times, A.k)
    _check_generator(A, host, delta_f, "delta_f")
    slots = [np.empty((len(host.times), d)) for d in (A.n, A.k, A.n, A.k, A.n, A.k)]
    for m in range(len(host.times)):
        S = A.structure_at(host.x[m])
        y = host.y[m]
        values = _second_slots(
            S, y, fiber_action(S.c, y),
            g_xi.values[m], g_xi.derivative[m],
            g_eta.values[m], g_eta.derivative[m],
            delta_f.values[m], delta_f.derivative[m],
        )
        for slot, value in zip(slots, values):
            slot[m] = value
    return SecondOrderVariation(host.times, host.x, host.y, *slots)


def second_tangent_lagrangian(D, slots):
    """Second tangent lift of L evaluated on the slots of a second-order variation."""
    dx_xi, dy_xi, dx_eta, dy_eta, ddx, ddy = slots
    hessian = np.block([[D.dxx, D.dxy], [D.dxy.T, D.dyy]])
    first = np.concatenate([dx_xi, dy_xi])
    second = np.concatenate([dx_eta, dy_eta])
    return D.dx @ ddx + D.dy @ ddy + second @ hessian @ first


def _require_endpoint_vanishing(g, field):
    if not g.endpoint_vanishing:
        raise PreconditionError(f"{field} must vanish at both endpoints")


def second_variation_value(A, L, host, g_eta, g_xi, delta_f=None, rule=None, host_limit=HOST_RESIDUAL_LIMIT):
    """Second variation of the action at (eta, xi), by the second tangent lift and by the Jacobi pairing.

    The first slot eta is unrestricted; xi and delta_f must vanish at the endpoints.
    The alternative route integrates <f, linearized force(eta)> + <fdot, mu(eta)>
    and the EL residual paired with delta_f.
    """
    check_compatible(A, L)
    require_el_host(A, L, host, host_limit)
    delta_f = delta_f if delta_f is not None else GeneratorCurve.zeros(host.times, A.k)
    for name, g in (("g_eta", g_eta), ("g_xi", g_xi), ("delta_f", delta_f)):
        _check_generator(A, host, g, name)
    _require_endpoint_vanishing(g_xi, "g_xi")
    _require_endpoint_vanishing(delta_f, "delta_f")

    quad = QuadratureRule(host.times, _pick_rule(rule, g_eta, g_xi, delta_f))
    route_lift = np.empty(len(quad))
    route_pairing = np.empty(len(quad))
    for p, point in enumerate(quad.points):
        hp = _HostPoint(A, L, host, point)
        f, fdot = g_xi.at(point.t, point.cell, point.node)
        h, hdot = g_eta.at(point.t, point.cell, point.node)
        df, dfdot = delta_f.at(point.t, point.cell, point.node)
        slots = _second_slots(hp.S, hp.y, hp.Cy, f, fdot, h, hdot, df, dfdot)
        route_lift[p] = second_tangent_lagrangian(hp.D, slots)

        _, _, dx_eta, dy_eta, _, _ = slots
        P, Q = linearized_force(hp.S, hp.D, hp.y)
        mu_eta = hp.D.dxy.T @ dx_eta + hp.D.dyy @ dy_eta
        _, dyn = el_residual(A, L, (hp.x, hp.y, hp.xdot, hp.ydot))
        route_pairing[p] = f @ (P @ dx_eta + Q @ dy_eta) + fdot @ mu_eta - df @ dyn

    value = float(quad.integrate(route_lift))
    alternative = float(quad.integrate(route_pairing))
    discrepancy = abs(value - alternative)
    scale = max(1.0, abs(value))
    if discrepancy > ROUTE_TOL * scale:
        logger.warning("second variation routes disagree: %.6e vs %.6e", value, alternative)
    return SecondVariationValue(value, alternative, discrepancy, quad.rule)


# ============================================================================
# SYMMETRY
# ============================================================================

def _swapped_at(S, xdot, h, hdot, f, fdot, df, dfdot):
    value = df + np.einsum("sij,i,j->s", S.c, h, f)
    rate = (
        dfdot
        + np.einsum("sija,a,i,j->s", S.dc, xdot, h, f)
        + np.einsum("sij,i,j->s", S.c, hdot, f)
        + np.einsum("sij,i,j->s", S.c, h, fdot)
    )
    return value, rate


def swapped_delta(A, host, g_eta, g_xi, delta_f):
    """delta_f + c(h, f): the second-order field paired with the swapped arguments.

    Evaluated at every quadrature point from the exact (per-cell) values and slopes of
    the inputs; the nodal samples only serve shape and endpoint checks.
    """
    values = np.empty((len(host.times), A.k))
    derivative = np.empty((len(host.times), A.k))
    for m in range(len(host.times)):
        values[m], derivative[m] = _swapped_at(
            A.structure_at(host.x[m]), host.xdot[m],
            g_eta.values[m], g_eta.derivative[m],
            g_xi.values[m], g_xi.derivative[m],
            delta_f.values[m], delta_f.derivative[m],
        )

    def evaluator(t, cell=None, node=None):
        x, _, xdot, _ = host.state(node) if node is not None else host.interpolate(t)
        return _swapped_at(
            A.structure_at(x), xdot,
            *g_eta.at(t, cell, node), *g_xi.at(t, cell, node), *delta_f.at(t, cell, node),
        )

    kinked = g_eta.piecewise_linear or g_xi.piecewise_linear or delta_f.piecewise_linear
    return PointwiseGenerator(host.times, values, derivative, kinked, evaluator)


def jacobiator_integral(A, L, host, g_eta, g_xi, rule=None):
    """Integral of <dL/dy, J(y, h, f)> along the host."""
    quad = QuadratureRule(host.times, _pick_rule(rule, g_eta, g_xi))
    values = np.empty(len(quad))
    for p, point in enumerate(quad.points):
        hp = _HostPoint(A, L, host, point)
        h, _ = g_eta.at(point.t, point.cell, point.node)
        f, _ = g_xi.at(point.t, point.cell, point.node)
        J = jacobiator_from_structure(hp.S)
        values[p] = np.einsum("s,sijl,i,j,l->", hp.D.dy, J, hp.y, h, f)
    return float(quad.integrate(values))


def symmetry_defect(A, L, host, g_eta, g_xi, delta_f=None, rule=None, host_limit=HOST_RESIDUAL_LIMIT):
    """d2S(eta, xi) - d2S(xi, eta) against the Jacobiator integral"""
    _require_endpoint_vanishing(g_eta, "g_eta")
    delta_f = delta_f if delta_f is not None else GeneratorCurve.zeros(host.times, A.k)
    forward = second_variation_value(A, L, host, g_eta, g_xi, delta_f, rule, host_limit)
    swapped = swapped_delta(A, host, g_eta, g_xi, delta_f)
    backward = second_variation_value(A, L, host, g_xi, g_eta, swapped, rule, host_limit)
    return {
        "defect": forward.value - backward.value,
        "jacobiator_integral": jacobiator_integral(A, L, host, g_eta, g_xi, rule),
        "forward": forward.value,
        "backward": backward.value,
    }
