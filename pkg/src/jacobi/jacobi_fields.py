"""
JACOBI FIELDS ALONG AN EULER-LAGRANGE TRAJECTORY
Purpose: Residual of the Jacobi equation, its integration in (xi, mu) form and a
         finite-difference oracle built from a one-parameter family of EL solutions

State of the linear system: xi (generator) and the Jacobi momentum
    mu_j = d2L/dx^a dy^j rho^a_i xi^i + W_{sj} (xidot^s + c^s_{li} y^l xi^i)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from src.algebroid.checks import almost_lie_tensor
from src.dynamics.integrator import integrate_el, midpoint_residuals
from src.dynamics.lagrangian import CONDITION_LIMIT, check_compatible, solve_fiber_hessian
from src.utils.errors import DimensionError, HostResidualError
from src.variation.generators import GeneratorCurve

logger = logging.getLogger(__name__)

HOST_RESIDUAL_LIMIT = 1e-6


# ============================================================================
# LINEARIZED EULER-LAGRANGE DATA
# ============================================================================

def fiber_action(c, y):
    """Cy[k, s] = c^k_{ls} y^l, so that (Cy xi)^k = c^k_{ls} y^l xi^s."""
    return np.einsum("kls,l->ks", c, y)


def linearized_force(S, D, y):
    """(P, Q) with d(force_j) = P[j, a] dx^a + Q[j, s] dy^s along a variation."""
    P = (
        np.einsum("ksja,s,k->ja", S.dc, y, D.dy)
        + np.einsum("ksj,s,ak->ja", S.c, y, D.dxy)
        + np.einsum("bja,b->ja", S.drho, D.dx)
        + np.einsum("bj,ab->ja", S.rho, D.dxx)
    )
    Q = (
        np.einsum("ksj,k->js", S.c, D.dy)
        + np.einsum("kij,i,sk->js", S.c, y, D.dyy)
        + np.einsum("aj,as->js", S.rho, D.dxy)
    )
    return P, Q


def kappa(S, y, xi, xidot):
    """(dx, dy) = (rho xi, xidot + c(y, xi)) of a generator at one instant."""
    return S.rho @ xi, xidot + fiber_action(S.c, y) @ xi


def jacobi_momentum(S, D, y, xi, xidot):
    dx, dy = kappa(S, y, xi, xidot)
    return D.dxy.T @ dx + D.dyy @ dy


def _host_state(A, L, state):
    x, y = (np.asarray(s, dtype=float).reshape(-1) for s in state[:2])
    return x, y, A.structure_at(x), L.derivatives(x, y)


def jacobi_system_matrix(A, L, state, limit=CONDITION_LIMIT):
    """2k x 2k matrix of d/dt (xi, mu) = M (xi, mu) at one host state (x, y, ...)."""
    check_compatible(A, L)
    x, y, S, D = _host_state(A, L, state)
    k = A.k
    W_inv, condition = solve_fiber_hessian(D.dyy, np.eye(k), state=(x.tolist(), y.tolist()), limit=limit)
    Cy = fiber_action(S.c, y)
    B = D.dxy.T @ S.rho
    P, Q = linearized_force(S, D, y)
    QW = Q @ W_inv
    matrix = np.block([
        [-W_inv @ B - Cy, W_inv],
        [P @ S.rho - QW @ B, QW],
    ])
    return matrix, condition


# ============================================================================
# RESIDUAL
# ============================================================================

def jacobi_residual(A, L, host, t, xi, xidot, xiddot):
    """(AL-consistency residual, dynamical residual) of a generator at time t of the host"""
    check_compatible(A, L)
    xi, xidot, xiddot = (np.asarray(v, dtype=float).reshape(-1) for v in (xi, xidot, xiddot))
    for name, v in (("xi", xi), ("xidot", xidot), ("xiddot", xiddot)):
        if v.size != A.k:
            raise DimensionError(name, A.k, v.size)
    x, y, xdot, ydot = host.interpolate(t)
    S = A.structure_at(x)
    D = L.derivatives(x, y)
    T = L.third_derivatives(x, y)

    consistency = np.einsum("aij,i,j->a", almost_lie_tensor(S), xi, y)

    dx, dy = kappa(S, y, xi, xidot)
    dx_rate = np.einsum("aib,b,i->a", S.drho, xdot, xi) + S.rho @ xidot
    dy_rate = (
        xiddot
        + np.einsum("slib,b,l,i->s", S.dc, xdot, y, xi)
        + np.einsum("sli,l,i->s", S.c, ydot, xi)
        + np.einsum("sli,l,i->s", S.c, y, xidot)
    )
    dxy_rate = np.einsum("abj,b->aj", T.dxxy, xdot) + np.einsum("ajl,l->aj", T.dxyy, ydot)
    dyy_rate = np.einsum("bjs,b->js", T.dxyy, xdot) + np.einsum("jsl,l->js", T.dyyy, ydot)
    mu_rate = dxy_rate.T @ dx + D.dxy.T @ dx_rate + dyy_rate @ dy + D.dyy @ dy_rate

    P, Q = linearized_force(S, D, y)
    return consistency, mu_rate - (P @ dx + Q @ dy)


# ============================================================================
# INTEGRATION
# ============================================================================

@dataclass(frozen=True, eq=False)
class JacobiField:
    host: object
    xi: np.ndarray
    xidot: np.ndarray
    mu: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def times(self):
        return self.host.times

    def generator(self):
        return GeneratorCurve(self.times, self.xi, self.xidot)


def host_el_residual(A, L, host):
    """EL residual of (A, L) on the host, measured at step midpoints."""
    return float(midpoint_residuals(A, L, host)[1])


def require_el_host(A, L, host, limit=HOST_RESIDUAL_LIMIT):
    residual = host_el_residual(A, L, host)
    if residual > limit:
        raise HostResidualError(residual, limit)
    return residual


def _linear_rk4(left, mid, right, U, h):
    k1 = left @ U
    k2 = mid @ (U + 0.5 * h * k1)
    k3 = mid @ (U + 0.5 * h * k2)
    k4 = right @ (U + h * k3)
    return U + h * (k1 / 6.0 + k2 / 3.0 + k3 / 3.0 + k4 / 6.0)


class HostSystem:
    """Jacobi system matrices along a host, nodes exact and off-node states Hermite-interpolated."""

    def __init__(self, A, L, host, limit=CONDITION_LIMIT):
        self.A = A
        self.L = L
        self.host = host
        self.limit = limit
        self.max_condition = 0.0

    def _matrix(self, state):
        matrix, condition = jacobi_system_matrix(self.A, self.L, state, self.limit)
        self.max_condition = max(self.max_condition, condition)
        return matrix

    def at_node(self, m):
        return self._matrix(self.host.state(m))

    def at(self, t):
        return self._matrix(self.host.interpolate(t))

    def advance(self, t, U, tau, left=None):
        """One RK4 step of length tau from (t, U); U stacks solutions as columns."""
        left = self.at(t) if left is None else left
        return _linear_rk4(left, self.at(t + 0.5 * tau), self.at(t + tau), U, tau)

    def propagate(self, U0):
        """Solutions at every grid node, shape (M+1, 2k, columns)."""
        times = self.host.times
        U = np.asarray(U0, dtype=float)
        out = np.empty((len(times),) + U.shape)
        out[0] = U
        left = self.at_node(0)
        for m in range(len(times) - 1):
            h = times[m + 1] - times[m]
            right = self.at_node(m + 1)
            U = _linear_rk4(left, self.at(times[m] + 0.5 * h), right, U, h)
            out[m + 1] = U
            left = right
        return out


def initial_momentum(A, L, host, xi0, xidot0):
    x, y, S, D = _host_state(A, L, host.state(0))
    return jacobi_momentum(S, D, y, xi0, xidot0)


def integrate_jacobi(A, L, host, xi0, xidot0, host_limit=HOST_RESIDUAL_LIMIT, condition_limit=CONDITION_LIMIT):
    """Integrate the Jacobi equation along host from xi(t0) = xi0, xidot(t0) = xidot0"""
    check_compatible(A, L)
    xi0 = np.asarray(xi0, dtype=float).reshape(-1)
    xidot0 = np.asarray(xidot0, dtype=float).reshape(-1)
    if xi0.size != A.k or xidot0.size != A.k:
        raise DimensionError("jacobi.xi0", A.k, (xi0.size, xidot0.size))
    residual = require_el_host(A, L, host, host_limit)

    system = HostSystem(A, L, host, condition_limit)
    U0 = np.concatenate([xi0, initial_momentum(A, L, host, xi0, xidot0)])
    U = system.propagate(U0)
    k = A.k
    xi, mu = U[:, :k], U[:, k:]
    xidot = np.array([system.at_node(m)[:k] @ U[m] for m in range(len(host.times))])

    logger.info("Jacobi field integrated over %d steps (host EL residual %.2e, max cond %.2e)",
                host.steps, residual, system.max_condition)
    return JacobiField(host, xi, xidot, mu, metadata={
        "host_el_residual": residual,
        "max_condition": system.max_condition,
    })


def fundamental_solutions(A, L, host, host_limit=HOST_RESIDUAL_LIMIT, condition_limit=CONDITION_LIMIT):
    """k solutions with xi_j(t0) = 0, mu_j(t0) = e_j; returns (system, U of shape (M+1, 2k, k))."""
    check_compatible(A, L)
    require_el_host(A, L, host, host_limit)
    k = A.k
    system = HostSystem(A, L, host, condition_limit)
    U0 = np.vstack([np.zeros((k, k)), np.eye(k)])
    return system, system.propagate(U0)


def jacobi_variation(A, jf):
    """(dx, dy) of the admissible variation generated by a Jacobi field, at the grid nodes."""
    host = jf.host
    dx = np.empty((len(host.times), A.n))
    dy = np.empty((len(host.times), A.k))
    for m in range(len(host.times)):
        S = A.structure_at(host.x[m])
        dx[m], dy[m] = kappa(S, host.y[m], jf.xi[m], jf.xidot[m])
    return dx, dy


# ============================================================================
# FINITE-DIFFERENCE ORACLE
# ============================================================================

@dataclass(frozen=True, eq=False)
class VariationOracle:
    times: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    ds: float


def variation_from_generator(A, x0, y0, xi0, xidot0):
    S = A.structure_at(np.asarray(x0, dtype=float))
    return kappa(S, np.asarray(y0, dtype=float), np.asarray(xi0, dtype=float), np.asarray(xidot0, dtype=float))


def generator_from_variation(A, x0, y0, dx0, dy0):
    """(xi0, xidot0) realizing (dx0, dy0); xi0 is the least-squares preimage under rho(x0)."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    y0 = np.asarray(y0, dtype=float).reshape(-1)
    S = A.structure_at(x0)
    dx0 = np.asarray(dx0, dtype=float).reshape(-1)
    if A.n:
        xi0 = np.linalg.lstsq(S.rho, dx0, rcond=None)[0]
        miss = float(np.max(np.abs(S.rho @ xi0 - dx0)))
        if miss > 1e-9 * max(1.0, float(np.max(np.abs(dx0)))):
            logger.warning("initial base variation is not in the image of the anchor (miss %.3e)", miss)
    else:
        xi0 = np.zeros(A.k)
    xidot0 = np.asarray(dy0, dtype=float).reshape(-1) - fiber_action(S.c, y0) @ xi0
    return xi0, xidot0


def fd_prolongation_oracle(A, L, x0, y0, dx0, dy0, ds, t0, t1, h=None, steps=None):
    """Central difference (gamma(t, +ds) - gamma(t, -ds)) / (2 ds) of perturbed EL solutions"""
    x0, y0 = np.asarray(x0, dtype=float), np.asarray(y0, dtype=float)
    dx0, dy0 = np.asarray(dx0, dtype=float), np.asarray(dy0, dtype=float)
    plus = integrate_el(A, L, x0 + ds * dx0, y0 + ds * dy0, t0, t1, h=h, steps=steps)
    minus = integrate_el(A, L, x0 - ds * dx0, y0 - ds * dy0, t0, t1, h=h, steps=steps)
    return VariationOracle(
        times=plus.times,
        dx=(plus.x - minus.x) / (2.0 * ds),
        dy=(plus.y - minus.y) / (2.0 * ds),
        ds=float(ds),
    )


def jacobi_field_frame(jf):
    columns = {"t": jf.times}
    for i in range(jf.xi.shape[1]):
        columns[f"xi{i + 1}"] = jf.xi[:, i]
    for i in range(jf.mu.shape[1]):
        columns[f"mu{i + 1}"] = jf.mu[:, i]
    return pd.DataFrame(columns)
