"""
EULER-LAGRANGE INTEGRATOR
Purpose: Fixed-step classical Runge-Kutta 4 for regular Lagrangians on a skew algebroid
System:  xdot = rho(x) y
         W ydot = rho^T dL/dx + c^k_{ji} y^j dL/dy^k - (d2L/dx dy)^T rho(x) y
Output: Trajectory with nodal derivatives, energy trace and residual metadata
"""

from __future__ import annotations

import logging

import numpy as np

from src.dynamics.lagrangian import CONDITION_LIMIT, check_compatible, el_residual, solve_fiber_hessian
from src.dynamics.trajectory import Trajectory, uniform_grid
from src.utils.errors import ConfigError, NumericalError

logger = logging.getLogger(__name__)

METHODS = ("rk4",)


def rk4_step(f, t, h, u):
    """One classical RK4 step; u may be a vector or a matrix of stacked solutions."""
    k1 = f(t, u)
    k2 = f(t + 0.5 * h, u + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, u + 0.5 * h * k2)
    k4 = f(t + h, u + h * k3)
    return u + h * (k1 / 6.0 + k2 / 3.0 + k3 / 3.0 + k4 / 6.0)


class ELVectorField:
    """Right-hand side of the explicit EL system; records the worst Hessian condition seen."""

    def __init__(self, A, L, limit=CONDITION_LIMIT):
        check_compatible(A, L)
        self.A = A
        self.L = L
        self.limit = limit
        self.max_condition = 0.0

    def derivatives(self, x, y):
        A, L = self.A, self.L
        D = L.derivatives(x, y)
        rho = A.rho_at(x)
        c = A.c_at(x)
        xdot = rho @ y
        force = rho.T @ D.dx + np.einsum("kji,j,k->i", c, y, D.dy) - D.dxy.T @ xdot
        ydot, condition = solve_fiber_hessian(D.dyy, force, state=(x.tolist(), y.tolist()), limit=self.limit)
        self.max_condition = max(self.max_condition, condition)
        return xdot, ydot

    def __call__(self, t, state):
        n = self.A.n
        xdot, ydot = self.derivatives(state[:n], state[n:])
        return np.concatenate([xdot, ydot])


def _energy(L, x, y):
    D = L.derivatives(x, y)
    return float(D.dy @ y - D.value)


def midpoint_residuals(A, L, traj):
    """Largest admissibility and EL residuals at step midpoints of the Hermite interpolant."""
    worst_adm = 0.0
    worst_el = 0.0
    for t in 0.5 * (traj.times[:-1] + traj.times[1:]):
        adm, dyn = el_residual(A, L, traj.interpolate(t))
        if adm.size:
            worst_adm = max(worst_adm, float(np.max(np.abs(adm))))
        worst_el = max(worst_el, float(np.max(np.abs(dyn))))
    return worst_adm, worst_el


def integrate_el(A, L, x0, y0, t0, t1, h=None, steps=None, method="rk4", condition_limit=CONDITION_LIMIT):
    """Integrate the EL equations of a regular Lagrangian from (x0, y0) over [t0, t1]"""
    if method not in METHODS:
        raise ConfigError("run.method", f"unknown method {method!r} (available: {', '.join(METHODS)})")
    times = uniform_grid(t0, t1, h=h, steps=steps)
    step = float(times[1] - times[0])
    field = ELVectorField(A, L, limit=condition_limit)

    x0 = np.asarray(x0, dtype=float).reshape(-1)
    y0 = np.asarray(y0, dtype=float).reshape(-1)
    if x0.size != A.n or y0.size != A.k:
        raise ConfigError("run.initial", f"expected x0 of size {A.n} and y0 of size {A.k}")

    logger.info("integrating %s with %s over [%g, %g], %d steps of %.3e",
                L.label, A.label, times[0], times[-1], len(times) - 1, step)

    states = np.empty((len(times), A.n + A.k))
    states[0] = np.concatenate([x0, y0])
    for m in range(len(times) - 1):
        states[m + 1] = rk4_step(field, times[m], step, states[m])
        if not np.all(np.isfinite(states[m + 1])):
            raise NumericalError(f"non-finite state at t = {times[m + 1]:.6g}")

    xs, ys = states[:, :A.n], states[:, A.n:]
    xdots = np.empty_like(xs)
    ydots = np.empty_like(ys)
    energies = np.empty(len(times))
    for m in range(len(times)):
        xdots[m], ydots[m] = field.derivatives(xs[m], ys[m])
        energies[m] = _energy(L, xs[m], ys[m])

    traj = Trajectory(times, xs, ys, xdots, ydots, energy=energies)
    max_adm, max_el = midpoint_residuals(A, L, traj)
    traj.metadata.update({
        "method": method,
        "step": step,
        "steps": len(times) - 1,
        "max_condition": field.max_condition,
        "max_admissibility_residual": max_adm,
        "max_el_residual": max_el,
        "energy_drift": float(np.max(np.abs(energies - energies[0]))),
    })
    logger.info("trajectory done: energy drift %.3e, max EL residual %.3e, max cond %.3e",
                traj.metadata["energy_drift"], max_el, field.max_condition)
    return traj
