"""
TRAJECTORIES
Purpose: Time-sampled admissible curves on a uniform grid, their cubic Hermite
         interpolant and their CSV form (t, x1..xn, y1..yk, energy)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import pandas as pd
from scipy.interpolate import CubicHermiteSpline

from src.utils.errors import DimensionError


def uniform_grid(t0, t1, h=None, steps=None):
    """Uniform grid on [t0, t1]; h is rounded so that it divides the interval."""
    t0, t1 = float(t0), float(t1)
    if not t1 > t0:
        raise DimensionError("run.t1", f"> t0 = {t0}", t1)
    if steps is None:
        if h is None or h <= 0:
            raise DimensionError("run.h", "a positive step", h)
        steps = max(1, int(np.ceil((t1 - t0) / h - 1e-9)))
    if int(steps) < 1:
        raise DimensionError("steps", ">= 1", steps)
    return np.linspace(t0, t1, int(steps) + 1)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    xdot: np.ndarray
    ydot: np.ndarray
    energy: np.ndarray = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        m = len(self.times)
        for name in ("x", "y", "xdot", "ydot"):
            array = np.asarray(getattr(self, name), dtype=float)
            if array.ndim == 1:
                array = array.reshape(m, -1)
            if array.shape[0] != m:
                raise DimensionError(name, f"{m} rows", array.shape[0])
            object.__setattr__(self, name, array)
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        if self.energy is not None:
            object.__setattr__(self, "energy", np.asarray(self.energy, dtype=float))

    @property
    def n(self):
        return self.x.shape[1]

    @property
    def k(self):
        return self.y.shape[1]

    @property
    def steps(self):
        return len(self.times) - 1

    @property
    def step(self):
        return float(self.times[1] - self.times[0])

    @property
    def t0(self):
        return float(self.times[0])

    @property
    def t1(self):
        return float(self.times[-1])

    def state(self, m):
        return self.x[m], self.y[m], self.xdot[m], self.ydot[m]

    @cached_property
    def _x_spline(self):
        if self.n == 0:
            return None
        return CubicHermiteSpline(self.times, self.x, self.xdot, axis=0)

    @cached_property
    def _y_spline(self):
        return CubicHermiteSpline(self.times, self.y, self.ydot, axis=0)

    def interpolate(self, t):
        """(x, y, xdot, ydot) at time t from the cubic Hermite interpolant."""
        if self.n == 0:
            x = xdot = np.zeros(0)
        else:
            x = self._x_spline(t)
            xdot = self._x_spline(t, 1)
        return x, self._y_spline(t), xdot, self._y_spline(t, 1)


def trajectory_frame(traj):
    columns = {"t": traj.times}
    for a in range(traj.n):
        columns[f"x{a + 1}"] = traj.x[:, a]
    for i in range(traj.k):
        columns[f"y{i + 1}"] = traj.y[:, i]
    columns["energy"] = traj.energy if traj.energy is not None else np.full(len(traj.times), np.nan)
    return pd.DataFrame(columns)
