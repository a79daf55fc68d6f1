"""
GENERATOR CURVES
Purpose: Generators f(t) of admissible variations sampled on the host grid,
         with their time derivative; smooth curves or piecewise-linear hat combinations
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from src.utils.errors import DimensionError
from src.utils.quadrature import cell_of

ENDPOINT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GeneratorCurve:
    """values[m, i] = f^i(t_m); derivative[m, i] = fdot^i(t_m)."""

    times: np.ndarray
    values: np.ndarray
    derivative: np.ndarray
    piecewise_linear: bool = False

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        derivative = np.asarray(self.derivative, dtype=float).reshape(values.shape)
        if values.shape[0] != len(times):
            raise DimensionError("generator", f"{len(times)} samples", values.shape[0])
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "derivative", derivative)

    # --- constructors --------------------------------------------------------

    @classmethod
    def from_values(cls, times, values, derivative=None, piecewise_linear=False):
        """Sampled generator; a missing derivative is taken by centered differences."""
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if derivative is None:
            derivative = np.gradient(values, np.asarray(times, dtype=float), axis=0, edge_order=2)
        return cls(times, values, derivative, piecewise_linear)

    @classmethod
    def from_function(cls, times, f, fdot):
        times = np.asarray(times, dtype=float)
        values = np.array([np.atleast_1d(f(t)) for t in times], dtype=float)
        derivative = np.array([np.atleast_1d(fdot(t)) for t in times], dtype=float)
        return cls(times, values, derivative)

    @classmethod
    def zeros(cls, times, k):
        shape = (len(times), k)
        return cls(times, np.zeros(shape), np.zeros(shape))

    @classmethod
    def hat(cls, times, node, component, k):
        """Hat function at an interior node times the fiber frame vector e_component."""
        times = np.asarray(times, dtype=float)
        if not 0 < node < len(times) - 1:
            raise DimensionError("hat.node", f"an interior node in 1..{len(times) - 2}", node)
        values = np.zeros((len(times), k))
        values[node, component] = 1.0
        return cls.from_values(times, values, piecewise_linear=True)

    # --- evaluation ----------------------------------------------------------

    @property
    def k(self):
        return self.values.shape[1]

    @property
    def endpoint_vanishing(self):
        scale = max(1.0, float(np.max(np.abs(self.values))))
        ends = np.concatenate([self.values[0], self.values[-1]])
        return bool(np.max(np.abs(ends)) <= ENDPOINT_TOL * scale)

    @cached_property
    def _spline(self):
        return CubicHermiteSpline(self.times, self.values, self.derivative, axis=0)

    def at(self, t, cell=None, node=None):
        """(f, fdot) at time t; piecewise-linear curves use the slope of the cell."""
        if node is not None and not self.piecewise_linear:
            return self.values[node], self.derivative[node]
        if self.piecewise_linear:
            m = cell_of(self.times, t) if cell is None else cell
            h = self.times[m + 1] - self.times[m]
            slope = (self.values[m + 1] - self.values[m]) / h
            return self.values[m] + (t - self.times[m]) * slope, slope
        return self._spline(t), self._spline(t, 1)

    def __add__(self, other):
        return GeneratorCurve(self.times, self.values + other.values,
                              self.derivative + other.derivative,
                              self.piecewise_linear and other.piecewise_linear)

    def scaled(self, factor):
        return GeneratorCurve(self.times, factor * self.values, factor * self.derivative, self.piecewise_linear)


@dataclass(frozen=True, eq=False)
class PointwiseGenerator(GeneratorCurve):
    """Generator built from other generators, evaluated exactly at any time.

    values and derivative hold the nodal samples; evaluator(t, cell, node) returns (f, fdot)
    at quadrature points, so kinks of piecewise-linear inputs stay inside their cells.
    """

    evaluator: Callable = None

    def at(self, t, cell=None, node=None):
        return self.evaluator(t, cell, node)
