"""
QUADRATURE ON THE SHARED TIME GRID
Rules: "simpson" (composite Simpson on the grid nodes)
       "gauss"   (3-point Gauss-Legendre inside every grid cell)
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from src.utils.errors import ConfigError

RULES = ("simpson", "gauss")
GAUSS_ORDER = 3


@dataclass(frozen=True, eq=False)
class QuadraturePoint:
    t: float
    cell: int
    node: int = None


class QuadratureRule:
    """Sample points of a rule over a grid and the matching weighted sum."""

    def __init__(self, times, rule="simpson"):
        if rule not in RULES:
            raise ConfigError("quadrature", f"unknown rule {rule!r} (available: {', '.join(RULES)})")
        self.times = np.asarray(times, dtype=float)
        self.rule = rule
        cells = len(self.times) - 1
        if rule == "simpson":
            self.points = [
                QuadraturePoint(float(t), min(m, cells - 1), m) for m, t in enumerate(self.times)
            ]
            self.weights = None
        else:
            nodes, weights = np.polynomial.legendre.leggauss(GAUSS_ORDER)
            left, right = self.times[:-1], self.times[1:]
            half = 0.5 * (right - left)
            mid = 0.5 * (right + left)
            self.points = [
                QuadraturePoint(float(mid[m] + half[m] * s), m)
                for m in range(cells)
                for s in nodes
            ]
            self.weights = np.concatenate([half[m] * weights for m in range(cells)])

    def __len__(self):
        return len(self.points)

    def integrate(self, values):
        """Integrate sampled values (first axis runs over the points)."""
        values = np.asarray(values, dtype=float)
        if self.rule == "simpson":
            return simpson(values, x=self.times, axis=0)
        return np.tensordot(self.weights, values, axes=1)


def cell_of(times, t):
    """Index of the grid cell containing t (the last cell for t == t1)."""
    return int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2))
