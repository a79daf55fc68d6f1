"""
SYSTEM CATALOG
Purpose: Built-in algebroids with their default Lagrangian, metric, working box and
         initial state, addressable by name: "tangent(n)", "so3", "heisenberg3",
         "abelian(k)", "skew-nonlie3", "sphere2-tangent" and "lift(<name>)"
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from src.algebroid.skew_algebroid import SkewAlgebroid
from src.dynamics.lagrangian import Lagrangian
from src.expr.expression import sub
from src.expr.parser import parse
from src.lift.tangent_lift import lift_algebroid, lift_function
from src.systems.riemannian import MetricField
from src.utils.errors import ConfigError

RIGID_BODY_INERTIA = (1.0, 2.0, 3.0)
SPHERE_BOX = ((0.2, math.pi - 0.2), (0.0, 2.0 * math.pi))

_PARAMETRIC = re.compile(r"^(tangent|abelian)\((\d+)\)$")
_LIFT = re.compile(r"^lift\((.+)\)$")


@dataclass(eq=False)
class CatalogEntry:
    name: str
    algebroid: SkewAlgebroid
    lagrangian: Lagrangian
    metric: list = None
    x0: np.ndarray = None
    y0: np.ndarray = None
    description: str = ""
    lie: bool = True
    extras: dict = field(default_factory=dict)

    def metric_field(self):
        if self.metric is None:
            return None
        return MetricField(self.algebroid, self.metric)


def _zeros_structure(k):
    return [[[0.0] * k for _ in range(k)] for _ in range(k)]


def _identity(n):
    return [[1.0 if a == i else 0.0 for i in range(n)] for a in range(n)]


def _diagonal(values):
    k = len(values)
    return [[values[i] if i == j else 0.0 for j in range(k)] for i in range(k)]


def kinetic_lagrangian(A, metric, label=""):
    """1/2 g_ij(x) y^i y^j."""
    metric = metric if isinstance(metric, MetricField) else MetricField(A, metric)
    return Lagrangian(metric.quadratic_form(), A.n, A.k, label=label or "kinetic")


def mechanical_lagrangian(A, metric, potential, label=""):
    """1/2 g_ij(x) y^i y^j - V(x)."""
    metric = metric if isinstance(metric, MetricField) else MetricField(A, metric)
    V = parse(potential, A.variables, field="potential") if isinstance(potential, str) else potential
    return Lagrangian(sub(metric.quadratic_form(), V), A.n, A.k, label=label or "mechanical")


# ============================================================================
# ENTRIES
# ============================================================================

def tangent(n):
    """T R^n: identity anchor, zero brackets, free particle."""
    if n < 1:
        raise ConfigError("algebroid", "tangent(n) needs n >= 1")
    A = SkewAlgebroid(n, n, _identity(n), _zeros_structure(n), label=f"tangent({n})")
    metric = _identity(n)
    y0 = np.zeros(n)
    y0[0] = 1.0
    return CatalogEntry(f"tangent({n})", A, kinetic_lagrangian(A, metric), metric,
                        np.zeros(n), y0, "tangent bundle of R^n")


def so3(inertia=RIGID_BODY_INERTIA):
    """so(3) with [e_i, e_j] = eps_ijk e_k; rigid body with principal moments inertia."""
    c = _zeros_structure(3)
    c[2][0][1] = 1.0
    c[0][1][2] = 1.0
    c[1][2][0] = 1.0
    A = SkewAlgebroid(0, 3, [], _antisymmetric(c), label="so3")
    metric = _diagonal(list(inertia))
    return CatalogEntry("so3", A, kinetic_lagrangian(A, metric, "rigid body"), metric,
                        np.zeros(0), np.array([1.0, 0.1, 0.1]), "rigid body on so(3)")


def heisenberg3():
    c = _zeros_structure(3)
    c[2][0][1] = 1.0
    A = SkewAlgebroid(0, 3, [], c, label="heisenberg3")
    metric = _identity(3)
    return CatalogEntry("heisenberg3", A, kinetic_lagrangian(A, metric), metric,
                        np.zeros(0), np.array([1.0, 0.5, 0.2]), "Heisenberg algebra")


def abelian(k):
    if k < 1:
        raise ConfigError("algebroid", "abelian(k) needs k >= 1")
    A = SkewAlgebroid(0, k, [], _zeros_structure(k), label=f"abelian({k})")
    metric = _identity(k)
    return CatalogEntry(f"abelian({k})", A, kinetic_lagrangian(A, metric), metric,
                        np.zeros(0), np.ones(k), "abelian algebra")


def skew_nonlie3():
    """[e1, e2] = e3, [e2, e3] = e1, [e3, e1] = e1; J(e1, e2, e3) = e3."""
    c = _zeros_structure(3)
    c[2][0][1] = 1.0
    c[0][1][2] = 1.0
    c[0][2][0] = 1.0
    A = SkewAlgebroid(0, 3, [], _antisymmetric(c), label="skew-nonlie3")
    metric = _identity(3)
    return CatalogEntry("skew-nonlie3", A, kinetic_lagrangian(A, metric), metric,
                        np.zeros(0), np.array([1.0, 0.5, 0.25]), "skew algebra without Jacobi identity",
                        lie=False)


def sphere2_tangent():
    """T S^2 in (theta, phi), round metric diag(1, sin(theta)^2); equatorial unit-speed start."""
    A = SkewAlgebroid(2, 2, _identity(2), _zeros_structure(2), label="sphere2-tangent", domain=SPHERE_BOX)
    metric = [["1", "0"], ["0", "sin(x1)^2"]]
    return CatalogEntry("sphere2-tangent", A, kinetic_lagrangian(A, metric, "round sphere"), metric,
                        np.array([math.pi / 2, 0.0]), np.array([0.0, 1.0]), "unit 2-sphere")


def _antisymmetric(c):
    """Fill the upper entries from whichever of c[i][j][l], c[i][l][j] was given."""
    k = len(c)
    out = _zeros_structure(k)
    for i in range(k):
        for j in range(k):
            for l in range(j + 1, k):
                out[i][j][l] = c[i][j][l] - c[i][l][j]
                out[i][l][j] = -out[i][j][l]
    return out


def lift(entry):
    """Tangent lift of a catalog entry, started at zero velocity variation."""
    A = lift_algebroid(entry.algebroid)
    return CatalogEntry(
        f"lift({entry.name})", A, lift_function(entry.lagrangian), None,
        np.concatenate([entry.x0, np.zeros(entry.algebroid.n)]),
        np.concatenate([entry.y0, np.zeros(entry.algebroid.k)]),
        f"tangent lift of {entry.description}", lie=entry.lie,
    )


_FIXED = {
    "so3": so3,
    "heisenberg3": heisenberg3,
    "skew-nonlie3": skew_nonlie3,
    "sphere2-tangent": sphere2_tangent,
}
_FAMILIES = {"tangent": tangent, "abelian": abelian}


def catalog_names():
    return ["tangent(n)", "abelian(k)"] + sorted(_FIXED) + ["lift(<name>)"]


def get_entry(name):
    """Resolve a catalog name, including parametric and lifted entries"""
    name = name.strip()
    lifted = _LIFT.match(name)
    if lifted:
        return lift(get_entry(lifted.group(1)))
    parametric = _PARAMETRIC.match(name)
    if parametric:
        return _FAMILIES[parametric.group(1)](int(parametric.group(2)))
    if name in _FIXED:
        return _FIXED[name]()
    raise ConfigError("algebroid", f"unknown catalog entry {name!r} (known: {', '.join(catalog_names())})")
