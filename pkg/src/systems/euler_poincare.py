"""
EULER-POINCARE SYSTEMS
Purpose: Residuals of the Euler-Poincare and algebra Jacobi equations on skew algebras
         (n = 0), and the Casimir diagnostic along integrated solutions
"""

import logging

import numpy as np

from src.dynamics.lagrangian import check_compatible
from src.utils.errors import PreconditionError

logger = logging.getLogger(__name__)


def _require_algebra(A):
    if A.n != 0:
        raise PreconditionError(f"{A.label} has a base of dimension {A.n}; an algebra over a point is required")


def euler_poincare_residual(A, L, a, adot):
    """Largest |d/dt dL/dy_j - c^k_ij dL/dy^k a^i| over the given samples of (a, adot)"""
    check_compatible(A, L)
    _require_algebra(A)
    a = np.atleast_2d(np.asarray(a, dtype=float))
    adot = np.atleast_2d(np.asarray(adot, dtype=float))
    c = A.c_at(np.zeros(0))
    empty = np.zeros(0)
    worst = 0.0
    for a_m, adot_m in zip(a, adot):
        D = L.derivatives(empty, a_m)
        residual = D.dyy @ adot_m - np.einsum("kij,k,i->j", c, D.dy, a_m)
        worst = max(worst, float(np.max(np.abs(residual))))
    return worst


def jacobi_g_residual(A, L, times, a, h, hdot):
    """Sup over the grid of the algebra Jacobi residual for the generator h along a.

    With J = hdot + [a, h] and P = d2L(a) J, the residual is
    dP_j/dt - <dL(a), [J, e_j]> - <P, [a, e_j]>, dP/dt by centered differences.
    """
    check_compatible(A, L)
    _require_algebra(A)
    times = np.asarray(times, dtype=float)
    a, h, hdot = (np.asarray(v, dtype=float).reshape(len(times), A.k) for v in (a, h, hdot))
    c = A.c_at(np.zeros(0))
    empty = np.zeros(0)
    J = hdot + np.einsum("kij,mi,mj->mk", c, a, h)
    derivatives = [L.derivatives(empty, a_m) for a_m in a]
    P = np.array([D.dyy @ J_m for D, J_m in zip(derivatives, J)])
    rate = np.gradient(P, times, axis=0, edge_order=2)
    worst = 0.0
    for m, D in enumerate(derivatives):
        residual = rate[m] - np.einsum("k,kij,i->j", D.dy, c, J[m]) - np.einsum("k,kij,i->j", P[m], c, a[m])
        worst = max(worst, float(np.max(np.abs(residual))))
    return worst


def casimir_drift(A, L, traj):
    """Largest change of |dL/dy|^2 along a trajectory."""
    values = np.array([
        float(np.sum(L.derivatives(traj.x[m], traj.y[m]).dy ** 2)) for m in range(len(traj.times))
    ])
    return float(np.max(np.abs(values - values[0])))
