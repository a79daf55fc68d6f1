"""
CONJUGATE POINT SCAN
Purpose: Propagate the k fundamental Jacobi fields with xi(t0) = 0, mu(t0) = e_j,
         watch the normalized determinant of M(t) = [xi_1(t) ... xi_k(t)] and refine
         every zero to a conjugate time with its multiplicity
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from src.dynamics.lagrangian import CONDITION_LIMIT, check_compatible, solve_fiber_hessian
from src.jacobi.jacobi_fields import HOST_RESIDUAL_LIMIT, fundamental_solutions

logger = logging.getLogger(__name__)

DEFAULT_TOL_DET = 1e-8
DEFAULT_TOL_SV = 1e-6
MAX_BISECTION = 40


@dataclass(frozen=True)
class ConjugatePoint:
    t: float
    multiplicity: int
    singular_values: tuple


@dataclass(eq=False)
class ConjugateReport:
    conjugate_times: list
    det_times: np.ndarray
    det_values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "conjugate_times": [
                {"t": p.t, "multiplicity": p.multiplicity, "singular_values": list(p.singular_values)}
                for p in self.conjugate_times
            ],
            "det_trace": [
                {"t": float(t), "det": float(d)} for t, d in zip(self.det_times, self.det_values)
            ],
            **self.metadata,
        }


def normalized_det(M):
    """det M / sigma_max^k; zero exactly when the columns are dependent."""
    sigma = np.linalg.svd(M, compute_uv=False)
    if sigma[0] == 0.0:
        return 0.0
    return float(np.linalg.det(M) / sigma[0] ** M.shape[0])


def check_regular_along(A, L, host, limit=CONDITION_LIMIT):
    """Refuse hosts along which the fiber Hessian is singular."""
    check_compatible(A, L)
    for m in range(len(host.times)):
        D = L.derivatives(host.x[m], host.y[m])
        solve_fiber_hessian(D.dyy, np.zeros(A.k), state=(host.x[m].tolist(), host.y[m].tolist()), limit=limit)


class _EndpointMap:
    """M(t) between grid nodes by a single RK4 sub-step from the last node."""

    def __init__(self, system, U, k):
        self.system = system
        self.U = U
        self.k = k
        self.times = system.host.times

    def matrix(self, t, m=None):
        if m is None:
            m = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 1))
        tau = t - self.times[m]
        if tau == 0.0:
            U = self.U[m]
        else:
            U = self.system.advance(self.times[m], self.U[m], tau)
        return U[:self.k]

    def det(self, t, m=None):
        return normalized_det(self.matrix(t, m))


def _bisect(endpoint, m, lo, hi, d_lo, max_iter):
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        d_mid = endpoint.det(mid, m)
        if d_mid == 0.0:
            return mid
        if np.sign(d_mid) == np.sign(d_lo):
            lo, d_lo = mid, d_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def conjugate_scan(A, L, host, tol_det=DEFAULT_TOL_DET, tol_sv=DEFAULT_TOL_SV, max_bisection=MAX_BISECTION,
                   host_limit=HOST_RESIDUAL_LIMIT, condition_limit=CONDITION_LIMIT):
    """Conjugate times of host(t0) along (t0, t1] with their multiplicities"""
    check_regular_along(A, L, host, condition_limit)
    system, U = fundamental_solutions(A, L, host, host_limit, condition_limit)
    k = A.k
    times = host.times
    endpoint = _EndpointMap(system, U, k)
    dets = np.array([0.0] + [normalized_det(U[m][:k]) for m in range(1, len(times))])

    roots = []
    for m in range(1, len(times) - 1):
        if dets[m] == 0.0:
            roots.append((float(times[m]), m))
        elif dets[m] * dets[m + 1] < 0.0:
            t_star = _bisect(endpoint, m, times[m], times[m + 1], dets[m], max_bisection)
            roots.append((float(t_star), m))
    if dets[-1] == 0.0:
        roots.append((float(times[-1]), len(times) - 2))

    near = []
    for m in range(1, len(times)):
        d = abs(dets[m])
        if d >= tol_det or any(abs(m - cell) <= 1 for _, cell in roots):
            continue
        if m < len(times) - 1 and d <= abs(dets[m - 1]) and d <= abs(dets[m + 1]):
            result = minimize_scalar(
                lambda t: abs(endpoint.det(t)),
                bounds=(times[m - 1], times[m + 1]),
                method="bounded",
                options={"xatol": 1e-3 * host.step},
            )
            if result.fun < tol_det:
                near.append((float(result.x), m))
        elif m == len(times) - 1:
            near.append((float(times[-1]), m))
    if near:
        logger.warning("%d near-zero(s) of det M without sign change", len(near))

    points = []
    for t_star, _ in sorted(roots + near):
        sigma = np.linalg.svd(endpoint.matrix(t_star), compute_uv=False)
        multiplicity = int(np.sum(sigma < tol_sv * sigma[0])) if sigma[0] > 0 else k
        points.append(ConjugatePoint(t_star, max(1, multiplicity), tuple(float(s) for s in sigma)))
        logger.info("conjugate time %.9f, multiplicity %d", t_star, points[-1].multiplicity)

    return ConjugateReport(points, times.copy(), dets, metadata={
        "tol_det": tol_det,
        "tol_sv": tol_sv,
        "max_bisection": max_bisection,
        "max_condition": system.max_condition,
    })
