"""
ALGEBROID CHECKS
Purpose: Sampled residuals of the almost-Lie and Lie conditions, the Jacobiator
Returns report dicts {"passed", "max_residual", ...} in the manner of check functions
"""

import itertools
import logging

import numpy as np

from src.utils.errors import DimensionError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
DEFAULT_SAMPLES_PER_AXIS = 5
MAX_LISTED_FAILURES = 5


def default_samples(A, per_axis=DEFAULT_SAMPLES_PER_AXIS):
    """Lattice of per_axis**n points over the working box of A."""
    if A.n == 0:
        return [np.zeros(0)]
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in A.domain]
    return [np.array(point) for point in itertools.product(*axes)]


# ============================================================================
# RESIDUAL TENSORS
# ============================================================================

def almost_lie_tensor(S):
    """R[a, i, j] = rho^a_k c^k_{ij} - (d_b rho^a_j rho^b_i - d_b rho^a_i rho^b_j)."""
    rho_c = np.einsum("ak,kij->aij", S.rho, S.c)
    commutator = np.einsum("ajb,bi->aij", S.drho, S.rho) - np.einsum("aib,bj->aij", S.drho, S.rho)
    return rho_c - commutator


def jacobiator_from_structure(S):
    """J[s, i, j, l] = J(e_i, e_j, e_l)^s, the cyclic sum of double frame brackets."""
    c, dc, rho = S.c, S.dc, S.rho
    cc = (
        np.einsum("sml,mij->sijl", c, c)
        + np.einsum("smi,mjl->sijl", c, c)
        + np.einsum("smj,mli->sijl", c, c)
    )
    anchored = (
        np.einsum("sija,al->sijl", dc, rho)
        + np.einsum("sjla,ai->sijl", dc, rho)
        + np.einsum("slia,aj->sijl", dc, rho)
    )
    return cc - anchored


def jacobiator_tensor(A, x):
    return jacobiator_from_structure(A.structure_at(x))


def jacobiator(A, a, h, f, at):
    """J(a, h, f) = [[a,h],f] - [a,[h,f]] + [h,[a,f]] for constant coefficient triples."""
    a, h, f = (np.asarray(v, dtype=float).reshape(-1) for v in (a, h, f))
    for name, v in (("a", a), ("h", h), ("f", f)):
        if v.size != A.k:
            raise DimensionError(name, A.k, v.size)
    at = getattr(at, "x", at)
    return np.einsum("sijl,i,j,l->s", jacobiator_tensor(A, at), a, h, f)


# ============================================================================
# CHECK FUNCTIONS
# ============================================================================

def _scan(A, samples, residual_fn, index_filter, tol):
    worst = 0.0
    worst_point = None
    failures = set()
    for x in samples:
        residual = np.abs(residual_fn(A.structure_at(x)))
        if residual.size == 0:
            continue
        value = float(residual.max())
        if value > worst or worst_point is None:
            worst, worst_point = value, np.asarray(x, dtype=float)
        for index in zip(*np.nonzero(residual > tol)):
            if index_filter(index):
                failures.add(tuple(int(i) + 1 for i in index))
    return {
        "passed": bool(worst <= tol),
        "max_residual": worst,
        "tol": tol,
        "samples": len(samples),
        "worst_point": [] if worst_point is None else worst_point.tolist(),
        "failures": sorted(failures)[:MAX_LISTED_FAILURES],
    }


def check_almost_lie(A, samples=None, tol=DEFAULT_TOL):
    """Check that the anchor maps frame brackets to commutators of vector fields"""
    samples = default_samples(A) if samples is None else samples
    report = _scan(A, samples, almost_lie_tensor, lambda idx: idx[1] < idx[2], tol)
    logger.info("almost-Lie check on %s: max residual %.3e (%s)",
                A.label, report["max_residual"], "pass" if report["passed"] else "fail")
    return report


def check_lie(A, samples=None, tol=DEFAULT_TOL):
    """Check the Jacobi identity on frame triples; passes only if almost-Lie passes too"""
    samples = default_samples(A) if samples is None else samples
    almost_lie = check_almost_lie(A, samples, tol)
    report = _scan(A, samples, jacobiator_from_structure,
                   lambda idx: idx[1] < idx[2] < idx[3], tol)
    report["jacobi_passed"] = report["passed"]
    report["passed"] = bool(almost_lie["passed"] and report["passed"])
    report["almost_lie"] = almost_lie
    logger.info("Lie check on %s: max Jacobiator %.3e (%s)",
                A.label, report["max_residual"], "pass" if report["passed"] else "fail")
    return report
