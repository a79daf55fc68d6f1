"""
SECOND VARIATION MATRIX
Purpose: Assemble the second variation over the hat-function basis of endpoint-vanishing
         generators, its Jacobiator pairing, null space and index diagnostics
Basis: phi_(m, i) = hat at interior node m times the frame vector e_i, index (m - 1) * k + i
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from src.algebroid.checks import jacobiator_from_structure
from src.dynamics.lagrangian import check_compatible
from src.jacobi.jacobi_fields import HOST_RESIDUAL_LIMIT, fiber_action, require_el_host
from src.utils.errors import DimensionError, NumericalError
from src.utils.quadrature import QuadratureRule
from src.variation.generators import GeneratorCurve

logger = logging.getLogger(__name__)

DEFAULT_NULL_TOL = 1e-7


@dataclass(eq=False)
class SecondVariationMatrix:
    B: np.ndarray
    times: np.ndarray
    k: int
    metadata: dict = field(default_factory=dict)

    @property
    def size(self):
        return self.B.shape[0]

    @property
    def cells(self):
        return len(self.times) - 1

    def symmetry_defect_norm(self):
        scale = np.linalg.norm(self.B, ord=np.inf)
        if scale == 0.0:
            return 0.0
        return float(np.linalg.norm(self.B - self.B.T, ord=np.inf) / scale)

    def generator(self, coefficients):
        """Piecewise-linear generator with the given basis coefficients."""
        values = np.zeros((len(self.times), self.k))
        values[1:-1] = np.asarray(coefficients, dtype=float).reshape(-1, self.k)
        return GeneratorCurve.from_values(self.times, values, piecewise_linear=True)


@dataclass(eq=False)
class NullSpace:
    dimension: int
    singular_values: np.ndarray
    basis: np.ndarray
    generators: list
    tol: float


# ============================================================================
# DENSITY
# ============================================================================

def density_matrix(S, D, y):
    """K with second variation density [h; hdot]^T K [f; fdot] at one host point (delta_f = 0)."""
    n, k = S.rho.shape
    Cy = fiber_action(S.c, y)
    T = np.block([[S.rho, np.zeros((n, k))], [Cy, np.eye(k)]])
    H = np.block([[D.dxx, D.dxy], [D.dxy.T, D.dyy]])
    K = T.T @ H @ T
    G = np.einsum("l,lij->ij", D.dy, S.c)
    anchor_term = np.einsum("d,dia,aj->ji", D.dx, S.drho, S.rho)
    bracket_term = np.einsum("s,slia,am,l->mi", D.dy, S.dc, S.rho, y)
    K[:k, :k] += anchor_term + Cy.T @ G + bracket_term
    K[k:, :k] += G
    return K


def _local_basis(point, times):
    """Values and slopes of the two hat pieces living on the cell of a quadrature point."""
    m = point.cell
    h = times[m + 1] - times[m]
    s = (point.t - times[m]) / h
    return np.array([1.0 - s, s]), np.array([-1.0 / h, 1.0 / h])


def _assemble(times, k, local_density):
    """Sum of local 2x2 blocks of k x k matrices over cells; boundary nodes are dropped."""
    quad = QuadratureRule(times, "gauss")
    size = k * (len(times) - 2)
    B = np.zeros((size, size))
    for p, point in enumerate(quad.points):
        phi, dphi = _local_basis(point, times)
        K = quad.weights[p] * local_density(point)
        for alpha in range(2):
            row_node = point.cell + alpha
            if not 0 < row_node < len(times) - 1:
                continue
            Phi_a = np.vstack([phi[alpha] * np.eye(k), dphi[alpha] * np.eye(k)])
            r = (row_node - 1) * k
            for beta in range(2):
                col_node = point.cell + beta
                if not 0 < col_node < len(times) - 1:
                    continue
                Phi_b = np.vstack([phi[beta] * np.eye(k), dphi[beta] * np.eye(k)])
                c = (col_node - 1) * k
                B[r:r + k, c:c + k] += Phi_a.T @ K @ Phi_b
    return B


def _check_grid(host):
    if len(host.times) < 3:
        raise DimensionError("run.steps", ">= 2 cells for an interior node", len(host.times) - 1)


def second_variation_matrix(A, L, host, host_limit=HOST_RESIDUAL_LIMIT):
    """B[p, q] = second variation at (eta = phi_p, xi = phi_q) with delta_f = 0"""
    check_compatible(A, L)
    _check_grid(host)
    residual = require_el_host(A, L, host, host_limit)

    def local_density(point):
        x, y, _, _ = host.interpolate(point.t)
        return density_matrix(A.structure_at(x), L.derivatives(x, y), y)

    B = _assemble(host.times, A.k, local_density)
    if not np.all(np.isfinite(B)):
        raise NumericalError("second variation matrix has non-finite entries")
    matrix = SecondVariationMatrix(B, host.times.copy(), A.k, metadata={
        "basis": "hat",
        "M": len(host.times) - 1,
        "k": A.k,
        "quadrature": "gauss3",
        "delta_f": "zero",
        "host_el_residual": residual,
    })
    matrix.metadata["symmetry_defect_norm"] = matrix.symmetry_defect_norm()
    logger.info("second variation matrix %dx%d assembled, symmetry defect %.3e",
                matrix.size, matrix.size, matrix.metadata["symmetry_defect_norm"])
    return matrix


def jacobiator_pairing_matrix(A, L, host):
    """Integrals of <dL/dy, J(y, phi_p, phi_q)> over the hat basis."""
    check_compatible(A, L)
    _check_grid(host)
    k = A.k

    def local_density(point):
        x, y, _, _ = host.interpolate(point.t)
        J = jacobiator_from_structure(A.structure_at(x))
        pairing = np.einsum("s,slij,l->ij", L.derivatives(x, y).dy, J, y)
        K = np.zeros((2 * k, 2 * k))
        K[:k, :k] = pairing
        return K

    return _assemble(host.times, k, local_density)


# ============================================================================
# NULL SPACE AND INDEX
# ============================================================================

def null_space(matrix, tol=DEFAULT_NULL_TOL):
    """Generators xi with B xi = 0, by singular values below tol * sigma_max"""
    _, sigma, vt = np.linalg.svd(matrix.B)
    cutoff = tol * sigma[0] if sigma.size else 0.0
    mask = sigma < cutoff
    basis = vt[mask].T
    generators = [matrix.generator(basis[:, j]) for j in range(basis.shape[1])]
    logger.info("null space dimension %d (smallest ratio %.3e)",
                basis.shape[1], sigma[-1] / sigma[0] if sigma.size and sigma[0] else 0.0)
    return NullSpace(int(basis.shape[1]), sigma, basis, generators, tol)


def morse_index(matrix, tol=DEFAULT_NULL_TOL):
    """Number of eigenvalues of the symmetric part below -tol * max |eigenvalue|."""
    eigenvalues = np.linalg.eigvalsh(0.5 * (matrix.B + matrix.B.T))
    if eigenvalues.size == 0:
        return 0
    scale = float(np.max(np.abs(eigenvalues)))
    return int(np.sum(eigenvalues < -tol * scale))


def second_variation_frame(matrix):
    labels = [f"n{m}_e{i + 1}" for m in range(1, matrix.cells) for i in range(matrix.k)]
    return pd.DataFrame(matrix.B, columns=labels)


def second_variation_metadata(matrix, null=None, index=None):
    metadata = dict(matrix.metadata)
    metadata["symmetry_defect_norm"] = matrix.symmetry_defect_norm()
    if null is not None:
        metadata["null_dimension"] = null.dimension
        metadata["null_tol"] = null.tol
        metadata["smallest_singular_values"] = [float(s) for s in null.singular_values[-min(3, null.singular_values.size):]]
    if index is not None:
        metadata["morse_index"] = index
    return metadata
