"""
RIEMANNIAN ALGEBROIDS
Purpose: Fiber metric g on an almost-Lie algebroid, its metric torsion-free E-connection,
         curvature, and the covariant forms of the geodesic and Jacobi equations
Frame conventions:
    nabla_{e_i} e_j = Gamma^m_ij e_m            gamma[m, i, j]
    R(e_i, e_j) e_l = R^m_ijl e_m               R[m, i, j, l]
"""

from __future__ import annotations

import logging
from functools import cached_property

import numpy as np
import sympy as sp

from src.algebroid.checks import check_almost_lie, default_samples
from src.algebroid.skew_algebroid import fiber_variables
from src.expr.compiler import compile_expressions
from src.expr.expression import (
    Variable,
    as_expression,
    check_declared,
    differentiate,
    mul,
    neg,
    sum_expressions,
)
from src.expr.parser import parse
from src.utils.errors import ConfigError, DimensionError, NumericalError, PreconditionError

logger = logging.getLogger(__name__)

SYMBOLIC_INVERSE_MAX_RANK = 4
CONNECTION_TOL = 1e-9
FD_STEP = 1e-6


# ============================================================================
# METRIC
# ============================================================================

class MetricField:
    """Symmetric k x k fiber metric with entries in the base variables."""

    def __init__(self, A, g, field="metric"):
        self.A = A
        if not isinstance(g, (list, tuple)) or not all(isinstance(row, (list, tuple)) for row in g):
            raise ConfigError(field, f"expected a {A.k}x{A.k} list of rows")
        if len(g) != A.k or any(len(row) != A.k for row in g):
            raise DimensionError(field, f"{A.k}x{A.k} matrix", [len(row) for row in g])
        rows = []
        for i, row in enumerate(g):
            entries = []
            for j, value in enumerate(row):
                path = f"{field}[{i}][{j}]"
                if isinstance(value, str):
                    e = parse(value, A.variables, field=path)
                else:
                    try:
                        e = as_expression(value)
                    except (TypeError, ValueError, NumericalError) as exc:
                        raise ConfigError(path, f"not an expression: {exc}") from exc
                    check_declared(e, A.variables, field=path)
                entries.append(e)
            rows.append(tuple(entries))
        self.g = tuple(rows)
        self.field = field

    @cached_property
    def _g_fn(self):
        flat = [e for row in self.g for e in row]
        return compile_expressions(flat, self.A.variables, (self.A.k, self.A.k), "metric")

    @cached_property
    def _dg_fn(self):
        flat = [differentiate(e, v) for row in self.g for e in row for v in self.A.variables]
        return compile_expressions(flat, self.A.variables, (self.A.k, self.A.k, self.A.n), "metric_d")

    def at(self, x):
        return self._g_fn(x)

    def derivative_at(self, x):
        """dg[i, j, a] = d g_ij / d x^a."""
        return self._dg_fn(x)

    def check(self, samples=None):
        """Raise ConfigError unless g is symmetric positive definite on the samples."""
        samples = default_samples(self.A) if samples is None else samples
        for x in samples:
            G = self.at(x)
            if np.max(np.abs(G - G.T)) > 1e-12 * max(1.0, np.max(np.abs(G))):
                raise ConfigError(self.field, f"not symmetric at x = {np.asarray(x).tolist()}")
            try:
                np.linalg.cholesky(G)
            except np.linalg.LinAlgError as e:
                raise ConfigError(self.field, f"not positive definite at x = {np.asarray(x).tolist()}") from e

    def quadratic_form(self):
        """Expression 1/2 g_ij y^i y^j over (x, y)."""
        y = [Variable(v) for v in fiber_variables(self.A.k)]
        terms = [mul(mul(self.g[i][j], y[i]), y[j]) for i in range(self.A.k) for j in range(self.A.k)]
        return sum_expressions(terms) / 2


# ============================================================================
# CONNECTION
# ============================================================================

def symbolic_inverse(m):
    """Inverse of a small matrix of expressions, entries simplified."""
    matrix = sp.Matrix(m)
    try:
        inverse = matrix.inv()
    except ValueError as e:
        raise ConfigError("metric", f"singular as a symbolic matrix: {e}") from e
    return [[sp.simplify(inverse[i, j]) for j in range(matrix.cols)] for i in range(matrix.rows)]


def koszul_lowered(A, metric):
    """K[i, j, l] = 2 g(nabla_i e_j, e_l) as expressions."""
    k = A.k
    g = metric.g

    def anchor_derivative(i, e):
        return sum_expressions(mul(A.rho[a][i], differentiate(e, v)) for a, v in enumerate(A.variables))

    def bracket_pair(i, j, l):
        return sum_expressions(mul(A.c[m][i][j], g[m][l]) for m in range(k))

    K = [[[None] * k for _ in range(k)] for _ in range(k)]
    for i in range(k):
        for j in range(k):
            for l in range(k):
                K[i][j][l] = sum_expressions([
                    anchor_derivative(i, g[j][l]),
                    anchor_derivative(j, g[i][l]),
                    neg(anchor_derivative(l, g[i][j])),
                    bracket_pair(i, j, l),
                    neg(bracket_pair(j, l, i)),
                    bracket_pair(l, i, j),
                ])
    return K


class ConnectionCoeffs:
    """Frame coefficients Gamma^m_ij of an E-connection."""

    def __init__(self, A, metric, gamma=None):
        self.A = A
        self.metric = metric
        self.gamma = gamma
        self._koszul = None if gamma is not None else koszul_lowered(A, metric)

    @property
    def symbolic(self):
        return self.gamma is not None

    @cached_property
    def _gamma_fn(self):
        flat = [e for block in self.gamma for row in block for e in row]
        k = self.A.k
        return compile_expressions(flat, self.A.variables, (k, k, k), "gamma")

    @cached_property
    def _dgamma_fn(self):
        flat = [differentiate(e, v) for block in self.gamma for row in block for e in row for v in self.A.variables]
        k = self.A.k
        return compile_expressions(flat, self.A.variables, (k, k, k, self.A.n), "gamma_d")

    @cached_property
    def _koszul_fn(self):
        flat = [e for block in self._koszul for row in block for e in row]
        k = self.A.k
        return compile_expressions(flat, self.A.variables, (k, k, k), "koszul")

    def at(self, x):
        if self.symbolic:
            return self._gamma_fn(x)
        K = self._koszul_fn(x)
        G = self.metric.at(x)
        return 0.5 * np.einsum("ml,ijl->mij", np.linalg.inv(G), K)

    def derivative_at(self, x):
        """dgamma[m, i, j, a] = d Gamma^m_ij / d x^a."""
        if self.symbolic:
            return self._dgamma_fn(x)
        x = np.asarray(x, dtype=float)
        k, n = self.A.k, self.A.n
        out = np.empty((k, k, k, n))
        for a in range(n):
            step = np.zeros(n)
            step[a] = FD_STEP
            out[..., a] = (self.at(x + step) - self.at(x - step)) / (2.0 * FD_STEP)
        return out

    def covariant(self, x, u, v):
        """nabla_u v for constant-coefficient u, v: Gamma^m_ij u^i v^j."""
        return np.einsum("mij,i,j->m", self.at(x), u, v)


def levi_civita(A, metric, samples=None, tol=CONNECTION_TOL):
    """Metric torsion-free E-connection of (A, g) from the Koszul formula on the frame"""
    report = check_almost_lie(A, samples)
    if not report["passed"]:
        raise PreconditionError(f"{A.label} is not almost-Lie (residual {report['max_residual']:.3e})")
    metric.check(samples)
    k = A.k
    if k <= SYMBOLIC_INVERSE_MAX_RANK:
        K = koszul_lowered(A, metric)
        inverse = symbolic_inverse([list(row) for row in metric.g])
        gamma = [
            [
                [sp.simplify(sum_expressions(mul(inverse[m][l], K[i][j][l]) for l in range(k)) / 2)
                 for j in range(k)]
                for i in range(k)
            ]
            for m in range(k)
        ]
        connection = ConnectionCoeffs(A, metric, gamma)
    else:
        connection = ConnectionCoeffs(A, metric)
    residuals = connection_residuals(A, metric, connection, samples)
    if residuals["torsion"] > tol or residuals["metricity"] > tol:
        logger.warning("connection residuals above tolerance: torsion %.3e, metricity %.3e",
                       residuals["torsion"], residuals["metricity"])
    logger.info("Levi-Civita connection of %s (%s)", A.label, "symbolic" if connection.symbolic else "numeric")
    return connection


def connection_residuals(A, metric, connection, samples=None):
    """Largest torsion and metricity residuals over frame triples at the samples."""
    samples = default_samples(A) if samples is None else samples
    torsion = 0.0
    metricity = 0.0
    for x in samples:
        gamma = connection.at(x)
        S = A.structure_at(x)
        G = metric.at(x)
        T = gamma - np.transpose(gamma, (0, 2, 1)) - S.c
        rho_g = np.einsum("ai,jla->ijl", S.rho, metric.derivative_at(x))
        compat = rho_g - np.einsum("mij,ml->ijl", gamma, G) - np.einsum("mil,jm->ijl", gamma, G)
        torsion = max(torsion, float(np.max(np.abs(T))))
        metricity = max(metricity, float(np.max(np.abs(compat))))
    return {"torsion": torsion, "metricity": metricity, "samples": len(samples)}


# ============================================================================
# CURVATURE
# ============================================================================

class CurvatureTensor:
    """R^m_ijl evaluated pointwise from Gamma, its derivatives and the frame data."""

    def __init__(self, A, connection):
        self.A = A
        self.connection = connection

    def at(self, x):
        S = self.A.structure_at(x)
        gamma = self.connection.at(x)
        dgamma = self.connection.derivative_at(x)
        anchored = np.einsum("ai,mjla->mijl", S.rho, dgamma)
        return (
            anchored
            - np.transpose(anchored, (0, 2, 1, 3))
            + np.einsum("pjl,mip->mijl", gamma, gamma)
            - np.einsum("pil,mjp->mijl", gamma, gamma)
            - np.einsum("pij,mpl->mijl", S.c, gamma)
        )

    def apply(self, x, u, v, w):
        """R(u, v) w."""
        return np.einsum("mijl,i,j,l->m", self.at(x), u, v, w)


def curvature(A, connection):
    return CurvatureTensor(A, connection)


def sectional_curvature(metric, R, u, v, x):
    G = metric.at(x)
    u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    area = (u @ G @ u) * (v @ G @ v) - (u @ G @ v) ** 2
    if area <= 0.0:
        raise DimensionError("sectional_curvature", "linearly independent u, v", "a degenerate plane")
    return float(R.apply(x, u, v, v) @ G @ u / area)


# ============================================================================
# COVARIANT RESIDUALS ALONG CURVES
# ============================================================================

def geodesic_residual_nabla(A, metric, connection, host):
    """Sup over the grid of |ydot + Gamma(y, y)| with ydot by centered differences"""
    ydot = np.gradient(host.y, host.times, axis=0, edge_order=2)
    worst = 0.0
    for m in range(len(host.times)):
        residual = ydot[m] + connection.covariant(host.x[m], host.y[m], host.y[m])
        worst = max(worst, float(np.max(np.abs(residual))))
    return worst


def jacobi_residual_nabla(A, metric, connection, R, host, jf):
    """Sup over the grid of |D^2 xi + R(xi, y) y| along the host"""
    times = host.times
    first = np.array([
        jf.xidot[m] + connection.covariant(host.x[m], host.y[m], jf.xi[m]) for m in range(len(times))
    ])
    rate = np.gradient(first, times, axis=0, edge_order=2)
    worst = 0.0
    for m in range(len(times)):
        second = rate[m] + connection.covariant(host.x[m], host.y[m], first[m])
        residual = second + R.apply(host.x[m], jf.xi[m], host.y[m], host.y[m])
        worst = max(worst, float(np.max(np.abs(residual))))
    return worst
