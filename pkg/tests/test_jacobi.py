import math
import sys
import os

import numpy as np
import pytest

# Ensure src module can be imported
sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.dynamics.integrator import integrate_el
from src.dynamics.lagrangian import Lagrangian
from src.jacobi.conjugate import conjugate_scan
from src.jacobi.jacobi_fields import (
    fd_prolongation_oracle,
    generator_from_variation,
    integrate_jacobi,
    jacobi_field_frame,
    jacobi_residual,
    jacobi_system_matrix,
    jacobi_variation,
    variation_from_generator,
)
from src.systems.catalog import mechanical_lagrangian, so3, sphere2_tangent, tangent
from src.utils.errors import HostResidualError, SingularHessianError


@pytest.fixture(scope="module")
def sphere():
    entry = sphere2_tangent()
    host = integrate_el(entry.algebroid, entry.lagrangian, entry.x0, entry.y0, 0.0, math.pi, h=1e-3)
    return entry, host


def test_residual_of_trivial_fields(sphere):
    entry, host = sphere
    A, L = entry.algebroid, entry.lagrangian
    zero = np.zeros(2)

    # Test case 1: xi = 0
    for t in (0.3, 1.7, 2.9):
        consistency, dynamic = jacobi_residual(A, L, host, t, zero, zero, zero)
        np.testing.assert_allclose(consistency, 0.0)
        np.testing.assert_allclose(dynamic, 0.0)

    # Test case 2: zero Lagrangian makes every generator a Jacobi field
    L0 = Lagrangian("0", 2, 2)
    _, dynamic = jacobi_residual(A, L0, host, 1.1, [0.3, -0.2], [1.0, 2.0], [4.0, 5.0])
    np.testing.assert_allclose(dynamic, 0.0)


def test_tangential_fields_are_jacobi_fields(sphere):
    entry, host = sphere
    A, L = entry.algebroid, entry.lagrangian
    alpha, beta = 0.4, -1.3
    worst = 0.0
    for t in np.linspace(0.1, 3.0, 7):
        _, y, _, ydot = host.interpolate(t)
        xi = (alpha + beta * t) * y
        xidot = beta * y + (alpha + beta * t) * ydot
        xiddot = 2 * beta * ydot
        _, dynamic = jacobi_residual(A, L, host, t, xi, xidot, xiddot)
        worst = max(worst, np.max(np.abs(dynamic)))
    assert worst <= 1e-8


def test_consistency_residual_vanishes_on_almost_lie_algebroids(sphere):
    entry, host = sphere
    consistency, _ = jacobi_residual(entry.algebroid, entry.lagrangian, host, 2.0, [1.0, 0.5], [0.0, 0.0], [0.0, 0.0])
    np.testing.assert_allclose(consistency, 0.0, atol=1e-12)


def test_sphere_normal_field_is_sine(sphere):
    entry, host = sphere
    jf = integrate_jacobi(entry.algebroid, entry.lagrangian, host, [0.0, 0.0], [1.0, 0.0])

    # xi(t) = sin(t) times the normal frame vector
    np.testing.assert_allclose(jf.xi[:, 0], np.sin(host.times), atol=1e-8)
    np.testing.assert_allclose(jf.xi[:, 1], 0.0, atol=1e-8)
    assert np.linalg.norm(jf.xi[-1]) <= 1e-6

    # CSV frame
    df = jacobi_field_frame(jf)
    assert df.columns.tolist() == ["t", "xi1", "xi2", "mu1", "mu2"]
    assert len(df) == len(host.times)


def test_jacobi_fields_depend_linearly_on_initial_data(sphere):
    entry, host = sphere
    A, L = entry.algebroid, entry.lagrangian
    a = integrate_jacobi(A, L, host, [0.2, -0.1], [1.0, 0.5])
    b = integrate_jacobi(A, L, host, [-0.4, 0.3], [0.0, -2.0])
    alpha, beta = 1.5, -0.7
    combined = integrate_jacobi(
        A, L, host,
        alpha * np.array([0.2, -0.1]) + beta * np.array([-0.4, 0.3]),
        alpha * np.array([1.0, 0.5]) + beta * np.array([0.0, -2.0]),
    )
    np.testing.assert_allclose(combined.xi, alpha * a.xi + beta * b.xi, rtol=0, atol=1e-10)
    np.testing.assert_allclose(combined.mu, alpha * a.mu + beta * b.mu, rtol=0, atol=1e-10)


def test_system_matrix_of_flat_particle():
    entry = tangent(1)
    matrix, condition = jacobi_system_matrix(entry.algebroid, entry.lagrangian, ([0.0], [1.0]))
    # xi' = mu, mu' = 0
    np.testing.assert_allclose(matrix, [[0.0, 1.0], [0.0, 0.0]])
    assert condition == pytest.approx(1.0)


def test_rigid_body_matches_finite_difference_oracle():
    entry = so3()
    A, L = entry.algebroid, entry.lagrangian
    host = integrate_el(A, L, [], entry.y0, 0.0, 2.0, h=1e-3)
    xi0, xidot0 = np.zeros(3), np.array([0.0, 1.0, 0.0])
    jf = integrate_jacobi(A, L, host, xi0, xidot0)

    dx0, dy0 = variation_from_generator(A, [], entry.y0, xi0, xidot0)
    oracle = fd_prolongation_oracle(A, L, [], entry.y0, dx0, dy0, 1e-4, 0.0, 2.0, h=1e-3)
    _, dy = jacobi_variation(A, jf)
    assert np.max(np.abs(dy - oracle.dy)) <= 1e-4


def test_sphere_base_variation_matches_oracle(sphere):
    entry, host = sphere
    A, L = entry.algebroid, entry.lagrangian
    dx0, dy0 = np.array([0.0, 0.0]), np.array([1.0, 0.0])
    xi0, xidot0 = generator_from_variation(A, entry.x0, entry.y0, dx0, dy0)
    jf = integrate_jacobi(A, L, host, xi0, xidot0)
    oracle = fd_prolongation_oracle(A, L, entry.x0, entry.y0, dx0, dy0, 1e-4, 0.0, math.pi, h=1e-3)
    dx, _ = jacobi_variation(A, jf)
    assert np.max(np.abs(dx - oracle.dx)) <= 1e-6


def test_generator_round_trip():
    entry = sphere2_tangent()
    A = entry.algebroid
    xi0, xidot0 = np.array([0.3, -0.1]), np.array([0.5, 0.7])
    dx0, dy0 = variation_from_generator(A, entry.x0, entry.y0, xi0, xidot0)
    back = generator_from_variation(A, entry.x0, entry.y0, dx0, dy0)
    np.testing.assert_allclose(back[0], xi0, atol=1e-14)
    np.testing.assert_allclose(back[1], xidot0, atol=1e-14)


def test_host_must_solve_the_el_equation(sphere):
    entry, host = sphere
    A = entry.algebroid
    other = mechanical_lagrangian(A, entry.metric, "x1^2")
    with pytest.raises(HostResidualError):
        integrate_jacobi(A, other, host, [0.0, 0.0], [1.0, 0.0])


def test_conjugate_point_on_the_sphere():
    entry = sphere2_tangent()
    host = integrate_el(entry.algebroid, entry.lagrangian, entry.x0, entry.y0, 0.0, 3.5, h=1e-3)
    report = conjugate_scan(entry.algebroid, entry.lagrangian, host)

    assert len(report.conjugate_times) == 1
    point = report.conjugate_times[0]
    assert abs(point.t - math.pi) <= 1e-3
    assert point.multiplicity == 1

    document = report.to_dict()
    assert document["conjugate_times"][0]["multiplicity"] == 1
    assert len(document["det_trace"]) == len(host.times)


def test_no_conjugate_points_without_curvature():
    entry = tangent(2)
    host = integrate_el(entry.algebroid, entry.lagrangian, entry.x0, entry.y0, 0.0, 5.0, steps=500)
    assert conjugate_scan(entry.algebroid, entry.lagrangian, host).conjugate_times == []


def test_conjugate_scan_refuses_degenerate_lagrangian():
    entry = tangent(1)
    host = integrate_el(entry.algebroid, entry.lagrangian, entry.x0, entry.y0, 0.0, 1.0, steps=10)
    with pytest.raises(SingularHessianError):
        conjugate_scan(entry.algebroid, Lagrangian("0", 1, 1), host)
