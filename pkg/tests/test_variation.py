import math
import sys
import os

import numpy as np
import pytest

# Ensure src module can be imported
sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.dynamics.integrator import integrate_el
from src.utils.errors import DimensionError, PreconditionError
from src.utils.quadrature import QuadratureRule, cell_of
from src.systems.catalog import skew_nonlie3, so3, sphere2_tangent, tangent
from src.variation.generators import GeneratorCurve
from src.variation.second_variation import (
    density_matrix,
    jacobiator_pairing_matrix,
    morse_index,
    null_space,
    second_variation_frame,
    second_variation_matrix,
    second_variation_metadata,
)
from src.variation.variations import (
    first_variation,
    kappa_variation,
    second_variation_value,
    swapped_delta,
    symmetry_defect,
)

SYSTEMS = {
    "tangent(2)": (tangent, (0.0, 2.0)),
    "so3": (so3, (0.0, 2.0)),
    "sphere2-tangent": (sphere2_tangent, (0.0, 2.0)),
}


def host_for(factory, interval, steps):
    entry = factory() if factory is not tangent else factory(2)
    host = integrate_el(entry.algebroid, entry.lagrangian, entry.x0, entry.y0, *interval, steps=steps)
    return entry, host


def sine_generator(times, k, rng, modes=3, free=False):
    """Random sine series in every component; free=True adds a linear part with nonzero endpoints."""
    t0, t1 = times[0], times[-1]
    span = t1 - t0
    a = rng.normal(size=(modes, k))
    b = rng.normal(size=(2, k)) if free else np.zeros((2, k))
    freq = np.pi * np.arange(1, modes + 1) / span

    def f(t):
        s = t - t0
        return np.sin(freq * s) @ a + b[0] + b[1] * s

    def fdot(t):
        s = t - t0
        return (freq * np.cos(freq * s)) @ a + b[1]

    return GeneratorCurve.from_function(times, f, fdot)


def test_quadrature_rules():
    times = np.linspace(0.0, 2.0, 11)
    cubic = lambda t: 3 * t ** 3 - t + 1

    # Test case 1: Simpson on an even number of cells is exact for cubics
    simpson = QuadratureRule(times, "simpson")
    assert simpson.integrate([cubic(p.t) for p in simpson.points]) == pytest.approx(12.0)

    # Test case 2: 3-point Gauss is exact for quintics
    gauss = QuadratureRule(times, "gauss")
    assert len(gauss) == 30
    assert gauss.integrate([p.t ** 5 for p in gauss.points]) == pytest.approx(2.0 ** 6 / 6)

    # Test case 3: cell lookup clamps the right end
    assert cell_of(times, 2.0) == 9
    assert cell_of(times, 0.25) == 1


def test_generator_curves():
    times = np.linspace(0.0, 1.0, 5)

    # Test case 1: hat functions are piecewise linear and vanish at the ends
    hat = GeneratorCurve.hat(times, 2, 1, 3)
    assert hat.piecewise_linear and hat.endpoint_vanishing
    value, slope = hat.at(0.4)
    np.testing.assert_allclose(value, [0.0, 0.6, 0.0])
    np.testing.assert_allclose(slope, [0.0, 4.0, 0.0])

    # Test case 2: boundary nodes cannot carry a hat
    with pytest.raises(DimensionError):
        GeneratorCurve.hat(times, 0, 0, 3)

    # Test case 3: smooth generators are evaluated by their Hermite interpolant
    g = GeneratorCurve.from_function(times, lambda t: [t ** 2], lambda t: [2 * t])
    value, slope = g.at(0.6)
    assert value[0] == pytest.approx(0.36)
    assert slope[0] == pytest.approx(1.2)
    assert not g.endpoint_vanishing


def test_kappa_variation_on_an_algebra():
    entry, host = host_for(so3, (0.0, 1.0), 100)
    g = GeneratorCurve.from_function(host.times, lambda t: [1.0, 0.0, 0.0], lambda t: [0.0, 0.0, 0.0])
    variation = kappa_variation(entry.algebroid, host, g)
    assert variation.dx.shape == (101, 0)
    # dy = [y, e1] = y x e1 for a constant generator
    np.testing.assert_allclose(variation.dy[0], np.cross(entry.y0, [1.0, 0.0, 0.0]), atol=1e-14)


@pytest.mark.parametrize("name", sorted(SYSTEMS))
def test_first_variation_decomposition(name):
    factory, interval = SYSTEMS[name]
    entry, host = host_for(factory, interval, 1000)
    A, L = entry.algebroid, entry.lagrangian
    rng = np.random.default_rng(11)
    for _ in range(10):
        # Test case 1: endpoint-vanishing generators give a stationary action
        g = sine_generator(host.times, A.k, rng)
        result = first_variation(A, L, host, g)
        assert abs(result["direct"]) <= 1e-8 * max(1.0, float(np.max(np.abs(g.values))))
        assert abs(result["boundary_term"]) <= 1e-10

        # Test case 2: free endpoints leave only the boundary term
        g = sine_generator(host.times, A.k, rng, free=True)
        result = first_variation(A, L, host, g)
        scale = max(1.0, abs(result["boundary_term"]))
        assert abs(result["direct"] - result["boundary_term"]) <= 1e-6 * scale
        assert abs(result["integral_term"]) <= 1e-6 * scale


@pytest.mark.parametrize("name", sorted(SYSTEMS))
def test_second_variation_independent_of_delta_f(name):
    factory, interval = SYSTEMS[name]
    entry, host = host_for(factory, interval, 1000)
    A, L = entry.algebroid, entry.lagrangian
    rng = np.random.default_rng(5)
    g_eta = sine_generator(host.times, A.k, rng)
    g_xi = sine_generator(host.times, A.k, rng)

    values = []
    for _ in range(3):
        delta_f = sine_generator(host.times, A.k, rng)
        result = second_variation_value(A, L, host, g_eta, g_xi, delta_f)
        assert result.discrepancy <= 1e-6 * max(1.0, abs(result.value))
        values.append(result.value)
    base = second_variation_value(A, L, host, g_eta, g_xi).value
    assert max(abs(v - base) for v in values) <= 1e-6 * max(1.0, abs(base))


def test_second_variation_preconditions():
    entry, host = host_for(so3, (0.0, 1.0), 1000)
    rng = np.random.default_rng(0)
    free = sine_generator(host.times, 3, rng, free=True)
    vanishing = sine_generator(host.times, 3, rng)

    # Test case 1: xi must vanish at the endpoints
    with pytest.raises(PreconditionError):
        second_variation_value(entry.algebroid, entry.lagrangian, host, vanishing, free)

    # Test case 2: eta may be free
    result = second_variation_value(entry.algebroid, entry.lagrangian, host, free, vanishing)
    assert result.rule == "simpson"


def test_symmetry_defect_is_the_jacobiator_integral():
    entry, host = host_for(skew_nonlie3, (0.0, 1.0), 400)
    A, L = entry.algebroid, entry.lagrangian
    rng = np.random.default_rng(2024)
    for _ in range(10):
        g_eta = sine_generator(host.times, 3, rng)
        g_xi = sine_generator(host.times, 3, rng)
        result = symmetry_defect(A, L, host, g_eta, g_xi)
        scale = max(abs(result["jacobiator_integral"]), abs(result["forward"]), abs(result["backward"]))
        assert abs(result["defect"] - result["jacobiator_integral"]) <= 1e-4 * scale


def test_second_variation_symmetric_on_lie_algebra():
    entry, host = host_for(so3, (0.0, 1.0), 200)
    matrix = second_variation_matrix(entry.algebroid, entry.lagrangian, host)
    assert matrix.size == 199 * 3
    assert matrix.symmetry_defect_norm() <= 1e-6


def test_antisymmetric_part_is_the_jacobiator_pairing():
    entry, host = host_for(skew_nonlie3, (0.0, 1.0), 200)
    A, L = entry.algebroid, entry.lagrangian
    matrix = second_variation_matrix(A, L, host)
    pairing = jacobiator_pairing_matrix(A, L, host)
    assert np.linalg.norm(pairing, ord=np.inf) > 0.0
    gap = np.linalg.norm(matrix.B - matrix.B.T - pairing, ord=np.inf)
    assert gap <= 1e-5 * np.linalg.norm(pairing, ord=np.inf)


def test_flat_line_has_trivial_null_space():
    entry = tangent(1)
    host = integrate_el(entry.algebroid, entry.lagrangian, [0.0], [1.0], 0.0, 1.0, steps=50)
    matrix = second_variation_matrix(entry.algebroid, entry.lagrangian, host)
    null = null_space(matrix)
    assert null.dimension == 0
    assert morse_index(matrix) == 0

    df = second_variation_frame(matrix)
    assert df.shape == (49, 49)
    assert df.columns[0] == "n1_e1"
    metadata = second_variation_metadata(matrix, null, 0)
    assert metadata["basis"] == "hat"
    assert metadata["M"] == 50
    assert metadata["null_dimension"] == 0


def test_sphere_null_space_is_the_jacobi_field():
    entry = sphere2_tangent()
    A, L = entry.algebroid, entry.lagrangian

    # Test case 1: over [0, pi] the kernel is sin(t) along the normal direction
    host = integrate_el(A, L, entry.x0, entry.y0, 0.0, math.pi, steps=200)
    null = null_space(second_variation_matrix(A, L, host))
    assert null.dimension == 1
    values = null.generators[0].values
    normal = values[:, 0] / values[np.argmax(np.abs(values[:, 0])), 0]
    assert np.max(np.abs(normal - np.sin(host.times))) <= 1e-2
    assert np.max(np.abs(values[:, 1])) <= 1e-2 * np.max(np.abs(values[:, 0]))

    # Test case 2: before the conjugate point the kernel is trivial
    host = integrate_el(A, L, entry.x0, entry.y0, 0.0, 3.0, steps=200)
    assert null_space(second_variation_matrix(A, L, host)).dimension == 0

    # Test case 3: past the conjugate point the index is one
    host = integrate_el(A, L, entry.x0, entry.y0, 0.0, 3.5, steps=200)
    assert morse_index(second_variation_matrix(A, L, host)) == 1


def hat_index(node, component, k):
    return (node - 1) * k + component


def test_flat_line_matrix_is_the_scaled_laplacian():
    entry = tangent(1)
    host = integrate_el(entry.algebroid, entry.lagrangian, [0.0], [1.0], 0.0, 1.0, steps=50)
    matrix = second_variation_matrix(entry.algebroid, entry.lagrangian, host)
    expected = 50.0 * (2.0 * np.eye(49) - np.eye(49, k=1) - np.eye(49, k=-1))
    np.testing.assert_allclose(matrix.B, expected, rtol=0, atol=1e-10)


def test_matrix_entries_are_second_variations_of_hats():
    entry = sphere2_tangent()
    A, L = entry.algebroid, entry.lagrangian
    host = integrate_el(A, L, entry.x0, entry.y0, 0.0, 2.0, steps=200)
    matrix = second_variation_matrix(A, L, host)
    scale = np.max(np.abs(matrix.B))
    for (m, i), (l, j) in [((40, 0), (40, 0)), ((40, 1), (41, 1)), ((100, 0), (101, 1)), ((150, 1), (149, 0))]:
        eta = GeneratorCurve.hat(host.times, m, i, A.k)
        xi = GeneratorCurve.hat(host.times, l, j, A.k)
        value = second_variation_value(A, L, host, eta, xi).value
        assert matrix.B[hat_index(m, i, A.k), hat_index(l, j, A.k)] == pytest.approx(value, abs=1e-9 * scale)


def test_density_matrix_of_a_free_particle():
    entry = tangent(2)
    A, L = entry.algebroid, entry.lagrangian
    x, y = np.zeros(2), np.array([1.0, -0.5])
    K = density_matrix(A.structure_at(x), L.derivatives(x, y), y)
    # only the velocity block survives: |fdot|^2
    expected = np.zeros((4, 4))
    expected[2:, 2:] = np.eye(2)
    np.testing.assert_allclose(K, expected, atol=1e-14)


def test_second_variation_is_bilinear():
    entry, host = host_for(so3, (0.0, 1.0), 400)
    A, L = entry.algebroid, entry.lagrangian
    rng = np.random.default_rng(42)
    a, b, c = (sine_generator(host.times, 3, rng) for _ in range(3))
    alpha, beta = 0.7, -1.9
    combined = a.scaled(alpha) + b.scaled(beta)

    def value(eta, xi):
        return second_variation_value(A, L, host, eta, xi).value

    # Test case 1: first slot
    expected = alpha * value(a, c) + beta * value(b, c)
    assert value(combined, c) == pytest.approx(expected, abs=1e-10 * max(1.0, abs(expected)))

    # Test case 2: second slot
    expected = alpha * value(c, a) + beta * value(c, b)
    assert value(c, combined) == pytest.approx(expected, abs=1e-10 * max(1.0, abs(expected)))


def test_swapped_delta_is_exact_inside_cells():
    entry, host = host_for(skew_nonlie3, (0.0, 1.0), 400)
    A = entry.algebroid
    eta = GeneratorCurve.hat(host.times, 100, 0, 3)
    xi = GeneratorCurve.hat(host.times, 101, 1, 3)
    swapped = swapped_delta(A, host, eta, xi, GeneratorCurve.zeros(host.times, 3))
    assert swapped.piecewise_linear

    # h = 0.7 e1 and f = 0.3 e2 at 30% of cell 100; [e1, e2] = e3
    step = host.times[101] - host.times[100]
    t = host.times[100] + 0.3 * step
    value, rate = swapped.at(t, 100)
    np.testing.assert_allclose(value, [0.0, 0.0, 0.21], atol=1e-12)
    np.testing.assert_allclose(rate, [0.0, 0.0, 0.4 / step], rtol=1e-10)

    # nodal samples agree with the pointwise form at nodes outside the support
    np.testing.assert_allclose(swapped.values[300], 0.0)


def test_symmetry_defect_with_hat_generators():
    entry, host = host_for(skew_nonlie3, (0.0, 1.0), 400)
    A, L = entry.algebroid, entry.lagrangian
    for (m, i), (l, j) in [((100, 0), (101, 1)), ((200, 1), (200, 2)), ((250, 2), (251, 0))]:
        eta = GeneratorCurve.hat(host.times, m, i, 3)
        xi = GeneratorCurve.hat(host.times, l, j, 3)
        result = symmetry_defect(A, L, host, eta, xi)
        scale = max(abs(result["jacobiator_integral"]), abs(result["forward"]), abs(result["backward"]))
        assert scale > 0.0
        assert abs(result["defect"] - result["jacobiator_integral"]) <= 1e-8 * scale
