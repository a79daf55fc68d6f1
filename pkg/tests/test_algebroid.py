import sys
import os

import numpy as np
import pytest

# Ensure src module can be imported
sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.algebroid.checks import (
    check_almost_lie,
    check_lie,
    default_samples,
    jacobiator,
    jacobiator_tensor,
)
from src.algebroid.skew_algebroid import (
    SectionField,
    SkewAlgebroid,
    anchor_apply,
    anchor_derivation,
    bracket,
    fiber_vector,
)
from src.expr.expression import evaluate
from src.expr.parser import parse
from src.systems.catalog import abelian, heisenberg3, skew_nonlie3, so3, sphere2_tangent, tangent
from src.utils.errors import ConfigError, DimensionError


def _zeros(k):
    return [[[0] * k for _ in range(k)] for _ in range(k)]


def _brute_jacobiator(c, i, j, l):
    """[[e_i, e_j], e_l] + [[e_j, e_l], e_i] + [[e_l, e_i], e_j] for constant structure c[s, a, b]."""
    def br(u, v):
        return np.einsum("sab,a,b->s", c, u, v)

    e = np.eye(c.shape[0])
    return br(br(e[i], e[j]), e[l]) + br(br(e[j], e[l]), e[i]) + br(br(e[l], e[i]), e[j])


def test_anchor_apply():
    A = SkewAlgebroid(2, 2, [["x2", 0], [0, 1]], _zeros(2))
    np.testing.assert_allclose(anchor_apply(A, fiber_vector([1.0, 2.0], [3.0, 4.0])), [6.0, 4.0])


def test_construction_errors_name_the_field():
    # Test case 1: rho row with the wrong number of entries
    with pytest.raises(DimensionError) as info:
        SkewAlgebroid(2, 2, [["1", "0"], ["0"]], _zeros(2))
    assert info.value.field == "rho[1]"

    # Test case 2: structure block of the wrong size
    with pytest.raises(DimensionError) as info:
        SkewAlgebroid(0, 2, [], [[[0, 0], [0, 0]], [[0, 0]]])
    assert info.value.field == "c[1]"

    # Test case 3: undeclared variable inside rho
    with pytest.raises(ConfigError) as info:
        SkewAlgebroid(1, 1, [["y1"]], _zeros(1))
    assert info.value.field == "rho[0][0]"

    # Test case 4: empty working interval
    with pytest.raises(ConfigError):
        SkewAlgebroid(1, 1, [[1]], _zeros(1), domain=[(1.0, 1.0)])


def test_structure_is_antisymmetrized_from_upper_entries():
    c = _zeros(2)
    c[0][0][1] = "x1"
    A = SkewAlgebroid(1, 2, [[0, 0]], c)
    S = A.structure_at(np.array([0.5]))
    assert S.c[0, 0, 1] == pytest.approx(0.5)
    assert S.c[0, 1, 0] == pytest.approx(-0.5)
    assert S.dc[0, 1, 0, 0] == pytest.approx(-1.0)


def test_bracket_of_sections():
    A = so3().algebroid
    e1 = SectionField.constant([1, 0, 0])
    e2 = SectionField.constant([0, 1, 0])

    # Test case 1: frame bracket reads off the structure constants
    result = bracket(A, e1, e2)
    assert [evaluate(e, {}) for e in result.components] == [0.0, 0.0, 1.0]

    # Test case 2: bracket of x-dependent sections on T R picks up the derivative terms
    T = tangent(1).algebroid
    X = SectionField((parse("x1^2", ["x1"]),))
    Y = SectionField((parse("x1", ["x1"]),))
    value = evaluate(bracket(T, X, Y).components[0], {"x1": 3.0})
    # [x^2 d/dx, x d/dx] = (x^2 - 2x^2) d/dx
    assert value == pytest.approx(-9.0)


def test_almost_lie_condition():
    # Test case 1: tangent bundle
    assert check_almost_lie(tangent(2).algebroid)["passed"]

    # Test case 2: skew algebra over a point
    assert check_almost_lie(skew_nonlie3().algebroid)["max_residual"] == 0.0

    # Test case 3: single rho entry x1 with k = 1 commutes with itself
    A = SkewAlgebroid(1, 1, [["x1"]], _zeros(1))
    assert check_almost_lie(A)["max_residual"] == pytest.approx(0.0)

    # Test case 4: rho = [x1, 1] with zero brackets fails by exactly 1
    A = SkewAlgebroid(1, 2, [["x1", 1]], _zeros(2))
    report = check_almost_lie(A)
    assert not report["passed"]
    assert report["max_residual"] == pytest.approx(1.0)
    assert (1, 1, 2) in report["failures"]


def test_lie_condition():
    # Test case 1: so(3)
    report = check_lie(so3().algebroid)
    assert report["passed"]
    assert report["max_residual"] <= 1e-12

    # Test case 2: abelian and Heisenberg algebras
    assert check_lie(heisenberg3().algebroid)["passed"]

    # Test case 3: the skew catalog algebra is almost-Lie but not Lie
    report = check_lie(skew_nonlie3().algebroid)
    assert report["almost_lie"]["passed"]
    assert not report["passed"]
    assert report["max_residual"] > 0.1

    # Test case 4: round sphere frame over a box of samples
    assert check_lie(sphere2_tangent().algebroid, default_samples(sphere2_tangent().algebroid, 3))["passed"]


def test_jacobiator_matches_brute_force():
    A = skew_nonlie3().algebroid
    c = A.c_at(np.zeros(0))
    J = jacobiator_tensor(A, np.zeros(0))
    for i in range(3):
        for j in range(3):
            for l in range(3):
                np.testing.assert_allclose(J[:, i, j, l], _brute_jacobiator(c, i, j, l), atol=1e-14)

    # J(e1, e2, e3) = e3 for this algebra
    np.testing.assert_allclose(jacobiator(A, [1, 0, 0], [0, 1, 0], [0, 0, 1], np.zeros(0)), [0, 0, 1])

    # and it vanishes on so(3)
    rng = np.random.default_rng(3)
    a, h, f = rng.normal(size=(3, 3))
    np.testing.assert_allclose(jacobiator(so3().algebroid, a, h, f, np.zeros(0)), 0.0, atol=1e-12)


VARIABLES_2 = ["x1", "x2"]
POINTS_2 = ([0.3, -0.7], [1.2, 0.4], [-0.5, 2.0])


def _varying_algebroid():
    c = _zeros(2)
    c[0][0][1] = "x2"
    c[1][0][1] = "x1^2 - 1"
    return SkewAlgebroid(2, 2, [["1", "x1"], ["0", "x2"]], c)


def _sections():
    X = SectionField((parse("x1*x2", VARIABLES_2), parse("sin(x1)", VARIABLES_2)))
    Y = SectionField((parse("cos(x2)", VARIABLES_2), parse("x1^2 + x2", VARIABLES_2)))
    return X, Y


def _values(section, x):
    point = dict(zip(VARIABLES_2, x))
    return np.array([evaluate(e, point) for e in section.components])


def test_bracket_is_antisymmetric():
    A = _varying_algebroid()
    X, Y = _sections()
    for x in POINTS_2:
        np.testing.assert_allclose(_values(bracket(A, X, Y), x), -_values(bracket(A, Y, X), x), atol=1e-12)
        np.testing.assert_allclose(_values(bracket(A, X, X), x), 0.0, atol=1e-12)


def test_bracket_satisfies_the_leibniz_rule():
    A = _varying_algebroid()
    X, Y = _sections()
    f = parse("exp(x1)*x2", VARIABLES_2)
    lhs = bracket(A, X, Y.scaled(f))
    for x in POINTS_2:
        point = dict(zip(VARIABLES_2, x))
        # [X, fY] = f [X, Y] + rho(X)(f) Y
        expected = (
            evaluate(f, point) * _values(bracket(A, X, Y), x)
            + evaluate(anchor_derivation(A, X, f), point) * _values(Y, x)
        )
        np.testing.assert_allclose(_values(lhs, x), expected, rtol=1e-12, atol=1e-12)


def test_tangent_bracket_is_the_vector_field_commutator():
    A = tangent(2).algebroid
    X, Y = _sections()
    result = bracket(A, X, Y)
    step = 1e-6

    def jacobian(section, x):
        columns = []
        for a in range(2):
            shift = np.zeros(2)
            shift[a] = step
            columns.append((section.at(A, x + shift) - section.at(A, x - shift)) / (2 * step))
        return np.column_stack(columns)

    for x in POINTS_2:
        x = np.array(x)
        # [X, Y] = DY X - DX Y
        expected = jacobian(Y, x) @ X.at(A, x) - jacobian(X, x) @ Y.at(A, x)
        np.testing.assert_allclose(result.at(A, x), expected, rtol=1e-7, atol=1e-8)


def test_lie_condition_on_flat_algebroids():
    # Test case 1: abelian algebra
    report = check_lie(abelian(3).algebroid)
    assert report["passed"]
    assert report["max_residual"] == 0.0

    # Test case 2: tangent bundle
    assert check_lie(tangent(3).algebroid)["passed"]
