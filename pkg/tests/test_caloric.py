from __future__ import annotations

import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatbloch.caloric import (
    CaloricComponent,
    CaloricError,
    HeatMap,
    KernelTerm,
    LinearMap,
    MultiIndex,
    PolyTerm,
    SingularJacobianError,
    SpaceTimePoint,
    component,
    compensated_sum,
    cubic_test_map,
    derivative,
    evaluate,
    heat_kernel,
    heat_poly_coefficients,
    heat_polynomial_1d,
    heat_residual_exact,
    identity_like_map,
    kernel,
    map_from_dict,
    map_from_json,
    normalize,
    poly,
)
from shipped_maps import fd_heat_residual, grid_in_ball, kernel_map, shipped_components


# --- one-dimensional heat polynomials ---------------------------------------


def test_heat_polynomial_coefficients_low_degree():
    # v_2 = x^2 + 2t, v_3 = x^3 + 6xt, v_4 = x^4 + 12 x^2 t + 12 t^2
    assert dict(heat_poly_coefficients(2)) == {0: 1, 1: 2}
    assert dict(heat_poly_coefficients(3)) == {0: 1, 1: 6}
    assert dict(heat_poly_coefficients(4)) == {0: 1, 1: 12, 2: 12}
    assert heat_polynomial_1d(3, 0.5, 0.25) == pytest.approx(0.125 + 6 * 0.5 * 0.25, rel=0, abs=1e-15)


@pytest.mark.parametrize("n", range(0, 13))
def test_heat_polynomial_satisfies_heat_equation_exactly(n):
    # v_n'' = n(n-1) v_{n-2} and d/dt v_n = n(n-1) v_{n-2}; compare exactly
    c = dict(heat_poly_coefficients(n))
    xx = {n - 2 * k: Fraction(ck) for k, ck in c.items()}  # x-degree -> coeff (t-degree implied)
    lap = {}
    dt = {}
    for k, ck in c.items():
        p = n - 2 * k
        if p >= 2:
            lap[(p - 2, k)] = lap.get((p - 2, k), 0) + ck * p * (p - 1)
        if k >= 1:
            dt[(p, k - 1)] = dt.get((p, k - 1), 0) + ck * k
    assert lap == dt
    assert xx  # nonempty


def test_heat_kernel_values_and_domain():
    assert heat_kernel(0.0, 1.0) == pytest.approx(1 / math.sqrt(4 * math.pi), rel=1e-15)
    assert heat_kernel([0.0, 0.0], 0.5) == pytest.approx(1 / (2 * math.pi), rel=1e-15)
    assert heat_kernel(1.0, -0.5) == 0.0
    assert heat_kernel(1.0, 0.0) == 0.0
    with pytest.raises(CaloricError):
        heat_kernel(0.0, 0.0)
    with pytest.raises(CaloricError):
        heat_kernel([0.0, 1.0], 1.0, m=3)


# --- exact residual ------------------------------------------------------------


def test_every_shipped_polynomial_part_is_caloric_exactly():
    for c in shipped_components():
        assert c.heat_residual_exact() == {}


def test_noncaloric_polynomial_has_nonzero_residual():
    # t alone and x^2 alone are not caloric
    assert heat_residual_exact({(0, 1): Fraction(1)}, 1) == {(0, 0): Fraction(-1)}
    assert heat_residual_exact({(2, 0): Fraction(1)}, 1) == {(0, 0): Fraction(2)}


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=3))
def test_tensor_heat_polynomials_are_caloric(degrees):
    c = component(len(degrees), poly(1.0, *degrees))
    assert c.heat_residual_exact() == {}


def test_kernel_components_pass_finite_difference_heat_check():
    comps = [c for c in shipped_components() if c.kernel_terms]
    assert comps
    for c in comps:
        pts = grid_in_ball(c.d, 2000, seed=3)
        res = fd_heat_residual(lambda z, c=c: c._derivative_array(z, (0,) * c.d), pts)
        assert np.abs(res).max() < 1e-8


# --- derivatives against finite differences ---------------------------------------


def _fd_derivative(c: CaloricComponent, k, z, h=1e-3):
    """Mixed partial by nested fourth-order central differences."""
    w = np.array([1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12]) / h
    offs = np.arange(-2, 3)
    dirs = [j for j, kj in enumerate(k) for _ in range(kj)]
    total = 0.0
    for combo in itertools.product(range(5), repeat=len(dirs)):
        shift = np.zeros(len(k))
        weight = 1.0
        for j, i in zip(dirs, combo):
            shift[j] += offs[i] * h
            weight *= w[i]
        if weight:
            total += weight * evaluate(c, z + shift)
    return total


DERIV_COMPONENTS = [
    component(1, poly(1.0, 3), poly(-0.5, 2)),
    component(1, kernel(1.0, 0.2, -1.3)),
    component(2, poly(0.3, 2, 1), kernel(0.7, 0.1, -0.4, -1.2)),
    component(3, poly(1.0, 1, 2, 0), kernel(1.0, 0.0, 0.5, 0.0, -1.1)),
]


@pytest.mark.parametrize("c", DERIV_COMPONENTS, ids=lambda c: f"m{c.m}")
def test_derivatives_match_finite_differences(c):
    rng = np.random.default_rng(11)
    z = grid_in_ball(c.d, 3, seed=5, radius=0.6)
    for order in (1, 2, 3):
        for k in itertools.product(range(order + 1), repeat=c.d):
            if sum(k) != order:
                continue
            for p in z:
                exact = derivative(c, k, p)
                approx = _fd_derivative(c, k, p)
                scale = max(1.0, abs(exact))
                assert abs(exact - approx) < 1e-5 * scale, (k, p, exact, approx)
    assert rng is not None


def test_derivative_rejects_high_order_and_bad_shape():
    c = component(1, poly(1.0, 4))
    with pytest.raises(CaloricError):
        derivative(c, (4, 0), (0.1, 0.1))
    with pytest.raises(CaloricError):
        derivative(c, (1, 0, 0), (0.1, 0.1))


def test_time_derivative_equals_laplacian_for_kernel():
    c = component(2, kernel(1.0, 0.3, -0.2, -1.25))
    pts = grid_in_ball(3, 50, seed=2)
    lap = c._derivative_array(pts, (2, 0, 0)) + c._derivative_array(pts, (0, 2, 0))
    dt = c._derivative_array(pts, (0, 0, 1))
    np.testing.assert_allclose(lap, dt, rtol=1e-12, atol=1e-13)


def test_kernel_source_must_lie_outside_closed_ball():
    with pytest.raises(CaloricError):
        kernel(1.0, 0.0, -1.0)
    with pytest.raises(CaloricError):
        kernel(1.0, 0.3, 0.3)
    assert isinstance(kernel(1.0, 0.0, -1.0001), KernelTerm)


def test_dimension_limits():
    with pytest.raises(CaloricError):
        component(9, poly(1.0, *([0] * 9)))
    with pytest.raises(CaloricError):
        HeatMap(1, (component(1, poly(1.0, 1)),))


# --- maps ----------------------------------------------------------------------


def test_cubic_map_jacobian_closed_form():
    F = cubic_test_map(1, 0.1)
    pts = grid_in_ball(2, 200, seed=9)
    J = F.jacobian(pts)
    x, t = pts[:, 0], pts[:, 1]
    np.testing.assert_allclose(J[:, 0, 0], 1 + 0.1 * (3 * x**2 + 6 * t), atol=1e-15)
    np.testing.assert_allclose(J[:, 0, 1], 0.6 * x, atol=1e-15)
    np.testing.assert_allclose(J[:, 1, 0], x, atol=1e-15)
    np.testing.assert_allclose(J[:, 1, 1], 1.0, atol=1e-15)
    np.testing.assert_allclose(np.linalg.det(J), 1 - 0.3 * x**2 + 0.6 * t, atol=1e-14)


def test_identity_like_map_has_unit_determinant():
    for m in (1, 2, 4):
        F = identity_like_map(m)
        pts = grid_in_ball(m + 1, 50, seed=m)
        np.testing.assert_allclose(np.linalg.det(F.jacobian(pts)), 1.0, atol=1e-13)


def test_normalize_rescales_determinant():
    F = HeatMap(1, (component(1, poly(3.0, 1), kernel(0.4, 0.0, -1.2)), component(1, poly(2.0, 2))))
    det0 = np.linalg.det(F.jacobian(np.zeros(2)))
    G = normalize(F)
    assert G.normalized
    assert abs(abs(np.linalg.det(G.jacobian(np.zeros(2)))) - 1.0) < 1e-13
    z = np.array([0.2, -0.3])
    np.testing.assert_allclose(G(z), F(z) * abs(det0) ** -0.5, rtol=1e-14)
    assert normalize(G) is G


def test_normalize_rejects_singular_jacobian():
    F = HeatMap(1, (component(1, poly(1.0, 2)), component(1, poly(1.0, 2))))
    with pytest.raises(SingularJacobianError):
        normalize(F)


def test_map_json_round_trip_preserves_values():
    for F in (kernel_map(), normalize(cubic_test_map(2, 0.3)), LinearMap(np.array([[2.0, 1.0], [0.0, 0.5]]))):
        G = map_from_json(json.dumps(F.to_dict()))
        pts = grid_in_ball(F.d, 20, seed=1)
        np.testing.assert_array_equal(F(pts), G(pts))
        np.testing.assert_array_equal(F.jacobian(pts), G.jacobian(pts))
        assert G.normalized == F.normalized


def test_map_from_dict_rejects_false_normalized_flag():
    doc = cubic_test_map(1, 0.1).to_dict()
    doc["components"][0][0]["coeff"] = 2.0
    with pytest.raises(CaloricError):
        map_from_dict(doc)


def test_term_order_does_not_change_values_bitwise():
    terms = [poly(1e8, 3), poly(-1e8, 3), poly(0.1, 1), kernel(0.3, 0.2, -1.5), poly(1e-9, 2)]
    pts = grid_in_ball(2, 100, seed=4)
    ref = evaluate(component(1, *terms), pts)
    for perm in itertools.permutations(range(len(terms))):
        out = evaluate(component(1, *[terms[i] for i in perm]), pts)
        np.testing.assert_array_equal(out, ref)


def test_compensated_sum_is_permutation_invariant_and_accurate():
    rng = np.random.default_rng(0)
    v = np.concatenate([rng.standard_normal(50) * 1e16, [1.0, -1.0, 3.0]])
    v = np.concatenate([v, -v[:50]])
    ref = compensated_sum(v)
    assert ref == 3.0
    for _ in range(20):
        assert compensated_sum(rng.permutation(v)) == ref


def test_space_time_point_and_multiindex():
    p = SpaceTimePoint((0.3, 0.4), 0.0)
    assert p.norm() == pytest.approx(0.5)
    assert SpaceTimePoint.from_array(p.as_array()) == p
    k = MultiIndex((1, 0, 2))
    assert k.order == 3 and k.spatial == (1, 0) and k.time == 2 and k.factorial == 2
    assert MultiIndex.unit(1, 3).k == (0, 1, 0)
    with pytest.raises(CaloricError):
        MultiIndex((-1, 0))


def test_linear_map_interface():
    A = np.array([[2.0, 1.0], [0.5, 1.0]])
    F = LinearMap(A, offset=np.array([1.0, -1.0]))
    z = np.array([0.1, 0.2])
    np.testing.assert_allclose(F(z), A @ z + [1.0, -1.0])
    np.testing.assert_array_equal(F.jacobian(z), A)
    G = normalize(F)
    assert abs(np.linalg.det(G.jacobian(z))) == pytest.approx(1.0, abs=1e-14)


def test_poly_term_validation():
    with pytest.raises(CaloricError):
        PolyTerm(1.0, (-1,))
    with pytest.raises(CaloricError):
        PolyTerm(float("nan"), (1,))
