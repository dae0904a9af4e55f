from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from heatbloch.linalg import NearSingularMatrixError, invert, lambda_min, singular_values, spectral_summary
from oracles import bareiss_det, singular_values_oracle


@pytest.mark.parametrize("n", [2, 3, 4])
def test_matches_characteristic_polynomial_oracle(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(150):
        A = rng.standard_normal((n, n))
        s = spectral_summary(A)
        ref = singular_values_oracle(A, 30)
        assert abs(s.lambda_max - ref[0]) <= 1e-10 * max(1.0, ref[0])
        assert abs(s.lambda_min - ref[-1]) <= 1e-10 * max(1.0, ref[-1])
        d = float(bareiss_det(A))
        assert abs(s.det - d) <= 1e-10 * max(1.0, abs(d))


def test_all_singular_values_match_oracle_for_graded_matrix():
    A = np.diag([1e3, 1.0, 1e-3, 1e-6]) @ np.array(
        [[1, 2, 0, 1], [0, 1, 3, 0], [2, 0, 1, 1], [1, 1, 1, 2]], dtype=float
    )
    sv = singular_values(A)
    ref = singular_values_oracle(A, 60)
    np.testing.assert_allclose(sv, ref, rtol=1e-12)


def test_diagonal_and_orthogonal():
    np.testing.assert_allclose(singular_values(np.diag([-3.0, 0.5, 2.0])), [3.0, 2.0, 0.5], rtol=1e-15)
    theta = 0.3
    Q = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    np.testing.assert_allclose(singular_values(Q), [1.0, 1.0], rtol=1e-15)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, (3, 3), elements=st.floats(-10, 10, allow_nan=False)))
def test_singular_value_identities(A):
    sv = singular_values(A)
    assert np.all(np.diff(sv) <= 0) and sv[-1] >= 0
    # sum of squares is the Frobenius norm; product is |det|
    assert np.sum(sv**2) == pytest.approx(np.sum(A**2), rel=1e-12, abs=1e-12)
    assert np.prod(sv) == pytest.approx(abs(float(bareiss_det(A))), rel=1e-9, abs=1e-9 * max(1.0, sv[0]) ** 3)


def test_summary_fields_consistent():
    A = np.array([[2.0, 1.0], [0.0, 0.5]])
    s = spectral_summary(A)
    assert s.operator_norm == s.lambda_max
    assert s.frobenius == pytest.approx(np.sqrt(4 + 1 + 0.25))
    assert s.lambda_min * s.lambda_max == pytest.approx(1.0, rel=1e-14)
    assert s.to_dict()["det"] == pytest.approx(1.0)
    assert lambda_min(A) == s.lambda_min


def test_invert_and_singular_guard():
    A = np.array([[4.0, 1.0], [2.0, 3.0]])
    np.testing.assert_allclose(invert(A) @ A, np.eye(2), atol=1e-15)
    with pytest.raises(NearSingularMatrixError) as exc:
        invert(np.array([[1.0, 2.0], [2.0, 4.0]]))
    assert exc.value.lambda_min < 1e-14


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        singular_values(np.ones((2, 3)))
    with pytest.raises(ValueError):
        singular_values(np.array([[1.0, np.nan], [0.0, 1.0]]))
