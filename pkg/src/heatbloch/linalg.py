"""Spectral functionals of small square matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NEAR_SINGULAR = 1e-14


class NearSingularMatrixError(ArithmeticError):
    def __init__(self, det: float, lambda_min: float):
        super().__init__(f"matrix is numerically singular: |det|={abs(det):.3e}, lambda={lambda_min:.3e}")
        self.det = det
        self.lambda_min = lambda_min


@dataclass(frozen=True)
class SpectralSummary:
    lambda_min: float
    lambda_max: float
    det: float
    frobenius: float
    operator_norm: float

    def to_dict(self) -> dict:
        return {
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "det": self.det,
            "frobenius": self.frobenius,
            "operator_norm": self.operator_norm,
        }


def singular_values(A, max_sweeps: int = 60) -> np.ndarray:
    """Singular values of ``A`` in decreasing order.

    One-sided (Hestenes) cyclic Jacobi: plane rotations applied to the
    columns of ``A`` diagonalise ``A^T A`` implicitly, which keeps small
    singular values accurate to high relative precision.
    """
    U = np.array(A, dtype=float, copy=True)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(U)):
        raise ValueError("matrix has non-finite entries")
    n = U.shape[1]
    eps = np.finfo(float).eps
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                up, uq = U[:, p], U[:, q]
                alpha = float(up @ up)
                beta = float(uq @ uq)
                gamma = float(up @ uq)
                if gamma == 0.0 or abs(gamma) <= eps * math.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.hypot(1.0, zeta))
                c = 1.0 / math.hypot(1.0, t)
                s = c * t
                U[:, p], U[:, q] = c * up - s * uq, s * up + c * uq
        if not rotated:
            break
    return np.sort(np.linalg.norm(U, axis=0))[::-1]


def spectral_summary(A) -> SpectralSummary:
    A = np.asarray(A, dtype=float)
    sv = singular_values(A)
    return SpectralSummary(
        lambda_min=float(sv[-1]),
        lambda_max=float(sv[0]),
        det=float(np.linalg.det(A)),
        frobenius=float(np.linalg.norm(A)),
        operator_norm=float(sv[0]),
    )


def lambda_min(A) -> float:
    return float(singular_values(A)[-1])


def invert(A) -> np.ndarray:
    """Inverse of ``A``; raises :class:`NearSingularMatrixError` when ``|det A| <= 1e-14``."""
    A = np.asarray(A, dtype=float)
    det = float(np.linalg.det(A))
    if not abs(det) > NEAR_SINGULAR:
        raise NearSingularMatrixError(det, lambda_min(A))
    return np.linalg.inv(A)
