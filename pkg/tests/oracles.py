"""Independent reference computations used by the tests."""

from __future__ import annotations

from fractions import Fraction

import mpmath
import numpy as np


def _exact(A) -> list[list[Fraction]]:
    return [[Fraction(float(v)) for v in row] for row in np.asarray(A, dtype=float)]


def bareiss_det(A) -> Fraction:
    """Exact determinant of the float matrix ``A`` (fraction-free elimination)."""
    M = _exact(A)
    n = len(M)
    sign, prev = 1, Fraction(1)
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k] != 0:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return Fraction(0)
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) / prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def _integer_matrix(A) -> tuple[list[list[int]], int]:
    """``A = N / 2^e`` with ``N`` an exact integer matrix."""
    E = _exact(A)
    e = max((v.denominator.bit_length() - 1 for row in E for v in row), default=0)
    return [[int(v * 2**e) for v in row] for row in E], e


def charpoly_gram(A) -> list[Fraction]:
    """Exact coefficients ``[1, c_1, ..., c_n]`` of ``det(x I - A^T A)`` (Faddeev-LeVerrier)."""
    N, e = _integer_matrix(A)
    n = len(N)
    B = [[sum(N[k][i] * N[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    coeffs = [Fraction(1)]
    Mk = [[0] * n for _ in range(n)]
    for k in range(1, n + 1):
        # M_k = B M_{k-1} + c_{k-1} I
        prev = Mk
        Mk = [[sum(B[i][l] * prev[l][j] for l in range(n)) for j in range(n)] for i in range(n)]
        for i in range(n):
            Mk[i][i] += coeffs[-1]
        BM = [[sum(B[i][l] * Mk[l][j] for l in range(n)) for j in range(n)] for i in range(n)]
        coeffs.append(Fraction(-sum(BM[i][i] for i in range(n)), k))
    # undo the integer scaling: B_true = B / 4^e
    return [c / Fraction(4**e) ** k for k, c in enumerate(coeffs)]


def singular_values_oracle(A, dps: int = 50) -> list[float]:
    """Singular values from the roots of the exact Gram characteristic polynomial, descending."""
    coeffs = charpoly_gram(A)
    with mpmath.workdps(dps):
        roots = mpmath.polyroots([mpmath.mpf(c.numerator) / c.denominator for c in coeffs], maxsteps=500, extraprec=4 * dps)
        vals = sorted((mpmath.sqrt(max(mpmath.re(r), 0)) for r in roots), reverse=True)
        return [float(v) for v in vals]
