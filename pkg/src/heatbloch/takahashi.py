"""Ball maxima of ``|det F'|`` and ``||F'||``, the Takahashi constant estimate, and
the eigenvalue inequalities that follow from it at maximizers of the determinant."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .caloric import AnyMap
from .linalg import spectral_summary
from .sampling import maximize_over_ball

DEFAULT_BUDGET = 2048
DEGENERATE_M = 1e-14


class DegenerateDeterminantError(ArithmeticError):
    def __init__(self, r: float, M: float):
        super().__init__(f"max |det F'| over the ball of radius {r!r} is {M!r} (< {DEGENERATE_M})")
        self.r = r
        self.M = M


class NonMonotoneMaximaError(ArithmeticError):
    """Sampled ball maxima decreased with the radius; raise the sample budget."""


@dataclass(frozen=True)
class BallMaxRecord:
    r: float
    M: float
    beta: np.ndarray
    max_frob: float
    frob_point: np.ndarray
    sample_count: int

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "M": self.M,
            "beta": [float(v) for v in self.beta],
            "max_frob": self.max_frob,
            "frob_point": [float(v) for v in self.frob_point],
            "sample_count": self.sample_count,
        }


def abs_det(F: AnyMap):
    return lambda z: np.abs(np.linalg.det(F.jacobian(z)))


def frobenius(F: AnyMap):
    return lambda z: np.linalg.norm(F.jacobian(z), axis=(-2, -1))


def ball_max(F: AnyMap, r: float, budget: int = DEFAULT_BUDGET, seed: int = 0, workers: int = 1) -> BallMaxRecord:
    """Sampled maxima of ``|det F'|`` and ``||F'||`` over the closed ball of radius ``r``."""
    if not 0.0 < r <= 1.0:
        raise ValueError(f"radius must lie in (0, 1], got {r!r}")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    det_max = maximize_over_ball(abs_det(F), F.d, r, budget, seed, workers=workers)
    frob_max = maximize_over_ball(frobenius(F), F.d, r, budget, seed, workers=workers)
    return BallMaxRecord(
        r=float(r),
        M=det_max.value,
        beta=det_max.point,
        max_frob=frob_max.value,
        frob_point=frob_max.point,
        sample_count=budget,
    )


class BallMaxOracle:
    """Cached, monotone ``r -> M(r)`` for one map.

    Raw sampled maxima are combined into a running maximum over increasing
    radii; a decrease larger than ``monotone_rtol`` means the sampling missed
    the true maximum and is reported as an error.
    """

    def __init__(
        self,
        F: AnyMap,
        budget: int = DEFAULT_BUDGET,
        seed: int = 0,
        workers: int = 1,
        monotone_rtol: float = 1e-9,
    ):
        self.F = F
        self.budget = budget
        self.seed = seed
        self.workers = workers
        self.monotone_rtol = monotone_rtol
        self._radii: list[float] = []
        self._records: dict[float, BallMaxRecord] = {}

    @property
    def m(self) -> int:
        return self.F.m

    def record(self, r: float) -> BallMaxRecord:
        r = float(r)
        if r not in self._records:
            rec = ball_max(self.F, r, self.budget, self.seed, self.workers)
            i = bisect.bisect_left(self._radii, r)
            below = [self._records[q].M for q in self._radii[:i]]
            above = [self._records[q].M for q in self._radii[i:]]
            if below and rec.M < max(below) * (1.0 - self.monotone_rtol):
                raise NonMonotoneMaximaError(
                    f"M({r}) = {rec.M!r} is below M at a smaller radius ({max(below)!r})"
                )
            if above and min(above) < rec.M * (1.0 - self.monotone_rtol):
                raise NonMonotoneMaximaError(
                    f"M({r}) = {rec.M!r} exceeds M at a larger radius ({min(above)!r})"
                )
            self._radii.insert(i, r)
            self._records[r] = rec
        return self._records[r]

    def __call__(self, r: float) -> float:
        self.record(r)
        i = bisect.bisect_right(self._radii, float(r))
        return max(self._records[q].M for q in self._radii[:i])

    def argmax(self, r: float) -> np.ndarray:
        """A point of the closed ball of radius ``r`` attaining ``self(r)``."""
        self.record(r)
        i = bisect.bisect_right(self._radii, float(r))
        best = max(self._radii[:i], key=lambda q: (self._records[q].M, -q))
        return self._records[best].beta

    def records(self) -> list[BallMaxRecord]:
        return [self._records[q] for q in self._radii]


@dataclass(frozen=True)
class KEstimate:
    K: float
    radii: tuple[float, ...]
    ratios: tuple[float, ...]
    origin_ratio: float
    records: tuple[BallMaxRecord, ...] = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "origin_ratio": self.origin_ratio,
            "per_radius": [
                {"r": r, "ratio": q, "M": rec.M, "max_frob": rec.max_frob}
                for r, q, rec in zip(self.radii, self.ratios, self.records)
            ],
        }


def default_radii(n: int) -> tuple[float, ...]:
    """``1/n, 2/n, ..., 1``; the closed unit ball is the limit of the open condition."""
    if n < 1:
        raise ValueError("radii grid size must be >= 1")
    return tuple((i + 1) / n for i in range(n))


def pointwise_ratio(F: AnyMap, z) -> float:
    J = F.jacobian(np.asarray(z, dtype=float))
    return float(np.linalg.norm(J) / abs(np.linalg.det(J)) ** (1.0 / F.d))


def estimate_K(
    F: AnyMap,
    radii: Sequence[float] | None = None,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    workers: int = 1,
    oracle: BallMaxOracle | None = None,
) -> KEstimate:
    """Lower estimate of the Takahashi constant of ``F``.

    Maximum over the radius grid (and the degenerate ball ``{0}``) of
    ``max ||F'|| / (max |det F'|)^(1/(m+1))``.
    """
    radii = tuple(default_radii(32) if radii is None else radii)
    if not radii:
        raise ValueError("radii grid is empty")
    oracle = oracle or BallMaxOracle(F, budget, seed, workers)
    origin = np.zeros(F.d)
    J0 = F.jacobian(origin)
    det0 = abs(float(np.linalg.det(J0)))
    if det0 < DEGENERATE_M:
        raise DegenerateDeterminantError(0.0, det0)
    origin_ratio = float(np.linalg.norm(J0)) / det0 ** (1.0 / F.d)
    ratios, records = [], []
    for r in radii:
        rec = oracle.record(r)
        M = oracle(r)
        if M < DEGENERATE_M:
            raise DegenerateDeterminantError(r, M)
        ratios.append(rec.max_frob / M ** (1.0 / F.d))
        records.append(rec)
    K = max([origin_ratio, *ratios])
    return KEstimate(K, tuple(float(r) for r in radii), tuple(ratios), origin_ratio, tuple(records))


@dataclass(frozen=True)
class WuReport:
    beta: np.ndarray
    K: float
    lambda_min: float
    lambda_max: float
    det: float
    premise_slack: float  # K |det|^(1/(m+1)) - ||F'(beta)||
    slack_a: float  # K^m lambda - Lambda
    slack_b: float  # K^(m+1) lambda - Lambda
    slack_c: float  # lambda - K^-(m+1) |det|^(1/(m+1))
    tol: float

    @property
    def passed(self) -> bool:
        """Inequalities (b) and (c); (a) is reported but not implied by the Takahashi bound."""
        return self.slack_b >= -self.tol and self.slack_c >= -self.tol

    @property
    def holds_a(self) -> bool:
        return self.slack_a >= -self.tol

    def to_dict(self) -> dict:
        return {
            "beta": [float(v) for v in self.beta],
            "K": self.K,
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "det": self.det,
            "premise_slack": self.premise_slack,
            "slack_a": self.slack_a,
            "slack_b": self.slack_b,
            "slack_c": self.slack_c,
            "holds_a": self.holds_a,
            "passed": self.passed,
        }


def check_wu_inequalities(F: AnyMap, beta: "np.ndarray | BallMaxRecord", K: float, tol: float = 1e-10) -> WuReport:
    """Slacks of the eigenvalue inequalities at a maximizer ``beta`` of ``|det F'|``.

    With ``K`` at least the Takahashi ratio on the ball where ``beta`` is a
    maximizer, ``||F'(beta)|| <= K |det F'(beta)|^(1/(m+1))`` and therefore
    ``Lambda <= K^(m+1) lambda`` and ``lambda >= K^-(m+1) |det|^(1/(m+1))``.
    The sharper ``Lambda <= K^m lambda`` fails in general
    (``diag(2, 1/2)`` is a counterexample) and is only reported.
    """
    if isinstance(beta, BallMaxRecord):
        beta = beta.beta
    beta = np.asarray(beta, dtype=float)
    m = F.m
    s = spectral_summary(F.jacobian(beta))
    root = abs(s.det) ** (1.0 / (m + 1))
    return WuReport(
        beta=beta,
        K=float(K),
        lambda_min=s.lambda_min,
        lambda_max=s.lambda_max,
        det=s.det,
        premise_slack=K * root - s.frobenius,
        slack_a=K**m * s.lambda_min - s.lambda_max,
        slack_b=K ** (m + 1) * s.lambda_min - s.lambda_max,
        slack_c=s.lambda_min - K ** (-(m + 1)) * root,
        tol=tol,
    )
