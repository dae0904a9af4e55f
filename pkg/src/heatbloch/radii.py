"""The initial radius r_gamma and the maximal radius/epsilon sequences."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

TAIL_TOL = 1e-14
MAX_SEQUENCE = 64


class SequenceError(ArithmeticError):
    pass


def _check_gamma(gamma: float) -> None:
    if not (isinstance(gamma, (int, float)) and math.isfinite(gamma) and gamma > 1.0):
        raise ValueError(f"gamma must be a finite number > 1, got {gamma!r}")


def log_r_from_gamma(gamma: float) -> float:
    """``-sum_{j>=1} log(1 + gamma^-j)``, truncated once the tail bound drops below 1e-14."""
    _check_gamma(gamma)
    q = 1.0 / gamma
    # tail sum_{j>N} log(1+q^j) <= q^N / (gamma - 1)
    n = max(1, math.ceil(math.log(TAIL_TOL * (gamma - 1.0)) / math.log(q)))
    total = []
    for start in range(1, n + 1, 4096):
        j = np.arange(start, min(start + 4096, n + 1), dtype=float)
        total.extend(np.log1p(q**j).tolist())
        if math.fsum(total) > 800.0:
            return -math.inf
    return -math.fsum(total)


def r_from_gamma(gamma: float) -> float:
    """``r_gamma = 1 / prod_{j>=1} (1 + gamma^-j)``."""
    return math.exp(log_r_from_gamma(gamma))


def gamma_from_r0(r0: float) -> float:
    """Inverse of :func:`r_from_gamma` by bisection in ``log(gamma - 1)``."""
    if not 0.0 < r0 < 1.0:
        raise ValueError(f"r0 must lie in (0, 1), got {r0!r}")
    lo, hi = math.log(1e-3), math.log(1e15)
    if r_from_gamma(1.0 + math.exp(hi)) < r0:
        raise ValueError(f"r0={r0!r} is too close to 1")
    if r_from_gamma(1.0 + math.exp(lo)) >= r0:
        raise ValueError(f"r0={r0!r} is too small")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if r_from_gamma(1.0 + math.exp(mid)) < r0:
            lo = mid
        else:
            hi = mid
    g_lo, g_hi = 1.0 + math.exp(lo), 1.0 + math.exp(hi)
    return g_lo if abs(r_from_gamma(g_lo) - r0) < abs(r_from_gamma(g_hi) - r0) else g_hi


def r_gamma_lower_bound(gamma: float) -> float:
    """``exp(-1/(g-1) + 1/(2(g^2-1)) - 1/(3(g^3-1)))``, a lower bound for ``r_gamma``."""
    _check_gamma(gamma)
    g = gamma
    return math.exp(-1.0 / (g - 1.0) + 0.5 / (g * g - 1.0) - 1.0 / (3.0 * (g**3 - 1.0)))


@dataclass(frozen=True)
class RadiiSequence:
    gamma: float
    r_gamma: float
    m: int
    r: tuple[float, ...]
    eps: tuple[float, ...]
    M: tuple[float, ...]  # M(r_0), ..., M(r_l)
    M_one: float  # M(1)
    betas: tuple[tuple[float, ...], ...]

    @property
    def l(self) -> int:
        return len(self.r) - 1

    def r_next(self, n: int) -> float:
        return self.r[n + 1] if n + 1 < len(self.r) else 1.0

    def product(self) -> float:
        return self.r[0] * math.prod(1.0 + e for e in self.eps)

    def ratios(self) -> list[float]:
        """``(M(r_{n+1}) / M(r_n))^(1/(m+1))`` for ``n = 0..l``, the last one using ``M(1)``."""
        Ms = list(self.M) + [self.M_one]
        return [(Ms[n + 1] / Ms[n]) ** (1.0 / (self.m + 1)) for n in range(len(self.r))]

    def witness_index(self) -> int | None:
        """Smallest ``k`` with ``eps_k >= gamma^-(k+1)``."""
        for k, e in enumerate(self.eps):
            if e >= self.gamma ** (-(k + 1)):
                return k
        return None

    def check(self, tol: float = 1e-6, product_tol: float = 1e-9) -> list[str]:
        """Violated invariants, empty when the sequence is valid."""
        problems = []
        g4 = self.gamma**4
        if abs(self.product() - 1.0) >= product_tol:
            problems.append(f"r_0 prod(1+eps) = {self.product()!r}")
        for n in range(1, len(self.r)):
            if not math.isclose(self.r[n], (1.0 + self.eps[n - 1]) * self.r[n - 1], rel_tol=1e-12):
                problems.append(f"r_{n} != (1+eps_{n - 1}) r_{n - 1}")
        if any(b <= a for a, b in zip(self.r, self.r[1:])):
            problems.append("radii are not increasing")
        ratios = self.ratios()
        for n, q in enumerate(ratios[:-1]):
            if abs(q - g4) > tol:
                problems.append(f"ratio {n} = {q!r}, expected gamma^4 = {g4!r}")
        if ratios[-1] > g4 + tol:
            problems.append(f"final ratio {ratios[-1]!r} exceeds gamma^4")
        if self.witness_index() is None:
            problems.append("no k with eps_k >= gamma^-(k+1)")
        return problems

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "r_gamma": self.r_gamma,
            "l": self.l,
            "r": list(self.r),
            "eps": list(self.eps),
            "M": list(self.M),
            "M_one": self.M_one,
            "ratios": self.ratios(),
            "betas": [list(b) for b in self.betas],
            "product": self.product(),
            "witness_index": self.witness_index(),
        }


def _solve_ratio(f: Callable[[float], float], lo: float, hi: float, f_lo: float, f_hi: float, tol: float) -> float:
    """Root of the increasing ``f`` on ``[lo, hi]``, approached from above: returns ``x`` with ``0 <= f(x) <= tol``.

    Bracketing bisection accelerated by Illinois-modified false position;
    every third step is a plain bisection step.
    """
    w_lo, w_hi = f_lo, f_hi  # interpolation weights
    side = 0
    for it in range(200):
        if f_hi <= tol or hi - lo <= 4.0 * np.finfo(float).eps * hi:
            return hi
        x = (lo * w_hi - hi * w_lo) / (w_hi - w_lo)
        if it % 3 == 2 or not lo < x < hi:
            x = 0.5 * (lo + hi)
        fx = f(x)
        if fx >= 0.0:
            hi, f_hi, w_hi = x, fx, fx
            if side == -1:
                w_lo *= 0.5
            side = -1
        else:
            lo, f_lo, w_lo = x, fx, fx
            if side == 1:
                w_hi *= 0.5
            side = 1
    return hi


def build_sequences(F, gamma: float, oracle, tol: float = 1e-6, max_length: int = MAX_SEQUENCE) -> RadiiSequence:
    """Maximal sequences ``r_0 < ... < r_l`` and ``eps_0, ..., eps_l``.

    ``oracle(r)`` returns the (monotone) maximum of ``|det F'|`` on the
    closed ball of radius ``r``; ``oracle.argmax(r)`` a point attaining it.
    Each ``r_n`` solves ``(M(r_n) / M(r_{n-1}))^(1/(m+1)) = gamma^4`` to
    within ``tol``, taking the smallest radius reaching the target.
    """
    _check_gamma(gamma)
    m = F.m
    g4 = gamma**4
    r0 = r_from_gamma(gamma)
    rs, Ms = [r0], [oracle(r0)]
    M_one = oracle(1.0)
    eps: list[float] = []
    while True:
        r_prev, M_prev = rs[-1], Ms[-1]
        if M_prev <= 0.0:
            raise SequenceError(f"M({r_prev}) = {M_prev!r} is not positive")

        def excess(r, M_prev=M_prev):
            return (oracle(r) / M_prev) ** (1.0 / (m + 1)) - g4

        f_one = (M_one / M_prev) ** (1.0 / (m + 1)) - g4
        if f_one <= 0.0:
            eps.append(1.0 / r_prev - 1.0)
            break
        if len(rs) >= max_length:
            raise SequenceError(f"sequence exceeded {max_length} terms")
        r_new = _solve_ratio(excess, r_prev, 1.0, 1.0 - g4, f_one, 0.1 * tol)
        if r_new >= 1.0:
            eps.append(1.0 / r_prev - 1.0)
            break
        if excess(r_new) > tol:
            raise SequenceError(
                f"M jumps past gamma^4 near r={r_new!r} (ratio excess {excess(r_new)!r}); raise the sample budget"
            )
        eps.append(r_new / r_prev - 1.0)
        rs.append(r_new)
        Ms.append(oracle(r_new))
    betas = tuple(tuple(float(v) for v in oracle.argmax(r)) for r in rs)
    return RadiiSequence(
        gamma=float(gamma),
        r_gamma=r0,
        m=m,
        r=tuple(rs),
        eps=tuple(eps),
        M=tuple(Ms),
        M_one=M_one,
        betas=betas,
    )
