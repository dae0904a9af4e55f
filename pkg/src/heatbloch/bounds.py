"""Closed-form lower bounds for the schlicht radius and the constants behind them."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .caloric import CaloricComponent, CaloricError
from .radii import r_from_gamma, r_gamma_lower_bound
from .sampling import maximize_over_ball

QUOTED_CONSTANT = 0.22


def _prefactor(m: int, K: float, sigma: float) -> float:
    """``sigma (1 - sigma) / ((m+1) 2^(m+3) K^(2m+3))``."""
    return sigma * (1.0 - sigma) / ((m + 1) * 2.0 ** (m + 3) * K ** (2 * m + 3))


def bound_interior(m: int, K: float, gamma: float, sigma: float, r_gamma: float, a_m: float, M_rgamma: float) -> float:
    """Radius certified about an interior maximizer, in terms of ``M(r_gamma)``."""
    return _prefactor(m, K, sigma) / gamma**4 * (r_gamma / a_m) ** 4 * M_rgamma ** (1.0 / (m + 1)) / gamma**4


def bound_origin(m: int, K: float, gamma: float, sigma: float, r_gamma: float, a_m: float, M_rgamma: float) -> float:
    """Radius certified about the origin. ``gamma`` is accepted for symmetry and unused."""
    return _prefactor(m, K, sigma) / M_rgamma ** (1.0 / (m + 1)) * (r_gamma / a_m) ** 4


def worst_case_bound(m: int, K: float, gamma: float, sigma: float, a_m: float) -> tuple[float, float]:
    """``(bound with r_gamma, bound with the closed-form lower estimate of r_gamma)``."""
    pre = _prefactor(m, K, sigma)
    exact = pre * (r_from_gamma(gamma) / (a_m * gamma)) ** 4
    lower = pre * (r_gamma_lower_bound(gamma) / (a_m * gamma)) ** 4
    return exact, lower


def theorem_bound(m: int, K: float, a_m: float) -> float:
    """``0.22^4 / (2^(m+5) (m+1) a_m^4 K^(2m+3))``."""
    return QUOTED_CONSTANT**4 / (2.0 ** (m + 5) * (m + 1) * a_m**4 * K ** (2 * m + 3))


def theorem_bound_as_stated(m: int, K: float, a_m: float) -> float:
    """Same constant with ``m`` in place of ``m + 1`` in the denominator."""
    return QUOTED_CONSTANT**4 / (2.0 ** (m + 5) * m * a_m**4 * K ** (2 * m + 3))


def scaled_radius(gamma: float) -> float:
    """``r_gamma_lower_bound(gamma) / gamma``, whose maximum is the constant in :func:`theorem_bound`."""
    return r_gamma_lower_bound(gamma) / gamma


@dataclass(frozen=True)
class ConstantOptimum:
    gamma_star: float
    sigma_star: float
    c_star: float
    c_star_exact_r: float  # r_from_gamma(gamma_star) / gamma_star

    def to_dict(self) -> dict:
        return {
            "gamma_star": self.gamma_star,
            "sigma_star": self.sigma_star,
            "c_star": self.c_star,
            "c_star_exact_r": self.c_star_exact_r,
            "quoted": QUOTED_CONSTANT,
        }


def optimize_constants(resolution: int = 1000, gamma_max: float = 100.0) -> ConstantOptimum:
    """Best ``sigma`` and ``gamma`` for the worst-case bound.

    ``sigma (1 - sigma)`` peaks at 1/2. For ``gamma`` a uniform grid on
    ``(1, gamma_max]`` locates the peak of :func:`scaled_radius`, then a
    bounded golden/Brent search refines it inside the neighbouring cells.
    """
    if resolution < 100:
        raise ValueError("resolution must be >= 100")
    grid = np.linspace(1.0, gamma_max, resolution + 1)[1:]
    vals = np.array([scaled_radius(g) for g in grid])
    i = int(np.argmax(vals))
    lo = grid[i - 1] if i > 0 else 1.0 + 1e-9
    hi = grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(lambda g: -scaled_radius(g), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    g_star, c_star = (float(res.x), -float(res.fun)) if -res.fun >= vals[i] else (float(grid[i]), float(vals[i]))
    if c_star < QUOTED_CONSTANT:
        raise ArithmeticError(f"optimized constant {c_star!r} fell below {QUOTED_CONSTANT}")
    return ConstantOptimum(g_star, 0.5, c_star, r_from_gamma(g_star) / g_star)


@dataclass(frozen=True)
class BlochBoundReport:
    m: int
    K: float
    a_m: float
    gamma: float
    sigma: float
    r_gamma: float
    M_rgamma: float
    bound_interior: float
    bound_origin: float
    bound_worst_case: float
    bound_worst_case_lower_r: float
    theorem_bound: float
    theorem_bound_as_stated: float

    @property
    def better_branch(self) -> str:
        return "interior" if self.M_rgamma ** (1.0 / (self.m + 1)) >= self.gamma**4 else "origin"

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "K": self.K,
            "a_m": self.a_m,
            "gamma": self.gamma,
            "sigma": self.sigma,
            "r_gamma": self.r_gamma,
            "M_rgamma": self.M_rgamma,
            "bound_interior": self.bound_interior,
            "bound_origin": self.bound_origin,
            "bound_worst_case": self.bound_worst_case,
            "bound_worst_case_lower_r": self.bound_worst_case_lower_r,
            "theorem_bound": self.theorem_bound,
            "theorem_bound_as_stated": self.theorem_bound_as_stated,
            "better_branch": self.better_branch,
        }


def bloch_bound_report(m: int, K: float, a_m: float, gamma: float, sigma: float, M_rgamma: float) -> BlochBoundReport:
    r_gamma = r_from_gamma(gamma)
    exact, lower = worst_case_bound(m, K, gamma, sigma, a_m)
    return BlochBoundReport(
        m=m,
        K=K,
        a_m=a_m,
        gamma=gamma,
        sigma=sigma,
        r_gamma=r_gamma,
        M_rgamma=M_rgamma,
        bound_interior=bound_interior(m, K, gamma, sigma, r_gamma, a_m, M_rgamma),
        bound_origin=bound_origin(m, K, gamma, sigma, r_gamma, a_m, M_rgamma),
        bound_worst_case=exact,
        bound_worst_case_lower_r=lower,
        theorem_bound=theorem_bound(m, K, a_m),
        theorem_bound_as_stated=theorem_bound_as_stated(m, K, a_m),
    )


def _derivative_indices(d: int) -> list[tuple[int, ...]]:
    out = []
    for order in (1, 2):
        for k in itertools.product(range(order + 1), repeat=d):
            if sum(k) == order:
                out.append(k)
    return out


@dataclass(frozen=True)
class AmEstimate:
    a_m: float
    raw: float  # largest ratio before flooring at 1
    worst: dict

    def to_dict(self) -> dict:
        return {"a_m": self.a_m, "raw": self.raw, "worst": self.worst}


def estimate_am(
    m: int,
    family: Sequence[CaloricComponent],
    radii: Sequence[float],
    budget: int = 1024,
    seed: int = 0,
) -> AmEstimate:
    """Lower estimate of the interior derivative constant ``a_m``.

    Largest ``r^(2|k|) sup_{B(r^2/4)} |d^k u| / sup_{B(r)} |u|`` over the
    family, the radii and ``|k| in {1, 2}``, balls centred at the origin,
    floored at 1.
    """
    if not family:
        raise ValueError("family is empty")
    if any(not 0.0 < r < 1.0 for r in radii):
        raise ValueError("radii must lie in (0, 1)")
    d = m + 1
    ks = _derivative_indices(d)
    raw = 0.0
    worst: dict = {}
    for idx, u in enumerate(family):
        if u.m != m:
            raise CaloricError("family member has the wrong dimension")
        for r in radii:
            sup_u = maximize_over_ball(lambda z, u=u: np.abs(u._derivative_array(z, (0,) * d)), d, r, budget, seed).value
            if not sup_u > 0.0:
                raise CaloricError(f"family member {idx} vanishes on the ball of radius {r}")
            for k in ks:
                sup_dk = maximize_over_ball(
                    lambda z, u=u, k=k: np.abs(u._derivative_array(z, k)), d, r * r / 4.0, budget, seed
                ).value
                ratio = r ** (2 * sum(k)) * sup_dk / sup_u
                if ratio > raw:
                    raw = ratio
                    worst = {"member": idx, "r": r, "k": list(k), "ratio": ratio}
    return AmEstimate(max(1.0, raw), raw, worst)
