"""Deterministic low-discrepancy search for maxima over closed balls.

Points come from a scrambled Halton sequence mapped to the unit ball
(Gaussian direction, radius ``u^(1/d)``) and are scaled to the requested
radius, so the sample set is a continuous function of the radius. The best
samples are then polished by coordinate-wise golden-section ascent in
hyperspherical coordinates around the ball centre.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

CHUNK = 1024
GAIN_TOL = 1e-13
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

BatchFn = Callable[[np.ndarray], np.ndarray]


@lru_cache(maxsize=32)
def _unit_ball_points(d: int, n: int, seed: int) -> np.ndarray:
    """``n`` points in the closed unit ball of R^d; row 0 is the centre."""
    if n < 1:
        raise ValueError("sample budget must be >= 1")
    halton = qmc.Halton(d=d + 1, scramble=True, seed=np.random.default_rng(seed))
    u = halton.random(max(n - 1, 1))[: n - 1]
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    g = ndtri(u[:, :d])
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    pts = g * u[:, d : d + 1] ** (1.0 / d)
    out = np.vstack([np.zeros((1, d)), pts])
    out.setflags(write=False)
    return out


def ball_points(d: int, n: int, seed: int, radius: float = 1.0, center=None) -> np.ndarray:
    pts = radius * _unit_ball_points(d, n, seed)
    if center is not None:
        pts = pts + np.asarray(center, dtype=float)
    return pts


def evaluate_chunked(fn: BatchFn, points: np.ndarray, workers: int = 1) -> np.ndarray:
    """Evaluate ``fn`` on fixed-size chunks; results do not depend on ``workers``."""
    chunks = [points[i : i + CHUNK] for i in range(0, points.shape[0], CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, chunks))
    else:
        parts = [fn(c) for c in chunks]
    return np.concatenate(parts)


def _to_spherical(v: np.ndarray) -> np.ndarray:
    """Rows of ``v`` to ``(rho, phi_1, ..., phi_{d-1})``."""
    d = v.shape[1]
    out = np.empty_like(v)
    out[:, 0] = np.linalg.norm(v, axis=1)
    for j in range(d - 2):
        tail = np.linalg.norm(v[:, j + 1 :], axis=1)
        out[:, j + 1] = np.arctan2(tail, v[:, j])
    out[:, d - 1] = np.arctan2(v[:, d - 1], v[:, d - 2])
    return out


def _from_spherical(p: np.ndarray) -> np.ndarray:
    d = p.shape[1]
    out = np.empty_like(p)
    s = p[:, 0].copy()
    for j in range(d - 1):
        out[:, j] = s * np.cos(p[:, j + 1])
        s = s * np.sin(p[:, j + 1])
    out[:, d - 1] = s
    return out


@dataclass(frozen=True)
class BallMaximum:
    value: float
    point: np.ndarray
    index: int  # sample index the winner descends from
    sample_count: int
    sample_value: float  # best raw sample value before polishing


def _polish(
    fn: BatchFn,
    center: np.ndarray,
    radius: float,
    starts: np.ndarray,
    start_vals: np.ndarray,
    step: float,
    sweeps: int,
    iters: int,
) -> tuple[np.ndarray, np.ndarray]:
    d = starts.shape[1]
    P = _to_spherical(starts - center)
    vals = start_vals.copy()
    lower = np.zeros(d)
    upper = np.full(d, math.pi)
    upper[0] = radius
    lower[d - 1], upper[d - 1] = -np.inf, np.inf
    h0 = np.full(d, step)
    h0[0] = step * radius

    def f(Q):
        return fn(center + _from_spherical(Q))

    h = h0.copy()
    for sweep in range(sweeps):
        gain = 0.0
        for j in range(d):
            lo = np.maximum(P[:, j] - h[j], lower[j])
            hi = np.minimum(P[:, j] + h[j], upper[j])
            a, b = lo.copy(), hi.copy()
            c1 = b - GOLDEN * (b - a)
            c2 = a + GOLDEN * (b - a)
            Q1, Q2 = P.copy(), P.copy()
            Q1[:, j], Q2[:, j] = c1, c2
            f1, f2 = f(Q1), f(Q2)
            for _ in range(iters):
                left = f1 >= f2
                b = np.where(left, c2, b)
                a = np.where(left, a, c1)
                nc1 = np.where(left, b - GOLDEN * (b - a), c2)
                nc2 = np.where(left, c1, a + GOLDEN * (b - a))
                c1, c2 = nc1, nc2
                Qn = P.copy()
                Qn[:, j] = np.where(left, c1, c2)
                fn_new = f(Qn)
                f1, f2 = np.where(left, fn_new, f2), np.where(left, f1, fn_new)
            cand = np.stack([0.5 * (a + b), lo, hi], axis=1)
            best_c, best_v = P[:, j].copy(), vals.copy()
            for col in range(cand.shape[1]):
                Qc = P.copy()
                Qc[:, j] = cand[:, col]
                v = f(Qc)
                better = v > best_v
                best_c = np.where(better, cand[:, col], best_c)
                best_v = np.where(better, v, best_v)
            gain = max(gain, float(np.max((best_v - vals) / np.maximum(np.abs(vals), 1e-300))))
            P[:, j] = best_c
            vals = best_v
        if gain <= GAIN_TOL:
            if sweep > 0:
                break
            h *= 0.1
        elif gain < 1e-6:
            h *= 0.5
    return center + _from_spherical(P), vals


def maximize_over_ball(
    fn: BatchFn,
    d: int,
    radius: float,
    budget: int = 2048,
    seed: int = 0,
    center=None,
    n_polish: int = 4,
    sweeps: int = 40,
    golden_iters: int = 24,
    workers: int = 1,
    polish: bool = True,
) -> BallMaximum:
    """Maximum of the batched function ``fn`` over the closed ball ``B(center, radius)``.

    Ties are broken by the smallest sample index.
    """
    center = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    pts = ball_points(d, budget, seed, radius, center)
    vals = evaluate_chunked(fn, pts, workers)
    order = np.lexsort((np.arange(vals.size), -vals))
    best = int(order[0])
    if not polish or radius == 0.0:
        return BallMaximum(float(vals[best]), pts[best].copy(), best, budget, float(vals[best]))
    top = order[: min(n_polish, vals.size)]
    step = 2.0 * max(budget, 2) ** (-1.0 / d)
    final_pts, final_vals = _polish(fn, center, radius, pts[top], vals[top], step, sweeps, golden_iters)
    win = int(np.lexsort((np.arange(final_vals.size), -final_vals))[0])
    if final_vals[win] > vals[best]:
        return BallMaximum(float(final_vals[win]), final_pts[win], int(top[win]), budget, float(vals[best]))
    return BallMaximum(float(vals[best]), pts[best].copy(), best, budget, float(vals[best]))
