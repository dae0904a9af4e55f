"""Maps and components shared by the test modules."""

from __future__ import annotations

import numpy as np

from heatbloch.caloric import HeatMap, component, cubic_test_map, identity_like_map, kernel, normalize, poly
from heatbloch.cli import default_am_family


def cubic_map() -> HeatMap:
    """``F1 = x + 0.1 (x^3 + 6 x t)``, ``F2 = (x^2 + 2t)/2``."""
    return normalize(cubic_test_map(1, 0.1))


def steep_cubic_map() -> HeatMap:
    """Same shape with c = 10: ``M(r) = 1 + 60 r`` grows fast enough for several radii."""
    return normalize(cubic_test_map(1, 10.0))


def kernel_map() -> HeatMap:
    """An m = 2 map mixing heat polynomials with a heat-kernel translate."""
    F = HeatMap(
        2,
        (
            component(2, poly(1.0, 1, 0), poly(4.0, 3, 0), kernel(0.5, 0.0, 0.0, -1.3)),
            component(2, poly(1.0, 0, 1)),
            component(2, poly(0.5, 2, 0)),
        ),
    )
    return normalize(F)


# (name, map factory, gamma); gamma chosen so the sequence has 1, 3 and 2 radii
SEQUENCE_CASES = [
    ("cubic", cubic_map, 2.45),
    ("steep_cubic", steep_cubic_map, 1.2),
    ("kernel_m2", kernel_map, 1.2),
]


def shipped_components():
    """Every caloric component the package and its tests construct."""
    out = []
    for F in (cubic_map(), steep_cubic_map(), kernel_map(), identity_like_map(1), identity_like_map(3)):
        out.extend(F.components)
    for m in (1, 2, 3):
        out.extend(default_am_family(m))
    return out


def grid_in_ball(d: int, n: int, seed: int = 7, radius: float = 1.0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * radius * rng.random((n, 1)) ** (1.0 / d)


def fd_heat_residual(u, points: np.ndarray, h: float = 2e-3) -> np.ndarray:
    """``Laplacian u - u_t`` by sixth-order central differences."""
    c2 = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])  # second derivative
    c1 = np.array([-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60])  # first derivative
    offs = np.arange(-3, 4)
    d = points.shape[1]
    res = np.zeros(len(points))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        vals = np.stack([u(points + o * e) for o in offs])
        if j < d - 1:
            res += np.tensordot(c2, vals, axes=1) / h**2
        else:
            res -= np.tensordot(c1, vals, axes=1) / h
    return res
