"""Exact solutions of the heat equation and heat maps built from them.

Coordinates are ``z = (x_1, ..., x_m, t)``; arrays of points carry the
coordinates along the last axis, so a batch of ``N`` points in dimension
``m`` has shape ``(N, m + 1)``.

Two kinds of basis terms are supported:

* tensor heat polynomials ``v_{n_1}(x_1, t) * ... * v_{n_m}(x_m, t)``,
  kept as exact integer polynomials so that differentiation is symbolic;
* translates ``H(x - y, t - s)`` of the heat kernel, differentiated in
  closed form through Hermite polynomials.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

MAX_DIM = 8
MAX_ORDER = 3
SINGULAR_DET = 1e-14

Exponent = tuple[int, ...]
ExactPoly = dict[Exponent, Fraction]


class CaloricError(ValueError):
    """Invalid caloric component or heat map."""


class SingularJacobianError(CaloricError):
    def __init__(self, det: float):
        super().__init__(f"Jacobian at the origin is singular (det={det!r})")
        self.det = det


def _check_dim(m: int) -> None:
    if not isinstance(m, (int, np.integer)) or not 1 <= m <= MAX_DIM:
        raise CaloricError(f"spatial dimension must be an integer in [1, {MAX_DIM}], got {m!r}")


# ---------------------------------------------------------------------------
# points and multi-indices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpaceTimePoint:
    x: tuple[float, ...]
    t: float

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "t", float(self.t))
        _check_dim(len(self.x))
        if not math.isfinite(self.norm()):
            raise CaloricError("point has non-finite coordinates")

    @property
    def m(self) -> int:
        return len(self.x)

    def norm(self) -> float:
        return math.hypot(*self.x, self.t)

    def as_array(self) -> np.ndarray:
        return np.array([*self.x, self.t], dtype=float)

    @classmethod
    def from_array(cls, z: Sequence[float]) -> "SpaceTimePoint":
        z = [float(v) for v in z]
        return cls(tuple(z[:-1]), z[-1])


@dataclass(frozen=True)
class MultiIndex:
    """Derivative orders ``(k_1, ..., k_m, k_{m+1})``; the last entry is the time order."""

    k: tuple[int, ...]

    def __post_init__(self):
        k = tuple(int(v) for v in self.k)
        if len(k) < 2 or any(v < 0 for v in k):
            raise CaloricError(f"invalid multi-index {self.k!r}")
        object.__setattr__(self, "k", k)

    @property
    def order(self) -> int:
        return sum(self.k)

    @property
    def factorial(self) -> int:
        return math.prod(math.factorial(v) for v in self.k)

    @property
    def spatial(self) -> tuple[int, ...]:
        return self.k[:-1]

    @property
    def time(self) -> int:
        return self.k[-1]

    @classmethod
    def unit(cls, j: int, d: int) -> "MultiIndex":
        k = [0] * d
        k[j] = 1
        return cls(tuple(k))


@lru_cache(maxsize=None)
def _unit_indices(d: int) -> tuple[tuple[int, ...], ...]:
    return tuple(MultiIndex.unit(j, d).k for j in range(d))


PointLike = Union[SpaceTimePoint, Sequence[float], np.ndarray]


def _as_points(z: PointLike, d: int) -> tuple[np.ndarray, bool]:
    """Return ``(array of shape (N, d), was_single_point)``."""
    if isinstance(z, SpaceTimePoint):
        z = z.as_array()
    arr = np.asarray(z, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[-1] != d:
        raise CaloricError(f"points must have {d} coordinates, got shape {arr.shape}")
    return arr, single


# ---------------------------------------------------------------------------
# compensated summation
# ---------------------------------------------------------------------------


def compensated_sum(values: np.ndarray) -> np.ndarray:
    """Sum along the last axis with Neumaier compensation.

    Entries are first put in a canonical order (increasing magnitude, ties by
    value), so the result does not depend on the order of the inputs.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    if n == 0:
        return np.zeros(values.shape[:-1])
    if n == 1:
        return values[..., 0].copy()
    if n == 2:
        return values[..., 0] + values[..., 1]
    order = np.lexsort((values, np.abs(values)), axis=-1)
    v = np.take_along_axis(values, order, axis=-1)
    s = v[..., 0].copy()
    c = np.zeros_like(s)
    for i in range(1, n):
        x = v[..., i]
        t = s + x
        c += np.where(np.abs(s) >= np.abs(x), (s - t) + x, (x - t) + s)
        s = t
    return s + c


# ---------------------------------------------------------------------------
# scalar building blocks
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def heat_poly_coefficients(n: int) -> tuple[tuple[int, int], ...]:
    """``((k, c_k), ...)`` with ``v_n(x, t) = sum_k c_k x^(n-2k) t^k``."""
    if n < 0:
        raise CaloricError("heat polynomial degree must be nonnegative")
    return tuple(
        (k, math.factorial(n) // (math.factorial(k) * math.factorial(n - 2 * k)))
        for k in range(n // 2 + 1)
    )


def heat_polynomial_1d(n: int, x: float, t: float) -> float:
    """Value of the one-dimensional heat polynomial ``v_n(x, t)``."""
    return math.fsum(c * x ** (n - 2 * k) * t**k for k, c in heat_poly_coefficients(n))


def heat_kernel(x: Union[float, Sequence[float]], t: float, m: int | None = None) -> float:
    """Fundamental solution ``(4 pi t)^(-m/2) exp(-|x|^2 / 4t)``, zero for ``t <= 0``."""
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    if m is None:
        m = xv.size
    _check_dim(m)
    if xv.size != m:
        raise CaloricError(f"expected {m} spatial coordinates, got {xv.size}")
    r2 = float(np.dot(xv, xv))
    if t == 0.0 and r2 == 0.0:
        raise CaloricError("heat kernel is singular at (0, 0)")
    if t <= 0.0:
        return 0.0
    return (4.0 * math.pi * t) ** (-m / 2.0) * math.exp(-r2 / (4.0 * t))


def _hermite_table(u: np.ndarray, nmax: int) -> list[np.ndarray]:
    """Probabilists' Hermite polynomials He_0..He_nmax evaluated at ``u``."""
    table = [np.ones_like(u), u.copy()]
    for n in range(1, nmax):
        table.append(u * table[n] - n * table[n - 1])
    return table[: nmax + 1]


@lru_cache(maxsize=None)
def _laplacian_power(m: int, p: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    """Expansion of ``Delta^p`` as ``((2*gamma, multinomial), ...)``."""
    out = []
    for gamma in itertools.product(range(p + 1), repeat=m):
        if sum(gamma) != p:
            continue
        coeff = math.factorial(p) // math.prod(math.factorial(g) for g in gamma)
        out.append((tuple(2 * g for g in gamma), coeff))
    return tuple(out)


def _kernel_derivatives(points: np.ndarray, source: np.ndarray, ks: Sequence[tuple[int, ...]]) -> list[np.ndarray]:
    """Closed-form partial derivatives of ``H(x - y, t - s)`` for each multi-index in ``ks``.

    Time derivatives are traded for spatial ones (``dH/dt = Delta H`` for
    ``t > s``) and spatial derivatives of the Gaussian factor are Hermite
    polynomials.
    """
    m = points.shape[-1] - 1
    X = points[:, :m] - source[:m]
    tau = points[:, m] - source[m]
    outs = [np.zeros(points.shape[0]) for _ in ks]
    live = tau > 0.0
    if not np.any(live):
        return outs
    X = X[live]
    tau = tau[live]
    sd = np.sqrt(2.0 * tau)
    base = (4.0 * np.pi * tau) ** (-m / 2.0) * np.exp(-np.einsum("ij,ij->i", X, X) / (4.0 * tau))
    nmax = max(max(k[:m]) + 2 * k[m] for k in ks)
    tables = [_hermite_table(X[:, i] / sd, nmax) for i in range(m)]
    scale = [(-1.0 / sd) ** n for n in range(nmax + 1)]
    for out, k in zip(outs, ks):
        spatial, kt = k[:m], k[m]
        acc = []
        for shift, coeff in _laplacian_power(m, kt):
            term = np.full(X.shape[0], float(coeff))
            for i in range(m):
                n = spatial[i] + shift[i]
                if n:
                    term = term * tables[i][n] * scale[n]
            acc.append(term)
        out[live] = base * compensated_sum(np.stack(acc, axis=-1))
    return outs


def _kernel_derivative(points: np.ndarray, source: np.ndarray, k: tuple[int, ...]) -> np.ndarray:
    return _kernel_derivatives(points, source, [k])[0]


def _power_table(points: np.ndarray, maxdeg: int) -> list[np.ndarray]:
    return [points[:, j : j + 1] ** np.arange(maxdeg + 1) for j in range(points.shape[1])]


# ---------------------------------------------------------------------------
# exact polynomials
# ---------------------------------------------------------------------------


def _tensor_heat_polynomial(degrees: tuple[int, ...]) -> dict[Exponent, int]:
    poly: dict[Exponent, int] = {}
    for choice in itertools.product(*(heat_poly_coefficients(n) for n in degrees)):
        exp = tuple(n - 2 * k for n, (k, _) in zip(degrees, choice)) + (sum(k for k, _ in choice),)
        poly[exp] = poly.get(exp, 0) + math.prod(c for _, c in choice)
    return poly


def _poly_derivative(poly: ExactPoly, k: tuple[int, ...]) -> ExactPoly:
    out: ExactPoly = {}
    for exp, c in poly.items():
        if any(e < kk for e, kk in zip(exp, k)):
            continue
        factor = math.prod(math.perm(e, kk) for e, kk in zip(exp, k))
        new = tuple(e - kk for e, kk in zip(exp, k))
        out[new] = out.get(new, Fraction(0)) + c * factor
    return {e: c for e, c in out.items() if c != 0}


def heat_residual_exact(poly: ExactPoly, m: int) -> ExactPoly:
    """Exact ``Delta p - dp/dt`` of a polynomial in ``(x_1..x_m, t)``; empty when caloric."""
    out: ExactPoly = {}
    d = m + 1
    for i in range(m):
        k = [0] * d
        k[i] = 2
        for e, c in _poly_derivative(poly, tuple(k)).items():
            out[e] = out.get(e, Fraction(0)) + c
    for e, c in _poly_derivative(poly, MultiIndex.unit(m, d).k).items():
        out[e] = out.get(e, Fraction(0)) - c
    return {e: c for e, c in out.items() if c != 0}


@dataclass(frozen=True)
class _CompiledPoly:
    exps: np.ndarray  # (M, d) int
    coeffs: np.ndarray  # (M,) float

    @classmethod
    def from_exact(cls, poly: ExactPoly, d: int) -> "_CompiledPoly":
        keys = sorted(poly)
        exps = np.array(keys, dtype=int).reshape(len(keys), d)
        coeffs = np.array([float(poly[e]) for e in keys])
        return cls(exps, coeffs)

    @property
    def maxdeg(self) -> int:
        return int(self.exps.max()) if self.exps.size else 0

    def terms(self, points: np.ndarray, powers: list[np.ndarray] | None = None) -> np.ndarray:
        """Per-monomial contributions, shape (N, M)."""
        if self.coeffs.size == 0:
            return np.zeros((points.shape[0], 0))
        if powers is None:
            powers = _power_table(points, self.maxdeg)
        vals = self.coeffs * powers[0][:, self.exps[:, 0]]
        for j in range(1, points.shape[1]):
            vals = vals * powers[j][:, self.exps[:, j]]
        return vals


# ---------------------------------------------------------------------------
# components
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolyTerm:
    """``coeff * prod_i v_{degrees[i]}(x_i, t)``."""

    coeff: float
    degrees: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeff", float(self.coeff))
        object.__setattr__(self, "degrees", tuple(int(n) for n in self.degrees))
        if not math.isfinite(self.coeff):
            raise CaloricError("coefficient must be finite")
        if any(n < 0 for n in self.degrees):
            raise CaloricError("heat polynomial degrees must be nonnegative")


@dataclass(frozen=True)
class KernelTerm:
    """``coeff * H(x - y, t - s)`` with source ``(y, s)`` outside the closed unit ball."""

    coeff: float
    source: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeff", float(self.coeff))
        object.__setattr__(self, "source", tuple(float(v) for v in self.source))
        if not (math.isfinite(self.coeff) and all(map(math.isfinite, self.source))):
            raise CaloricError("kernel coefficient and source must be finite")
        if not math.hypot(*self.source) > 1.0:
            raise CaloricError(f"kernel source {self.source} must lie outside the closed unit ball")


Term = Union[PolyTerm, KernelTerm]


@dataclass(frozen=True)
class CaloricComponent:
    """A finite linear combination of caloric basis terms."""

    m: int
    terms: tuple[Term, ...] = ()
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        _check_dim(self.m)
        object.__setattr__(self, "terms", tuple(self.terms))
        for term in self.terms:
            if isinstance(term, PolyTerm):
                if len(term.degrees) != self.m:
                    raise CaloricError(f"poly term needs {self.m} degrees, got {term.degrees}")
            elif isinstance(term, KernelTerm):
                if len(term.source) != self.m + 1:
                    raise CaloricError(f"kernel source needs {self.m + 1} coordinates")
            else:
                raise CaloricError(f"unknown term {term!r}")

    @property
    def d(self) -> int:
        return self.m + 1

    @property
    def kernel_terms(self) -> tuple[KernelTerm, ...]:
        return tuple(t for t in self.terms if isinstance(t, KernelTerm))

    def exact_polynomial(self) -> ExactPoly:
        """Polynomial part with exact rational coefficients (order-independent)."""
        if "poly" not in self._cache:
            poly: ExactPoly = {}
            for term in self.terms:
                if isinstance(term, PolyTerm):
                    c = Fraction(term.coeff)
                    for e, a in _tensor_heat_polynomial(term.degrees).items():
                        poly[e] = poly.get(e, Fraction(0)) + c * a
            self._cache["poly"] = {e: c for e, c in poly.items() if c != 0}
        return self._cache["poly"]

    def _compiled(self, k: tuple[int, ...]) -> _CompiledPoly:
        key = ("d", k)
        if key not in self._cache:
            self._cache[key] = _CompiledPoly.from_exact(_poly_derivative(self.exact_polynomial(), k), self.d)
        return self._cache[key]

    def _derivative_array(self, points: np.ndarray, k: tuple[int, ...]) -> np.ndarray:
        return self._derivative_arrays(points, [k])[0]

    def _derivative_arrays(
        self, points: np.ndarray, ks: Sequence[tuple[int, ...]], powers: list[np.ndarray] | None = None
    ) -> list[np.ndarray]:
        polys = [self._compiled(k) for k in ks]
        if powers is None:
            powers = _power_table(points, max(p.maxdeg for p in polys))
        parts = [[p.terms(points, powers)] for p in polys]
        for term in self.kernel_terms:
            for part, v in zip(parts, _kernel_derivatives(points, np.asarray(term.source), ks)):
                part.append((term.coeff * v)[:, None])
        return [compensated_sum(np.concatenate(part, axis=1)) for part in parts]

    @property
    def max_degree(self) -> int:
        poly = self.exact_polynomial()
        return max((max(e) for e in poly), default=0)

    def heat_residual_exact(self) -> ExactPoly:
        return heat_residual_exact(self.exact_polynomial(), self.m)

    def scaled(self, c: float) -> "CaloricComponent":
        terms = tuple(
            PolyTerm(c * t.coeff, t.degrees) if isinstance(t, PolyTerm) else KernelTerm(c * t.coeff, t.source)
            for t in self.terms
        )
        return CaloricComponent(self.m, terms)

    def __call__(self, z: PointLike):
        return evaluate(self, z)


def _check_order(k: tuple[int, ...]) -> None:
    if sum(k) > MAX_ORDER:
        raise CaloricError(f"derivatives of order > {MAX_ORDER} are not supported (got {k})")


def evaluate(c: CaloricComponent, z: PointLike):
    """Value of ``c`` at one point (float) or a batch of points (array)."""
    pts, single = _as_points(z, c.d)
    out = c._derivative_array(pts, (0,) * c.d)
    return float(out[0]) if single else out


def derivative(c: CaloricComponent, k: Union[MultiIndex, Sequence[int]], z: PointLike):
    """Exact mixed partial derivative ``d^|k| c / dx^k_x dt^k_t`` at ``z``."""
    k = k if isinstance(k, MultiIndex) else MultiIndex(tuple(k))
    if len(k.k) != c.d:
        raise CaloricError(f"multi-index must have {c.d} entries")
    _check_order(k.k)
    pts, single = _as_points(z, c.d)
    out = c._derivative_array(pts, k.k)
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# heat maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HeatMap:
    """A map ``R^(m+1) -> R^(m+1)`` whose ``m + 1`` components are caloric."""

    m: int
    components: tuple[CaloricComponent, ...]
    normalized: bool = False

    def __post_init__(self):
        _check_dim(self.m)
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.components) != self.m + 1:
            raise CaloricError(f"a heat map in dimension m={self.m} needs {self.m + 1} components")
        if any(c.m != self.m for c in self.components):
            raise CaloricError("component dimension mismatch")

    @property
    def d(self) -> int:
        return self.m + 1

    def value(self, z: PointLike) -> np.ndarray:
        pts, single = _as_points(z, self.d)
        zero = (0,) * self.d
        out = np.stack([c._derivative_array(pts, zero) for c in self.components], axis=-1)
        return out[0] if single else out

    __call__ = value

    def jacobian(self, z: PointLike) -> np.ndarray:
        pts, single = _as_points(z, self.d)
        d = self.d
        units = _unit_indices(d)
        powers = _power_table(pts, max(c.max_degree for c in self.components))
        out = np.empty((pts.shape[0], d, d))
        for i, c in enumerate(self.components):
            for j, col in enumerate(c._derivative_arrays(pts, units, powers)):
                out[:, i, j] = col
        return out[0] if single else out

    def scaled(self, c: float) -> "HeatMap":
        return HeatMap(self.m, tuple(comp.scaled(c) for comp in self.components), self.normalized)

    def to_dict(self) -> dict:
        return map_to_dict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


@dataclass(frozen=True)
class LinearMap:
    """``z -> A z + b``.

    Shares the map interface of :class:`HeatMap` but is not caloric unless
    the time column of ``A`` vanishes (which makes it singular). Used as an
    exactness reference for the solvers.
    """

    matrix: tuple[tuple[float, ...], ...]
    offset: tuple[float, ...] | None = None
    normalized: bool = False

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 2:
            raise CaloricError("linear map needs a square matrix of size >= 2")
        _check_dim(A.shape[0] - 1)
        object.__setattr__(self, "matrix", tuple(tuple(float(v) for v in row) for row in A))
        b = np.zeros(A.shape[0]) if self.offset is None else np.asarray(self.offset, dtype=float)
        object.__setattr__(self, "offset", tuple(float(v) for v in b))

    @property
    def m(self) -> int:
        return len(self.matrix) - 1

    @property
    def d(self) -> int:
        return len(self.matrix)

    def value(self, z: PointLike) -> np.ndarray:
        pts, single = _as_points(z, self.d)
        out = pts @ np.asarray(self.matrix).T + np.asarray(self.offset)
        return out[0] if single else out

    __call__ = value

    def jacobian(self, z: PointLike) -> np.ndarray:
        pts, single = _as_points(z, self.d)
        out = np.broadcast_to(np.asarray(self.matrix), (pts.shape[0], self.d, self.d)).copy()
        return out[0] if single else out

    def scaled(self, c: float) -> "LinearMap":
        A = c * np.asarray(self.matrix)
        return LinearMap(tuple(map(tuple, A)), tuple(c * v for v in self.offset), self.normalized)

    def to_dict(self) -> dict:
        return map_to_dict(self)


AnyMap = Union[HeatMap, LinearMap]


def jacobian(F: AnyMap, z: PointLike) -> np.ndarray:
    """``F'(z)`` with entry ``(i, j) = dF_i / dz_j`` and ``z_{m+1} = t``."""
    return F.jacobian(z)


def normalize(F: AnyMap) -> AnyMap:
    """Rescale ``F`` so that ``|det F'(0)| = 1``; a no-op on normalized maps."""
    if F.normalized:
        return F
    det = float(np.linalg.det(F.jacobian(np.zeros(F.d))))
    if not abs(det) > SINGULAR_DET:
        raise SingularJacobianError(det)
    scale = abs(det) ** (-1.0 / F.d)
    return dataclasses.replace(F.scaled(scale), normalized=True)


def _check_normalized(F: AnyMap, tol: float = 1e-12) -> None:
    det = float(np.linalg.det(F.jacobian(np.zeros(F.d))))
    if abs(abs(det) - 1.0) > tol:
        raise CaloricError(f"map is flagged normalized but |det F'(0)| = {abs(det)!r}")


# ---------------------------------------------------------------------------
# convenience constructors
# ---------------------------------------------------------------------------


def poly(coeff: float, *degrees: int) -> PolyTerm:
    return PolyTerm(coeff, tuple(degrees))


def kernel(coeff: float, *source: float) -> KernelTerm:
    return KernelTerm(coeff, tuple(source))


def component(m: int, *terms: Term) -> CaloricComponent:
    return CaloricComponent(m, tuple(terms))


def _degrees(m: int, **orders: int) -> tuple[int, ...]:
    deg = [0] * m
    for name, n in orders.items():
        deg[int(name[1:]) - 1] = n
    return tuple(deg)


def identity_like_map(m: int) -> HeatMap:
    """``F_i = x_i`` for ``i <= m`` and ``F_{m+1} = (x_1^2 + 2t) / 2``; ``det F' == 1``."""
    comps = [component(m, PolyTerm(1.0, _degrees(m, **{f"x{i + 1}": 1}))) for i in range(m)]
    comps.append(component(m, PolyTerm(0.5, _degrees(m, x1=2))))
    return HeatMap(m, tuple(comps), normalized=True)


def cubic_test_map(m: int = 1, c: float = 0.1) -> HeatMap:
    """``F_1 = x_1 + c (x_1^3 + 6 x_1 t)``, other components as in :func:`identity_like_map`.

    For ``m = 1``, ``det F' = 1 - 3c x^2 + 6c t``.
    """
    base = identity_like_map(m)
    first = component(m, PolyTerm(1.0, _degrees(m, x1=1)), PolyTerm(c, _degrees(m, x1=3)))
    return HeatMap(m, (first,) + base.components[1:], normalized=True)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _term_to_dict(term: Term) -> dict:
    if isinstance(term, PolyTerm):
        return {"type": "poly", "coeff": term.coeff, "degrees": list(term.degrees)}
    return {"type": "kernel", "coeff": term.coeff, "source": list(term.source)}


def _term_from_dict(d: dict) -> Term:
    kind = d.get("type")
    if kind == "poly":
        return PolyTerm(d.get("coeff", 1.0), tuple(d["degrees"]))
    if kind == "kernel":
        return KernelTerm(d.get("coeff", 1.0), tuple(d["source"]))
    raise CaloricError(f"unknown term type {kind!r}")


def map_to_dict(F: AnyMap) -> dict:
    if isinstance(F, LinearMap):
        return {
            "kind": "linear",
            "m": F.m,
            "matrix": [list(r) for r in F.matrix],
            "offset": list(F.offset),
            "normalized": F.normalized,
        }
    return {
        "m": F.m,
        "components": [[_term_to_dict(t) for t in c.terms] for c in F.components],
        "normalized": F.normalized,
    }


def map_from_dict(doc: dict) -> AnyMap:
    try:
        if doc.get("kind", "heat") == "linear":
            F = LinearMap(
                tuple(tuple(r) for r in doc["matrix"]),
                tuple(doc["offset"]) if doc.get("offset") is not None else None,
                bool(doc.get("normalized", False)),
            )
            if doc.get("m") is not None and int(doc["m"]) != F.m:
                raise CaloricError("linear map size does not match m")
        else:
            m = int(doc["m"])
            comps = tuple(CaloricComponent(m, tuple(_term_from_dict(t) for t in terms)) for terms in doc["components"])
            F = HeatMap(m, comps, bool(doc.get("normalized", False)))
    except (KeyError, TypeError) as exc:
        raise CaloricError(f"malformed map document: {exc}") from exc
    if F.normalized:
        _check_normalized(F)
    return F


def map_from_json(text: str) -> AnyMap:
    return map_from_dict(json.loads(text))


def load_map(path) -> AnyMap:
    with open(path, encoding="utf-8") as fh:
        return map_from_json(fh.read())
