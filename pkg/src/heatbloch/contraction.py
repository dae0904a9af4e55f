"""Contraction radii, certified schlicht disks, and the chord inversion of ``w = F(z)``.

The fixed-point map is ``g_w(z) = z + F'(beta)^-1 (w - F(z))``. Substituting
the second-order Taylor expansion of ``F`` about ``beta`` shows this is the
same map as the remainder form, so no remainder integral is ever evaluated.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .caloric import AnyMap
from .linalg import invert, spectral_summary
from .sampling import ball_points

DEFAULT_SIGMA = 0.5
DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 200
MULTI_STARTS = 8
PAIR_SLACK = 1e-9


class CertificateViolation(ArithmeticError):
    def __init__(self, message: str, iterate=None):
        super().__init__(message)
        self.iterate = None if iterate is None else np.asarray(iterate)


class ConvergenceError(ArithmeticError):
    pass


def _check_common(sigma: float, K: float, m: int, a_m: float) -> None:
    if not 0.0 < sigma < 1.0:
        raise ValueError(f"sigma must lie in (0, 1), got {sigma!r}")
    if not K > 0.0:
        raise ValueError(f"K must be positive, got {K!r}")
    if not a_m >= 1.0:
        raise ValueError(f"a_m must be >= 1, got {a_m!r}")
    if m < 1:
        raise ValueError("m must be >= 1")


def eta_interior(eps_n: float, r_n: float, sigma: float, K: float, gamma: float, m: int, a_m: float) -> float:
    """Contraction radius about an interior maximizer ``beta_n``.

    ``(1 - sigma) (eps_n r_n / a_m)^4 / (2^(m+3) (m+1) K^(m+2) gamma^4)``.
    """
    _check_common(sigma, K, m, a_m)
    if not gamma > 1.0:
        raise ValueError(f"gamma must be > 1, got {gamma!r}")
    s = eps_n * r_n
    if not 0.0 < s < 1.0:
        raise ValueError(f"eps_n * r_n must lie in (0, 1), got {s!r}")
    eta = (1.0 - sigma) * (s / a_m) ** 4 / (2.0 ** (m + 3) * (m + 1) * K ** (m + 2) * gamma**4)
    assert eta <= s * s / 4.0
    return eta


def eta_origin(r_gamma: float, sigma: float, K: float, m: int, a_m: float, M_rgamma: float, lambda_at_0: float) -> float:
    """Contraction radius about the origin.

    ``(1 - sigma) lambda_F(0) (r_gamma / a_m)^4 / (2^(m+3) (m+1) K M(r_gamma)^(1/(m+1)))``.
    """
    _check_common(sigma, K, m, a_m)
    if not lambda_at_0 > 0.0:
        raise ValueError(f"lambda_F(0) must be positive, got {lambda_at_0!r}")
    if not 0.0 < r_gamma < 1.0:
        raise ValueError(f"r_gamma must lie in (0, 1), got {r_gamma!r}")
    if not M_rgamma > 0.0:
        raise ValueError(f"M(r_gamma) must be positive, got {M_rgamma!r}")
    return (1.0 - sigma) * lambda_at_0 * (r_gamma / a_m) ** 4 / (
        2.0 ** (m + 3) * (m + 1) * K * M_rgamma ** (1.0 / (m + 1))
    )


@dataclass(frozen=True)
class SchlichtCertificate:
    branch: str  # "interior" or "origin"
    n: int
    beta: tuple[float, ...]
    sigma: float
    eta: float
    lambda_at_beta: float
    rho: float
    center_image: tuple[float, ...]
    inputs: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.beta) - 1

    def a_priori_eta(self) -> float:
        """The contraction radius the formulas allow for the recorded inputs."""
        p = self.inputs
        if self.branch == "interior":
            return eta_interior(p["eps_n"], p["r_n"], self.sigma, p["K"], p["gamma"], self.m, p["a_m"])
        return eta_origin(p["r_gamma"], self.sigma, p["K"], self.m, p["a_m"], p["M_rgamma"], self.lambda_at_beta)

    def radius_cap(self) -> float:
        """``(eps_n r_n)^2 / 4`` (interior) or ``r_gamma^2 / 4`` (origin)."""
        p = self.inputs
        s = p["eps_n"] * p["r_n"] if self.branch == "interior" else p["r_gamma"]
        return s * s / 4.0

    def check(self) -> list[str]:
        problems = []
        if self.eta > self.radius_cap():
            problems.append(f"eta={self.eta!r} exceeds the radius cap {self.radius_cap()!r}")
        if self.rho != self.sigma * self.eta * self.lambda_at_beta:
            problems.append("rho != sigma * eta * lambda")
        if not math.hypot(*self.beta) + self.eta < 1.0:
            problems.append("contraction ball is not inside the open unit ball")
        return problems

    def with_eta(self, eta: float) -> "SchlichtCertificate":
        return SchlichtCertificate(
            self.branch,
            self.n,
            self.beta,
            self.sigma,
            eta,
            self.lambda_at_beta,
            self.sigma * eta * self.lambda_at_beta,
            self.center_image,
            dict(self.inputs),
        )

    def to_dict(self) -> dict:
        return {
            "branch": self.branch,
            "n": self.n,
            "beta": list(self.beta),
            "sigma": self.sigma,
            "eta": self.eta,
            "lambda_at_beta": self.lambda_at_beta,
            "rho": self.rho,
            "center_image": list(self.center_image),
            "inputs": dict(self.inputs),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SchlichtCertificate":
        return cls(
            branch=d["branch"],
            n=int(d["n"]),
            beta=tuple(float(v) for v in d["beta"]),
            sigma=float(d["sigma"]),
            eta=float(d["eta"]),
            lambda_at_beta=float(d["lambda_at_beta"]),
            rho=float(d["rho"]),
            center_image=tuple(float(v) for v in d["center_image"]),
            inputs=dict(d.get("inputs", {})),
        )


def _make_certificate(F: AnyMap, branch: str, n: int, beta, sigma: float, eta_fn, inputs: dict) -> SchlichtCertificate:
    beta = np.asarray(beta, dtype=float)
    lam = spectral_summary(F.jacobian(beta)).lambda_min
    eta = eta_fn(lam)
    return SchlichtCertificate(
        branch=branch,
        n=n,
        beta=tuple(float(v) for v in beta),
        sigma=float(sigma),
        eta=eta,
        lambda_at_beta=lam,
        rho=sigma * eta * lam,
        center_image=tuple(float(v) for v in F.value(beta)),
        inputs=inputs,
    )


def certify_interior(F: AnyMap, seq, n: int, sigma: float, K: float, a_m: float) -> SchlichtCertificate:
    """Certificate about ``beta_n``, the maximizer of ``|det F'|`` on the ball of radius ``r_n``."""
    inputs = {
        "K": K,
        "a_m": a_m,
        "gamma": seq.gamma,
        "eps_n": seq.eps[n],
        "r_n": seq.r[n],
    }
    return _make_certificate(
        F,
        "interior",
        n,
        seq.betas[n],
        sigma,
        lambda lam: eta_interior(seq.eps[n], seq.r[n], sigma, K, seq.gamma, F.m, a_m),
        inputs,
    )


def certify_origin(F: AnyMap, r_gamma: float, M_rgamma: float, sigma: float, K: float, a_m: float) -> SchlichtCertificate:
    inputs = {"K": K, "a_m": a_m, "r_gamma": r_gamma, "M_rgamma": M_rgamma}
    return _make_certificate(
        F,
        "origin",
        0,
        np.zeros(F.d),
        sigma,
        lambda lam: eta_origin(r_gamma, sigma, K, F.m, a_m, M_rgamma, lam),
        inputs,
    )


@dataclass(frozen=True)
class ChordResult:
    point: np.ndarray
    iterations: int
    residual: float
    max_offset: float  # largest ||z_k - beta|| over the iterates
    contraction_factor: float  # largest ||dz_{k+1}|| / ||dz_k|| above round-off


def chord_solve(
    F: AnyMap,
    beta,
    w,
    eta: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    start=None,
    jac_inv: np.ndarray | None = None,
) -> ChordResult:
    """Solve ``F(z) = w`` by ``z <- z + F'(beta)^-1 (w - F(z))`` inside the closed ``eta``-ball about ``beta``."""
    beta = np.asarray(beta, dtype=float)
    w = np.asarray(w, dtype=float)
    Ainv = invert(F.jacobian(beta)) if jac_inv is None else jac_inv
    z = beta.copy() if start is None else np.asarray(start, dtype=float).copy()
    limit = eta * (1.0 + 1e-12) + 4.0 * np.finfo(float).eps * (1.0 + float(np.linalg.norm(beta)))
    offset = float(np.linalg.norm(z - beta))
    if offset > limit:
        raise CertificateViolation(f"start lies outside the eta-ball (offset {offset!r} > {eta!r})", z)
    floor = 1e3 * np.finfo(float).eps * (1.0 + float(np.linalg.norm(beta)))
    max_offset = offset
    factor = 0.0
    prev_step = None
    for it in range(max_iter + 1):
        res_vec = w - F.value(z)
        residual = float(np.linalg.norm(res_vec))
        if residual < tol:
            return ChordResult(z, it, residual, max_offset, factor)
        if it == max_iter:
            break
        step = Ainv @ res_vec
        z = z + step
        offset = float(np.linalg.norm(z - beta))
        max_offset = max(max_offset, offset)
        if offset > limit:
            raise CertificateViolation(
                f"iterate {it + 1} left the eta-ball (offset {offset!r} > {eta!r})", z
            )
        step_norm = float(np.linalg.norm(step))
        if prev_step is not None and prev_step > floor:
            factor = max(factor, step_norm / prev_step)
        prev_step = step_norm
    raise ConvergenceError(f"no convergence in {max_iter} iterations (residual {residual!r})")


@dataclass(frozen=True)
class ContractionReport:
    beta: tuple[float, ...]
    eta: float
    sigma: float
    worst_pair_ratio: float
    worst_pair: tuple[tuple[float, ...], tuple[float, ...]]
    worst_row_norm: float
    row_norm_limit: float
    worst_row_point: tuple[float, ...]
    a_priori_eta: float | None
    pairs: int

    @property
    def pairs_ok(self) -> bool:
        return self.worst_pair_ratio <= 1.0 - self.sigma + PAIR_SLACK

    @property
    def rows_ok(self) -> bool:
        return self.worst_row_norm <= self.row_norm_limit

    @property
    def a_priori_ok(self) -> bool:
        return self.a_priori_eta is None or self.eta <= self.a_priori_eta * (1.0 + 1e-12)

    @property
    def passed(self) -> bool:
        return self.pairs_ok and self.rows_ok and self.a_priori_ok

    def to_dict(self) -> dict:
        return {
            "beta": list(self.beta),
            "eta": self.eta,
            "sigma": self.sigma,
            "pairs": self.pairs,
            "worst_pair_ratio": self.worst_pair_ratio,
            "worst_pair": [list(p) for p in self.worst_pair],
            "pair_limit": 1.0 - self.sigma + PAIR_SLACK,
            "worst_row_norm": self.worst_row_norm,
            "row_norm_limit": self.row_norm_limit,
            "worst_row_point": list(self.worst_row_point),
            "a_priori_eta": self.a_priori_eta,
            "pairs_ok": self.pairs_ok,
            "rows_ok": self.rows_ok,
            "a_priori_ok": self.a_priori_ok,
            "passed": self.passed,
        }


def verify_contraction(
    F: AnyMap,
    beta,
    eta: float,
    sigma: float,
    pair_budget: int = 2000,
    seed: int = 0,
    certificate: SchlichtCertificate | None = None,
) -> ContractionReport:
    """Sampled Lipschitz ratios and Jacobian row norms of ``g_w`` on the ``eta``-ball.

    With a certificate, the recorded ``eta`` is also compared with the
    radius the contraction formulas allow for its inputs.
    """
    beta = np.asarray(beta, dtype=float)
    d = beta.size
    Ainv = invert(F.jacobian(beta))
    pts = ball_points(d, 2 * pair_budget + 1, seed, eta, beta)[1:]
    z1, z2 = pts[:pair_budget], pts[pair_budget:]
    dz = z1 - z2
    dg = dz - (F.value(z1) - F.value(z2)) @ Ainv.T
    ratios = np.linalg.norm(dg, axis=1) / np.linalg.norm(dz, axis=1)
    ip = int(np.argmax(ratios))
    row_pts = np.vstack([beta, pts])
    G = np.eye(d) - np.einsum("ij,njk->nik", Ainv, F.jacobian(row_pts))
    rows = np.linalg.norm(G, axis=2).max(axis=1)
    ir = int(np.argmax(rows))
    a_priori = None
    if certificate is not None:
        a_priori = certificate.a_priori_eta()
    return ContractionReport(
        beta=tuple(beta.tolist()),
        eta=float(eta),
        sigma=float(sigma),
        worst_pair_ratio=float(ratios[ip]),
        worst_pair=(tuple(z1[ip].tolist()), tuple(z2[ip].tolist())),
        worst_row_norm=float(rows[ir]),
        row_norm_limit=(1.0 - sigma) / math.sqrt(d),
        worst_row_point=tuple(row_pts[ir].tolist()),
        a_priori_eta=a_priori,
        pairs=pair_budget,
    )


@dataclass(frozen=True)
class TargetOutcome:
    index: int
    w: tuple[float, ...]
    z: tuple[float, ...] | None
    iterations: int
    residual: float
    uniqueness_gap: float
    error: str | None = None


@dataclass(frozen=True)
class SchlichtReport:
    rho: float
    n_targets: int
    outcomes: tuple[TargetOutcome, ...]
    worst_residual: float
    worst_uniqueness_gap: float
    min_preimage_distance: float
    tol: float
    uniqueness_tol: float

    @property
    def failures(self) -> list[TargetOutcome]:
        return [o for o in self.outcomes if o.error is not None]

    @property
    def passed(self) -> bool:
        return (
            not self.failures
            and self.worst_residual < self.tol
            and self.worst_uniqueness_gap <= self.uniqueness_tol
            and self.min_preimage_distance > 0.0
        )

    def to_dict(self, include_targets: bool = False) -> dict:
        out = {
            "rho": self.rho,
            "n_targets": self.n_targets,
            "worst_residual": self.worst_residual,
            "worst_uniqueness_gap": self.worst_uniqueness_gap,
            "min_preimage_distance": self.min_preimage_distance,
            "failures": [{"index": o.index, "w": list(o.w), "error": o.error} for o in self.failures],
            "passed": self.passed,
        }
        if include_targets:
            out["targets"] = [
                {
                    "index": o.index,
                    "w": list(o.w),
                    "z": None if o.z is None else list(o.z),
                    "iterations": o.iterations,
                    "residual": o.residual,
                    "uniqueness_gap": o.uniqueness_gap,
                }
                for o in self.outcomes
            ]
        return out


def _solve_target(F, cert, Ainv, i, w, seed, n_starts, tol, max_iter) -> TargetOutcome:
    beta = np.asarray(cert.beta)
    try:
        main = chord_solve(F, beta, w, cert.eta, tol, max_iter, jac_inv=Ainv)
    except (CertificateViolation, ConvergenceError) as exc:
        return TargetOutcome(i, tuple(w.tolist()), None, 0, math.inf, math.inf, f"{type(exc).__name__}: {exc}")
    rng = np.random.default_rng([seed, i])
    gap = 0.0
    for _ in range(n_starts):
        u = rng.standard_normal(beta.size)
        start = beta + cert.eta * rng.random() ** (1.0 / beta.size) * u / np.linalg.norm(u)
        try:
            other = chord_solve(F, beta, w, cert.eta, tol, max_iter, start=start, jac_inv=Ainv)
        except (CertificateViolation, ConvergenceError) as exc:
            return TargetOutcome(
                i, tuple(w.tolist()), tuple(main.point.tolist()), main.iterations, main.residual, math.inf,
                f"multi-start {type(exc).__name__}: {exc}",
            )
        gap = max(gap, float(np.linalg.norm(other.point - main.point)))
    return TargetOutcome(i, tuple(w.tolist()), tuple(main.point.tolist()), main.iterations, main.residual, gap)


def verify_schlicht(
    F: AnyMap,
    cert: SchlichtCertificate,
    n_targets: int = 200,
    seed: int = 0,
    n_starts: int = MULTI_STARTS,
    tol: float = DEFAULT_TOL,
    uniqueness_tol: float = 1e-9,
    max_iter: int = DEFAULT_MAX_ITER,
    workers: int = 1,
) -> SchlichtReport:
    """Invert ``F`` at seeded targets in the certified disk and check uniqueness and injectivity."""
    beta = np.asarray(cert.beta)
    Ainv = invert(F.jacobian(beta))
    targets = ball_points(beta.size, n_targets, seed, cert.rho, np.asarray(cert.center_image))

    def run(i):
        return _solve_target(F, cert, Ainv, i, targets[i], seed, n_starts, tol, max_iter)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = tuple(pool.map(run, range(n_targets)))
    else:
        outcomes = tuple(run(i) for i in range(n_targets))
    solved = [o for o in outcomes if o.z is not None]
    Z = np.array([o.z for o in solved]).reshape(len(solved), beta.size)
    min_dist = math.inf
    if len(solved) > 1:
        diff = Z[:, None, :] - Z[None, :, :]
        dist = np.linalg.norm(diff, axis=2)
        dist[np.diag_indices(len(solved))] = math.inf
        min_dist = float(dist.min())
    return SchlichtReport(
        rho=cert.rho,
        n_targets=n_targets,
        outcomes=outcomes,
        worst_residual=max((o.residual for o in outcomes), default=0.0),
        worst_uniqueness_gap=max((o.uniqueness_gap for o in outcomes), default=0.0),
        min_preimage_distance=min_dist,
        tol=tol,
        uniqueness_tol=uniqueness_tol,
    )
