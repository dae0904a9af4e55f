"""Command-line entry point.

Every command writes one JSON document (or a CSV table with ``--format csv``)
that echoes its inputs and carries all intermediate quantities. Output is a
pure function of the configuration and seed.

Exit codes: 0 success, 1 verification failure, 2 invalid input,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import bloch_bound_report, estimate_am, optimize_constants, theorem_bound, theorem_bound_as_stated
from .caloric import CaloricError, component, kernel, map_from_dict, map_to_dict, normalize
from .contraction import (
    CertificateViolation,
    ConvergenceError,
    SchlichtCertificate,
    certify_interior,
    certify_origin,
    chord_solve,
    verify_contraction,
    verify_schlicht,
)
from .linalg import NearSingularMatrixError, spectral_summary
from .radii import SequenceError, build_sequences, gamma_from_r0, r_from_gamma
from .takahashi import (
    BallMaxOracle,
    DegenerateDeterminantError,
    NonMonotoneMaximaError,
    check_wu_inequalities,
    default_radii,
    estimate_K,
)

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("heatbloch")


class InputError(ValueError):
    pass


NUMERIC_ERRORS = (
    ArithmeticError,
    NearSingularMatrixError,
    DegenerateDeterminantError,
    NonMonotoneMaximaError,
    SequenceError,
    CertificateViolation,
    ConvergenceError,
)


@dataclass(frozen=True)
class RunConfig:
    map: dict
    m: int | None = None
    gamma: float | None = None
    r0: float | None = None
    sigma: float = 0.5
    a_m: float | None = None
    K: float | None = None
    k_safety: float = 1.05
    a_m_safety: float = 2.0
    sample_budget: int = 2048
    radii_grid_size: int = 32
    am_budget: int = 256
    n_targets: int = 200
    pair_budget: int = 2000
    ratio_tol: float = 1e-6
    chord_tol: float = 1e-12
    uniqueness_tol: float = 1e-9
    max_iter: int = 200
    seed: int = 0
    workers: int = 1
    map_source: str | None = field(default=None, compare=False)

    def validate(self) -> "RunConfig":
        if self.gamma is not None and self.r0 is not None:
            raise InputError("give exactly one of gamma and r0")
        if self.gamma is not None and not self.gamma > 1.0:
            raise InputError("gamma must be > 1")
        if self.r0 is not None and not 0.0 < self.r0 < 1.0:
            raise InputError("r0 must lie in (0, 1)")
        if not 0.0 < self.sigma < 1.0:
            raise InputError("sigma must lie in (0, 1)")
        if self.a_m is not None and not self.a_m >= 1.0:
            raise InputError("a_m must be >= 1")
        if self.K is not None and not self.K > 0.0:
            raise InputError("K must be positive")
        for name in ("ratio_tol", "chord_tol", "uniqueness_tol", "k_safety", "a_m_safety"):
            if not getattr(self, name) > 0.0:
                raise InputError(f"{name} must be positive")
        for name in ("sample_budget", "radii_grid_size", "am_budget", "n_targets", "pair_budget", "max_iter", "workers"):
            if int(getattr(self, name)) < 1:
                raise InputError(f"{name} must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise InputError("seed must be an unsigned 64-bit integer")
        return self

    def echo(self) -> dict:
        # workers only changes scheduling, never a number in the report
        d = asdict(self)
        d.pop("map_source")
        d.pop("workers")
        return d


_CONFIG_KEYS = {f for f in RunConfig.__dataclass_fields__} - {"map_source"}


def load_config(path: str | None, overrides: dict) -> RunConfig:
    doc: dict = {}
    base = Path(".")
    if path is not None:
        p = Path(path)
        try:
            doc = json.loads(p.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        base = p.parent
    doc.update({k: v for k, v in overrides.items() if v is not None})
    if "gamma" in overrides and overrides["gamma"] is not None:
        doc.pop("r0", None)
    if "r0" in overrides and overrides["r0"] is not None:
        doc.pop("gamma", None)
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    source = doc.get("map")
    if source is None:
        raise InputError("config needs a 'map' (path or inline document)")
    if isinstance(source, str):
        mp = Path(source) if Path(source).is_absolute() else base / source
        try:
            doc["map"] = json.loads(mp.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read map {mp}: {exc}") from exc
    try:
        cfg = RunConfig(**doc, map_source=source if isinstance(source, str) else None)
    except TypeError as exc:
        raise InputError(str(exc)) from exc
    return cfg.validate()


def _finite(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _finite(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(_finite(report), indent=2, sort_keys=True, allow_nan=False, ensure_ascii=False) + "\n"


def _report(command: str, cfg: RunConfig | None, results: dict) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "command": command, "version": __version__, "results": results}
    if cfg is not None:
        out["inputs"] = cfg.echo()
    return out


# ---------------------------------------------------------------------------
# a_m default
# ---------------------------------------------------------------------------


def default_am_family(m: int):
    """Heat polynomials of low degree and three kernel translates.

    Sources sit at times <= -1, so every translate is smooth on the closed unit ball.
    """
    fam = []
    for n in range(1, 7):
        fam.append(component(m, _poly_term(m, {0: n})))
    if m > 1:
        fam.append(component(m, _poly_term(m, {0: 1, 1: 1})))
        fam.append(component(m, _poly_term(m, {0: 2, 1: 2})))
    y = [0.0] * m
    y1 = [0.5] + [0.0] * (m - 1)
    y2 = [-0.8] + [0.0] * (m - 1)
    fam.append(component(m, kernel(1.0, *y, -1.25)))
    fam.append(component(m, kernel(1.0, *y1, -1.4)))
    fam.append(component(m, kernel(1.0, *y2, -1.2)))
    return fam


def _poly_term(m, degs):
    from .caloric import PolyTerm

    d = [0] * m
    for i, n in degs.items():
        d[i] = n
    return PolyTerm(1.0, tuple(d))


AM_RADII = (0.3, 0.5, 0.7, 0.9)


@lru_cache(maxsize=16)
def _default_am(m: int, budget: int, seed: int):
    return estimate_am(m, default_am_family(m), AM_RADII, budget, seed)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _map_and_normalize(cfg: RunConfig):
    F0 = map_from_dict(cfg.map)
    if cfg.m is not None and cfg.m != F0.m:
        raise InputError(f"config m={cfg.m} does not match the map (m={F0.m})")
    det0 = float(np.linalg.det(F0.jacobian(np.zeros(F0.d))))
    F = normalize(F0)
    return F, {"det_at_origin": det0, "scale": 1.0 if F0.normalized else abs(det0) ** (-1.0 / F0.d)}


def cmd_estimate_k(cfg: RunConfig) -> tuple[dict, int]:
    F, norm = _map_and_normalize(cfg)
    est = estimate_K(F, default_radii(cfg.radii_grid_size), cfg.sample_budget, cfg.seed, cfg.workers)
    res = {"normalization": norm, "m": F.m, **est.to_dict(), "K_inflated": est.K * cfg.k_safety}
    return _report("estimate-k", cfg, res), EXIT_OK


def cmd_certify(cfg: RunConfig) -> tuple[dict, int]:
    if cfg.gamma is None and cfg.r0 is None:
        raise InputError("certify needs gamma or r0")
    F, norm = _map_and_normalize(cfg)
    m = F.m
    oracle = BallMaxOracle(F, cfg.sample_budget, cfg.seed, cfg.workers)

    if cfg.K is None:
        est = estimate_K(F, default_radii(cfg.radii_grid_size), oracle=oracle)
        K, k_info = est.K * cfg.k_safety, {"source": "estimated", "estimate": est.K, "safety": cfg.k_safety}
    else:
        K, k_info = cfg.K, {"source": "config"}
    if cfg.a_m is None:
        am = _default_am(m, cfg.am_budget, cfg.seed)
        a_m, am_info = am.a_m * cfg.a_m_safety, {"source": "estimated", **am.to_dict(), "safety": cfg.a_m_safety}
    else:
        a_m, am_info = cfg.a_m, {"source": "config"}
    if cfg.r0 is not None:
        gamma, g_info = gamma_from_r0(cfg.r0), {"source": "r0", "r0": cfg.r0}
    else:
        gamma, g_info = cfg.gamma, {"source": "config"}

    seq = build_sequences(F, gamma, oracle, cfg.ratio_tol)
    problems = seq.check(cfg.ratio_tol)
    if problems:
        raise SequenceError("; ".join(problems))

    wu = [check_wu_inequalities(F, b, K).to_dict() for b in seq.betas]
    M0 = seq.M[0] ** (1.0 / (m + 1))
    qualifying = [n for n in range(seq.l + 1) if seq.eps[n] ** 4 * seq.M[n] ** (1.0 / (m + 1)) >= M0 / gamma**4]
    interior = [certify_interior(F, seq, n, cfg.sigma, K, a_m) for n in qualifying]
    best_interior = max(interior, key=lambda c: (c.rho, -c.n)) if interior else None
    origin = certify_origin(F, seq.r_gamma, seq.M[0], cfg.sigma, K, a_m)
    certificates = [c for c in (best_interior, origin) if c is not None]
    for c in certificates:
        issues = c.check()
        if issues:
            raise ArithmeticError(f"{c.branch} certificate invalid: {'; '.join(issues)}")
    bounds = bloch_bound_report(m, K, a_m, gamma, cfg.sigma, seq.M[0])
    best = max(certificates, key=lambda c: c.rho)
    res = {
        "normalization": norm,
        "normalized_map": map_to_dict(F),
        "m": m,
        "K": K,
        "K_info": k_info,
        "a_m": a_m,
        "a_m_info": am_info,
        "gamma": gamma,
        "gamma_info": g_info,
        "r_gamma_check": r_from_gamma(gamma),
        "sequence": seq.to_dict(),
        "ball_maxima": [r.to_dict() for r in oracle.records()],
        "wu_checks": wu,
        "wu_origin": check_wu_inequalities(F, np.zeros(F.d), K).to_dict(),
        "qualifying_indices": qualifying,
        "interior_candidates": [{"n": c.n, "rho": c.rho} for c in interior],
        "certificates": [c.to_dict() for c in certificates],
        "best_branch": best.branch,
        "bounds": bounds.to_dict(),
        "rho_exceeds_theorem_bound": best.rho > bounds.theorem_bound,
    }
    return _report("certify", cfg, res), EXIT_OK


def load_certificate(path: str, branch: str | None):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        res = doc["results"]
        F = map_from_dict(res["normalized_map"])
        certs = [SchlichtCertificate.from_dict(c) for c in res["certificates"]]
        branch = branch or res["best_branch"]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read certificate report {path}: {exc}") from exc
    for c in certs:
        if c.branch == branch:
            return F, c, doc
    raise InputError(f"report has no {branch!r} certificate")


def cmd_invert(path: str, w, branch: str | None = None, tol: float = 1e-12, max_iter: int = 200) -> tuple[dict, int]:
    F, cert, _ = load_certificate(path, branch)
    w = np.asarray(w, dtype=float)
    if w.size != F.d:
        raise InputError(f"target needs {F.d} coordinates")
    dist = float(np.linalg.norm(w - np.asarray(cert.center_image)))
    if dist > cert.rho:
        raise InputError(f"target is outside the certified disk (distance {dist!r} > rho {cert.rho!r})")
    res = chord_solve(F, cert.beta, w, cert.eta, tol, max_iter)
    out = {
        "certificate": cert.to_dict(),
        "w": w.tolist(),
        "z": res.point.tolist(),
        "iterations": res.iterations,
        "residual": res.residual,
        "max_offset": res.max_offset,
        "contraction_factor": res.contraction_factor,
    }
    return _report("invert", None, {**out, "certificate_path": str(path)}), EXIT_OK


def cmd_verify(path: str, branch: str | None = None, n_targets: int = 200, pair_budget: int = 2000,
               seed: int = 0, workers: int = 1, tol: float = 1e-12, uniqueness_tol: float = 1e-9,
               eta_factor: float = 1.0) -> tuple[dict, int]:
    F, cert, _ = load_certificate(path, branch)
    if eta_factor != 1.0:
        cert = cert.with_eta(cert.eta * eta_factor)
    con = verify_contraction(F, cert.beta, cert.eta, cert.sigma, pair_budget, seed, certificate=cert)
    sch = verify_schlicht(F, cert, n_targets, seed, tol=tol, uniqueness_tol=uniqueness_tol, workers=workers)
    ok = con.passed and sch.passed and not cert.check()
    res = {
        "certificate": cert.to_dict(),
        "eta_factor": eta_factor,
        "certificate_issues": cert.check(),
        "contraction": con.to_dict(),
        "schlicht": sch.to_dict(include_targets=True),
        "passed": ok,
    }
    echo = {"certificate_path": str(path), "branch": cert.branch, "n_targets": n_targets,
            "pair_budget": pair_budget, "seed": seed, "tol": tol, "uniqueness_tol": uniqueness_tol}
    return {**_report("verify", None, res), "inputs": echo}, EXIT_OK if ok else EXIT_VERIFY


def cmd_constants(resolution: int = 1000) -> tuple[dict, int]:
    opt = optimize_constants(resolution)
    table = [
        {
            "m": m,
            "K": K,
            "a_m": a,
            "theorem_bound": theorem_bound(m, K, a),
            "theorem_bound_as_stated": theorem_bound_as_stated(m, K, a),
        }
        for m in (1, 2, 3)
        for K in (1.0, 2.0, 4.0)
        for a in (1.0, 2.0)
    ]
    res = {"optimum": opt.to_dict(), "reproduces_quoted": opt.c_star >= 0.22, "table": table}
    return {**_report("constants", None, res), "inputs": {"resolution": resolution}}, EXIT_OK


# ---------------------------------------------------------------------------
# CSV views
# ---------------------------------------------------------------------------


def _csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: json.dumps(_finite(v)) if isinstance(v, (list, dict)) else _finite(v) for k, v in row.items()})
    return buf.getvalue()


def to_csv(report: dict) -> str:
    res = report["results"]
    cmd = report["command"]
    if cmd == "estimate-k":
        return _csv(res["per_radius"])
    if cmd == "certify":
        seq = res["sequence"]
        rows = [
            {"j": j, "r": r, "eps": e, "M": M, "beta": b}
            for j, (r, e, M, b) in enumerate(zip(seq["r"], seq["eps"], seq["M"], seq["betas"]))
        ]
        return _csv(rows)
    if cmd == "verify":
        return _csv(res["schlicht"]["targets"])
    if cmd == "constants":
        return _csv(res["table"])
    return _csv([{k: v for k, v in res.items() if not isinstance(v, dict)}])


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="Write the report here instead of stdout.")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def _add_run(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration.")
    p.add_argument("--map", dest="map", help="Map document (overrides the config).")
    p.add_argument("--seed", type=int)
    p.add_argument("--budget", dest="sample_budget", type=int, help="Samples per ball maximum.")
    p.add_argument("--radii", dest="radii_grid_size", type=int, help="Radius grid size for K.")
    p.add_argument("--workers", type=int)


def _point(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated point: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heatbloch", description="Schlicht disks of heat Bochner-Takahashi maps.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate-k", help="Estimate the Takahashi constant K over a radius grid.")
    _add_run(p)
    _add_common(p)

    p = sub.add_parser("certify", help="Build the radius sequence and emit schlicht certificates.")
    _add_run(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gamma", type=float)
    g.add_argument("--r0", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--a-m", dest="a_m", type=float)
    p.add_argument("--k", dest="K", type=float)
    _add_common(p)

    p = sub.add_parser("invert", help="Solve F(z) = w inside a stored certificate.")
    p.add_argument("--certificate", required=True, help="Report written by 'certify'.")
    p.add_argument("--branch", choices=("interior", "origin"))
    p.add_argument("--w", type=_point, required=True, help="Target, comma separated (use --w=-0.1,0.2 for a leading minus).")
    p.add_argument("--tol", type=float, default=1e-12)
    _add_common(p)

    p = sub.add_parser("verify", help="Check contraction and schlichtness of a stored certificate.")
    p.add_argument("--certificate", required=True)
    p.add_argument("--branch", choices=("interior", "origin"))
    p.add_argument("--targets", type=int, default=200)
    p.add_argument("--pairs", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--eta-factor", type=float, default=1.0, help="Inflate eta (negative controls).")
    _add_common(p)

    p = sub.add_parser("constants", help="Optimize sigma and gamma and tabulate the theorem bound.")
    p.add_argument("--resolution", type=int, default=1000)
    _add_common(p)
    return parser


def _overrides(args) -> dict:
    keys = ("map", "seed", "sample_budget", "radii_grid_size", "workers", "gamma", "r0", "sigma", "a_m", "K")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def run(argv=None) -> tuple[str, int, str | None]:
    """Parse ``argv`` and execute; returns ``(text, exit_code, out_path)``."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command in ("estimate-k", "certify"):
        if args.config is None and args.map is None:
            raise InputError("give --config or --map")
        cfg = load_config(args.config, _overrides(args))
        report, code = (cmd_estimate_k if args.command == "estimate-k" else cmd_certify)(cfg)
    elif args.command == "invert":
        report, code = cmd_invert(args.certificate, args.w, args.branch, args.tol)
    elif args.command == "verify":
        report, code = cmd_verify(args.certificate, args.branch, args.targets, args.pairs, args.seed,
                                  args.workers, eta_factor=args.eta_factor)
    else:
        report, code = cmd_constants(args.resolution)
    text = to_csv(report) if args.format == "csv" else dumps_report(report)
    return text, code, args.out


def main(argv=None) -> int:
    try:
        text, code, out = run(argv)
    except (InputError, CaloricError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure ({type(exc).__module__}.{type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
