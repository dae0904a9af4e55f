from __future__ import annotations

from dataclasses import dataclass

import pytest

from heatbloch.cli import _default_am
from heatbloch.contraction import SchlichtCertificate, certify_interior, certify_origin
from heatbloch.radii import RadiiSequence, build_sequences
from heatbloch.takahashi import BallMaxOracle, estimate_K
from shipped_maps import SEQUENCE_CASES, cubic_map

K_SAFETY = 1.05
AM_SAFETY = 2.0


@dataclass
class Pipeline:
    F: object
    oracle: BallMaxOracle
    seq: RadiiSequence
    K_est: float
    K: float
    a_m: float
    origin: SchlichtCertificate
    interior: SchlichtCertificate


def run_pipeline(F, gamma: float, sigma: float = 0.5) -> Pipeline:
    oracle = BallMaxOracle(F)
    K_est = estimate_K(F, oracle=oracle).K
    K = K_est * K_SAFETY
    a_m = _default_am(F.m, 256, 0).a_m * AM_SAFETY
    seq = build_sequences(F, gamma, oracle)
    origin = certify_origin(F, seq.r_gamma, seq.M[0], sigma, K, a_m)
    interior = certify_interior(F, seq, 0, sigma, K, a_m)
    return Pipeline(F, oracle, seq, K_est, K, a_m, origin, interior)


@pytest.fixture(scope="session")
def cubic_pipeline() -> Pipeline:
    return run_pipeline(cubic_map(), 2.45)


@pytest.fixture(scope="session")
def sequence_cases():
    """``{name: (F, oracle, seq)}`` for the three sequence maps."""
    out = {}
    for name, factory, gamma in SEQUENCE_CASES:
        F = factory()
        oracle = BallMaxOracle(F)
        out[name] = (F, oracle, build_sequences(F, gamma, oracle))
    return out


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(LINES):
            terminalreporter.write_line(LINES[n])
