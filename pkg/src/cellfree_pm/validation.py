"""Quick oracle and invariant checks behind ``cellfree-pm validate``.

Each check is small enough to run in seconds and returns a
:class:`CheckResult`. The full statistical acceptance runs live in the test
suite; this is the smoke-level version a user can run on an installed copy.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .coding import CodeConfig, conv_encode, viterbi_decode
from .detectors import QPSK, exact_ml_llrs, pm_llrs
from .sim import fuse_llrs

__all__ = ["CheckResult", "run_checks", "CHECKS"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def naive_ml_llrs(y, b, sigma2_e, a=QPSK.amplitude):
    """Double-loop posterior LLRs, kept independent of the vectorized detector."""
    n = b.shape[1]
    out = np.zeros(n)
    num = np.zeros(n)
    den = np.zeros(n)
    for bits in itertools.product((0, 1), repeat=n):
        x = np.array([a if v == 0 else -a for v in bits])
        p = np.exp(-np.sum((y - b @ x) ** 2) / sigma2_e)
        for i, v in enumerate(bits):
            if v:
                num[i] += p
            else:
                den[i] += p
    out[:] = np.log(num) - np.log(den)
    return out


def check_pm_equals_ml(rng, instances: int = 200) -> CheckResult:
    worst = 0.0
    for _ in range(instances):
        n_users = int(rng.integers(1, 4))
        n = 2 * n_users
        b = rng.standard_normal((2 * n_users + 2, n))
        y = rng.standard_normal(b.shape[0])
        s2 = float(rng.uniform(0.2, 2.0))
        d = np.abs(pm_llrs(y, b, s2, r=n).llrs - exact_ml_llrs(y, b, s2).llrs).max()
        worst = max(worst, float(d))
    return CheckResult("pm(r=n) equals exact ML", worst <= 1e-9, f"max |diff| = {worst:.2e}")


def check_ml_bruteforce(rng, instances: int = 50) -> CheckResult:
    worst = 0.0
    for _ in range(instances):
        b = rng.standard_normal((4, 4))
        y = rng.standard_normal(4) * 0.5
        s2 = float(rng.uniform(0.5, 2.0))
        d = np.abs(exact_ml_llrs(y, b, s2).llrs - naive_ml_llrs(y, b, s2)).max()
        worst = max(worst, float(d))
    return CheckResult("exact ML matches brute force", worst <= 1e-9, f"max |diff| = {worst:.2e}")


def check_pm_complexity(rng) -> CheckResult:
    b = rng.standard_normal((8, 6))
    y = rng.standard_normal(8)
    ops = [pm_llrs(y, b, 1.0, r=r).op_count for r in range(7)]
    ratios = np.array(ops[2:]) / np.array(ops[1:-1])
    ml_ok = exact_ml_llrs(y, b, 1.0).op_count == 2**6
    ok = bool(np.allclose(ratios, 2.0, rtol=0.05)) and ml_ok
    return CheckResult("op_count doubles per unit r", ok, f"ops = {ops}")


def check_coding(rng, frames: int = 50) -> CheckResult:
    code = CodeConfig()
    info = rng.integers(0, 2, (frames, code.info_block_bits))
    coded = np.stack([conv_encode(row, code) for row in info])
    llrs = np.where(coded == 1, 100.0, -100.0)
    dec = viterbi_decode(llrs, code)
    scaled = viterbi_decode(llrs * 0.37, code)
    ok = bool(np.array_equal(dec, info) and np.array_equal(scaled, dec))
    return CheckResult("coding round trip", ok, f"{frames} frames")


def check_fusion(rng) -> CheckResult:
    local = {(m, 0): rng.standard_normal(20) for m in range(3)}
    fused = fuse_llrs(local, [np.arange(3)], [0])[0]
    err = float(np.abs(fused - sum(local.values())).max())
    return CheckResult("fusion is a plain sum", err <= 1e-12, f"max |diff| = {err:.2e}")


CHECKS = (check_pm_equals_ml, check_ml_bruteforce, check_pm_complexity, check_coding, check_fusion)


def run_checks(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [check(rng) for check in CHECKS]
