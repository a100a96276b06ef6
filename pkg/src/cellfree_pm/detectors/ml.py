"""Exact per-bit posterior LLRs by exhaustive enumeration."""

from __future__ import annotations

import numpy as np

from .mapping import QPSK, BitMapping, CapacityError, DetectorOutput, as_batch, bit_patterns, finish

ML_BIT_CAP = 24


def logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    return np.squeeze(m, axis) + np.log(np.sum(np.exp(a - m), axis=axis))


def hypothesis_metrics(y2: np.ndarray, b: np.ndarray, x: np.ndarray, sigma2_e: float) -> np.ndarray:
    """``-||y - B x||^2 / sigma_e^2`` up to a per-sample constant.

    ``x`` holds hypotheses ``(H, n)`` and ``y2`` samples ``(rows, T)``. The
    common ``||y||^2`` term is dropped since only metric differences matter.
    """
    bx = x @ b.T  # (H, rows)
    return (2.0 * bx @ y2 - np.sum(bx * bx, axis=1)[:, None]) / sigma2_e


def masked_llrs(metrics: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """Per-bit log-sum-exp difference; ``metrics`` (H, T), ``bits`` (H, n) -> (n, T)."""
    n = bits.shape[1]
    out = np.empty((n, metrics.shape[1]))
    for i in range(n):
        one = bits[:, i] == 1
        out[i] = logsumexp(metrics[one], axis=0) - logsumexp(metrics[~one], axis=0)
    return out


def exact_ml_llrs(
    y: np.ndarray,
    b_hat: np.ndarray,
    sigma2_e: float,
    mapping: BitMapping = QPSK,
    cap: int = ML_BIT_CAP,
) -> DetectorOutput:
    """Exact marginal LLRs of every bit under the Gaussian model.

    ``y`` is ``(rows,)`` or ``(rows, T)``; ``b_hat`` is the real ``(rows, n)``
    model matrix. Enumerates all ``2**n`` hypotheses with a stable
    log-sum-exp, so ``n`` is limited to ``cap`` bits.
    """
    y2, squeeze = as_batch(y)
    b_hat = np.asarray(b_hat, dtype=float)
    n = b_hat.shape[1]
    if n * mapping.bits_per_real_dim > cap:
        raise CapacityError(
            f"exact ML over {n} bits exceeds the cap of {cap}; use partial marginalization"
        )
    bits = bit_patterns(n)
    d = hypothesis_metrics(y2, b_hat, mapping.amplitudes(bits), sigma2_e)
    llrs = masked_llrs(d, bits)
    return DetectorOutput(finish(llrs, squeeze), op_count=bits.shape[0] * y2.shape[1])
