"""Linear-front-end baselines: MMSE-SIC and maximum-ratio combining.

Both produce scalar Gaussian LLRs per real dimension so their output can go
through the same LLR fusion and decoding path as the soft detectors. Symbol
statistics account for the per-dimension symbol energy ``amplitude**2``.
"""

from __future__ import annotations

import warnings

import numpy as np

from .mapping import QPSK, BitMapping, DetectorOutput, as_batch, finish

_TINY = 1e-300


def mmse_sic_llrs(
    y: np.ndarray, b_hat: np.ndarray, sigma2_e: float, mapping: BitMapping = QPSK
) -> DetectorOutput:
    """MMSE successive interference cancellation.

    Layers are detected in order of decreasing post-MMSE SINR, recomputed
    after every cancellation. For the chosen layer ``j`` with filter
    ``w = S^-1 b_j`` (``S = a^2 B B^T + sigma_e^2/2 I`` over undetected layers)
    the output is ``mu x_j + v`` with ``mu = b_j^T w`` and
    ``var(v) = mu - a^2 mu^2``.
    """
    y2, squeeze = as_batch(y)
    b = np.asarray(b_hat, dtype=float)
    rows, n = b.shape
    a2 = mapping.amplitude**2
    resid = y2.copy()
    llrs = np.empty((n, y2.shape[1]))
    remaining = list(range(n))
    while remaining:
        sub = b[:, remaining]
        cov = a2 * sub @ sub.T + (sigma2_e / 2) * np.eye(rows)
        w_all = np.linalg.pinv(cov, hermitian=True) @ sub
        mu = np.sum(sub * w_all, axis=0)
        pick = int(np.flatnonzero(mu >= mu.max() * (1 - 1e-9))[0])
        j = remaining.pop(pick)
        w, m = w_all[:, pick], mu[pick]
        var = max(m - a2 * m * m, _TINY)
        z = w @ resid
        llrs[j] = mapping.scalar_llr(z, m, var)
        resid -= np.outer(b[:, j], mapping.slice(z))
    return DetectorOutput(finish(llrs, squeeze), op_count=n * y2.shape[1])


def mrc_llrs(
    y: np.ndarray, b_hat: np.ndarray, sigma2_e: float, mapping: BitMapping = QPSK
) -> DetectorOutput:
    """Matched filtering with a per-instance Gaussian interference model.

    ``z_j = b_j^T y / ||b_j||^2 = x_j + leakage + noise``; the residual
    variance is ``sigma_e^2 / (2 ||b_j||^2) + a^2 sum_{l != j} (b_j^T b_l)^2 / ||b_j||^4``.
    """
    y2, squeeze = as_batch(y)
    b = np.asarray(b_hat, dtype=float)
    norms2 = np.sum(b * b, axis=0)
    dead = norms2 <= 0
    if np.any(dead):
        warnings.warn("zero-norm column in MRC; its LLRs are set to zero", RuntimeWarning, stacklevel=2)
    z = (b.T @ y2) / np.where(dead, 1.0, norms2)[:, None]
    var = mrc_residual_variance(b, sigma2_e, mapping)
    llrs = mapping.scalar_llr(z, 1.0, np.maximum(var, _TINY)[:, None])
    llrs[dead] = 0.0
    return DetectorOutput(finish(llrs, squeeze), op_count=b.shape[1] * y2.shape[1])


def mrc_residual_variance(b_hat: np.ndarray, sigma2_e: float, mapping: BitMapping = QPSK) -> np.ndarray:
    """Model variance of ``z_j - x_j`` used inside :func:`mrc_llrs`."""
    b = np.asarray(b_hat, dtype=float)
    gram = b.T @ b
    norms2 = np.diag(gram).copy()
    norms2[norms2 <= 0] = 1.0
    off = gram**2
    np.fill_diagonal(off, 0.0)
    return (sigma2_e / 2) / norms2 + mapping.amplitude**2 * off.sum(axis=1) / norms2**2
