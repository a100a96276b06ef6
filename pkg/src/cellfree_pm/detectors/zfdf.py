"""Zero-forcing decision feedback with V-BLAST ordering.

Classic nulling and cancelling: at each step the nulling vector is the row
of the ridge-regularized pseudo-inverse ``(B^T B + eps I)^-1 B^T`` of the
still undetected columns, with ``eps = 1e-10`` times the mean column
energy. For full-rank models this is plain ZF-DF; for rank-deficient ones
(collinear channel estimates from users sharing a pilot) the nulling
vectors tend to the minimum-norm least-squares solution instead of
blowing up.
"""

from __future__ import annotations

import warnings

import numpy as np

from .mapping import QPSK, BitMapping, DetectorOutput, RankDeficientWarning, as_batch, finish

RIDGE = 1e-10


def _ridge(b: np.ndarray) -> float:
    n = b.shape[1]
    e = float(np.sum(b * b)) / max(n, 1)
    return RIDGE * e if e > 0 else RIDGE


def _check_rank(b: np.ndarray):
    rows, n = b.shape
    norms = np.sqrt(np.sum(b * b, axis=0))
    unit = b / np.where(norms > 0, norms, 1.0)
    if rows < n or np.any(norms == 0) or np.linalg.matrix_rank(unit, tol=1e-8) < n:
        warnings.warn(
            f"model matrix {b.shape} is rank deficient; using a ridge-regularized pseudo-inverse",
            RankDeficientWarning,
            stacklevel=3,
        )


def ridge_pinv(b: np.ndarray, eps: float) -> np.ndarray:
    """``(B^T B + eps I)^-1 B^T`` computed through the SVD."""
    u, s, vt = np.linalg.svd(b, full_matrices=False)
    return (vt.T * (s / (s * s + eps))) @ u.T


def nulling_plan(
    b_hat: np.ndarray,
    order=None,
    check: bool = True,
    sigma2_e: float | None = None,
    mapping: BitMapping = QPSK,
):
    """Detection order and the nulling vector used at each step.

    Without ``order`` the V-BLAST rule is applied: the undetected column
    with the best post-nulling SINR goes next,

        ``mu_j^2 / (||w_j||^2 sigma_e^2 / 2 + a^2 sum_{l != j} (w_j^T b_l)^2)``

    with ``mu_j = w_j^T b_j``. For a full-rank model ``mu_j = 1`` and the
    leakage vanishes, so this is the familiar smallest-row-norm rule. When
    columns are (nearly) collinear, as happens for users whose estimates
    come from the same pilot, the leakage term ranks them last instead of
    first. Without ``sigma2_e`` the plain row-norm rule is used. Near-ties
    within a relative ``1e-9`` go to the lower column index.

    Returns ``(order, w)`` with ``w`` of shape ``(n, rows)``.
    """
    b = np.asarray(b_hat, dtype=float)
    if check:
        _check_rank(b)
    rows, n = b.shape
    eps = _ridge(b)
    a2 = mapping.amplitude**2
    remaining = list(range(n))
    chosen, w = [], np.empty((n, rows))
    for step in range(n):
        sub = b[:, remaining]
        p = ridge_pinv(sub, eps)
        if order is None:
            norms = np.sum(p * p, axis=1)
            if sigma2_e is None:
                score = -norms
            else:
                cross = p @ sub
                mu = np.diag(cross).copy()
                leak = np.sum(cross**2, axis=1) - mu**2
                score = mu**2 / np.maximum(norms * sigma2_e / 2 + a2 * np.maximum(leak, 0.0), 1e-300)
            best = score.max()
            pick = int(np.flatnonzero(score >= best - 1e-9 * abs(best))[0])
        else:
            pick = remaining.index(int(order[step]))
        w[step] = p[pick]
        chosen.append(remaining.pop(pick))
    return np.array(chosen, dtype=int), w


def vblast_order(
    b_hat: np.ndarray, sigma2_e: float | None = None, check: bool = True, mapping: BitMapping = QPSK
) -> np.ndarray:
    """Greedy V-BLAST detection order (see :func:`nulling_plan`)."""
    return nulling_plan(b_hat, check=check, sigma2_e=sigma2_e, mapping=mapping)[0]


def cancel_detect(c: np.ndarray, k_mat: np.ndarray, mapping: BitMapping = QPSK):
    """Run nulling and cancelling on a batch.

    Works on projected quantities: ``c = W y`` of shape ``(..., f, T)`` and
    the cross-gain matrix ``k_mat = W B`` ``(..., f, f)``, with ``W`` the
    nulling vectors and ``B`` the model columns, both in detection order.
    Cancelling the earlier layers then only needs
    ``z_s = c_s - sum_{t<s} K[s, t] x_t``. Returns ``(x, z)``, sliced
    amplitudes and nulled statistics of shape ``(..., f, T)``.
    """
    c = np.asarray(c, dtype=float)
    shape = np.broadcast_shapes(c.shape[:-2], k_mat.shape[:-2]) + c.shape[-2:]
    f = shape[-2]
    x = np.empty(shape)
    z_all = np.empty(shape)
    for s in range(f):
        z = c[..., s, :]
        if s:
            z = z - (k_mat[..., s : s + 1, :s] @ x[..., :s, :])[..., 0, :]
        z_all[..., s, :] = z
        x[..., s, :] = mapping.slice(z)
    return x, z_all


def zf_df_detect(
    y: np.ndarray,
    b_hat: np.ndarray,
    sigma2_e: float | None = None,
    mapping: BitMapping = QPSK,
    order: np.ndarray | None = None,
) -> np.ndarray:
    """Hard ZF-DF bit decisions in the given order (V-BLAST order by default)."""
    y2, squeeze = as_batch(y)
    b = np.asarray(b_hat, dtype=float)
    order, w = nulling_plan(b, order, sigma2_e=sigma2_e, mapping=mapping)
    x_steps, _ = cancel_detect(w @ y2, w @ b[:, order], mapping)
    x = np.empty_like(x_steps)
    x[order] = x_steps
    bits = mapping.bits(x)
    return bits[:, 0] if squeeze else bits


def zf_df_llrs(
    y: np.ndarray, b_hat: np.ndarray, sigma2_e: float, mapping: BitMapping = QPSK
) -> DetectorOutput:
    """ZF-DF with per-layer Gaussian LLRs.

    Assuming earlier decisions are correct, the nulled statistic of layer
    ``j`` is ``mu x_j + v`` with ``mu = w^T b_j`` and
    ``var(v) = ||w||^2 sigma_e^2 / 2 + a^2 sum_l (w^T b_l)^2`` over the other
    undetected layers (the sum vanishes for full-rank models).
    """
    y2, squeeze = as_batch(y)
    b = np.asarray(b_hat, dtype=float)
    order, w = nulling_plan(b, sigma2_e=sigma2_e, mapping=mapping)
    cross = w @ b[:, order]  # (step, column in detection order)
    _, z = cancel_detect(w @ y2, cross, mapping)
    mu = np.diag(cross)
    leak = np.triu(cross**2, k=1).sum(axis=1)
    var = np.sum(w * w, axis=1) * sigma2_e / 2 + mapping.amplitude**2 * leak
    llrs = np.empty_like(z)
    llrs[order] = mapping.scalar_llr(z, mu[:, None], np.maximum(var, 1e-300)[:, None])
    return DetectorOutput(finish(llrs, squeeze), op_count=b.shape[1] * y2.shape[1])
