"""Centralized PM at the CPU over stacked per-AP observations."""

from __future__ import annotations

import numpy as np

from .mapping import QPSK, BitMapping, DetectorOutput
from .pm import pm_llrs


def stack_models(ys, bs, sigma2s):
    """Whiten and stack per-AP real models.

    Each block is divided by its per-dimension noise standard deviation
    ``sqrt(sigma2_e / 2)``, so the stacked model has unit per-dimension noise
    and must be scored with an effective ``sigma2_e`` of 2.
    """
    y_blocks, b_blocks = [], []
    for y, b, s2 in zip(ys, bs, sigma2s):
        scale = 1.0 / np.sqrt(s2 / 2)
        y_blocks.append(np.asarray(y, dtype=float) * scale)
        b_blocks.append(np.asarray(b, dtype=float) * scale)
    if not b_blocks:
        raise ValueError("no AP observations to stack")
    ncols = {b.shape[1] for b in b_blocks}
    if len(ncols) != 1:
        raise ValueError("all blocks must describe the same user set")
    return np.concatenate(y_blocks, axis=0), np.vstack(b_blocks), 2.0


def centralized_pm_llrs(ys, bs, sigma2s, mapping: BitMapping = QPSK, r: int = 2) -> DetectorOutput:
    """PM on the tall model formed by all serving APs' observations.

    ``ys[i]`` and ``bs[i]`` are the realified observation and model of AP
    ``i`` over a common user set; ``sigma2s[i]`` its interference-plus-noise
    variance for that user set.
    """
    y, b, s2 = stack_models(ys, bs, sigma2s)
    return pm_llrs(y, b, s2, mapping, r=min(r, b.shape[1]))
