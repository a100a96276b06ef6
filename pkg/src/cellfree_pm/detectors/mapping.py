"""Bit labelling on the real-valued model and shared detector helpers."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

LLR_CLAMP = 100.0


class CapacityError(RuntimeError):
    """Raised when exhaustive enumeration would exceed the configured size cap."""


class RankDeficientWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class BitMapping:
    """QPSK seen per real dimension: one bit per dimension, Gray labelled.

    Bit 0 maps to ``+amplitude`` and bit 1 to ``-amplitude``; with
    ``amplitude = 1/sqrt(2)`` the complex symbol has unit energy. LLRs follow
    ``log P(b=1) / P(b=0)``, so a positive LLR favours the negative amplitude.
    """

    amplitude: float = 1 / np.sqrt(2)
    bits_per_real_dim: int = 1

    def amplitudes(self, bits) -> np.ndarray:
        return self.amplitude * (1.0 - 2.0 * np.asarray(bits, dtype=float))

    def bits(self, amplitudes) -> np.ndarray:
        return (np.asarray(amplitudes) < 0).astype(np.int8)

    def slice(self, v) -> np.ndarray:
        """Nearest constellation amplitude (ties go to the positive level)."""
        return np.where(np.asarray(v) >= 0, self.amplitude, -self.amplitude)

    def scalar_llr(self, z, gain, var) -> np.ndarray:
        """LLR of ``z = gain * x + n`` with ``n ~ N(0, var)``."""
        return -2.0 * gain * self.amplitude * np.asarray(z) / var


QPSK = BitMapping()


@dataclass
class DetectorOutput:
    llrs: np.ndarray  # (n_bits,) or (n_bits, T)
    op_count: int = 0


def bit_patterns(n: int) -> np.ndarray:
    """All ``2**n`` bit vectors, shape ``(2**n, n)``, first bit most significant."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int8)
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int8)


def as_batch(y: np.ndarray):
    """Return ``(y2d, squeeze)`` so detectors can work on ``(rows, T)`` arrays."""
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        return y[:, None], True
    return y, False


def finish(llrs: np.ndarray, squeeze: bool, clamp: float = LLR_CLAMP) -> np.ndarray:
    llrs = np.clip(np.nan_to_num(llrs, nan=0.0, posinf=clamp, neginf=-clamp), -clamp, clamp)
    return llrs[:, 0] if squeeze else llrs
