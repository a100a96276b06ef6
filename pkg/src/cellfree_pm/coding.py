"""Outer convolutional code, QPSK mapping and soft-input Viterbi decoding."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .detectors.mapping import QPSK, BitMapping

__all__ = ["CodeConfig", "Frame", "conv_encode", "qpsk_map", "viterbi_decode", "make_frame"]


@dataclass(frozen=True)
class CodeConfig:
    """Feed-forward convolutional code.

    Generators are octal strings; the most significant tap multiplies the
    current input bit. The default is the constraint-length-7, rate-1/3
    code (133, 171, 165) with zero-tail termination.
    """

    generators: tuple = ("133", "171", "165")
    constraint_length: int = 7
    info_block_bits: int = 100
    zero_tail: bool = True

    def __post_init__(self):
        k = self.constraint_length
        if k < 1:
            raise ValueError("constraint length must be >= 1")
        for g in self.taps:
            if g == 0:
                raise ValueError("all-zero generator")
            if g >= 1 << k:
                raise ValueError(f"generator exceeds constraint length {k}")

    @property
    def taps(self) -> tuple:
        return tuple(int(str(g), 8) for g in self.generators)

    @property
    def n_out(self) -> int:
        return len(self.generators)

    @property
    def tail(self) -> int:
        return self.constraint_length - 1 if self.zero_tail else 0

    @property
    def coded_bits(self) -> int:
        return self.n_out * (self.info_block_bits + self.tail)

    @property
    def n_states(self) -> int:
        return 1 << (self.constraint_length - 1)

    @cached_property
    def trellis(self):
        """``(next_state, outputs, predecessors)`` tables.

        The state holds the previous ``K - 1`` inputs, newest in the most
        significant position.
        """
        k, ns = self.constraint_length, self.n_states
        states = np.arange(ns)
        nxt = np.empty((ns, 2), dtype=int)
        out = np.empty((ns, 2, self.n_out), dtype=np.int8)
        for u in (0, 1):
            reg = (u << (k - 1)) | states
            nxt[:, u] = reg >> 1
            for j, g in enumerate(self.taps):
                out[:, u, j] = [bin(v & g).count("1") & 1 for v in reg]
        # predecessors of state s: both share the input bit u = s >> (k - 2)
        shift = max(k - 2, 0)
        mask = ns - 1
        pred = np.stack([((states << 1) & mask) | 0, ((states << 1) & mask) | 1], axis=1)
        if ns == 1:
            pred = np.zeros((1, 2), dtype=int)
        u_in = states >> shift if k > 1 else np.zeros(ns, dtype=int)
        return nxt, out, pred, u_in


def conv_encode(info_bits, code: CodeConfig = CodeConfig()) -> np.ndarray:
    """Encode with zero-tail termination; outputs are interleaved per input bit."""
    u = np.asarray(info_bits, dtype=np.int64)
    if u.shape[-1] != code.info_block_bits:
        raise ValueError(f"expected {code.info_block_bits} info bits")
    u = np.concatenate([u, np.zeros(u.shape[:-1] + (code.tail,), dtype=np.int64)], axis=-1)
    k = code.constraint_length
    outs = []
    for g in code.taps:
        taps = np.array([(g >> (k - 1 - j)) & 1 for j in range(k)])
        c = np.apply_along_axis(lambda row: np.convolve(row, taps)[: row.size], -1, u)
        outs.append(c % 2)
    return np.stack(outs, axis=-1).reshape(u.shape[:-1] + (-1,)).astype(np.int8)


def qpsk_map(coded_bits, mapping: BitMapping = QPSK) -> np.ndarray:
    """Gray QPSK: bit pairs ``(b_I, b_Q)`` become ``a(b_I) + 1j * a(b_Q)``."""
    bits = np.asarray(coded_bits)
    if bits.shape[-1] % 2:
        raise ValueError("QPSK mapping needs an even number of bits; pad the frame")
    amp = mapping.amplitudes(bits)
    return amp[..., 0::2] + 1j * amp[..., 1::2]


def viterbi_decode(llrs, code: CodeConfig = CodeConfig()) -> np.ndarray:
    """Max-sum Viterbi decoding of ``log P(1)/P(0)`` LLRs.

    Accepts ``(n_coded,)`` or a batch ``(F, n_coded)``; returns the info bits
    with the tail stripped. A coded bit equal to 1 earns ``+L``, a 0 earns
    nothing, which is the log-likelihood up to a constant.
    """
    llrs = np.asarray(llrs, dtype=float)
    squeeze = llrs.ndim == 1
    llrs = np.atleast_2d(llrs)
    if llrs.shape[-1] != code.coded_bits:
        raise ValueError(f"expected {code.coded_bits} LLRs, got {llrs.shape[-1]}")
    nxt, out, pred, u_in = code.trellis
    nframes = llrs.shape[0]
    steps = code.info_block_bits + code.tail
    ns = code.n_states
    per_step = llrs.reshape(nframes, steps, code.n_out)

    metric = np.full((nframes, ns), -np.inf)
    metric[:, 0] = 0.0
    decisions = np.empty((steps, nframes, ns), dtype=np.int8)
    # bits emitted on the branch into state s from each of its predecessors
    branch_bits = np.stack([out[pred[:, c], u_in] for c in (0, 1)], axis=1)  # (ns, 2, n_out)
    for t in range(steps):
        bm = np.einsum("fj,scj->fsc", per_step[:, t], branch_bits)
        cand = metric[:, pred] + bm
        choice = (cand[..., 1] > cand[..., 0]).astype(np.int8)
        decisions[t] = choice
        metric = np.where(choice == 1, cand[..., 1], cand[..., 0])

    if code.zero_tail:
        state = np.zeros(nframes, dtype=int)
    else:
        state = np.argmax(metric, axis=1)
    bits = np.empty((nframes, steps), dtype=np.int8)
    rows = np.arange(nframes)
    for t in range(steps - 1, -1, -1):
        bits[:, t] = u_in[state]
        state = pred[state, decisions[t, rows, state]]
    info = bits[:, : code.info_block_bits]
    return info[0] if squeeze else info


@dataclass
class Frame:
    info_bits: np.ndarray
    coded_bits: np.ndarray
    symbols: np.ndarray


def make_frame(info_bits, code: CodeConfig = CodeConfig(), mapping: BitMapping = QPSK) -> Frame:
    coded = conv_encode(info_bits, code)
    if coded.shape[-1] % 2:
        coded = np.concatenate([coded, np.zeros(coded.shape[:-1] + (1,), dtype=coded.dtype)], -1)
    return Frame(np.asarray(info_bits), coded, qpsk_map(coded, mapping))
