"""Monte Carlo frame-error-rate harness.

A *drop* fixes positions, shadowing, correlation matrices and pilots. For
each association size ``N`` and SNR point an :class:`OperatingPoint` adds
the association, the FPC powers (the probe user's power is set to hit the
requested SNR) and the per-AP interference variances. Each frame redraws
channels, pilot noise, data bits and data noise from a random stream keyed
only by ``(seed, drop, frame)``, so every detector, ``N`` and SNR point sees
the same realizations (common random numbers).
"""

from __future__ import annotations

import csv
import io
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .association import AssociationMap, associate, fpc_powers
from .coding import make_frame, viterbi_decode
from .config import SimConfig
from .detectors import QPSK, DetectorSpec, centralized_pm_llrs
from .geometry import (
    build_correlations,
    draw_channels,
    draw_deployment,
    large_scale_map,
)
from .pilots import Estimator, PilotBook, TrainingPowers, pilot_book, prepare_estimator, training_observable
from .uplink import effective_model, interference_variances, realify_matrix, realify_vector, synth_uplink

logger = logging.getLogger(__name__)

__all__ = [
    "PipelineError",
    "Drop",
    "OperatingPoint",
    "Trial",
    "LlrFrame",
    "FerRecord",
    "CSV_COLUMNS",
    "build_drop",
    "operating_point",
    "draw_trial",
    "fuse_llrs",
    "hard_decisions",
    "snr_k",
    "run_trial",
    "simulate_point",
    "run_sweep",
    "records_to_csv",
    "write_csv",
]

CSV_COLUMNS = ["detector", "r", "N", "snr_db", "frames", "frame_errors", "fer", "wall_seconds", "op_count"]

_DROP_STREAM = 0
_TRIAL_STREAM = 1


class PipelineError(RuntimeError):
    pass


def _stream(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=key)


@dataclass
class Drop:
    index: int
    deployment: object
    large_scale: object
    corr: object
    book: PilotBook
    training: TrainingPowers
    estimator: Estimator
    sigma2_w: float
    perfect_csi: bool = False

    @property
    def beta(self) -> np.ndarray:
        return self.large_scale.beta

    @property
    def r_traces(self) -> np.ndarray:
        return self.corr.traces()

    @property
    def c_traces(self) -> np.ndarray:
        if self.perfect_csi:
            return np.zeros_like(self.beta)
        return self.estimator.error_traces()


def build_drop(cfg: SimConfig, index: int = 0) -> Drop:
    rng = np.random.default_rng(_stream(cfg.seed, _DROP_STREAM, index))
    dep = draw_deployment(
        rng,
        cfg.n_aps,
        cfg.n_users,
        side_m=cfg.side_m,
        probe_at_center=cfg.probe_at_center,
        n_ap_antennas=cfg.n_ap_antennas,
        carrier_hz=cfg.carrier_hz,
        bandwidth_hz=cfg.bandwidth_hz,
        noise_figure_db=cfg.noise_figure_db,
        noise_psd_dbm_hz=cfg.noise_psd_dbm_hz,
    )
    ls = large_scale_map(dep, rng, cfg.path_loss, cfg.shadowing)
    corr = build_correlations(ls, cfg.n_ap_antennas, cfg.correlation_mode, rho=cfg.correlation_rho)
    book = pilot_book(cfg.n_users, cfg.tau_p, cfg.pilot_policy, rng)
    training = TrainingPowers(np.full(cfg.n_users, cfg.pilot_power_mw * 1e-3), cfg.tau_p)
    sigma2_w = dep.noise_power_w if cfg.noise_power_override_w is None else cfg.noise_power_override_w
    est = prepare_estimator(corr, book, training, sigma2_w)
    return Drop(index, dep, ls, corr, book, training, est, sigma2_w, cfg.perfect_csi)


def snr_k(k: int, eta: np.ndarray, assoc: AssociationMap, beta: np.ndarray, sigma2_w: float, n_ap: int) -> float:
    """Probe SNR in dB: ``eta_k N_AP sum_{m in M_k} beta[m, k] / sigma_w^2``."""
    aps = assoc.serving[k]
    lin = eta[k] * n_ap * np.sum(beta[aps, k]) / sigma2_w
    return float(10 * np.log10(lin)) if lin > 0 else float("-inf")


@dataclass
class OperatingPoint:
    n: int
    snr_db: float
    assoc: AssociationMap
    eta: np.ndarray
    sigma2_e: np.ndarray  # (M,)
    eval_users: np.ndarray
    active_aps: np.ndarray


def operating_point(cfg: SimConfig, drop: Drop, n: int, snr_db: float, probe: int = 0) -> OperatingPoint:
    """Association, powers and interference statistics for one ``(N, SNR)`` pair.

    Association depends only on ``beta``; powers follow FPC except for the
    probe user, whose power (unclamped) is scaled to meet ``snr_db``.
    """
    beta = drop.beta
    assoc = associate(beta, n)
    eta = fpc_powers(beta, assoc, cfg.fpc)
    aps = assoc.serving[probe]
    if len(aps):
        gain = cfg.n_ap_antennas * np.sum(beta[aps, probe]) / drop.sigma2_w
        eta[probe] = 10 ** (snr_db / 10) / gain
    sigma2_e = interference_variances(
        assoc.served, eta, drop.c_traces, drop.r_traces, drop.sigma2_w, cfg.n_ap_antennas
    )
    users = np.arange(cfg.n_users) if cfg.report_all_users else np.array([probe])
    active = sorted({int(m) for k in users for m in assoc.serving[k]})
    return OperatingPoint(n, snr_db, assoc, eta, sigma2_e, users, np.array(active, dtype=int))


@dataclass
class Trial:
    index: int
    g: np.ndarray
    g_hat: np.ndarray
    info: np.ndarray  # (K, info bits)
    symbols: np.ndarray  # (K, T)
    noise_seed: np.random.SeedSequence

    def observe(self, eta: np.ndarray, sigma2_w: float) -> np.ndarray:
        return synth_uplink(self.g, eta, self.symbols, sigma2_w, np.random.default_rng(self.noise_seed))


def draw_trial(cfg: SimConfig, drop: Drop, index: int) -> Trial:
    s_chan, s_pilot, s_bits, s_noise = _stream(cfg.seed, _TRIAL_STREAM, drop.index, index).spawn(4)
    g = draw_channels(drop.corr, np.random.default_rng(s_chan))
    if drop.perfect_csi:
        g_hat = g.copy()
    else:
        y_hat = training_observable(g, drop.book, drop.training, drop.sigma2_w, np.random.default_rng(s_pilot))
        g_hat = drop.estimator.estimate(y_hat)
    info = np.random.default_rng(s_bits).integers(0, 2, (cfg.n_users, cfg.info_block_bits), dtype=np.int8)
    frame = make_frame(info, cfg.code, QPSK)
    return Trial(index, g, g_hat, info, frame.symbols, s_noise)


@dataclass
class LlrFrame:
    """Per-AP LLR streams ``local[(m, k)]`` and CPU-side sums ``fused[k]``."""

    local: dict = field(default_factory=dict)
    fused: dict = field(default_factory=dict)


def fuse_llrs(local: dict, serving, users) -> dict:
    """Sum the LLRs every serving AP reported for each user."""
    fused = {}
    for k in users:
        aps = serving[k]
        if len(aps) == 0:
            continue
        try:
            parts = [local[(int(m), int(k))] for m in aps]
        except KeyError as exc:
            raise PipelineError(f"AP {exc.args[0][0]} did not report LLRs for user {k}") from exc
        fused[int(k)] = np.sum(parts, axis=0)
    return fused


def hard_decisions(fused: np.ndarray) -> np.ndarray:
    """Uncoded decision: bit 1 where the fused LLR is positive."""
    return (np.asarray(fused) > 0).astype(np.int8)


def _interleave(llr_i: np.ndarray, llr_q: np.ndarray, n_coded: int) -> np.ndarray:
    out = np.empty(2 * llr_i.shape[-1])
    out[0::2] = llr_i
    out[1::2] = llr_q
    return out[:n_coded]


def _local_frame(spec: DetectorSpec, point: OperatingPoint, trial: Trial, y_bar, n_coded) -> tuple:
    frame = LlrFrame()
    ops = 0
    eval_set = set(int(k) for k in point.eval_users)
    for m in point.active_aps:
        users = point.assoc.served[m]
        model = effective_model(users, trial.g_hat[m], point.eta, point.sigma2_e[m])
        out = spec.local(realify_vector(y_bar[m]), model.b_real, model.sigma2_e, QPSK)
        ops += out.op_count
        nm = len(users)
        for j, k in enumerate(users):
            if int(k) in eval_set:
                frame.local[(int(m), int(k))] = _interleave(out.llrs[j], out.llrs[nm + j], n_coded)
    frame.fused = fuse_llrs(frame.local, point.assoc.serving, point.eval_users)
    return frame, ops


def _centralized_frame(spec: DetectorSpec, drop: Drop, point: OperatingPoint, trial: Trial, y_bar, n_coded):
    frame = LlrFrame()
    ops = 0
    for k in point.eval_users:
        aps = point.assoc.serving[k]
        if len(aps) == 0:
            continue
        union = point.assoc.union_users(k)
        sig = interference_variances(
            [union] * len(aps),
            point.eta,
            drop.c_traces[aps],
            drop.r_traces[aps],
            drop.sigma2_w,
            drop.corr.n_antennas,
        )
        scale = np.sqrt(point.eta[union])[:, None]
        ys = [realify_vector(y_bar[m]) for m in aps]
        bs = [realify_matrix((trial.g_hat[m][union] * scale).T) for m in aps]
        out = centralized_pm_llrs(ys, bs, sig, QPSK, r=spec.r)
        ops += out.op_count
        p = int(np.flatnonzero(union == k)[0])
        frame.fused[int(k)] = _interleave(out.llrs[p], out.llrs[len(union) + p], n_coded)
    return frame, ops


def run_trial(cfg: SimConfig, drop: Drop, point: OperatingPoint, trial: Trial, detectors) -> dict:
    """Detect, fuse and decode one frame for each detector.

    Returns ``{label: (error_flags, op_count, seconds)}`` with one flag per
    evaluated user; users without any serving AP are counted as errors.
    """
    code = cfg.code
    y_bar = trial.observe(point.eta, drop.sigma2_w)
    results = {}
    for spec in detectors:
        t0 = time.perf_counter()
        if spec.centralized:
            frame, ops = _centralized_frame(spec, drop, point, trial, y_bar, code.coded_bits)
        else:
            frame, ops = _local_frame(spec, point, trial, y_bar, code.coded_bits)
        flags = np.ones(len(point.eval_users), dtype=bool)
        decodable = [i for i, k in enumerate(point.eval_users) if int(k) in frame.fused]
        if decodable:
            llrs = np.stack([frame.fused[int(point.eval_users[i])] for i in decodable])
            decoded = viterbi_decode(llrs, code)
            sent = trial.info[point.eval_users[decodable]]
            flags[decodable] = np.any(decoded != sent, axis=1)
        results[spec.label] = (flags, ops, time.perf_counter() - t0)
    return results


@dataclass
class FerRecord:
    detector: str
    r: int | None
    N: int
    snr_db: float
    frames: int = 0
    frame_errors: int = 0
    wall_seconds: float = 0.0
    op_count: int = 0
    low_confidence: bool = False
    error_flags: list = field(default_factory=list, repr=False)

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else float("nan")

    def sort_key(self):
        return (self.detector, self.N, -1 if self.r is None else self.r, self.snr_db)


def simulate_point(cfg: SimConfig, drops, n: int, snr_db: float, detectors=None, paired: bool = False):
    """Accumulate frames at one ``(N, SNR)`` pair until every detector is done.

    A detector stops once it has ``target_frame_errors`` errors (or at
    ``max_frames``). With ``paired=True`` every detector keeps running until
    all of them reached the target, so all see exactly the same frames.
    """
    specs = list(detectors if detectors is not None else cfg.detector_specs)
    points = [operating_point(cfg, d, n, snr_db) for d in drops]
    records = {s.label: FerRecord(s.name, s.r, n, snr_db) for s in specs}
    active = list(specs)
    for f in range(cfg.max_frames):
        if not active:
            break
        d = f % len(drops)
        trial = draw_trial(cfg, drops[d], f)
        out = run_trial(cfg, drops[d], points[d], trial, active)
        for spec in active:
            flags, ops, secs = out[spec.label]
            rec = records[spec.label]
            rec.frames += flags.size
            rec.frame_errors += int(flags.sum())
            rec.op_count += int(ops)
            rec.wall_seconds += secs
            rec.error_flags.append(flags)
        done = [s for s in active if records[s.label].frame_errors >= cfg.target_frame_errors]
        if paired:
            if len(done) == len(active):
                active = []
        else:
            active = [s for s in active if s not in done]
    for rec in records.values():
        rec.error_flags = np.concatenate(rec.error_flags) if rec.error_flags else np.zeros(0, bool)
        if rec.frame_errors < cfg.target_frame_errors:
            rec.low_confidence = True
            logger.warning(
                "%s N=%d snr=%.1f dB: only %d errors in %d frames",
                rec.detector, n, snr_db, rec.frame_errors, rec.frames,
            )
    return [records[s.label] for s in specs]


def _task(args):
    cfg, n, snr = args
    drops = [build_drop(cfg, i) for i in range(cfg.n_drops)]
    return simulate_point(cfg, drops, n, snr)


def run_sweep(cfg: SimConfig, threads: int = 1) -> list[FerRecord]:
    """FER for every detector, ``N`` and SNR point, sorted for output."""
    if not cfg.detectors:
        return []
    tasks = [(cfg, int(n), float(s)) for n in cfg.N for s in cfg.snr_points_db]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_task, tasks))
    else:
        drops = [build_drop(cfg, i) for i in range(cfg.n_drops)]
        chunks = [simulate_point(cfg, drops, n, s) for _, n, s in tasks]
    records = [r for chunk in chunks for r in chunk]
    return sorted(records, key=FerRecord.sort_key)


def records_to_csv(records, include_timing: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow([
            rec.detector,
            "" if rec.r is None else rec.r,
            rec.N,
            f"{rec.snr_db:g}",
            rec.frames,
            rec.frame_errors,
            f"{rec.fer:.6g}",
            f"{rec.wall_seconds:.3f}" if include_timing else "0",
            rec.op_count,
        ])
    return buf.getvalue()


def write_csv(records, path, include_timing: bool = False):
    with open(path, "w", newline="") as fh:
        fh.write(records_to_csv(records, include_timing))
