"""Simulation configuration: a flat dataclass loaded from YAML.

Keys carry their units in the name (``_mw``, ``_db``, ``_hz``, ``_m``).
Unknown keys are rejected so typos do not silently fall back to defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .association import FpcParams
from .coding import CodeConfig
from .detectors import parse_detector
from .geometry import ConfigurationError, PathLossParams, ShadowingParams

__all__ = ["SimConfig", "load_config", "dump_config"]


@dataclass
class SimConfig:
    # geometry
    n_aps: int = 50
    n_users: int = 20
    n_ap_antennas: int = 8
    side_m: float = 1000.0
    carrier_hz: float = 1.9e9
    bandwidth_hz: float = 20e6
    noise_figure_db: float = 9.0
    noise_psd_dbm_hz: float = -174.0
    path_loss_intercept_db: float = 140.7
    path_loss_slope_db: float = 36.7
    d_min_m: float = 10.0
    shadow_sigma_db: float = 8.0
    shadow_decorrelation_m: float = 100.0
    correlation_mode: str = "uncorrelated"
    correlation_rho: float = 0.5
    # training
    tau_p: int = 12
    tau_c: int = 200  # not enforced
    pilot_power_mw: float = 100.0
    pilot_policy: str = "round_robin"
    perfect_csi: bool = False
    # association and power control
    N: list = field(default_factory=lambda: [4, 8])
    p_max_mw: float = 100.0
    p0_dbmw: float = -10.0
    kappa: float = 0.5
    # detection and coding
    detectors: list = field(default_factory=lambda: ["mrc", "zf_df", "mmse_sic", "pm(2)", "pm(4)", "c_pm(4)"])
    generators: list = field(default_factory=lambda: ["133", "171", "165"])
    constraint_length: int = 7
    info_block_bits: int = 100
    zero_tail: bool = True
    # Monte Carlo
    snr_points_db: list = field(default_factory=lambda: [0.0, 5.0, 10.0])
    target_frame_errors: int = 200
    max_frames: int = 20000
    seed: int = 0
    n_drops: int = 1
    probe_at_center: bool = True
    report_all_users: bool = False
    noise_power_override_w: float | None = None
    record_wall_time: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.snr_points_db:
            raise ConfigurationError("snr_points_db must not be empty")
        if self.target_frame_errors < 1:
            raise ConfigurationError("target_frame_errors must be >= 1")
        if self.max_frames < 1 or self.n_drops < 1:
            raise ConfigurationError("max_frames and n_drops must be >= 1")
        if isinstance(self.N, int):
            self.N = [self.N]
        for n in self.N:
            if not 1 <= int(n) <= self.n_users:
                raise ConfigurationError(f"N={n} outside [1, K={self.n_users}]")
        if self.tau_p < 1:
            raise ConfigurationError("tau_p must be >= 1")
        for d in self.detectors:
            parse_detector(d)
        self.code  # validates generators
        self.path_loss
        self.shadowing
        self.fpc

    @property
    def path_loss(self) -> PathLossParams:
        return PathLossParams(self.path_loss_intercept_db, self.path_loss_slope_db, self.d_min_m)

    @property
    def shadowing(self) -> ShadowingParams:
        return ShadowingParams(self.shadow_sigma_db, self.shadow_decorrelation_m)

    @property
    def fpc(self) -> FpcParams:
        return FpcParams.from_units(self.p_max_mw, self.p0_dbmw, self.kappa)

    @property
    def code(self) -> CodeConfig:
        return CodeConfig(
            tuple(str(g) for g in self.generators),
            self.constraint_length,
            self.info_block_bits,
            self.zero_tail,
        )

    @property
    def detector_specs(self):
        return [parse_detector(d) for d in self.detectors]

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def load_config(path: str | Path | None = None, **overrides) -> SimConfig:
    data = {}
    if path is not None:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    data.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(SimConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    return SimConfig(**data)


def dump_config(cfg: SimConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
