"""Network geometry, large-scale fading and small-scale channel draws.

APs and users live on a square torus (the deployment wraps around at the
edges). Large-scale fading combines a single-slope path-loss law with
log-normal shadowing that is correlated across users seen from the same AP.

Array conventions used throughout the package: per-link quantities are
indexed ``[m, k]`` (AP first, user second), so ``beta`` has shape ``(M, K)``,
correlation matrices ``(M, K, N_AP, N_AP)`` and channels ``(M, K, N_AP)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "ConfigurationError",
    "CorrelationError",
    "Deployment",
    "PathLossParams",
    "ShadowingParams",
    "LargeScaleMap",
    "CorrelationSet",
    "wrap_distance",
    "pairwise_wrap_distance",
    "path_loss_db",
    "noise_power_w",
    "draw_deployment",
    "draw_shadowing",
    "large_scale_map",
    "build_correlations",
    "exponential_correlation",
    "draw_channels",
    "crandn",
]


class ConfigurationError(ValueError):
    """Invalid physical or model parameters."""


class CorrelationError(ValueError):
    """A supplied spatial correlation matrix failed validation."""


@dataclass(frozen=True)
class PathLossParams:
    """Single-slope path loss ``PL(d) = intercept_db + slope_db * log10(d / 1 km)``."""

    intercept_db: float = 140.7
    slope_db: float = 36.7
    d_min_m: float = 10.0

    def __post_init__(self):
        if not np.isfinite(self.intercept_db) or not np.isfinite(self.slope_db):
            raise ConfigurationError("path-loss coefficients must be finite")
        if self.slope_db < 0:
            raise ConfigurationError("path-loss slope must be non-negative")
        if not self.d_min_m > 0:
            raise ConfigurationError("d_min_m must be positive")


@dataclass(frozen=True)
class ShadowingParams:
    sigma_db: float = 8.0
    decorrelation_m: float = 100.0

    def __post_init__(self):
        if self.sigma_db < 0:
            raise ConfigurationError("shadowing std must be >= 0")
        if not self.decorrelation_m > 0:
            raise ConfigurationError("decorrelation distance must be > 0")


@dataclass
class Deployment:
    ap_positions: np.ndarray  # (M, 2)
    user_positions: np.ndarray  # (K, 2)
    side_m: float = 1000.0
    n_ap_antennas: int = 8
    carrier_hz: float = 1.9e9
    bandwidth_hz: float = 20e6
    noise_figure_db: float = 9.0
    noise_psd_dbm_hz: float = -174.0

    def __post_init__(self):
        self.ap_positions = np.atleast_2d(np.asarray(self.ap_positions, dtype=float))
        self.user_positions = np.atleast_2d(np.asarray(self.user_positions, dtype=float))
        if self.n_aps < 1 or self.n_users < 1 or self.n_ap_antennas < 1:
            raise ConfigurationError("need M >= 1, K >= 1 and N_AP >= 1")
        for pos in (self.ap_positions, self.user_positions):
            if pos.shape[1] != 2:
                raise ConfigurationError("positions must be 2-D")
            if np.any(pos < 0) or np.any(pos >= self.side_m):
                raise ConfigurationError("positions must lie in [0, side_m)^2")

    @property
    def n_aps(self) -> int:
        return self.ap_positions.shape[0]

    @property
    def n_users(self) -> int:
        return self.user_positions.shape[0]

    @property
    def noise_power_w(self) -> float:
        return noise_power_w(self.noise_psd_dbm_hz, self.bandwidth_hz, self.noise_figure_db)

    def distances(self) -> np.ndarray:
        """Wrapped AP-user distances, shape ``(M, K)``."""
        return wrap_distance(
            self.ap_positions[:, None, :], self.user_positions[None, :, :], self.side_m
        )


@dataclass
class LargeScaleMap:
    beta: np.ndarray  # (M, K), linear scale
    shadow_db: np.ndarray  # (M, K)

    def __post_init__(self):
        if not (np.all(np.isfinite(self.beta)) and np.all(self.beta > 0)):
            raise ConfigurationError("large-scale coefficients must be finite and > 0")


@dataclass
class CorrelationSet:
    r: np.ndarray  # (M, K, N, N) complex
    scaled_identity: bool = False
    _sqrt: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_antennas(self) -> int:
        return self.r.shape[-1]

    def traces(self) -> np.ndarray:
        """Real traces ``tr(R_{k,m})``, shape ``(M, K)``."""
        return np.real(np.trace(self.r, axis1=-2, axis2=-1))

    def sqrt(self) -> np.ndarray:
        """Hermitian square roots of every ``R_{k,m}`` (cached)."""
        if self._sqrt is None:
            if self.scaled_identity:
                n = self.n_antennas
                beta = self.traces() / n
                self._sqrt = np.sqrt(beta)[..., None, None] * np.eye(n)
            else:
                w, v = np.linalg.eigh(self.r)
                w = np.clip(w, 0.0, None)
                self._sqrt = (v * np.sqrt(w)[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))
        return self._sqrt


def wrap_distance(a, b, side: float):
    """Distance between points on a square torus of the given side.

    Broadcasts over leading dimensions; the last axis holds the 2-D coordinates.
    The result is the minimum Euclidean distance over the nine periodic images,
    which reduces to wrapping each coordinate difference into ``[0, side/2]``.
    """
    if not side > 0:
        raise ConfigurationError("side must be positive")
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % side
    d = np.minimum(d, side - d)
    out = np.sqrt(np.sum(d**2, axis=-1))
    return float(out) if out.ndim == 0 else out


def pairwise_wrap_distance(points: np.ndarray, side: float) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    return wrap_distance(points[:, None, :], points[None, :, :], side)


def path_loss_db(d, params: PathLossParams = PathLossParams()):
    """Path loss in dB at distance ``d`` (metres), clamped below at ``d_min_m``."""
    d = np.maximum(np.asarray(d, dtype=float), params.d_min_m)
    out = params.intercept_db + params.slope_db * np.log10(d / 1000.0)
    return float(out) if out.ndim == 0 else out


def noise_power_w(psd_dbm_hz: float, bandwidth_hz: float, noise_figure_db: float) -> float:
    dbm = psd_dbm_hz + 10 * np.log10(bandwidth_hz) + noise_figure_db
    return float(10 ** ((dbm - 30) / 10))


def draw_deployment(
    rng: np.random.Generator,
    n_aps: int,
    n_users: int,
    side_m: float = 1000.0,
    probe_at_center: bool = True,
    **kwargs,
) -> Deployment:
    """Uniform i.i.d. placement; user 0 is pinned to the centre when requested."""
    aps = rng.uniform(0, side_m, size=(n_aps, 2))
    users = rng.uniform(0, side_m, size=(n_users, 2))
    if probe_at_center:
        users[0] = side_m / 2
    return Deployment(aps, users, side_m=side_m, **kwargs)


def _psd_sqrt(cov: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(cov)
    if w.min() < -1e-10 * max(abs(w.max()), 1.0):
        logger.warning(
            "shadowing covariance not PSD (min eigenvalue %.3g); projecting to nearest PSD",
            w.min(),
        )
    w = np.clip(w, 0.0, None)
    return v * np.sqrt(w)


def draw_shadowing(
    deployment: Deployment, rng: np.random.Generator, params: ShadowingParams = ShadowingParams()
) -> np.ndarray:
    """Shadowing map in dB, shape ``(M, K)``.

    For every AP the user vector is Gaussian with covariance
    ``sigma^2 * 2 ** (-d(k, j) / d_corr)`` where ``d`` is the wrapped user-user
    distance. Draws are independent across APs.
    """
    m, k = deployment.n_aps, deployment.n_users
    if params.sigma_db == 0:
        return np.zeros((m, k))
    dist = pairwise_wrap_distance(deployment.user_positions, deployment.side_m)
    cov = params.sigma_db**2 * 2.0 ** (-dist / params.decorrelation_m)
    root = _psd_sqrt(cov)
    z = rng.standard_normal((m, k))
    return z @ root.T


def large_scale_map(
    deployment: Deployment,
    rng: np.random.Generator,
    path_loss: PathLossParams = PathLossParams(),
    shadowing: ShadowingParams = ShadowingParams(),
) -> LargeScaleMap:
    shadow = draw_shadowing(deployment, rng, shadowing)
    beta_db = -path_loss_db(deployment.distances(), path_loss) + shadow
    return LargeScaleMap(beta=10 ** (beta_db / 10), shadow_db=shadow)


def exponential_correlation(n: int, rho: complex) -> np.ndarray:
    """Exponential ULA correlation template ``rho^|i-j|`` (unit diagonal, trace ``n``)."""
    idx = np.arange(n)
    diff = idx[:, None] - idx[None, :]
    rho = complex(rho)
    out = np.where(diff >= 0, rho ** np.abs(diff), np.conj(rho) ** np.abs(diff))
    return out.astype(complex)


def _validate_correlations(r: np.ndarray, beta: np.ndarray, rtol: float = 1e-9):
    n = r.shape[-1]
    herm = np.conj(np.swapaxes(r, -1, -2))
    scale = np.max(np.abs(r), axis=(-2, -1), keepdims=True)
    scale = np.where(scale > 0, scale, 1.0)
    if np.any(np.abs(r - herm) > 1e-10 * scale):
        raise CorrelationError("correlation matrices must be Hermitian")
    w = np.linalg.eigvalsh(0.5 * (r + herm))
    if np.any(w < -1e-10 * scale[..., 0]):
        raise CorrelationError("correlation matrices must be positive semidefinite")
    tr = np.real(np.trace(r, axis1=-2, axis2=-1)) / n
    if np.any(np.abs(tr - beta) > rtol * np.abs(beta)):
        raise CorrelationError("tr(R)/N_AP must equal beta for every link")


def build_correlations(
    ls: LargeScaleMap,
    n_antennas: int,
    mode: str = "uncorrelated",
    matrices: np.ndarray | None = None,
    rho: complex = 0.5,
) -> CorrelationSet:
    """Per-link spatial correlation matrices.

    Parameters
    ----------
    ls : LargeScaleMap
    n_antennas : int
    mode : {"uncorrelated", "exponential", "custom"}
        ``uncorrelated`` gives ``beta * I``; ``exponential`` scales the template
        :func:`exponential_correlation` by ``beta``; ``custom`` takes the
        ``(M, K, N, N)`` array in ``matrices`` and validates it (Hermitian,
        PSD, ``tr(R)/N = beta``) without rescaling.
    """
    beta = ls.beta
    if np.any(beta <= 0):
        raise ConfigurationError("beta must be positive")
    eye = np.eye(n_antennas, dtype=complex)
    if mode == "uncorrelated":
        return CorrelationSet(beta[..., None, None] * eye, scaled_identity=True)
    if mode == "exponential":
        return CorrelationSet(beta[..., None, None] * exponential_correlation(n_antennas, rho))
    if mode == "custom":
        if matrices is None:
            raise ConfigurationError("custom mode requires matrices")
        r = np.asarray(matrices, dtype=complex)
        if r.shape != beta.shape + (n_antennas, n_antennas):
            raise CorrelationError(f"expected shape {beta.shape + (n_antennas, n_antennas)}")
        _validate_correlations(r, beta)
        return CorrelationSet(r)
    raise ConfigurationError(f"unknown correlation mode {mode!r}")


def crandn(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard circularly-symmetric complex Gaussian samples (unit variance)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def draw_channels(corr: CorrelationSet, rng: np.random.Generator) -> np.ndarray:
    """Draw ``g_{k,m} ~ CN(0, R_{k,m})`` for every link, shape ``(M, K, N)``."""
    m, k, n, _ = corr.r.shape
    w = crandn(rng, (m, k, n))
    if corr.scaled_identity:
        return np.sqrt(corr.traces() / n)[..., None] * w
    return np.einsum("mkij,mkj->mki", corr.sqrt(), w)
