"""Uplink pilot training and MMSE channel estimation.

Pilots are columns of the ``tau_p x tau_p`` identity; users sharing a column
contaminate each other's estimates. Everything that depends only on the
second-order statistics (``Gamma``, the estimator filter and the error
covariance) is computed once per drop by :func:`prepare_estimator`; per-frame
work is then a batched matrix-vector product.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .geometry import CorrelationSet, crandn

logger = logging.getLogger(__name__)

__all__ = [
    "EstimationError",
    "PilotBook",
    "TrainingPowers",
    "Estimator",
    "assign_pilots",
    "pilot_book",
    "training_observable",
    "gamma_matrix",
    "mmse_estimate",
    "error_covariance",
    "prepare_estimator",
]

COND_LIMIT = 1e12


class EstimationError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class PilotBook:
    tau_p: int
    assignment: np.ndarray  # (K,) sequence index per user

    @property
    def sequences(self) -> np.ndarray:
        """Orthonormal pilot sequences as the columns of a ``tau_p x tau_p`` matrix."""
        return np.eye(self.tau_p, dtype=complex)

    def user_pilots(self) -> np.ndarray:
        """Pilot vector of every user, shape ``(tau_p, K)``."""
        return self.sequences[:, self.assignment]

    def overlap(self) -> np.ndarray:
        """``|phi_i^H phi_k|^2`` for every user pair, shape ``(K, K)``."""
        phi = self.user_pilots()
        return np.abs(phi.conj().T @ phi) ** 2


@dataclass(frozen=True)
class TrainingPowers:
    p_tilde: np.ndarray  # per-sample pilot power, W
    tau_p: int

    @property
    def p(self) -> np.ndarray:
        return self.tau_p * np.asarray(self.p_tilde, dtype=float)

    def __post_init__(self):
        if np.any(np.asarray(self.p_tilde) <= 0):
            raise ValueError("pilot powers must be positive")


def assign_pilots(
    n_users: int, tau_p: int, policy: str = "round_robin", rng: np.random.Generator | None = None
) -> np.ndarray:
    """Pilot index for every user.

    ``round_robin`` cycles through the sequences in user order, so reuse counts
    differ by at most one. ``random`` draws a uniformly random balanced
    assignment (a shuffled round-robin).
    """
    if tau_p < 1:
        raise ValueError("tau_p must be >= 1")
    base = np.arange(n_users) % tau_p
    if policy == "round_robin":
        return base
    if policy == "random":
        if rng is None:
            raise ValueError("random policy needs an rng")
        return rng.permutation(base)
    raise ValueError(f"unknown pilot policy {policy!r}")


def pilot_book(n_users: int, tau_p: int, policy: str = "round_robin", rng=None) -> PilotBook:
    return PilotBook(tau_p, assign_pilots(n_users, tau_p, policy, rng))


def training_observable(
    g: np.ndarray,
    book: PilotBook,
    powers: TrainingPowers,
    sigma2_w: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Projected pilot observations ``y_hat[m, k]`` for every AP and user.

    The received pilot block at AP ``m`` is ``Y_m = sum_i sqrt(p_i) g_{i,m} phi_i^H + W_m``
    and ``y_hat[m, k] = Y_m phi_k``. Users sharing a sequence therefore see the same
    noise projection, which is what makes their estimates correlated.
    """
    m, k, n = g.shape
    phi = book.user_pilots()  # (tau, K)
    sp = np.sqrt(powers.p)
    # (M, N, tau)
    y = np.einsum("mkn,kt->mnt", g * sp[None, :, None], phi.conj().T)
    if sigma2_w > 0:
        y = y + np.sqrt(sigma2_w) * crandn(rng, (m, n, book.tau_p))
    return np.einsum("mnt,tk->mkn", y, phi)


def gamma_matrix(k, m, corr: CorrelationSet, book: PilotBook, powers: TrainingPowers, sigma2_w):
    """``Gamma_{k,m} = sum_i p_i R_{i,m} |phi_i^H phi_k|^2 + sigma_w^2 I``."""
    w = powers.p * book.overlap()[:, k]
    n = corr.n_antennas
    return np.einsum("i,iab->ab", w, corr.r[m]) + sigma2_w * np.eye(n)


def _solve_herm(gamma: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(gamma)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        if not np.all(np.isfinite(gamma)) or np.allclose(gamma, 0):
            raise EstimationError("Gamma is singular: no noise and no pilot energy on this link")
        logger.warning("ill-conditioned Gamma (cond=%.3g); using regularized solve", cond)
        n = gamma.shape[-1]
        eps = 1e-12 * np.real(np.trace(gamma)) / n
        gamma = gamma + eps * np.eye(n)
    try:
        c = np.linalg.cholesky(gamma)
    except np.linalg.LinAlgError as exc:
        raise EstimationError(f"Gamma is not positive definite: {exc}") from exc
    z = np.linalg.solve(c, rhs)
    return np.linalg.solve(c.conj().T, z)


def mmse_estimate(y_hat, k, m, corr: CorrelationSet, powers: TrainingPowers, gamma):
    """``g_hat = sqrt(p_k) R Gamma^{-1} y_hat`` for a single link."""
    return np.sqrt(powers.p[k]) * corr.r[m, k] @ _solve_herm(gamma, np.asarray(y_hat))


def error_covariance(k, m, corr: CorrelationSet, powers: TrainingPowers, gamma):
    """``C = R - p_k R Gamma^{-1} R``."""
    r = corr.r[m, k]
    c = r - powers.p[k] * r @ _solve_herm(gamma, r)
    return 0.5 * (c + c.conj().T)


@dataclass
class Estimator:
    """Per-drop MMSE estimation statistics, all shaped ``(M, K, N, N)``."""

    gamma: np.ndarray
    filt: np.ndarray  # sqrt(p_k) R Gamma^{-1}
    est_cov: np.ndarray  # p_k R Gamma^{-1} R
    c: np.ndarray

    def estimate(self, y_hat: np.ndarray) -> np.ndarray:
        return np.einsum("mkij,mkj->mki", self.filt, y_hat)

    def error_traces(self) -> np.ndarray:
        return np.real(np.trace(self.c, axis1=-2, axis2=-1))


def prepare_estimator(
    corr: CorrelationSet, book: PilotBook, powers: TrainingPowers, sigma2_w: float
) -> Estimator:
    r = corr.r
    m, k, n, _ = r.shape
    p = powers.p
    w = p[:, None] * book.overlap()  # (i, k)
    gamma = np.einsum("ik,miab->mkab", w, r) + sigma2_w * np.eye(n)
    filt = np.empty_like(r)
    est_cov = np.empty_like(r)
    for mi in range(m):
        for ki in range(k):
            x = _solve_herm(gamma[mi, ki], r[mi, ki])  # Gamma^{-1} R
            filt[mi, ki] = np.sqrt(p[ki]) * x.conj().T
            ec = p[ki] * r[mi, ki] @ x
            est_cov[mi, ki] = 0.5 * (ec + ec.conj().T)
    c = r - est_cov
    return Estimator(gamma, filt, est_cov, c)
