"""Uplink data observation and the per-AP effective real-valued model.

The real-valued model stacks in-phase over quadrature: a complex vector
``v`` becomes ``[Re v; Im v]`` and a complex matrix ``A`` becomes
``[[Re A, -Im A], [Im A, Re A]]``. For ``N_m`` served users the real symbol
vector is ``[Re x_1 .. Re x_N, Im x_1 .. Im x_N]``, so row ``j`` of the LLR
output carries the in-phase bit of the ``j``-th served user and row
``N_m + j`` its quadrature bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .association import AssociationMap
from .geometry import crandn

__all__ = [
    "EffectiveModel",
    "synth_uplink",
    "realify_vector",
    "realify_matrix",
    "interference_variance",
    "interference_variances",
    "effective_model",
]


def synth_uplink(
    g: np.ndarray, eta: np.ndarray, symbols: np.ndarray, sigma2_w: float, rng: np.random.Generator
) -> np.ndarray:
    """Received data samples at every AP.

    Parameters
    ----------
    g : (M, K, N) complex true channels
    eta : (K,) uplink transmit powers
    symbols : (K, T) complex data symbols
    sigma2_w : noise power; zero disables the noise draw

    Returns
    -------
    (M, N, T) complex observations ``sum_k sqrt(eta_k) g_{k,m} x_k + w_m``.
    """
    symbols = np.asarray(symbols)
    if symbols.ndim == 1:
        symbols = symbols[:, None]
    m, _, n = g.shape
    y = np.einsum("mkn,kt->mnt", g * np.sqrt(eta)[None, :, None], symbols)
    if sigma2_w > 0:
        y = y + np.sqrt(sigma2_w) * crandn(rng, y.shape)
    return y


def realify_vector(v: np.ndarray) -> np.ndarray:
    """``[Re v; Im v]`` along the first axis (trailing axes are batch)."""
    v = np.asarray(v)
    return np.concatenate([v.real, v.imag], axis=0)


def realify_matrix(a: np.ndarray) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a))
    return np.block([[a.real, -a.imag], [a.imag, a.real]])


def interference_variances(
    served_sets,
    eta: np.ndarray,
    c_traces: np.ndarray,
    r_traces: np.ndarray,
    sigma2_w: float,
    n_antennas: int,
) -> np.ndarray:
    """Gaussian interference-plus-noise power at each AP.

    ``served_sets[m]`` are the users AP ``m`` detects; their estimation error
    counts as interference (``tr C``), every other user counts with its full
    channel (``tr R``). ``c_traces`` and ``r_traces`` have shape ``(M, K)``.
    """
    m, k = r_traces.shape
    out = np.empty(m)
    for mi in range(m):
        mask = np.zeros(k, dtype=bool)
        mask[np.asarray(served_sets[mi], dtype=int)] = True
        per_user = np.where(mask, c_traces[mi], r_traces[mi]) / n_antennas
        out[mi] = eta @ per_user + sigma2_w
    return out


def interference_variance(
    m: int,
    assoc: AssociationMap,
    eta: np.ndarray,
    c_mats: np.ndarray,
    r_mats: np.ndarray,
    sigma2_w: float,
) -> float:
    """``sigma_e^2`` at AP ``m`` from full covariance matrices ``(M, K, N, N)``."""
    n = r_mats.shape[-1]
    c_tr = np.real(np.trace(c_mats[m], axis1=-2, axis2=-1))
    r_tr = np.real(np.trace(r_mats[m], axis1=-2, axis2=-1))
    return float(
        interference_variances([assoc.served[m]], eta, c_tr[None], r_tr[None], sigma2_w, n)[0]
    )


@dataclass
class EffectiveModel:
    users: np.ndarray  # served users, column order
    b_complex: np.ndarray  # (N_AP, N_m)
    sigma2_e: float

    @property
    def b_real(self) -> np.ndarray:
        return realify_matrix(self.b_complex)


def effective_model(users, g_hat_m: np.ndarray, eta: np.ndarray, sigma2_e: float) -> EffectiveModel:
    """Power-scaled channel estimates of the served users at one AP.

    ``g_hat_m`` is the ``(K, N)`` array of estimates held by the AP; column
    ``j`` of the result is ``sqrt(eta[users[j]]) * g_hat_m[users[j]]``.
    """
    users = np.asarray(users, dtype=int)
    if users.size and users.max() >= g_hat_m.shape[0]:
        raise IndexError("missing channel estimate for a served user")
    b = (g_hat_m[users] * np.sqrt(eta[users])[:, None]).T
    return EffectiveModel(users, b, float(sigma2_e))
