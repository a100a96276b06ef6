"""AP-centric user association and fractional uplink power control."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

__all__ = ["AssociationMap", "FpcParams", "associate", "serving_from_served", "fpc_power", "fpc_powers"]


@dataclass(frozen=True)
class AssociationMap:
    """``served[m]`` lists the users of AP ``m`` by descending beta;
    ``serving[k]`` lists the APs that detect user ``k`` (ascending index)."""

    served: tuple
    serving: tuple

    @property
    def n_aps(self) -> int:
        return len(self.served)

    @property
    def n_users(self) -> int:
        return len(self.serving)

    def outage_users(self) -> list[int]:
        return [k for k, aps in enumerate(self.serving) if len(aps) == 0]

    def union_users(self, k: int) -> np.ndarray:
        """Users detected by at least one AP serving user ``k`` (sorted)."""
        users = set()
        for m in self.serving[k]:
            users.update(int(u) for u in self.served[m])
        return np.array(sorted(users), dtype=int)


def serving_from_served(served, n_users: int) -> tuple:
    serving = [[] for _ in range(n_users)]
    for m, users in enumerate(served):
        for k in users:
            serving[int(k)].append(m)
    return tuple(np.array(s, dtype=int) for s in serving)


def associate(beta: np.ndarray, n_m) -> AssociationMap:
    """Each AP serves its ``N_m`` strongest users; ties go to the lower user index.

    ``beta`` has shape ``(M, K)``; ``n_m`` is an int or a length-``M`` sequence.
    """
    beta = np.asarray(beta, dtype=float)
    m, k = beta.shape
    counts = np.broadcast_to(np.asarray(n_m, dtype=int), (m,))
    if np.any(counts < 1) or np.any(counts > k):
        raise ValueError("need 1 <= N_m <= K")
    served = []
    for mi in range(m):
        # stable sort on -beta keeps the lower index first among equals
        order = np.argsort(-beta[mi], kind="stable")
        served.append(order[: counts[mi]].astype(int))
    served = tuple(served)
    serving = serving_from_served(served, k)
    for ki in range(k):
        if len(serving[ki]) == 0:
            logger.warning("user %d is not served by any AP (outage)", ki)
    return AssociationMap(served, serving)


@dataclass(frozen=True)
class FpcParams:
    p_max_w: float = 0.1
    p0_w: float = 1e-4  # -10 dBm
    kappa: float = 0.5

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if self.p_max_w <= 0 or self.p0_w <= 0:
            raise ValueError("powers must be positive")

    @classmethod
    def from_units(cls, p_max_mw: float = 100.0, p0_dbmw: float = -10.0, kappa: float = 0.5):
        return cls(p_max_mw * 1e-3, 10 ** (p0_dbmw / 10) * 1e-3, kappa)


def fpc_power(k: int, beta: np.ndarray, serving, params: FpcParams = FpcParams()):
    """Fractional power control ``min(P_max, P_0 * zeta^-kappa)``.

    ``zeta = sqrt(sum_{m in M_k} beta[m, k])``. Returns ``(eta, ok)``; a user
    with no serving AP gets ``P_max`` and ``ok=False``.
    """
    aps = np.asarray(serving[k], dtype=int)
    if aps.size == 0:
        return params.p_max_w, False
    zeta = np.sqrt(np.sum(beta[aps, k]))
    if zeta == 0:
        return params.p_max_w, True
    return float(min(params.p_max_w, params.p0_w * zeta ** (-params.kappa))), True


def fpc_powers(beta: np.ndarray, assoc: AssociationMap, params: FpcParams = FpcParams()) -> np.ndarray:
    return np.array([fpc_power(k, beta, assoc.serving, params)[0] for k in range(assoc.n_users)])
