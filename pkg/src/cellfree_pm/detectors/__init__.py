"""Per-AP soft MIMO detectors on the real-valued model ``y = B x + e``.

All detectors take a real observation ``y`` of shape ``(rows,)`` or
``(rows, T)``, the real model matrix ``B`` (``rows x n``) and the complex
interference-plus-noise variance ``sigma2_e``; they return a
:class:`DetectorOutput` whose ``llrs`` hold ``log P(b=1)/P(b=0)`` per real
dimension, clamped to ``+-LLR_CLAMP``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .centralized import centralized_pm_llrs, stack_models
from .linear import mmse_sic_llrs, mrc_llrs, mrc_residual_variance
from .mapping import (
    LLR_CLAMP,
    QPSK,
    BitMapping,
    CapacityError,
    DetectorOutput,
    RankDeficientWarning,
    bit_patterns,
)
from .ml import ML_BIT_CAP, exact_ml_llrs
from .pm import pm_llrs, pm_partitions
from .zfdf import vblast_order, zf_df_detect, zf_df_llrs

__all__ = [
    "LLR_CLAMP",
    "QPSK",
    "ML_BIT_CAP",
    "BitMapping",
    "CapacityError",
    "DetectorOutput",
    "DetectorSpec",
    "RankDeficientWarning",
    "bit_patterns",
    "centralized_pm_llrs",
    "exact_ml_llrs",
    "mmse_sic_llrs",
    "mrc_llrs",
    "mrc_residual_variance",
    "parse_detector",
    "pm_llrs",
    "pm_partitions",
    "stack_models",
    "vblast_order",
    "zf_df_detect",
    "zf_df_llrs",
]

_LOCAL = {
    "mrc": mrc_llrs,
    "zf_df": zf_df_llrs,
    "mmse_sic": mmse_sic_llrs,
    "exact_ml": exact_ml_llrs,
}


@dataclass(frozen=True)
class DetectorSpec:
    """A detector choice as written in configs: ``mrc``, ``pm(2)``, ``c_pm(4)`` ..."""

    name: str
    r: int | None = None

    @property
    def centralized(self) -> bool:
        return self.name == "c_pm"

    @property
    def label(self) -> str:
        return self.name if self.r is None else f"{self.name}({self.r})"

    def local(self, y, b, sigma2_e, mapping: BitMapping = QPSK) -> DetectorOutput:
        """Run this detector on one AP's model (not valid for ``c_pm``)."""
        if self.name == "pm":
            return pm_llrs(y, b, sigma2_e, mapping, r=min(self.r, b.shape[1]))
        if self.centralized:
            raise ValueError("c_pm runs on stacked models, see centralized_pm_llrs")
        return _LOCAL[self.name](y, b, sigma2_e, mapping)


_PATTERN = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*(\d+)\s*\))?\s*$")


def parse_detector(text: str) -> DetectorSpec:
    match = _PATTERN.match(text.lower())
    if not match:
        raise ValueError(f"cannot parse detector {text!r}")
    name, r = match.group(1), match.group(2)
    if name in ("pm", "c_pm"):
        if r is None:
            raise ValueError(f"{name} needs a parameter, e.g. {name}(2)")
        return DetectorSpec(name, int(r))
    if name not in _LOCAL:
        raise ValueError(f"unknown detector {name!r}")
    if r is not None:
        raise ValueError(f"{name} takes no parameter")
    return DetectorSpec(name)
