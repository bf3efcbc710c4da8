"""Integral error criteria (ISE, ITSE, IAE, ITAE) over a finite window."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# Finite stand-in for the cost of a diverged rollout.
DIVERGENCE_PENALTY = 1e18


class Criterion(str, Enum):
    ISE = "ise"
    ITSE = "itse"
    IAE = "iae"
    ITAE = "itae"

    @property
    def smooth(self) -> bool:
        return self in (Criterion.ISE, Criterion.ITSE)


@dataclass(frozen=True)
class CostSpec:
    criterion: Criterion = Criterion.ISE
    horizon: int = 10
    form: str = "rolling"

    def __post_init__(self):
        object.__setattr__(self, "criterion", Criterion(self.criterion))
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.form not in ("canonical", "rolling"):
            raise ValueError(f"unknown cost form {self.form!r}")


def _weighted(errors: np.ndarray, criterion: Criterion) -> float:
    w = np.arange(1, len(errors) + 1, dtype=float)
    if criterion is Criterion.ISE:
        return float(np.sum(errors ** 2))
    if criterion is Criterion.ITSE:
        return float(np.sum(w * errors ** 2))
    if criterion is Criterion.IAE:
        return float(np.sum(np.abs(errors)))
    return float(np.sum(w * np.abs(errors)))


def _check(errors, spec: CostSpec, form: str) -> np.ndarray:
    e = np.asarray(errors, dtype=float)
    if spec.form != form:
        raise ValueError(f"{form} cost called with a {spec.form} CostSpec")
    if e.shape != (spec.horizon,):
        raise ValueError(f"expected {spec.horizon} errors, got shape {e.shape}")
    return e


def canonical_cost(errors, spec: CostSpec) -> float:
    """Cost of e(1..N); time weights are the sample indices 1..N."""
    return _weighted(_check(errors, spec, "canonical"), spec.criterion)


def rolling_cost(errors, window_start: int, spec: CostSpec) -> float:
    """Cost of e(k..k+N-1). Time weights are j-k+1, so ``window_start`` only
    labels the window and never changes the value."""
    del window_start
    return _weighted(_check(errors, spec, "rolling"), spec.criterion)


def cost(errors, spec: CostSpec, window_start: int = 1) -> float:
    if spec.form == "canonical":
        return canonical_cost(errors, spec)
    return rolling_cost(errors, window_start, spec)
