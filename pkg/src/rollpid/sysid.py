"""Least-squares fit of the structured two-state linear surrogate

    x(k+1) = A x(k) + [0, b1]^T u(k),    y(k) = c . x(k)

The summed squared residual separates into three independent regressions,
one per row of A (plus b1 for the second row) and one for c.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .plant import PlantModel

log = logging.getLogger(__name__)

MIN_WINDOW = 4


@dataclass(frozen=True)
class LinearModel:
    a: np.ndarray
    b1: float
    c: np.ndarray
    warnings: tuple[str, ...] = ()

    @property
    def b(self) -> np.ndarray:
        return np.array([0.0, self.b1])

    def flat(self) -> list[float]:
        """[a11, a12, a21, a22, b1, c1, c2]"""
        return [*map(float, self.a.ravel()), float(self.b1), *map(float, self.c)]

    @classmethod
    def from_flat(cls, p) -> LinearModel:
        p = [float(v) for v in p]
        return cls(np.array(p[:4]).reshape(2, 2), p[4], np.array(p[5:7]))


@dataclass(frozen=True)
class SampleWindow:
    """M transitions: x[i] --u[i]--> x_next[i], with y[i] measured at x[i]."""

    x: np.ndarray
    u: np.ndarray
    x_next: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        m = len(self.u)
        if np.shape(self.x) != (m, 2) or np.shape(self.x_next) != (m, 2) or np.shape(self.y) != (m,):
            raise ValueError("window arrays disagree in length or width")

    def __len__(self) -> int:
        return len(self.u)

    @classmethod
    def from_trajectory(cls, traj) -> SampleWindow:
        x_next = np.vstack([traj.x[1:], traj.x_next[None, :]])
        return cls(traj.x.copy(), traj.u.copy(), x_next, traj.y.copy())


# Singular values below this absolute floor count as zero excitation. Without it a
# window of subnormal states passes numpy's relative cutoff and yields inf coefficients.
SIGMA_FLOOR = float(np.sqrt(np.finfo(float).tiny))


def _lstsq(regressors: np.ndarray, target: np.ndarray, label: str, notes: list[str]) -> np.ndarray:
    width = regressors.shape[1]
    s_max = float(np.linalg.norm(regressors, 2))
    if s_max < SIGMA_FLOOR:
        notes.append(f"{label}: no excitation, coefficients set to zero")
        return np.zeros(width)
    rcond = max(np.finfo(float).eps * max(regressors.shape), SIGMA_FLOOR / s_max)
    sol, _, rank, _ = np.linalg.lstsq(regressors, target, rcond=rcond)
    if rank < width:
        notes.append(f"{label}: rank {rank} < {width}, minimum-norm solution")
    return sol


def fit_linear_model(window: SampleWindow) -> LinearModel:
    if len(window) < MIN_WINDOW:
        raise ValueError(f"window has {len(window)} samples, need at least {MIN_WINDOW}")
    arrays = (window.x, window.u, window.x_next, window.y)
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise ValueError("window contains non-finite data")
    notes: list[str] = []
    row1 = _lstsq(window.x, window.x_next[:, 0], "x1 row", notes)
    row2 = _lstsq(np.column_stack([window.x, window.u]), window.x_next[:, 1], "x2 row", notes)
    c = _lstsq(window.x, window.y, "output row", notes)
    for n in notes:
        log.warning("sysid: %s", n)
    a = np.array([row1, row2[:2]])
    return LinearModel(a, float(row2[2]), c, tuple(notes))


def residual(model: LinearModel, window: SampleWindow) -> float:
    """The summed squared fitting residual the fit minimises."""
    pred = window.x @ model.a.T + np.outer(window.u, model.b)
    return float(np.sum((window.x_next - pred) ** 2) + np.sum((window.y - window.x @ model.c) ** 2))


def linear_step(model: LinearModel, x_hat, u: float) -> np.ndarray:
    return model.a @ np.asarray(x_hat, dtype=float) + model.b * u


def linear_output(model: LinearModel, x_hat) -> float:
    return float(model.c @ np.asarray(x_hat, dtype=float))


def surrogate_plant(model: LinearModel, x0, name: str = "surrogate") -> PlantModel:
    """Wrap a fitted model as a plant so the rollout machinery can drive it."""
    return PlantModel(
        state_dim=2,
        params=tuple(model.flat()),
        x0=tuple(float(v) for v in x0),
        transition=lambda k, x, u, p: linear_step(model, x, u),
        output=lambda k, x, u, p: linear_output(model, x),
        name=name,
    )

