"""Discrete-time plants and the closed-loop rollout of plant + PID."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .controller import LAWS, PidGains, PidMemory, error

DIVERGENCE_CAP = 1e12

EXAMPLE_THETA = (0.5, 0.3, 1.8, 0.9)
EXAMPLE_X0 = (1.0, 1.0)


class DivergenceError(RuntimeError):
    """A state, output or control left the finite range or exceeded the cap."""

    def __init__(self, message: str, k: int, partial: Trajectory | None = None):
        super().__init__(message)
        self.k = k
        self.partial = partial


@dataclass(frozen=True)
class PlantModel:
    """x(k+1) = transition(k, x, u, params), y(k) = output(k, x, u, params)."""

    state_dim: int
    params: tuple[float, ...]
    x0: tuple[float, ...]
    transition: Callable[[int, np.ndarray, float, tuple], np.ndarray]
    output: Callable[[int, np.ndarray, float, tuple], float]
    name: str = "custom"

    def __post_init__(self):
        if len(self.x0) != self.state_dim:
            raise ValueError(f"x0 has length {len(self.x0)}, expected {self.state_dim}")


def example_plant_step(x, u: float, theta) -> np.ndarray:
    x1, x2 = float(x[0]), float(x[1])
    nxt = np.array([theta[0] * x1 * x2, theta[1] * x1 * x1 + u])
    bad = np.flatnonzero(~np.isfinite(nxt))
    if bad.size:
        raise DivergenceError(f"non-finite state component {bad[0]}", k=int(bad[0]))
    return nxt


def example_plant_output(x, theta) -> float:
    x1, x2 = float(x[0]), float(x[1])
    return theta[2] * x2 - theta[3] * x1 * x1


def example_plant(theta: Sequence[float] = EXAMPLE_THETA,
                  x0: Sequence[float] = EXAMPLE_X0) -> PlantModel:
    """The two-state bilinear benchmark plant; time-invariant, so k is ignored."""
    return PlantModel(
        state_dim=2,
        params=tuple(float(t) for t in theta),
        x0=tuple(float(v) for v in x0),
        transition=lambda k, x, u, p: example_plant_step(x, u, p),
        output=lambda k, x, u, p: example_plant_output(x, p),
        name="example",
    )


@dataclass
class Trajectory:
    """Closed-loop samples.

    Row i holds sample ``k[i]``: the state at that sample, the input applied
    on the transition to the next sample (``u``), the control the law
    produced at that sample (``u_ctrl``), the output and the tracking error.
    ``x_next`` is the state after the last transition.
    """

    k: np.ndarray
    x: np.ndarray
    u: np.ndarray
    u_ctrl: np.ndarray
    y: np.ndarray
    e: np.ndarray
    x_next: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self) -> int:
        return len(self.k)

    @classmethod
    def empty(cls, state_dim: int = 2) -> Trajectory:
        z = np.zeros(0)
        return cls(np.zeros(0, dtype=int), np.zeros((0, state_dim)), z, z, z, z)

    @classmethod
    def concat(cls, parts: Sequence[Trajectory]) -> Trajectory:
        if not parts:
            return cls.empty()
        return cls(
            k=np.concatenate([p.k for p in parts]),
            x=np.vstack([p.x for p in parts]),
            u=np.concatenate([p.u for p in parts]),
            u_ctrl=np.concatenate([p.u_ctrl for p in parts]),
            y=np.concatenate([p.y for p in parts]),
            e=np.concatenate([p.e for p in parts]),
            x_next=parts[-1].x_next,
        )


def rollout(plant: PlantModel, gains: PidGains, memory: PidMemory, x_init,
            y_r: float, steps: int, *, k_start: int = 1, law: str = "place",
            input_delay: int = 1, cap: float = DIVERGENCE_CAP,
            ) -> tuple[Trajectory, PidMemory]:
    """Simulate ``steps`` closed-loop samples starting at sample ``k_start``.

    Each sample measures y, forms e = y_r - y, runs the PID law and advances
    the plant. With ``input_delay=1`` the transition uses the control from the
    previous sample (``memory.u_prev``); with 0 it uses the fresh one. The
    output map receives the input already committed for the transition.

    Returns the trajectory and the memory after the last sample, so a second
    call from ``traj.x_next`` continues the run exactly.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if input_delay not in (0, 1):
        raise ValueError("input_delay must be 0 or 1")
    pid = LAWS[law]
    n = plant.state_dim
    ks = np.arange(k_start, k_start + steps)
    xs = np.empty((steps, n))
    us = np.empty(steps)
    ucs = np.empty(steps)
    ys = np.empty(steps)
    es = np.empty(steps)
    x = np.asarray(x_init, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"x_init has shape {x.shape}, expected ({n},)")
    p = plant.params

    def _partial(i):
        return Trajectory(ks[:i], xs[:i], us[:i], ucs[:i], ys[:i], es[:i], x)

    for i in range(steps):
        k = int(ks[i])
        pending = memory.u_prev
        y = plant.output(k, x, pending, p)
        e = error(y_r, y)
        u_ctrl, memory = pid(gains, memory, e)
        u = pending if input_delay else u_ctrl
        xs[i] = x
        us[i], ucs[i], ys[i], es[i] = u, u_ctrl, y, e
        if not (abs(y) <= cap and abs(u_ctrl) <= cap):
            raise DivergenceError(f"output/control diverged at k={k}", k, _partial(i + 1))
        try:
            x = np.asarray(plant.transition(k, x, u, p), dtype=float)
        except DivergenceError as exc:
            raise DivergenceError(str(exc), k, _partial(i + 1)) from None
        if not np.all(np.abs(x) <= cap):
            raise DivergenceError(f"state diverged at k={k + 1}", k + 1, _partial(i + 1))
    return Trajectory(ks, xs, us, ucs, ys, es, x), memory
