"""Discrete PID laws in place (absolute) and increment (velocity) form.

Both laws are pure: they take the controller memory as a value and hand
back the updated memory alongside the control.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float
    kd: float

    @classmethod
    def from_array(cls, k) -> PidGains:
        kp, ki, kd = (float(v) for v in k)
        return cls(kp, ki, kd)

    def as_array(self) -> np.ndarray:
        return np.array([self.kp, self.ki, self.kd], dtype=float)

    def __iter__(self):
        return iter((self.kp, self.ki, self.kd))


@dataclass(frozen=True)
class PidMemory:
    """Error history of the controller.

    ``u_prev`` is the last control the law produced. With a one-sample
    input delay it is also the input waiting to be applied to the plant.
    """

    error_sum: float = 0.0
    e_prev: float = 0.0
    e_prev2: float = 0.0
    u_prev: float = 0.0

    def advance(self, e: float, u: float) -> PidMemory:
        return PidMemory(self.error_sum + e, e, self.e_prev, u)

    def cleared(self) -> PidMemory:
        """Drop the error history but keep the pending control."""
        return replace(self, error_sum=0.0, e_prev=0.0, e_prev2=0.0)


def error(y_r: float, y: float) -> float:
    return y_r - y


def pid_place(gains: PidGains, memory: PidMemory, e: float) -> tuple[float, PidMemory]:
    u = (gains.kp * e
         + gains.ki * (memory.error_sum + e)
         + gains.kd * (e - memory.e_prev))
    return u, memory.advance(e, u)


def pid_increment(gains: PidGains, memory: PidMemory, e: float) -> tuple[float, PidMemory]:
    u = (memory.u_prev
         + gains.kp * (e - memory.e_prev)
         + gains.ki * e
         + gains.kd * (e - 2.0 * memory.e_prev + memory.e_prev2))
    return u, memory.advance(e, u)


LAWS = {"place": pid_place, "increment": pid_increment}
