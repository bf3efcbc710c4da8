"""Rolling PID: re-tune the gains every M samples over an N-sample prediction.

Three drivers share one loop:

* ``run_canonical``      tune once offline from x0, then hold the gains.
* ``run_rolling_exact``  tune at the start, then re-tune each period against
                         the true plant from the measured state.
* ``run_rolling_sysid``  apply k0 first, then each period fit a linear
                         surrogate to the period's data and re-tune on it.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .controller import PidGains, PidMemory
from .criteria import DIVERGENCE_PENALTY, CostSpec, Criterion, cost
from .optimizer import Bounds, OptimizerSettings, OptResult, multistart, optimize_gains
from .plant import DivergenceError, PlantModel, Trajectory, example_plant, rollout
from .sysid import MIN_WINDOW, LinearModel, SampleWindow, fit_linear_model, surrogate_plant

log = logging.getLogger(__name__)


class Mode(str, Enum):
    CANONICAL = "canonical"
    ROLLING_EXACT = "rolling_exact"
    ROLLING_SYSID = "rolling_sysid"


@dataclass(frozen=True)
class Scenario:
    plant: PlantModel = field(default_factory=example_plant)
    y_r: float = 2.0
    n_horizon: int = 10
    m_sample: int = 10
    k0: PidGains = PidGains(0.1, 0.1, 0.1)
    bounds: Bounds = Bounds()
    criterion: Criterion = Criterion.ISE
    mode: Mode = Mode.ROLLING_EXACT
    s_max: int = 20
    term_k_tol: float = 1e-6
    term_e_tol: float = 1e-4
    reset_memory_on_update: bool = False
    predict_fresh_memory: bool = False
    input_delay: int = 1
    law: str = "place"
    optimizer: OptimizerSettings = OptimizerSettings()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "criterion", Criterion(self.criterion))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.n_horizon < 1:
            raise ValueError("n_horizon must be >= 1")
        if self.m_sample < 1:
            raise ValueError("m_sample must be >= 1")
        if self.mode is Mode.ROLLING_SYSID and self.m_sample < MIN_WINDOW:
            raise ValueError(f"m_sample must be >= {MIN_WINDOW} when fitting a surrogate")
        if self.s_max < 1:
            raise ValueError("s_max must be >= 1")
        if self.input_delay not in (0, 1):
            raise ValueError("input_delay must be 0 or 1")
        if self.law not in ("place", "increment"):
            raise ValueError(f"unknown PID law {self.law!r}")
        if self.optimizer.n_starts < 0:
            raise ValueError("n_starts must be >= 0")
        if not self.bounds.contains(self.k0.as_array()):
            raise ValueError(f"k0 {tuple(self.k0)} lies outside the gain bounds")


@dataclass
class RollingRecord:
    s: int
    gains: PidGains
    x_at: np.ndarray
    y_at: float
    j_value: float | None = None
    model: LinearModel | None = None


@dataclass
class RunResult:
    records: list[RollingRecord]
    trajectory: Trajectory
    terminated_by: str
    periods: np.ndarray
    evals: int = 0

    def gains_per_step(self) -> np.ndarray:
        by_s = {r.s: r.gains.as_array() for r in self.records}
        if not len(self.periods):
            return np.zeros((0, 3))
        return np.array([by_s[int(s)] for s in self.periods])


def check_termination(prev: PidGains, curr: PidGains, e_now: float, scenario) -> bool:
    dk = np.max(np.abs(curr.as_array() - prev.as_array()))
    return bool(dk <= scenario.term_k_tol and abs(e_now) <= scenario.term_e_tol)


def predictive_objective(plant: PlantModel, x_start, memory: PidMemory, k_start: int,
                         sc: Scenario, form: str = "rolling"):
    """Gains -> cost of an N-sample closed-loop rollout of ``plant``."""
    spec = CostSpec(sc.criterion, sc.n_horizon, form)

    def objective(gains: PidGains) -> float:
        try:
            traj, _ = rollout(plant, gains, memory, x_start, sc.y_r, sc.n_horizon,
                              k_start=k_start, law=sc.law, input_delay=sc.input_delay)
        except DivergenceError:
            return DIVERGENCE_PENALTY
        return cost(traj.e, spec, k_start)

    return objective


def tune(objective, k_start: PidGains, sc: Scenario) -> OptResult:
    st = sc.optimizer
    smooth = sc.criterion.smooth
    if st.n_starts == 0:
        return OptResult(k_start, objective(k_start), 0, True, 1, [])
    if st.n_starts == 1:
        return optimize_gains(objective, k_start, sc.bounds, st, smooth=smooth)
    return multistart(objective, sc.bounds, st.n_starts, st.seed, k_start, st, smooth=smooth)


def _x0(sc: Scenario) -> np.ndarray:
    return np.asarray(sc.plant.x0, dtype=float)


def run_canonical(sc: Scenario) -> RunResult:
    x0 = _x0(sc)
    objective = predictive_objective(sc.plant, x0, PidMemory(), 1, sc, form="canonical")
    res = tune(objective, sc.k0, sc)
    steps = sc.s_max * sc.m_sample
    try:
        traj, _ = rollout(sc.plant, res.k_star, PidMemory(), x0, sc.y_r, steps,
                          law=sc.law, input_delay=sc.input_delay)
        term = "s_max"
    except DivergenceError as exc:
        traj, term = exc.partial, "divergence"
    if len(traj):
        rec = RollingRecord(1, res.k_star, traj.x[-1].copy(), float(traj.y[-1]), res.j_star)
    else:
        rec = RollingRecord(1, res.k_star, x0, float("nan"), res.j_star)
    return RunResult([rec], traj, term, np.ones(len(traj), dtype=int), res.evals)


def run_rolling(sc: Scenario, *, identify: bool, optimize_first: bool) -> RunResult:
    """Shared rolling loop.

    ``identify`` predicts with a surrogate fitted to the last period instead
    of the true plant; ``optimize_first`` tunes K(1) from x0 rather than
    applying k0 as-is.
    """
    M, N = sc.m_sample, sc.n_horizon
    x = _x0(sc)
    memory = PidMemory()
    k = 1
    evals = 0
    if optimize_first:
        res = tune(predictive_objective(sc.plant, x, memory, k, sc), sc.k0, sc)
        gains, j_value, evals = res.k_star, res.j_star, res.evals
    else:
        gains, j_value = sc.k0, None

    parts: list[Trajectory] = []
    records: list[RollingRecord] = []
    prev: PidGains | None = None
    term = "s_max"
    for s in range(1, sc.s_max + 1):
        try:
            traj, memory = rollout(sc.plant, gains, memory, x, sc.y_r, M, k_start=k,
                                   law=sc.law, input_delay=sc.input_delay)
        except DivergenceError as exc:
            log.warning("period %d diverged at k=%d", s, exc.k)
            term = "divergence"
            break
        parts.append(traj)
        x, k = traj.x_next, k + M
        rec = RollingRecord(s, gains, traj.x[-1].copy(), float(traj.y[-1]), j_value)
        records.append(rec)
        if prev is not None and check_termination(prev, gains, traj.e[-1], sc):
            term = "gain_fixed_point"
            break
        if s == sc.s_max:
            break

        if sc.reset_memory_on_update:
            memory = memory.cleared()
        predict_memory = PidMemory() if sc.predict_fresh_memory else memory
        if identify:
            rec.model = fit_linear_model(SampleWindow.from_trajectory(traj))
            predictor = surrogate_plant(rec.model, x)
        else:
            predictor = sc.plant
        res = tune(predictive_objective(predictor, x, predict_memory, k, sc), gains, sc)
        evals += res.evals
        prev, gains, j_value = gains, res.k_star, res.j_star
        log.info("s=%d -> K=%s J=%.6g (%d evals)", s, tuple(gains), j_value, res.evals)

    periods = np.repeat(np.arange(1, len(parts) + 1), M)
    return RunResult(records, Trajectory.concat(parts), term, periods, evals)


def run_rolling_exact(sc: Scenario) -> RunResult:
    return run_rolling(sc, identify=False, optimize_first=True)


def run_rolling_sysid(sc: Scenario) -> RunResult:
    return run_rolling(sc, identify=True, optimize_first=False)


def run(sc: Scenario) -> RunResult:
    return {
        Mode.CANONICAL: run_canonical,
        Mode.ROLLING_EXACT: run_rolling_exact,
        Mode.ROLLING_SYSID: run_rolling_sysid,
    }[sc.mode](sc)
