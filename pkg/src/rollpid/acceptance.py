"""Acceptance checks A1-A9, runnable from the CLI (``rollpid verify``) and pytest."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .controller import PidGains, PidMemory, pid_increment, pid_place
from .criteria import CostSpec, Criterion, canonical_cost, rolling_cost
from .optimizer import Bounds, optimize_gains
from .plant import example_plant, rollout
from .rolling import RunResult, Scenario, predictive_objective, run, tune
from .scenario_io import emit_records_table, parse_scenario
from .sysid import LinearModel, SampleWindow, fit_linear_model

Y_R = 2.0
X2_STEADY = 10.0 / 9.0
PUBLISHED_K1_CASE1 = PidGains(0.0707, 0.3634, 0.1498)
PUBLISHED_CASE2_MODEL = [0.4236, 0.0056, 0.1588, 0.1392, 0.8711, -0.8041, 1.7975]
SYNTH_MODEL = LinearModel(np.array([[0.4, 0.0], [0.1, 0.2]]), 0.9, np.array([-0.8, 1.8]))


@dataclass
class Outcome:
    name: str
    passed: bool
    detail: str
    soft: bool = False

    def line(self) -> str:
        tag = "PASS" if self.passed else ("WARN" if self.soft else "FAIL")
        return f"[{tag}] {self.name}: {self.detail}"


_cache: dict[str, RunResult] = {}


def shipped_run(name: str) -> RunResult:
    if name not in _cache:
        _cache[name] = run(parse_scenario(name))
    return _cache[name]


def _fixed_gain_match(steps: int, y_exp: float, x2_exp: float) -> tuple[bool, str]:
    traj, _ = rollout(example_plant(), PidGains(0.1, 0.1, 0.1), PidMemory(), [1.0, 1.0], Y_R, steps)
    x, y = traj.x[-1], traj.y[-1]
    ok = abs(y - y_exp) <= 0.01 and abs(x[0]) <= 0.01 and abs(x[1] - x2_exp) <= 0.01
    return ok, f"y({steps})={y:.4f} (published {y_exp}), x({steps})=[{x[0]:.4f}, {x[1]:.4f}] (published [0.0000, {x2_exp}])"


def a1() -> Outcome:
    return Outcome("A1 fixed-gain 10-step match", *_fixed_gain_match(10, 1.6049, 0.8916))


def a2() -> Outcome:
    return Outcome("A2 fixed-gain 30-step match", *_fixed_gain_match(30, 1.9928, 1.1071))


def _at_target(rec, tol: float = 1e-3) -> bool:
    return (abs(rec.y_at - Y_R) <= tol and abs(rec.x_at[0]) <= tol
            and abs(rec.x_at[1] - X2_STEADY) <= tol)


def _case1(name: str, label: str, s_target: int, s_const: int) -> Outcome:
    r = shipped_run(name)
    hit = next((rec.s for rec in r.records if _at_target(rec)), None)
    last = r.records[-1]
    dk = (np.max(np.abs(last.gains.as_array() - r.records[-2].gains.as_array()))
          if len(r.records) > 1 else np.inf)
    ok = (hit is not None and hit <= s_target and _at_target(last)
          and r.terminated_by == "gain_fixed_point" and dk <= 1e-6 and last.s <= s_const)
    return Outcome(label, ok, f"target reached at s={hit}, terminated at s={last.s} by "
                              f"{r.terminated_by}, final |dK|={dk:.2e}, y={last.y_at:.4f}")


def a3() -> Outcome:
    return _case1("case1_n10.scn", "A3 Case 1 convergence (N=M=10)", 5, 5)


def a4() -> Outcome:
    return _case1("case1_n30.scn", "A4 Case 1 convergence (N=M=30)", 3, 3)


def grid_minimum(objective: Callable[[PidGains], float], bounds: Bounds, points: int = 21) -> float:
    axes = [np.linspace(lo, hi, points) for lo, hi in zip(bounds.lo, bounds.hi)]
    return min(objective(PidGains(*k)) for k in itertools.product(*axes))


def case1_first_objective() -> tuple[Callable[[PidGains], float], Scenario]:
    sc = parse_scenario("case1_n10.scn")
    return predictive_objective(sc.plant, np.asarray(sc.plant.x0), PidMemory(), 1, sc), sc


def a5() -> Outcome:
    objective, sc = case1_first_objective()
    res = tune(objective, sc.k0, sc)
    j_published = objective(PUBLISHED_K1_CASE1)
    j_grid = grid_minimum(objective, sc.bounds)
    ok = res.j_star <= j_published + 1e-6 and res.j_star <= j_grid
    return Outcome("A5 optimizer objective dominance", ok,
                   f"j*={res.j_star:.10f}, J(published K1)={j_published:.10f}, grid min={j_grid:.6f}")


def synthetic_window(model: LinearModel = SYNTH_MODEL, m: int = 10) -> SampleWindow:
    u = np.array([1.0, -1.0, 0.5, -0.5, 2.0, 0.3, -1.2, 0.8, -0.1, 1.5] * (m // 10 + 1))[:m]
    x = np.empty((m + 1, 2))
    x[0] = [1.0, -0.5]
    for i in range(m):
        x[i + 1] = model.a @ x[i] + model.b * u[i]
    return SampleWindow(x[:-1], u, x[1:], x[:-1] @ model.c)


def a6() -> Outcome:
    fit = fit_linear_model(synthetic_window())
    err = float(np.max(np.abs(np.subtract(fit.flat(), SYNTH_MODEL.flat()))))
    return Outcome("A6 sysid exact recovery", err <= 1e-8, f"max parameter error {err:.2e}")


def a7(a1_passed: bool = True) -> Outcome:
    parts, ok = [], True
    for name in ("case2_n10.scn", "case2_n30.scn"):
        r = shipped_run(name)
        hit = next((rec.s for rec in r.records if abs(rec.y_at - Y_R) <= 1e-3), None)
        good = hit is not None and hit <= 6 and abs(r.records[-1].y_at - Y_R) <= 1e-3
        ok &= good
        parts.append(f"{name}: y within 1e-3 from s={hit}")
    model = shipped_run("case2_n10.scn").records[0].model
    dev = float(np.max(np.abs(np.subtract(model.flat(), PUBLISHED_CASE2_MODEL))))
    if a1_passed:
        ok &= dev <= 0.01
        parts.append(f"first fit max deviation from published matrices {dev:.1e}")
    else:
        parts.append(f"matrix check skipped (A1 failed); deviation {dev:.1e}")
    return Outcome("A7 Case 2 pipeline", ok, "; ".join(parts))


def a8() -> Outcome:
    r = shipped_run("case2_n10.scn")
    m = parse_scenario("case2_n10.scn").m_sample
    peak = float(np.max(r.trajectory.y[m:]))
    return Outcome("A8 no overshoot after first update (soft)", peak <= Y_R + 0.05,
                   f"max y after first update {peak:.4f}", soft=True)


# A9 property suites, in compact randomized form (pytest runs fuller hypothesis versions).

def prop_place_increment(n_cases: int = 1000, seed: int = 1) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cases):
        g = PidGains(*rng.uniform(0, 10, 3))
        mp = mi = PidMemory()
        for e in rng.normal(0, 2, rng.integers(1, 60)):
            up, mp = pid_place(g, mp, e)
            ui, mi = pid_increment(g, mi, e)
            worst = max(worst, abs(up - ui) / max(1.0, abs(up)))
    return worst


def prop_criteria(n_cases: int = 300, seed: int = 2) -> bool:
    rng = np.random.default_rng(seed)
    for _ in range(n_cases):
        n = int(rng.integers(1, 40))
        e = rng.normal(0, 1, n)
        c = float(rng.uniform(-3, 3))
        vals = {}
        for crit in Criterion:
            spec = CostSpec(crit, n, "rolling")
            v = rolling_cost(e, 1, spec)
            if v < 0 or abs(v - rolling_cost(e, int(rng.integers(0, 1000)), spec)) > 0:
                return False
            if abs(v - canonical_cost(e, CostSpec(crit, n, "canonical"))) > 0:
                return False
            scale = c * c if crit.smooth else abs(c)
            if not np.isclose(rolling_cost(c * e, 1, spec), scale * v, rtol=1e-12, atol=1e-300):
                return False
            vals[crit] = v
        if vals[Criterion.ITSE] < vals[Criterion.ISE] or vals[Criterion.ITAE] < vals[Criterion.IAE]:
            return False
    return True


def prop_optimizer(n_cases: int = 30, seed: int = 3) -> bool:
    rng = np.random.default_rng(seed)
    for _ in range(n_cases):
        lo = rng.uniform(-5, 0, 3)
        b = Bounds(tuple(lo), tuple(lo + rng.uniform(0.5, 8, 3)))
        target = rng.uniform(-8, 8, 3)
        q = rng.uniform(0.2, 5, 3)
        visited = []

        def obj(k, target=target, q=q, visited=visited):
            visited.append(k.as_array())
            return float(np.sum(q * (k.as_array() - target) ** 2))

        res = optimize_gains(obj, PidGains(*rng.uniform(b.lo, b.hi)), b)
        if any(not b.contains(v) for v in visited):
            return False
        if any(h2 > h1 for h1, h2 in zip(res.history, res.history[1:])):
            return False
        if np.max(np.abs(res.k_star.as_array() - b.clip(target))) > 1e-5:
            return False
    return True


def prop_continuation(seed: int = 4) -> bool:
    rng = np.random.default_rng(seed)
    plant = example_plant()
    for _ in range(20):
        g = PidGains(*rng.uniform(0, [0.1, 0.4, 0.2]))
        a, b = (int(v) for v in rng.integers(1, 20, 2))
        whole, mw = rollout(plant, g, PidMemory(), [1.0, 1.0], Y_R, a + b)
        first, m1 = rollout(plant, g, PidMemory(), [1.0, 1.0], Y_R, a)
        second, m2 = rollout(plant, g, m1, first.x_next, Y_R, b, k_start=a + 1)
        if not (np.array_equal(np.concatenate([first.k, second.k]), whole.k)
                and np.array_equal(np.vstack([first.x, second.x]), whole.x)
                and np.array_equal(np.concatenate([first.u, second.u]), whole.u)
                and np.array_equal(np.concatenate([first.y, second.y]), whole.y)
                and m2 == mw):
            return False
    return True


def prop_determinism() -> bool:
    sc = parse_scenario("case1_n10.scn")
    sc = replace(sc, optimizer=replace(sc.optimizer, n_starts=3, seed=7))
    r1, r2 = run(sc), run(sc)
    return (emit_records_table(r1.records) == emit_records_table(r2.records)
            and np.array_equal(r1.trajectory.x, r2.trajectory.x)
            and np.array_equal(r1.trajectory.y, r2.trajectory.y)
            and r1.terminated_by == r2.terminated_by)


def a9() -> Outcome:
    worst = prop_place_increment()
    checks = {
        "place/increment": worst <= 1e-12,
        "criteria": prop_criteria(),
        "optimizer": prop_optimizer(),
        "continuation": prop_continuation(),
        "determinism": prop_determinism(),
    }
    detail = ", ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in checks.items())
    return Outcome("A9 property suites", all(checks.values()),
                   f"{detail} (place/increment worst rel. diff {worst:.1e})")


def run_all() -> list[Outcome]:
    first = a1()
    return [first, a2(), a3(), a4(), a5(), a6(), a7(first.passed), a8(), a9()]
