"""Scenario files and result bundles.

A scenario is a flat ``key = value`` document. ``#`` starts a comment,
vectors are comma-separated. Required keys: mode, y_r, n_horizon,
m_sample, k0. Everything else has a default (see ``DEFAULTS``).

Criterion windows: the tuning cost covers the N samples of the predictive
rollout, numbered from 1 at its first sample (which is x0 in the first
period), so time weights run 1..N.
"""
from __future__ import annotations

import csv
import hashlib
import json
from decimal import ROUND_HALF_EVEN, Decimal
from importlib import resources
from pathlib import Path

from .controller import PidGains
from .optimizer import Bounds, OptimizerSettings
from .plant import EXAMPLE_THETA, EXAMPLE_X0, example_plant
from .rolling import RollingRecord, RunResult, Scenario

SHIPPED = ("case1_n10.scn", "case1_n30.scn", "case2_n10.scn", "case2_n30.scn")

REQUIRED = ("mode", "y_r", "n_horizon", "m_sample", "k0")

DEFAULTS = {
    "name": "",
    "plant": "example",
    "theta": ",".join(map(str, EXAMPLE_THETA)),
    "x0": ",".join(map(str, EXAMPLE_X0)),
    "bounds_lo": "0,0,0",
    "bounds_hi": "10,10,10",
    "criterion": "ise",
    "s_max": "20",
    "term_k_tol": "1e-6",
    "term_e_tol": "1e-4",
    "reset_memory_on_update": "false",
    "predict_fresh_memory": "false",
    "input_delay": "1",
    "law": "place",
    "gtol": "1e-6",
    "max_iters": "200",
    "max_evals": "5000",
    "fd_step": "1e-6",
    "n_starts": "1",
    "seed": "0",
}

KNOWN = set(REQUIRED) | set(DEFAULTS)


class ScenarioError(ValueError):
    pass


def _parse_lines(text: str, source: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN:
            raise ScenarioError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ScenarioError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    missing = [k for k in REQUIRED if k not in values]
    if missing:
        raise ScenarioError(f"{source}: missing required key(s): {', '.join(missing)}")
    return {**DEFAULTS, **values}


def _convert(key: str, value: str, kind):
    try:
        if kind is bool:
            v = value.lower()
            if v in ("true", "yes", "1"):
                return True
            if v in ("false", "no", "0"):
                return False
            raise ValueError(value)
        if kind == "vec":
            return tuple(float(p) for p in value.split(","))
        return kind(value)
    except ValueError:
        raise ScenarioError(f"invalid value for {key!r}: {value!r}") from None


def scenario_from_text(text: str, source: str = "<scenario>") -> Scenario:
    v = _parse_lines(text, source)
    c = {key: _convert(key, v[key], kind) for key, kind in (
        ("y_r", float), ("n_horizon", int), ("m_sample", int), ("k0", "vec"),
        ("theta", "vec"), ("x0", "vec"), ("bounds_lo", "vec"), ("bounds_hi", "vec"),
        ("s_max", int), ("term_k_tol", float), ("term_e_tol", float),
        ("reset_memory_on_update", bool), ("predict_fresh_memory", bool),
        ("input_delay", int), ("gtol", float), ("max_iters", int), ("max_evals", int),
        ("fd_step", float), ("n_starts", int), ("seed", int),
    )}
    if v["plant"] != "example":
        raise ScenarioError(f"invalid value for 'plant': {v['plant']!r} (only 'example' is built in)")
    for key, length in (("k0", 3), ("theta", 4), ("x0", 2), ("bounds_lo", 3), ("bounds_hi", 3)):
        if len(c[key]) != length:
            raise ScenarioError(f"invalid value for {key!r}: expected {length} entries")
    try:
        return Scenario(
            plant=example_plant(c["theta"], c["x0"]),
            y_r=c["y_r"],
            n_horizon=c["n_horizon"],
            m_sample=c["m_sample"],
            k0=PidGains.from_array(c["k0"]),
            bounds=Bounds(c["bounds_lo"], c["bounds_hi"]),
            criterion=v["criterion"],
            mode=v["mode"],
            s_max=c["s_max"],
            term_k_tol=c["term_k_tol"],
            term_e_tol=c["term_e_tol"],
            reset_memory_on_update=c["reset_memory_on_update"],
            predict_fresh_memory=c["predict_fresh_memory"],
            input_delay=c["input_delay"],
            law=v["law"],
            optimizer=OptimizerSettings(gtol=c["gtol"], max_iters=c["max_iters"],
                                        max_evals=c["max_evals"], fd_step=c["fd_step"],
                                        n_starts=c["n_starts"], seed=c["seed"]),
            name=v["name"] or source,
        )
    except ValueError as exc:
        raise ScenarioError(f"{source}: {exc}") from None


def resolve_scenario_path(path) -> Path:
    """An existing path as given, else the shipped scenario of that name."""
    p = Path(path)
    if p.is_file():
        return p
    shipped = resources.files("rollpid") / "scenarios" / p.name
    if p.parent == Path(".") and shipped.is_file():
        return Path(str(shipped))
    raise FileNotFoundError(f"scenario file not found: {path}")


def parse_scenario(path) -> Scenario:
    p = resolve_scenario_path(path)
    return scenario_from_text(p.read_text(), p.name)


def shipped_scenario_text(name: str) -> str:
    return (resources.files("rollpid") / "scenarios" / name).read_text()


def fmt4(value: float) -> str:
    """Round half-even to 4 decimals, using the shortest repr of the float."""
    d = Decimal(repr(float(value))).quantize(Decimal("0.0001"), rounding=ROUND_HALF_EVEN)
    if d == 0:
        d = abs(d)
    return f"{d:.4f}"


def emit_records_table(records: list[RollingRecord]) -> str:
    if not records:
        raise ValueError("no records to tabulate")
    w = 8
    lines = [f"{'s':>3} | {'Kp':>{w}}{'Ki':>{w}}{'Kd':>{w}} | {'x1':>{w}}{'x2':>{w}} | {'y':>{w}}"]
    for r in records:
        k = "".join(f"{fmt4(v):>{w}}" for v in r.gains)
        x = "".join(f"{fmt4(v):>{w}}" for v in r.x_at)
        lines.append(f"{r.s:>3} | {k} | {x} | {fmt4(r.y_at):>{w}}")
    return "\n".join(lines) + "\n"


def emit_trajectory_csv(trajectory, gains_per_step, path, periods=None) -> None:
    path = Path(path)
    n = trajectory.x.shape[1] if trajectory.x.ndim == 2 and trajectory.x.shape[1] else 2
    header = ["k", *(f"x{i + 1}" for i in range(n)), "u", "y", "e", "s", "kp", "ki", "kd"]
    if periods is None:
        periods = [1] * len(trajectory)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for i in range(len(trajectory)):
                writer.writerow([
                    int(trajectory.k[i]),
                    *(repr(float(v)) for v in trajectory.x[i]),
                    repr(float(trajectory.u[i])),
                    repr(float(trajectory.y[i])),
                    repr(float(trajectory.e[i])),
                    int(periods[i]),
                    *(repr(float(g)) for g in gains_per_step[i]),
                ])
    except OSError as exc:
        raise OSError(f"cannot write trajectory to {path}: {exc.strerror}") from exc


def scenario_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def write_bundle(result: RunResult, scenario: Scenario, scenario_text: str, out_dir,
                 elapsed: float | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "records.txt").write_text(emit_records_table(result.records) if result.records else "")
    emit_trajectory_csv(result.trajectory, result.gains_per_step(), out / "trajectory.csv",
                        periods=result.periods)
    models = [(r.s, r.model) for r in result.records if r.model is not None]
    if models:
        (out / "models.txt").write_text("".join(
            f"{s} " + " ".join(repr(v) for v in m.flat()) + "\n" for s, m in models))
    meta = {
        "scenario": scenario.name,
        "mode": scenario.mode.value,
        "scenario_sha256": scenario_hash(scenario_text),
        "terminated_by": result.terminated_by,
        "periods": len(result.records),
        "objective_evals": result.evals,
        "elapsed_s": elapsed,
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return out
