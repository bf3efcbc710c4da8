"""Box-constrained minimisation of a gain-tuning objective.

Smooth criteria use a projected BFGS iteration with Armijo backtracking and
finite-difference gradients. Non-smooth ones (IAE/ITAE) fall back to a
bounded Nelder-Mead search restarted until the simplex has collapsed.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .controller import PidGains

log = logging.getLogger(__name__)

Objective = Callable[[PidGains], float]

ARMIJO_C1 = 1e-4
MIN_STEP = 1e-12
SIMPLEX_DIAMETER = 1e-8
MAX_RESTARTS = 25


@dataclass(frozen=True)
class Bounds:
    lo: tuple[float, float, float] = (0.0, 0.0, 0.0)
    hi: tuple[float, float, float] = (10.0, 10.0, 10.0)

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("bounds need three entries each")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"lower bound exceeds upper bound: {lo} > {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def clip(self, k) -> np.ndarray:
        return np.clip(np.asarray(k, dtype=float), self.lo, self.hi)

    def contains(self, k, tol: float = 0.0) -> bool:
        k = np.asarray(k, dtype=float)
        return bool(np.all(k >= np.subtract(self.lo, tol)) and np.all(k <= np.add(self.hi, tol)))


@dataclass(frozen=True)
class OptimizerSettings:
    gtol: float = 1e-6
    max_iters: int = 200
    max_evals: int = 5000
    fd_step: float = 1e-6
    n_starts: int = 1
    seed: int = 0


@dataclass
class OptResult:
    k_star: PidGains
    j_star: float
    iterations: int
    converged: bool
    evals: int
    history: list[float] = field(default_factory=list)


class _Counted:
    """Objective on raw arrays with an evaluation counter and finiteness check."""

    def __init__(self, objective: Objective, bounds: Bounds | None = None):
        self.objective = objective
        self.bounds = bounds
        self.evals = 0

    def __call__(self, k: np.ndarray) -> float:
        if self.bounds is not None and not self.bounds.contains(k, tol=1e-12):
            raise AssertionError(f"iterate {k} left the box")
        self.evals += 1
        v = float(self.objective(PidGains.from_array(k)))
        if not math.isfinite(v):
            raise ValueError(f"objective returned {v} at {k}")
        return v


def finite_diff_gradient(objective, k, h: float = 1e-6, *, bounds: Bounds | None = None,
                         f0: float | None = None) -> np.ndarray:
    """Central differences with step h*max(1, |k_i|); one-sided where a bound
    blocks one side. ``objective`` may take a PidGains or an array."""
    x = np.asarray(k.as_array() if isinstance(k, PidGains) else k, dtype=float)

    def f(z):
        return float(objective(PidGains.from_array(z)) if not isinstance(objective, _Counted)
                     else objective(z))

    g = np.zeros_like(x)
    for i in range(len(x)):
        step = h * max(1.0, abs(x[i]))
        up, dn = x.copy(), x.copy()
        up[i] += step
        dn[i] -= step
        up_ok = bounds is None or up[i] <= bounds.hi[i]
        dn_ok = bounds is None or dn[i] >= bounds.lo[i]
        if up_ok and dn_ok:
            g[i] = (f(up) - f(dn)) / (2.0 * step)
        elif up_ok or dn_ok:
            if f0 is None:
                f0 = f(x)
            g[i] = (f(up) - f0) / step if up_ok else (f0 - f(dn)) / step
    return g


def _projected_gradient(x, g, bounds: Bounds) -> np.ndarray:
    return x - bounds.clip(x - g)


def _line_search(F: _Counted, x, f, g, d, bounds: Bounds, max_evals: int):
    t = 1.0
    while t * np.max(np.abs(d)) >= MIN_STEP and F.evals < max_evals:
        x_new = bounds.clip(x + t * d)
        s = x_new - x
        if np.max(np.abs(s)) < MIN_STEP:
            return None
        f_new = F(x_new)
        if f_new <= f + ARMIJO_C1 * float(g @ s) and f_new <= f:
            return x_new, f_new
        t *= 0.5
    return None


def _quasi_newton(F: _Counted, x, bounds: Bounds, st: OptimizerSettings) -> OptResult:
    f = F(x)
    history = [f]
    g = finite_diff_gradient(F, x, st.fd_step, bounds=bounds, f0=f)
    n = len(x)
    H = np.eye(n)
    converged = False
    it = 0
    while it < st.max_iters and F.evals < st.max_evals:
        if np.max(np.abs(_projected_gradient(x, g, bounds))) <= st.gtol:
            converged = True
            break
        it += 1
        lo, hi = np.array(bounds.lo), np.array(bounds.hi)
        free = ~(((x <= lo) & (g > 0)) | ((x >= hi) & (g < 0)))
        d = np.zeros(n)
        d[free] = -(H[np.ix_(free, free)] @ g[free])
        if float(g @ d) >= 0:
            H = np.eye(n)
            d = np.where(free, -g, 0.0)
        step = _line_search(F, x, f, g, d, bounds, st.max_evals)
        if step is None and not np.allclose(H, np.eye(n)):
            H = np.eye(n)
            d = np.where(free, -g, 0.0)
            step = _line_search(F, x, f, g, d, bounds, st.max_evals)
        if step is None:
            converged = F.evals < st.max_evals
            break
        x_new, f_new = step
        g_new = finite_diff_gradient(F, x_new, st.fd_step, bounds=bounds, f0=f_new)
        s, yv = x_new - x, g_new - g
        sy = float(s @ yv)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
            rho = 1.0 / sy
            V = np.eye(n) - rho * np.outer(s, yv)
            H = V @ H @ V.T + rho * np.outer(s, s)
        x, f, g = x_new, f_new, g_new
        history.append(f)
    return OptResult(PidGains.from_array(x), f, it, converged, F.evals, history)


def _nelder_mead(F: _Counted, x, bounds: Bounds, st: OptimizerSettings) -> OptResult:
    f = F(x)
    history = [f]
    iterations = 0
    converged = False
    box = list(zip(bounds.lo, bounds.hi))
    for _ in range(MAX_RESTARTS):
        budget = st.max_evals - F.evals
        if budget <= 0:
            break
        res = minimize(F, x, method="Nelder-Mead", bounds=box,
                       options={"xatol": SIMPLEX_DIAMETER / 10, "fatol": 0.0,
                                "maxfev": budget, "maxiter": st.max_iters})
        iterations += int(res.nit)
        if res.fun <= f:
            x, f = bounds.clip(res.x), float(res.fun)
            history.append(f)
        simplex = res.final_simplex[0]
        diameter = float(np.max(np.abs(simplex - simplex[0])))
        if diameter <= SIMPLEX_DIAMETER:
            converged = True
            break
    return OptResult(PidGains.from_array(x), f, iterations, converged, F.evals, history)


def optimize_gains(objective: Objective, k_init: PidGains, bounds: Bounds,
                   settings: OptimizerSettings | None = None, *, smooth: bool = True) -> OptResult:
    """Local minimum of ``objective`` over the gain box, started at ``k_init``.

    The returned point never scores worse than ``k_init``; hitting the
    iteration or evaluation cap gives the best point so far with
    ``converged=False``.
    """
    st = settings or OptimizerSettings()
    x = np.asarray(k_init.as_array() if isinstance(k_init, PidGains) else k_init, dtype=float)
    if not bounds.contains(x, tol=1e-12):
        raise ValueError(f"initial gains {x} outside bounds {bounds}")
    x = bounds.clip(x)
    F = _Counted(objective, bounds)
    if smooth:
        return _quasi_newton(F, x, bounds, st)
    return _nelder_mead(F, x, bounds, st)


def multistart(objective: Objective, bounds: Bounds, n_starts: int, seed: int,
               k_init: PidGains, settings: OptimizerSettings | None = None, *,
               smooth: bool = True) -> OptResult:
    """Best of ``n_starts`` local runs: ``k_init`` plus seeded uniform draws.

    Ties keep the earliest start. ``evals`` totals every run.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    rng = np.random.default_rng(seed)
    starts = [np.asarray(k_init.as_array(), dtype=float)]
    starts += [rng.uniform(bounds.lo, bounds.hi) for _ in range(n_starts - 1)]
    best = None
    total = 0
    for i, k0 in enumerate(starts):
        r = optimize_gains(objective, k0, bounds, settings, smooth=smooth)
        total += r.evals
        log.debug("start %d: j=%.6g at %s", i, r.j_star, r.k_star)
        if best is None or r.j_star < best.j_star:
            best = r
    best.evals = total
    return best
