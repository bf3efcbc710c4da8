"""Rolling PID tuning: periodic re-identification and re-optimisation of PID gains."""
from .controller import PidGains, PidMemory, error, pid_increment, pid_place
from .criteria import CostSpec, Criterion, canonical_cost, rolling_cost
from .optimizer import Bounds, OptimizerSettings, OptResult, finite_diff_gradient, multistart, optimize_gains
from .plant import (DivergenceError, PlantModel, Trajectory, example_plant, example_plant_output,
                    example_plant_step, rollout)
from .rolling import (Mode, RollingRecord, RunResult, Scenario, check_termination, run,
                      run_canonical, run_rolling_exact, run_rolling_sysid)
from .sysid import LinearModel, SampleWindow, fit_linear_model, linear_output, linear_step

__version__ = "0.1.0"
