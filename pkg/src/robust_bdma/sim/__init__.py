from .engine import (
    CSV_COLUMNS,
    MethodAggregate,
    ScenarioResult,
    SweepError,
    SweepResult,
    run_scenario,
    run_sweep,
    worstcase_feasible,
)
from .presets import SelfCheckError, presets, run_preset
