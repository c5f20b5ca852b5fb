"""General-equilibrium overlapping-generations model of an aging economy's social-security reforms."""
from .equilibrium import (EconomyPath, balanced_growth_path, solve_steady_state, solve_transition,
                          terminal_steady_state)
from .errors import (ClosureError, ConvergenceError, DataLoadError, DomainError, OLGError,
                     UnknownScenario, ValidationError)
from .io_config import ModelConfig, emit_results, load_config, load_inputs
from .policy import REFORMS, SCENARIOS, build_scenario
from .welfare import growth_decomposition, welfare_table

__version__ = "0.1.0"

__all__ = [
    "ClosureError", "ConvergenceError", "DataLoadError", "DomainError", "EconomyPath",
    "ModelConfig", "OLGError", "REFORMS", "SCENARIOS", "UnknownScenario", "ValidationError",
    "balanced_growth_path", "build_scenario", "emit_results", "growth_decomposition",
    "load_config", "load_inputs", "solve_steady_state", "solve_transition",
    "terminal_steady_state", "welfare_table",
]
