"""Age of information for FCFS, preemptive LCFS and infinite-server queues:
closed forms, a seeded simulator of the age sawtooth, and figure sweeps."""
from .analytic import (AnalyticAge, Discipline, QueueSpec, analyze, cross_expectations,
                       delay_fcfs_mg1, delay_lcfsp_mg1, fcfs_dd1, fcfs_gg1_bounds, fcfs_gm1,
                       fcfs_mg1, fcfs_mg1_average, fcfs_mg1_peak, gginf_average, lcfsp_gg1,
                       lcfsp_gm1, lcfsp_mg1, solve_alpha_bar)
from .distributions import Distribution, Kind, parse_distribution
from .errors import (AoIError, BracketError, ConfigError, InfiniteMomentError, ParameterError,
                     QuadratureError, StabilityError, UnsupportedError)
from .simulator import SimConfig, SimResult, TraceEvent, run, trace

__version__ = "0.1.0"

__all__ = [
    "AnalyticAge", "Discipline", "QueueSpec", "analyze", "cross_expectations",
    "delay_fcfs_mg1", "delay_lcfsp_mg1", "fcfs_dd1", "fcfs_gg1_bounds", "fcfs_gm1",
    "fcfs_mg1", "fcfs_mg1_average", "fcfs_mg1_peak", "gginf_average", "lcfsp_gg1",
    "lcfsp_gm1", "lcfsp_mg1", "solve_alpha_bar", "Distribution", "Kind",
    "parse_distribution", "AoIError", "BracketError", "ConfigError", "InfiniteMomentError",
    "ParameterError", "QuadratureError", "StabilityError", "UnsupportedError",
    "SimConfig", "SimResult", "TraceEvent", "run", "trace",
]
