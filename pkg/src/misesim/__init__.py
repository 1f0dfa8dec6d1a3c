"""Cycle-level multicore memory interference simulator with MISE slowdown estimation."""
from .dram import DramConfig
from .errors import ConfigurationError, MiseSimError
from .models import SlowdownEstimate
from .oracle import OracleResult, evaluate, replay_alone
from .sim import SimResult, Simulator, run_simulation
from .workloads import AppSpec, microbench_spec, synthetic_mix

__version__ = "0.1.0"

__all__ = [
    "AppSpec",
    "ConfigurationError",
    "DramConfig",
    "MiseSimError",
    "OracleResult",
    "SimResult",
    "Simulator",
    "SlowdownEstimate",
    "evaluate",
    "microbench_spec",
    "replay_alone",
    "run_simulation",
    "synthetic_mix",
]
