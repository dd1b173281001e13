"""
QROM Advice Lab - Shared Library

Simulation, optimization and exact verification of non-uniform security
games in the quantum random oracle model: game POVMs and their spectra,
alternating-measurement games, bit-fixing reductions, bound calculators
and the classical/quantum advice contrast.
"""

__version__ = "0.1.0"

from .errors import QromError, ConfigError, CapExceeded, NumericError
from .game import GameSpec, build_game
from .oracle import OracleTable, OracleEnsemble, enumerate_oracles
from .experiments import ExperimentConfig, run_experiment, list_experiments
from .s3_io import ResultStore

__all__ = [
    "QromError",
    "ConfigError",
    "CapExceeded",
    "NumericError",
    "GameSpec",
    "build_game",
    "OracleTable",
    "OracleEnsemble",
    "enumerate_oracles",
    "ExperimentConfig",
    "run_experiment",
    "list_experiments",
    "ResultStore",
]
