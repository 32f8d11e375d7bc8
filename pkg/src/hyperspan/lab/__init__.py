from .experiment import ConfigError, ExperimentConfig, ExperimentRecord, run_experiment
from .generators import GeneratorSpec, generate
from .oracles import OracleCapExceeded, oracle_perfect_matching, oracle_tree_embed

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentRecord",
    "GeneratorSpec",
    "OracleCapExceeded",
    "generate",
    "oracle_perfect_matching",
    "oracle_tree_embed",
    "run_experiment",
]
