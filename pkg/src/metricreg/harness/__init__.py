"""Synthetic data, regret accounting, validators and the comparison runner."""
from .compare import CompareConfig, compare_modes, oracle_metric
from .generators import GeneratorSpec, Link, OracleInfo, generate, substream
from .regret import RegretTrace, evaluate_regret, loglog_slope
