"""Bayesian optimization with adaptive neural basis functions."""

import json

from ._dngo import (
    ConfigError,
    EngineError,
    Optimizer as _Optimizer,
    Suggestion,
    branin,
    default_config,
    engine_version,
    evaluate,
    expected_improvement,
    hartmann6,
    problem_names,
    replay,
)
from ._dngo import run as _run


def _dump(config):
    return json.dumps(config or {})


def Optimizer(bounds, config=None, seed=0):
    """Ask/tell optimizer over a box given as [(lower, upper), ...]."""
    return _Optimizer(list(bounds), _dump(config), seed)


def run(config, journal_path):
    """Run a benchmark described by a config dict and journal it."""
    return _run(_dump(config), str(journal_path))


__all__ = [
    "ConfigError",
    "EngineError",
    "Optimizer",
    "Suggestion",
    "branin",
    "default_config",
    "engine_version",
    "evaluate",
    "expected_improvement",
    "hartmann6",
    "problem_names",
    "replay",
    "run",
]
