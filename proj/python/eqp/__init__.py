"""Ergodic quantum process simulations."""

import json

from ._eqp import (
    ConfigError,
    Error,
    PositiveMap,
    ResourceError,
    UsageError,
    compose,
    contraction_coeff,
    dist,
    ks_normality,
    parse_map,
    perron,
    spectral_radius,
)
from . import _eqp


def normalize_config(config):
    """Validated canonical form of a config given as a dict or JSON text."""
    text = config if isinstance(config, str) else json.dumps(config)
    return json.loads(_eqp.normalize_config(text))


def run_experiment(config, out, jobs=1):
    """Runs an experiment and returns the parsed report."""
    text = config if isinstance(config, str) else json.dumps(config)
    return json.loads(_eqp.run_experiment(text, str(out), jobs))


__all__ = [
    "ConfigError",
    "Error",
    "PositiveMap",
    "ResourceError",
    "UsageError",
    "compose",
    "contraction_coeff",
    "dist",
    "ks_normality",
    "normalize_config",
    "parse_map",
    "perron",
    "run_experiment",
    "spectral_radius",
]
