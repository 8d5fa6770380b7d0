"""Ensemble training for distributionally robust min-max games."""

import json

from . import _core
from ._core import (
    ConfigError,
    DomainError,
    Error,
    InfeasibleSet,
    InvalidArgument,
    InvalidDataset,
    InvalidSpec,
    NumericError,
    ParseError,
    cvar_capped_projection,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "Error",
    "InfeasibleSet",
    "InvalidArgument",
    "InvalidDataset",
    "InvalidSpec",
    "NumericError",
    "ParseError",
    "bench",
    "cvar_capped_projection",
    "evaluate",
    "gen_data",
    "linear_max_oracle",
    "regularized_argmax",
    "train",
]


def gen_data(dataset, n, seed, path):
    """Write a synthetic dataset ("I" or "II") to a CSV file."""
    _core.gen_data(dataset, int(n), int(seed), str(path))


def train(config, data_path):
    """Fit an ensemble. Returns (model dict, trace CSV text)."""
    model, trace = _core.train(json.dumps(config), str(data_path))
    return json.loads(model), trace


def evaluate(model, data_path, set_spec):
    return json.loads(_core.evaluate(json.dumps(model), str(data_path), json.dumps(set_spec)))


def regularized_argmax(set_spec, cum_losses, eta, groups=()):
    return _core.regularized_argmax(json.dumps(set_spec), list(cum_losses), float(eta), list(groups))


def linear_max_oracle(set_spec, losses, groups=()):
    return _core.linear_max_oracle(json.dumps(set_spec), list(losses), list(groups))


def bench(experiment, seeds):
    """Benchmark table as CSV text."""
    return _core.bench(experiment, int(seeds))
