"""Score-based channel estimation for ambient backscatter.

Thin wrapper over the C++ core. Complex matrices are numpy complex128 arrays
with shape (rows, cols); H-bar has shape (M, K+1), column 0 the direct link.
"""

import json

from ._ambc import (
    CheckpointError,
    ConfigError,
    SamplingDiverged,
    ScoreModel,
    als_estimate,
    build_pilots,
    hadamard,
    ls_estimate,
    mmse_estimate,
    nmse,
    pilot_power_for_snr,
    sample_hbar,
    simulate_observation,
)
from . import _ambc

__all__ = [
    "CheckpointError",
    "ConfigError",
    "SamplingDiverged",
    "ScoreModel",
    "als_estimate",
    "build_pilots",
    "config",
    "hadamard",
    "ls_estimate",
    "mmse_estimate",
    "nmse",
    "pilot_power_for_snr",
    "run_sweep",
    "sample_hbar",
    "simulate_observation",
    "train",
]


def config(preset="desk", **overrides):
    """Resolved experiment configuration as a dict."""
    return json.loads(_ambc.config(preset, json.dumps(overrides) if overrides else ""))


def run_sweep(cfg):
    """Runs a Monte-Carlo sweep for a config dict; returns (rows, csv_text)."""
    return _ambc.run_sweep(json.dumps(cfg))


def train(cfg, checkpoint, log=""):
    """Trains the score network for a config dict; returns the loaded ScoreModel."""
    return _ambc.train(json.dumps(cfg), str(checkpoint), str(log))
