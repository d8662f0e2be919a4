"""Mamba Hawkes Process: selective state-space encoders for marked temporal point processes."""

import json as _json

from ._core import (
    DataError,
    Dataset,
    EvalMetrics,
    EventSequence,
    HawkesGenConfig,
    NumericError,
    RetryExhaustedError,
    UnstableConfigError,
    discretize,
    load_jsonl,
    make_synthetic_benchmark,
    save_jsonl,
    selective_scan,
    simulate_hawkes,
    step_sizes,
)
from ._core import Model as _Model
from ._core import train as _train


class Model(_Model):
    """MHP / MHP-E model. ``config`` is a dict of ModelConfig fields."""

    def __init__(self, config=None, seed=0):
        super().__init__(_json.dumps(config or {}), seed)

    @property
    def config(self):
        return _json.loads(self.config_json)


def train(config):
    """Run training from a dict of TrainConfig fields; returns the summary dict."""
    return _json.loads(_train(_json.dumps(config)))


__all__ = [
    "DataError",
    "Dataset",
    "EvalMetrics",
    "EventSequence",
    "HawkesGenConfig",
    "Model",
    "NumericError",
    "RetryExhaustedError",
    "UnstableConfigError",
    "discretize",
    "load_jsonl",
    "make_synthetic_benchmark",
    "save_jsonl",
    "selective_scan",
    "simulate_hawkes",
    "step_sizes",
    "train",
]
