"""Thin exporter: run T stochastic forward passes of a classifier over a
dataset file and write a conformant samples file.

The model contract is deliberately small. A model reference is an import
path ``package.module:attr``; the attribute (or, if callable with no
arguments, its return value) must provide:

- ``stochastic_proba(texts) -> sequence of length-m probability vectors``,
  one stochastic forward pass over all texts (dropout kept active);
- ``n_classes`` (int) or ``classes`` (sequence) declaring m;
- optionally ``seed(value)`` so passes are reproducible.

Probabilities are exported exactly as the model emits them; any
post-processing (clamping, temperature, renormalization) belongs to the
consumer so that one code path owns the math.
"""

from .export import (
    ModelLoadFailure,
    NonProbabilisticOutput,
    enable_dropout,
    export_samples,
    load_model,
)

__all__ = [
    "ModelLoadFailure",
    "NonProbabilisticOutput",
    "enable_dropout",
    "export_samples",
    "load_model",
]
