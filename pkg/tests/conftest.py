"""Shared fixtures and small builders used across the suite."""

import numpy as np
import pytest
from hypothesis import settings

from annotriage.core import Dataset, Instance, LabelSpace
from annotriage.mm import ClassMixture, EnsembleFrame, MMParams
from annotriage.triage import SampleMatrix

settings.register_profile("suite", max_examples=50, deadline=None)
settings.load_profile("suite")


@pytest.fixture
def binary_space():
    return LabelSpace(classes=("calm", "hostile"), positive_class=1)


@pytest.fixture
def toy_corpus(binary_space):
    """Linearly separable two-class corpus: 10 docs per class."""
    instances = []
    for i in range(10):
        instances.append(
            Instance(id=f"good{i}", text="good kind words", gold_label=0)
        )
        instances.append(
            Instance(id=f"ugly{i}", text="ugly hateful words", gold_label=1)
        )
    return Dataset(binary_space, tuple(instances), "train")


def make_matrix(variances_by_id: dict[str, float], t_samples: int = 4) -> SampleMatrix:
    """Sample matrix whose per-instance positive-class variance is controlled.

    Builds T samples symmetric around 0.5 with the requested unbiased
    variance: half the samples at 0.5 + a, half at 0.5 - a, where
    a = sqrt(var * (T - 1) / T).
    """
    assert t_samples % 2 == 0
    ids = sorted(variances_by_id)
    samples = np.empty((len(ids), t_samples, 2))
    for i, instance_id in enumerate(ids):
        var = variances_by_id[instance_id]
        amp = np.sqrt(var * (t_samples - 1) / t_samples)
        for s in range(t_samples):
            pos = 0.5 + amp if s % 2 == 0 else 0.5 - amp
            samples[i, s] = [1.0 - pos, pos]
    return SampleMatrix(model_id="fixture", instance_ids=tuple(ids), samples=samples)


def gaussian_params(
    mu0: float,
    mu1: float,
    var: float = 1.0,
    counts=(100.0, 100.0),
    gamma=(1.0, 1.0),
) -> MMParams:
    """Hand-built one-dimensional K=1 params for two classes."""
    summary = tuple(
        ClassMixture(
            weights=np.array([1.0]),
            means=np.array([[mu]]),
            covariances=np.array([[[var]]]),
        )
        for mu in (mu0, mu1)
    )
    return MMParams(
        classes=("c0", "c1"),
        model_ids=("clf",),
        m=2,
        r=1,
        k_components=1,
        delta=1e-6,
        reference_class=1,
        class_counts=np.asarray(counts, dtype=float),
        gamma=np.asarray(gamma, dtype=float),
        inflation=np.ones(1),
        summary=summary,
        draws=None,
    )


def frame_from_positive_probs(pos_probs, labels=None, model_id="clf") -> EnsembleFrame:
    """Single-model binary frame from positive-class probabilities."""
    pos = np.asarray(pos_probs, dtype=float)
    preds = np.stack([1.0 - pos, pos], axis=1)[:, None, :]
    return EnsembleFrame(
        model_ids=(model_id,),
        instance_ids=tuple(f"i{k}" for k in range(len(pos))),
        predictions=preds,
        labels=None if labels is None else np.asarray(labels, dtype=int),
    )
