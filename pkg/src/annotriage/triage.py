"""Uncertainty triage over stochastic prediction samples.

Aggregates per-instance sampling distributions into mean/variance records,
partitions instances into certain/uncertain under a removal budget, and
runs the cross-fitted training-set cleaning procedure in which every
instance's uncertainty comes from a model never trained on it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .core import Dataset, Instance, InstanceStatus, ProbVector, validate_prob_vector
from .errors import (
    BudgetTooLargeError,
    DuplicateIdError,
    EmptyMatrixError,
    FoldTooSmallError,
    PredictorFailureError,
)


@dataclass(frozen=True)
class SampleMatrix:
    """T stochastic probability vectors for each of N instances, one model.

    ``samples`` has shape (N, T, m); every length-m slice must be a valid
    probability vector (validated on construction, within the core tolerance).
    """

    model_id: str
    instance_ids: tuple[str, ...]
    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "instance_ids", tuple(self.instance_ids))
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 3:
            raise ValueError(f"samples must be N x T x m, got shape {arr.shape}")
        n, t, m = arr.shape
        if t < 1:
            raise ValueError("need at least one sample per instance (T >= 1)")
        if len(self.instance_ids) != n:
            raise ValueError(f"{len(self.instance_ids)} ids for {n} sample rows")
        if len(set(self.instance_ids)) != n:
            raise DuplicateIdError("instance ids in a sample matrix must be unique")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples contain non-finite entries")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError("probabilities outside [0, 1]")
        sums = arr.sum(axis=2)
        if np.any(np.abs(sums - 1.0) > 1e-6):
            raise ValueError("a sampled vector does not sum to 1 within 1e-6")
        # renormalize so downstream math sees exact simplex points
        arr = arr / sums[:, :, None]
        object.__setattr__(self, "samples", arr)

    @property
    def n_instances(self) -> int:
        return self.samples.shape[0]

    @property
    def t_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def m_classes(self) -> int:
        return self.samples.shape[2]


@dataclass(frozen=True)
class UncertaintyRecord:
    """Mean prediction and sampling variance for one instance.

    ``variance`` is the unbiased (T-1 denominator) sample variance of the
    tracked scalar: the positive-class probability for binary problems,
    the mean-argmax class probability otherwise.
    """

    instance_id: str
    mean: ProbVector
    variance: float
    predicted_class: int


@dataclass(frozen=True)
class TriageResult:
    """Partition of instances into certain and uncertain by variance."""

    certain: tuple[str, ...]
    uncertain: tuple[str, ...]
    budget: int
    threshold_variance: float
    warning: str | None = None


@dataclass(frozen=True)
class CleaningPlan:
    """Parameters of the cross-fitted cleaning procedure."""

    folds: int = 5
    removal_fraction: float = 0.15
    samples_per_instance: int = 30
    seed: int = 0

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("cross-fit needs at least 2 folds")
        if not 0.0 <= self.removal_fraction < 1.0:
            raise ValueError("removal_fraction must lie in [0, 1)")
        if self.samples_per_instance < 1:
            raise ValueError("need at least one sample per instance")


class StochasticPredictor(Protocol):
    """Anything that maps (training data, texts, T, seed) to a SampleMatrix."""

    def __call__(
        self, train: Dataset, texts: Sequence[str], t_samples: int, seed: int
    ) -> SampleMatrix: ...


def classify_from_mean(mean: ProbVector) -> int:
    """Predicted class from a mean probability vector; ties take the lowest index."""
    return mean.argmax()


def aggregate_samples(matrix: SampleMatrix) -> list[UncertaintyRecord]:
    """Collapse each instance's T samples into a mean vector and a variance.

    The mean is the per-class arithmetic mean over samples. The variance is
    the unbiased sample variance of the tracked scalar (positive class for
    m = 2, the mean-argmax class otherwise); T = 1 yields variance 0 by
    convention, with a warning.
    """
    if matrix.n_instances == 0:
        raise EmptyMatrixError("sample matrix has no instances")
    t = matrix.t_samples
    m = matrix.m_classes
    if t == 1:
        warnings.warn("T=1: sample variance is 0 by convention")

    means = matrix.samples.mean(axis=1)  # (N, m)
    records = []
    for i, instance_id in enumerate(matrix.instance_ids):
        mean_vec = validate_prob_vector(means[i], m, tol=1e-9)
        predicted = mean_vec.argmax()
        # for m=2 both class probabilities have identical sample variance
        # (p0 = 1 - p1), so tracking index 1 covers either positive-class choice
        tracked_class = 1 if m == 2 else predicted
        if t == 1:
            var = 0.0
        else:
            var = float(np.var(matrix.samples[i, :, tracked_class], ddof=1))
        records.append(
            UncertaintyRecord(
                instance_id=instance_id,
                mean=mean_vec,
                variance=var,
                predicted_class=predicted,
            )
        )
    return records


def _resolve_budget(budget, n: int) -> int:
    """Normalize a budget to a count: floats are fractions (floored), ints counts."""
    if isinstance(budget, float):
        if not 0.0 <= budget < 1.0:
            raise BudgetTooLargeError(f"fraction budget {budget} outside [0, 1)")
        return int(math.floor(budget * n))
    k = int(budget)
    if k < 0 or k > n:
        raise BudgetTooLargeError(f"budget {k} outside 0..{n}")
    return k


def rank_and_partition(
    records: Sequence[UncertaintyRecord], budget
) -> TriageResult:
    """Split records into certain/uncertain, flagging the highest variances.

    ``budget`` is either an absolute count or a fraction in [0, 1) that
    resolves to floor(fraction * N). Ties are broken by instance id
    (lexicographic) so results are stable across platforms. When every
    variance is equal there is nothing to rank: the uncertain set is empty
    and a warning is attached.
    """
    n = len(records)
    k = _resolve_budget(budget, n)

    variances = {r.instance_id: r.variance for r in records}
    order = sorted(records, key=lambda r: (-r.variance, r.instance_id))

    warning = None
    if n > 0 and k > 0 and order[0].variance == order[-1].variance:
        warning = "all variances equal; nothing flagged"
        warnings.warn(warning)
        k = 0

    uncertain = tuple(r.instance_id for r in order[:k])
    certain = tuple(r.instance_id for r in order[k:])
    threshold = min((variances[i] for i in uncertain), default=math.inf)
    return TriageResult(
        certain=certain,
        uncertain=uncertain,
        budget=k,
        threshold_variance=threshold,
        warning=warning,
    )


def _stratified_folds(
    instances: Sequence[Instance], folds: int, rng: np.random.Generator
) -> list[int]:
    """Assign a fold index to every instance, stratified by gold label."""
    by_class: dict[int | None, list[int]] = {}
    for pos, inst in enumerate(instances):
        by_class.setdefault(inst.gold_label, []).append(pos)
    for label, members in sorted(by_class.items(), key=lambda kv: (kv[0] is None, kv[0])):
        if len(members) < folds:
            raise FoldTooSmallError(
                f"class {label!r} has {len(members)} instances for {folds} folds"
            )
    assignment = [0] * len(instances)
    for label, members in sorted(by_class.items(), key=lambda kv: (kv[0] is None, kv[0])):
        members = list(members)
        rng.shuffle(members)
        for j, pos in enumerate(members):
            assignment[pos] = j % folds
    return assignment


def crossfit_clean(
    train: Dataset,
    plan: CleaningPlan,
    predictor: StochasticPredictor,
) -> tuple[Dataset, list[UncertaintyRecord]]:
    """Remove the highest-variance training instances via cross-fitting.

    The training set is split into ``plan.folds`` disjoint, class-stratified
    folds. For each fold the predictor is trained on the remaining folds and
    produces T stochastic predictions for the held-out instances, so every
    instance's variance comes from a model that never saw it. The top
    ``plan.removal_fraction`` by variance (rank_and_partition tie rules) is
    dropped; removed instances are returned with status ``flagged`` and the
    cleaned dataset preserves the original ordering of survivors.
    """
    instances = train.instances
    n = len(instances)
    if plan.folds > n:
        raise FoldTooSmallError(f"{plan.folds} folds for {n} instances")

    if plan.removal_fraction == 0.0:
        return train, []

    rng = np.random.default_rng(plan.seed)
    assignment = _stratified_folds(instances, plan.folds, rng)

    records: dict[str, UncertaintyRecord] = {}
    for fold in range(plan.folds):
        held_out = [inst for inst, a in zip(instances, assignment) if a == fold]
        rest = [inst for inst, a in zip(instances, assignment) if a != fold]
        fold_train = train.with_instances(rest)
        texts = [inst.text for inst in held_out]
        try:
            matrix = predictor(
                fold_train, texts, plan.samples_per_instance, plan.seed + 1 + fold
            )
        except Exception as exc:  # noqa: BLE001 - fold context matters upstream
            raise PredictorFailureError(fold, exc) from exc
        fold_records = aggregate_samples(matrix)
        if len(fold_records) != len(held_out):
            raise PredictorFailureError(
                fold,
                ValueError(
                    f"predictor returned {len(fold_records)} records "
                    f"for {len(held_out)} instances"
                ),
            )
        for inst, rec in zip(held_out, fold_records):
            records[inst.id] = UncertaintyRecord(
                instance_id=inst.id,
                mean=rec.mean,
                variance=rec.variance,
                predicted_class=rec.predicted_class,
            )

    all_records = [records[inst.id] for inst in instances]
    partition = rank_and_partition(all_records, plan.removal_fraction)
    flagged_ids = set(partition.uncertain)

    survivors = [inst for inst in instances if inst.id not in flagged_ids]
    removed = [
        records[inst.id] for inst in instances if inst.id in flagged_ids
    ]
    cleaned = train.with_instances(survivors)
    return cleaned, removed
