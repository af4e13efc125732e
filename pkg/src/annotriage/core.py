"""Shared domain types: label spaces, instances, datasets, probability vectors.

All types here are immutable values; they validate themselves on
construction and are safe to share between threads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

from .errors import (
    DuplicateIdError,
    InvalidLabelError,
    NotNormalizedError,
    OutOfRangeError,
    WrongArityError,
)

PROB_TOL = 1e-6


class InstanceStatus(str, enum.Enum):
    ACTIVE = "active"
    FLAGGED = "flagged"
    REMOVED = "removed"
    REANNOTATED = "reannotated"


@dataclass(frozen=True)
class LabelSpace:
    """Ordered class names plus the index reported as the positive class."""

    classes: tuple[str, ...]
    positive_class: int = 0

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        if len(self.classes) < 2:
            raise ValueError("label space needs at least two classes")
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("class names must be unique")
        if any(not c for c in self.classes):
            raise ValueError("class names must be non-empty")
        if not 0 <= self.positive_class < len(self.classes):
            raise ValueError(
                f"positive_class {self.positive_class} outside 0..{len(self.classes) - 1}"
            )

    @property
    def m(self) -> int:
        return len(self.classes)

    def check_label(self, label: int) -> int:
        if not isinstance(label, int) or not 0 <= label < self.m:
            raise InvalidLabelError(f"label {label!r} outside 0..{self.m - 1}")
        return label


@dataclass(frozen=True)
class ProbVector:
    """A point on the probability simplex over m classes.

    Construct through :func:`validate_prob_vector`; direct construction
    assumes the values are already an exact simplex point.
    """

    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def m(self) -> int:
        return len(self.values)

    def argmax(self) -> int:
        """Index of the largest entry; exact ties resolve to the lowest index."""
        best = 0
        for i, v in enumerate(self.values):
            if v > self.values[best]:
                best = i
        return best

    def __getitem__(self, i: int) -> float:
        return self.values[i]

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


def validate_prob_vector(values, m: int, tol: float = PROB_TOL) -> ProbVector:
    """Check a raw float sequence and return an exact simplex point.

    Vectors whose sum deviates from 1 by at most ``tol`` are renormalized
    (divided by their sum) so downstream math sees exact simplex points;
    larger deviations raise ``NotNormalizedError``.
    """
    vals = [float(v) for v in values]
    if len(vals) != m:
        raise WrongArityError(f"expected {m} entries, got {len(vals)}")
    for v in vals:
        if not math.isfinite(v):
            raise OutOfRangeError(f"non-finite entry {v!r}")
        if v < 0.0 or v > 1.0:
            raise OutOfRangeError(f"entry {v!r} outside [0, 1]")
    total = sum(vals)
    if abs(total - 1.0) > tol:
        raise NotNormalizedError(f"entries sum to {total!r}, not 1 within {tol}")
    if total != 1.0:
        vals = [v / total for v in vals]
    return ProbVector(tuple(vals))


@dataclass(frozen=True)
class Instance:
    id: str
    text: str
    gold_label: int | None = None
    status: InstanceStatus = InstanceStatus.ACTIVE

    def __post_init__(self):
        if not self.id:
            raise ValueError("instance id must be non-empty")
        if not isinstance(self.status, InstanceStatus):
            object.__setattr__(self, "status", InstanceStatus(self.status))


@dataclass(frozen=True)
class Dataset:
    """An immutable collection of instances under one label space."""

    label_space: LabelSpace
    instances: tuple[Instance, ...]
    split_tag: str = "unsplit"
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        if self.split_tag not in ("train", "validation", "test", "unsplit"):
            raise ValueError(f"unknown split tag {self.split_tag!r}")
        index = {}
        for inst in self.instances:
            if inst.id in index:
                raise DuplicateIdError(f"duplicate instance id {inst.id!r}")
            if inst.gold_label is not None:
                self.label_space.check_label(inst.gold_label)
            index[inst.id] = inst
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.instances)

    def __contains__(self, instance_id: str) -> bool:
        return instance_id in self._index

    def get(self, instance_id: str) -> Instance:
        return self._index[instance_id]

    def class_counts(self) -> list[int]:
        """Number of gold labels per class, in label-space order (n_t)."""
        counts = [0] * self.label_space.m
        for inst in self.instances:
            if inst.gold_label is not None:
                counts[inst.gold_label] += 1
        return counts

    def with_instances(self, instances) -> "Dataset":
        return replace(self, instances=tuple(instances), _index=None)

    def labeled(self) -> tuple[Instance, ...]:
        return tuple(i for i in self.instances if i.gold_label is not None)
