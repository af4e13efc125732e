"""Line-oriented file formats and the append-only annotation store.

Every tabular artifact (datasets, sample matrices, ensemble frames,
uncertainty records, predictions) is JSON-lines with a self-describing
JSON header as the first line, so files diff cleanly and concatenate when
their headers agree. Fitted parameters and generator specs are single
versioned JSON documents. The annotation event log is header-less JSON
lines: append-only by construction, and replaying it from the dataset
snapshot reproduces the effective-label state exactly.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, replace
from typing import Iterable, Iterator

import numpy as np

from .core import (
    Dataset,
    Instance,
    InstanceStatus,
    LabelSpace,
    ProbVector,
    validate_prob_vector,
)
from .errors import (
    DuplicateEventError,
    DuplicateIdError,
    InconsistentTError,
    InvalidLabelError,
    MalformedRecordError,
    UnknownInstanceError,
)
from .mm import ClassMixture, EnsembleFrame, MMParams
from .synthgen import GeneratorSpec
from .triage import SampleMatrix, UncertaintyRecord


def atomic_write(path, text: str) -> None:
    """Write-temp-then-rename so interrupted runs never leave partial files."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_jsonl(header: dict | None, rows: Iterable[dict]) -> str:
    lines = []
    if header is not None:
        lines.append(json.dumps(header))
    lines.extend(json.dumps(row) for row in rows)
    return "\n".join(lines) + "\n"


def _iter_records(path, expected_format: str) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, record) pairs, consuming and checking headers.

    The first line must be a header with the expected format tag. Repeated
    identical headers (from concatenated files) are skipped; a conflicting
    header is a malformed record.
    """
    header = None
    with open(path, "r", encoding="utf-8") as f:
        for line_number, raw in enumerate(f, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise MalformedRecordError(line_number, f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise MalformedRecordError(line_number, "expected a JSON object")
            if "format" in obj:
                if obj.get("format") != expected_format:
                    raise MalformedRecordError(
                        line_number,
                        f"header format {obj.get('format')!r}, expected {expected_format!r}",
                    )
                if header is None:
                    header = obj
                elif obj != header:
                    raise MalformedRecordError(
                        line_number, "conflicting header in concatenated file"
                    )
                continue
            if header is None:
                raise MalformedRecordError(line_number, "missing header line")
            yield line_number, obj
    if header is None:
        raise MalformedRecordError(1, f"empty file; expected a {expected_format} header")


def _read_header(path, expected_format: str) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        for line_number, raw in enumerate(f, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise MalformedRecordError(line_number, f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict) or obj.get("format") != expected_format:
                raise MalformedRecordError(
                    line_number, f"expected a {expected_format} header"
                )
            return obj
    raise MalformedRecordError(1, f"empty file; expected a {expected_format} header")


def _require(record: dict, key: str, line_number: int):
    if key not in record:
        raise MalformedRecordError(line_number, f"record missing {key!r}")
    return record[key]


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------

def save_dataset(dataset: Dataset, path) -> None:
    header = {
        "format": "dataset",
        "version": 1,
        "classes": list(dataset.label_space.classes),
        "positive_class": dataset.label_space.positive_class,
        "split": dataset.split_tag,
    }
    rows = (
        {
            "id": inst.id,
            "text": inst.text,
            "label": inst.gold_label,
            "status": inst.status.value,
        }
        for inst in dataset.instances
    )
    atomic_write(path, _dump_jsonl(header, rows))


def load_dataset(path) -> Dataset:
    header = _read_header(path, "dataset")
    space = LabelSpace(
        classes=tuple(header["classes"]),
        positive_class=int(header.get("positive_class", 0)),
    )
    instances = []
    seen = set()
    for line_number, rec in _iter_records(path, "dataset"):
        instance_id = str(_require(rec, "id", line_number))
        text = _require(rec, "text", line_number)
        if not isinstance(text, str):
            raise MalformedRecordError(line_number, "text must be a string")
        if instance_id in seen:
            raise DuplicateIdError(f"line {line_number}: duplicate id {instance_id!r}")
        seen.add(instance_id)
        label = rec.get("label")
        if label is not None:
            label = int(label)
            space.check_label(label)
        try:
            status = InstanceStatus(rec.get("status", "active"))
        except ValueError as exc:
            raise MalformedRecordError(line_number, str(exc)) from exc
        instances.append(Instance(id=instance_id, text=text, gold_label=label, status=status))
    return Dataset(space, tuple(instances), header.get("split", "unsplit"))


# ---------------------------------------------------------------------------
# sample matrices
# ---------------------------------------------------------------------------

def save_samples(matrix: SampleMatrix, path) -> None:
    header = {
        "format": "samples",
        "version": 1,
        "model_id": matrix.model_id,
        "T": matrix.t_samples,
        "m": matrix.m_classes,
    }

    def rows():
        for i, instance_id in enumerate(matrix.instance_ids):
            for s in range(matrix.t_samples):
                yield {
                    "instance_id": instance_id,
                    "sample_index": s,
                    "p": [float(x) for x in matrix.samples[i, s]],
                }

    atomic_write(path, _dump_jsonl(header, rows()))


def load_samples(path) -> SampleMatrix:
    header = _read_header(path, "samples")
    t_samples = int(header["T"])
    m = int(header["m"])
    per_instance: dict[str, dict[int, list[float]]] = {}
    for line_number, rec in _iter_records(path, "samples"):
        instance_id = str(_require(rec, "instance_id", line_number))
        sample_index = int(_require(rec, "sample_index", line_number))
        p = _require(rec, "p", line_number)
        try:
            vec = validate_prob_vector(p, m)
        except Exception as exc:
            raise type(exc)(f"instance {instance_id!r}: {exc}") from exc
        slot = per_instance.setdefault(instance_id, {})
        if sample_index in slot:
            raise InconsistentTError(
                f"instance {instance_id!r} repeats sample index {sample_index}"
            )
        slot[sample_index] = list(vec.values)

    ids = list(per_instance)
    samples = np.empty((len(ids), t_samples, m))
    for i, instance_id in enumerate(ids):
        slots = per_instance[instance_id]
        if len(slots) != t_samples or set(slots) != set(range(t_samples)):
            raise InconsistentTError(
                f"instance {instance_id!r} has {len(slots)} rows, header declares T={t_samples}"
            )
        for s in range(t_samples):
            samples[i, s] = slots[s]
    return SampleMatrix(
        model_id=str(header["model_id"]), instance_ids=tuple(ids), samples=samples
    )


# ---------------------------------------------------------------------------
# ensemble frames
# ---------------------------------------------------------------------------

def save_frame(frame: EnsembleFrame, path) -> None:
    header = {
        "format": "frame",
        "version": 1,
        "model_ids": list(frame.model_ids),
        "m": frame.m_classes,
        "classes": list(frame.classes) if frame.classes is not None else None,
    }

    def rows():
        for i, instance_id in enumerate(frame.instance_ids):
            row = {
                "instance_id": instance_id,
                "p": [[float(x) for x in frame.predictions[i, j]] for j in range(frame.r_models)],
            }
            if frame.labels is not None:
                row["label"] = int(frame.labels[i])
            yield row

    atomic_write(path, _dump_jsonl(header, rows()))


def load_frame(path) -> EnsembleFrame:
    header = _read_header(path, "frame")
    model_ids = tuple(str(x) for x in header["model_ids"])
    m = int(header["m"])
    r = len(model_ids)
    ids, preds, labels = [], [], []
    any_label = False
    for line_number, rec in _iter_records(path, "frame"):
        instance_id = str(_require(rec, "instance_id", line_number))
        p = _require(rec, "p", line_number)
        if len(p) != r:
            raise MalformedRecordError(
                line_number, f"{len(p)} member vectors, header declares r={r}"
            )
        row = []
        for vec in p:
            try:
                row.append(list(validate_prob_vector(vec, m).values))
            except Exception as exc:
                raise type(exc)(f"instance {instance_id!r}: {exc}") from exc
        ids.append(instance_id)
        preds.append(row)
        label = rec.get("label")
        if label is not None:
            any_label = True
        labels.append(label)
    if any_label and any(lab is None for lab in labels):
        raise MalformedRecordError(1, "labels present on some rows but not all")
    classes = header.get("classes")
    return EnsembleFrame(
        model_ids=model_ids,
        instance_ids=tuple(ids),
        predictions=np.asarray(preds, dtype=float).reshape(len(ids), r, m),
        labels=np.asarray(labels, dtype=int) if any_label else None,
        classes=tuple(classes) if classes else None,
    )


# ---------------------------------------------------------------------------
# uncertainty records and predictions
# ---------------------------------------------------------------------------

def save_uncertainty(
    records, path, model_id: str, t_samples: int, buckets: dict[str, str] | None = None
) -> None:
    """Persist aggregated records; ``buckets`` optionally tags the partition."""
    records = list(records)
    m = records[0].mean.m if records else 0
    header = {
        "format": "uncertainty",
        "version": 1,
        "model_id": model_id,
        "T": t_samples,
        "m": m,
    }

    def rows():
        for rec in records:
            row = {
                "instance_id": rec.instance_id,
                "mean": [float(x) for x in rec.mean],
                "variance": rec.variance,
                "predicted": rec.predicted_class,
            }
            if buckets is not None:
                row["bucket"] = buckets.get(rec.instance_id)
            yield row

    atomic_write(path, _dump_jsonl(header, rows()))


def load_uncertainty(path) -> tuple[list[UncertaintyRecord], dict[str, str]]:
    header = _read_header(path, "uncertainty")
    m = int(header["m"])
    records, buckets = [], {}
    for line_number, rec in _iter_records(path, "uncertainty"):
        instance_id = str(_require(rec, "instance_id", line_number))
        mean = validate_prob_vector(_require(rec, "mean", line_number), m, tol=1e-9)
        records.append(
            UncertaintyRecord(
                instance_id=instance_id,
                mean=mean,
                variance=float(_require(rec, "variance", line_number)),
                predicted_class=int(_require(rec, "predicted", line_number)),
            )
        )
        if rec.get("bucket") is not None:
            buckets[instance_id] = str(rec["bucket"])
    return records, buckets


def save_predictions(ids, probs: np.ndarray, path, model_id: str = "mm") -> None:
    probs = np.atleast_2d(probs)
    header = {"format": "predictions", "version": 1, "model_id": model_id, "m": probs.shape[1]}

    def rows():
        for instance_id, p in zip(ids, probs):
            yield {
                "instance_id": instance_id,
                "p": [float(x) for x in p],
                "predicted": int(np.argmax(p)),
            }

    atomic_write(path, _dump_jsonl(header, rows()))


def load_predictions(path) -> tuple[list[str], np.ndarray]:
    header = _read_header(path, "predictions")
    m = int(header["m"])
    ids, probs = [], []
    for line_number, rec in _iter_records(path, "predictions"):
        ids.append(str(_require(rec, "instance_id", line_number)))
        probs.append(list(validate_prob_vector(_require(rec, "p", line_number), m, 1e-6).values))
    return ids, np.asarray(probs, dtype=float).reshape(len(ids), m)


# ---------------------------------------------------------------------------
# fitted parameters and generator specs
# ---------------------------------------------------------------------------

def _mixture_to_json(mix: ClassMixture) -> dict:
    return {
        "weights": mix.weights.tolist(),
        "means": mix.means.tolist(),
        "covariances": mix.covariances.tolist(),
    }


def _mixture_from_json(obj: dict) -> ClassMixture:
    return ClassMixture(
        weights=np.asarray(obj["weights"], dtype=float),
        means=np.asarray(obj["means"], dtype=float),
        covariances=np.asarray(obj["covariances"], dtype=float),
    )


def save_params(params: MMParams, path, include_draws: bool = True) -> None:
    doc = {
        "format": "mm_params",
        "version": 1,
        "classes": list(params.classes),
        "model_ids": list(params.model_ids),
        "m": params.m,
        "r": params.r,
        "k_components": params.k_components,
        "delta": params.delta,
        "reference_class": params.reference_class,
        "layout": "model-major",
        "class_counts": params.class_counts.tolist(),
        "gamma": params.gamma.tolist(),
        "inflation": params.inflation.tolist(),
        "prior": params.prior,
        "summary": [_mixture_to_json(mix) for mix in params.summary],
        "draws": None
        if params.draws is None or not include_draws
        else [[_mixture_to_json(mix) for mix in class_draws] for class_draws in params.draws],
    }
    atomic_write(path, json.dumps(doc, indent=1) + "\n")


def load_params(path) -> MMParams:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("format") != "mm_params":
        raise MalformedRecordError(1, "not an mm_params document")
    draws = doc.get("draws")
    return MMParams(
        classes=tuple(doc["classes"]),
        model_ids=tuple(doc["model_ids"]),
        m=int(doc["m"]),
        r=int(doc["r"]),
        k_components=int(doc["k_components"]),
        delta=float(doc["delta"]),
        reference_class=int(doc["reference_class"]),
        class_counts=np.asarray(doc["class_counts"], dtype=float),
        gamma=np.asarray(doc["gamma"], dtype=float),
        inflation=np.asarray(doc["inflation"], dtype=float),
        summary=tuple(_mixture_from_json(obj) for obj in doc["summary"]),
        draws=None
        if draws is None
        else tuple(tuple(_mixture_from_json(obj) for obj in class_draws) for class_draws in draws),
        prior=doc.get("prior", {}),
    )


def save_generator_spec(spec: GeneratorSpec, path) -> None:
    doc = {
        "format": "generator_spec",
        "version": 1,
        "m": spec.m,
        "r": spec.r,
        "k_components": spec.k_components,
        "class_probs": spec.class_probs.tolist(),
        "weights": spec.weights.tolist(),
        "means": spec.means.tolist(),
        "covariances": spec.covariances.tolist(),
        "n": spec.n,
        "seed": spec.seed,
    }
    atomic_write(path, json.dumps(doc, indent=1) + "\n")


def load_generator_spec(path) -> GeneratorSpec:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("format") != "generator_spec":
        raise MalformedRecordError(1, "not a generator_spec document")
    return GeneratorSpec(
        m=int(doc["m"]),
        r=int(doc["r"]),
        k_components=int(doc["k_components"]),
        class_probs=np.asarray(doc["class_probs"], dtype=float),
        weights=np.asarray(doc["weights"], dtype=float),
        means=np.asarray(doc["means"], dtype=float),
        covariances=np.asarray(doc["covariances"], dtype=float),
        n=int(doc["n"]),
        seed=int(doc["seed"]),
    )


# ---------------------------------------------------------------------------
# annotation events and the project store
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnnotationEvent:
    """One human labeling decision plus the hint shown when it was made."""

    instance_id: str
    annotator_id: str
    assigned_label: int
    hint: ProbVector
    variance_shown: float
    timestamp: int  # UTC milliseconds
    round: int

    def as_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "annotator_id": self.annotator_id,
            "assigned_label": self.assigned_label,
            "hint": [float(x) for x in self.hint],
            "variance_shown": self.variance_shown,
            "timestamp": self.timestamp,
            "round": self.round,
        }

    @classmethod
    def from_dict(cls, obj: dict, m: int) -> "AnnotationEvent":
        return cls(
            instance_id=str(obj["instance_id"]),
            annotator_id=str(obj["annotator_id"]),
            assigned_label=int(obj["assigned_label"]),
            hint=validate_prob_vector(obj["hint"], m),
            variance_shown=float(obj["variance_shown"]),
            timestamp=int(obj["timestamp"]),
            round=int(obj["round"]),
        )


@dataclass(frozen=True)
class ProjectStore:
    """A dataset snapshot plus the append-only annotation event log.

    The effective label of an instance is its last event's label, keyed by
    (round, timestamp) with append order breaking exact ties, falling back
    to the snapshot's gold label. Events are never mutated or deleted.
    """

    dataset: Dataset
    events: tuple[AnnotationEvent, ...] = ()

    def effective_labels(self) -> dict[str, int | None]:
        labels: dict[str, int | None] = {
            inst.id: inst.gold_label for inst in self.dataset.instances
        }
        ordered = sorted(
            enumerate(self.events), key=lambda pair: (pair[1].round, pair[1].timestamp, pair[0])
        )
        for _, event in ordered:
            labels[event.instance_id] = event.assigned_label
        return labels

    def annotated_ids(self) -> set[str]:
        return {event.instance_id for event in self.events}

    def effective_dataset(self) -> Dataset:
        """Snapshot with effective labels applied; annotated rows become reannotated."""
        labels = self.effective_labels()
        annotated = self.annotated_ids()
        instances = [
            replace(
                inst,
                gold_label=labels[inst.id],
                status=InstanceStatus.REANNOTATED if inst.id in annotated else inst.status,
            )
            for inst in self.dataset.instances
        ]
        return self.dataset.with_instances(instances)


def append_annotation(store: ProjectStore, event: AnnotationEvent) -> ProjectStore:
    """Validate an event against the store and return the extended store."""
    if event.instance_id not in store.dataset:
        raise UnknownInstanceError(f"unknown instance {event.instance_id!r}")
    store.dataset.label_space.check_label(event.assigned_label)
    key = (event.instance_id, event.round, event.annotator_id)
    for existing in store.events:
        if (existing.instance_id, existing.round, existing.annotator_id) == key:
            raise DuplicateEventError(
                f"event for {key} already recorded; events are append-only"
            )
    return ProjectStore(dataset=store.dataset, events=store.events + (event,))


def replay_events(dataset: Dataset, events: Iterable[AnnotationEvent]) -> ProjectStore:
    """Rebuild a store by folding the log through append_annotation."""
    store = ProjectStore(dataset=dataset)
    for event in events:
        store = append_annotation(store, event)
    return store


def load_events(path, m: int) -> list[AnnotationEvent]:
    """Read a header-less event log; missing file means no events yet."""
    if not os.path.exists(path):
        return []
    events = []
    with open(path, "r", encoding="utf-8") as f:
        for line_number, raw in enumerate(f, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
                events.append(AnnotationEvent.from_dict(obj, m))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise MalformedRecordError(line_number, f"bad event: {exc}") from exc
    return events


def append_event_line(path, event: AnnotationEvent) -> None:
    """Append one event to the on-disk log (no rewrite of earlier lines)."""
    with open(path, "a", encoding="utf-8") as f:
        f.write(json.dumps(event.as_dict()) + "\n")
