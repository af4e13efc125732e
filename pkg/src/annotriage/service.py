"""HTTP API for the re-annotation loop.

Serves the uncertainty-ranked queue with calibrated hints, accepts
annotator decisions into the append-only event log, and recomputes
triage (and the ensemble fit, when configured) on demand. Writes are
serialized through a single lock; reads take immutable snapshots.
"""

from __future__ import annotations

import glob
import json
import math
import os
import threading
import time
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import mm, store, triage
from .errors import (
    AnnotriageError,
    ClassTooSmallError,
    DuplicateEventError,
    InvalidLabelError,
    MissingSamplesError,
    TriageNotComputedError,
    UnknownInstanceError,
)

DEFAULT_BUDGET_FRACTION = 0.15


class AnnotationBody(BaseModel):
    instance_id: str
    annotator_id: str
    assigned_label: int
    hint: list[float]
    variance_shown: float
    round: int = 1
    timestamp: int | None = None


@dataclass
class ProjectState:
    """Mutable service state; replaced under the writer lock."""

    directory: str
    config: dict
    project: store.ProjectStore
    matrices: dict[str, triage.SampleMatrix] = field(default_factory=dict)
    records: dict[str, triage.UncertaintyRecord] = field(default_factory=dict)
    partition: triage.TriageResult | None = None
    params: mm.MMParams | None = None
    hints: dict[str, list[float]] = field(default_factory=dict)
    hint_source: str = "mcd"
    triage_model: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


def _http_error(status: int, error: str, message: str):
    return HTTPException(status_code=status, detail={"error": error, "message": message})


def _load_state(project_dir: str, hint_override: str | None) -> ProjectState:
    dataset = store.load_dataset(os.path.join(project_dir, "dataset.jsonl"))
    config_path = os.path.join(project_dir, "project.json")
    config = {}
    if os.path.exists(config_path):
        with open(config_path, "r", encoding="utf-8") as f:
            config = json.load(f)
    if hint_override:
        config["hint_source"] = hint_override
    events = store.load_events(
        os.path.join(project_dir, "events.jsonl"), dataset.label_space.m
    )
    project = store.replay_events(dataset, events)
    return ProjectState(directory=project_dir, config=config, project=project)


def _sample_paths(state: ProjectState) -> list[str]:
    return sorted(glob.glob(os.path.join(state.directory, "samples", "*.jsonl")))


def _recompute(state: ProjectState) -> dict:
    paths = _sample_paths(state)
    if not paths:
        raise MissingSamplesError(f"no sample matrices under {state.directory}/samples")
    matrices = {}
    for path in paths:
        matrix = store.load_samples(path)
        matrices[matrix.model_id] = matrix

    triage_model = state.config.get("triage_model_id") or sorted(matrices)[0]
    if triage_model not in matrices:
        raise MissingSamplesError(f"triage model {triage_model!r} has no sample file")
    records = {
        rec.instance_id: rec
        for rec in triage.aggregate_samples(matrices[triage_model])
        if rec.instance_id in state.project.dataset
    }
    budget = float(state.config.get("budget_fraction", DEFAULT_BUDGET_FRACTION))
    partition = triage.rank_and_partition(list(records.values()), budget)

    params = None
    hints: dict[str, list[float]] = {}
    hint_source = "mcd"
    ensemble_cfg = state.config.get("ensemble")
    if ensemble_cfg and state.config.get("hint_source") != "mcd":
        params, hints = _fit_ensemble(state, matrices, ensemble_cfg)
        hint_source = "mm"

    state.matrices = matrices
    state.records = records
    state.partition = partition
    state.params = params
    state.hints = hints
    state.hint_source = hint_source
    state.triage_model = triage_model

    annotated = state.project.annotated_ids()
    flagged = len(partition.uncertain)
    resolved = len(annotated)
    remaining = len([i for i in partition.uncertain if i not in annotated])
    threshold = partition.threshold_variance
    return {
        "flagged": flagged,
        "resolved": resolved,
        "remaining": remaining,
        "threshold_variance": None if math.isinf(threshold) else threshold,
        "hint_source": hint_source,
    }


def _fit_ensemble(
    state: ProjectState, matrices: dict, ensemble_cfg
) -> tuple[mm.MMParams, dict[str, list[float]]]:
    """Fit the combiner on mean member predictions with effective labels."""
    cfg = ensemble_cfg if isinstance(ensemble_cfg, dict) else {}
    model_ids = sorted(matrices)
    common = set(matrices[model_ids[0]].instance_ids)
    for model_id in model_ids[1:]:
        common &= set(matrices[model_id].instance_ids)
    common &= {inst.id for inst in state.project.dataset.instances}
    ids = sorted(common)
    if not ids:
        raise MissingSamplesError("sample matrices share no instances with the dataset")

    mean_by_model = {}
    for model_id in model_ids:
        matrix = matrices[model_id]
        index = {iid: i for i, iid in enumerate(matrix.instance_ids)}
        means = matrix.samples.mean(axis=1)
        mean_by_model[model_id] = {iid: means[index[iid]] for iid in ids}

    m = state.project.dataset.label_space.m
    predictions = np.stack(
        [np.stack([mean_by_model[mid][iid] for mid in model_ids]) for iid in ids]
    )
    labels_map = state.project.effective_labels()
    labeled_ids = [iid for iid in ids if labels_map[iid] is not None]
    if not labeled_ids:
        raise ClassTooSmallError("no labeled instances to fit the ensemble on")
    label_arr = np.array([labels_map[iid] for iid in labeled_ids], dtype=int)
    train = mm.EnsembleFrame(
        model_ids=tuple(model_ids),
        instance_ids=tuple(labeled_ids),
        predictions=predictions[[ids.index(i) for i in labeled_ids]],
        labels=label_arr,
        classes=state.project.dataset.label_space.classes,
    )
    gibbs = mm.GibbsConfig(
        k_components=int(cfg.get("k_components", 1)),
        iterations=int(cfg.get("iterations", 600)),
        burn_in=int(cfg.get("burn_in", 300)),
        thinning=int(cfg.get("thinning", 2)),
        seed=int(cfg.get("seed", state.config.get("seed", 0))),
    )
    params, _ = mm.fit_mm(train, gibbs)
    frame_all = mm.EnsembleFrame(
        model_ids=tuple(model_ids),
        instance_ids=tuple(ids),
        predictions=predictions,
        classes=state.project.dataset.label_space.classes,
    )
    probs = mm.predict_frame(frame_all, params)
    hints = {iid: [float(x) for x in probs[i]] for i, iid in enumerate(ids)}
    return params, hints


def _queue_entries(state: ProjectState, limit: int) -> list[dict]:
    if state.partition is None:
        raise TriageNotComputedError("run POST /api/recompute first")
    annotated = state.project.annotated_ids()
    effective = state.project.effective_dataset()
    entries = []
    for rec in state.records.values():
        if rec.instance_id in annotated:
            continue
        inst = effective.get(rec.instance_id)
        if inst.status in ("reannotated", "removed"):
            continue
        if state.hints and rec.instance_id in state.hints:
            hint = state.hints[rec.instance_id]
            source = state.hint_source
        else:
            hint = [float(x) for x in rec.mean]
            source = "mcd"
        entries.append(
            {
                "instance_id": rec.instance_id,
                "text": inst.text,
                "variance": rec.variance,
                "hint": hint,
                "hint_source": source,
                "current_label": inst.gold_label,
                "status": inst.status.value,
            }
        )
    entries.sort(key=lambda e: (-e["variance"], e["instance_id"]))
    return entries[:limit]


def create_app(project_dir: str, hint_override: str | None = None) -> FastAPI:
    """Build the API for one project directory."""
    state = _load_state(project_dir, hint_override)
    app = FastAPI(title="annotriage")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.project_state = state

    @app.get("/api/queue")
    def get_queue(limit: int = 20):
        try:
            return _queue_entries(state, limit)
        except TriageNotComputedError as exc:
            raise _http_error(409, "TriageNotComputed", str(exc)) from exc

    @app.post("/api/annotations")
    def post_annotation(body: AnnotationBody):
        timestamp = body.timestamp if body.timestamp is not None else int(time.time() * 1000)
        with state.lock:
            try:
                event = store.AnnotationEvent(
                    instance_id=body.instance_id,
                    annotator_id=body.annotator_id,
                    assigned_label=body.assigned_label,
                    hint=store.validate_prob_vector(
                        body.hint, state.project.dataset.label_space.m
                    ),
                    variance_shown=body.variance_shown,
                    timestamp=timestamp,
                    round=body.round,
                )
                state.project = store.append_annotation(state.project, event)
            except UnknownInstanceError as exc:
                raise _http_error(404, "UnknownInstance", str(exc)) from exc
            except InvalidLabelError as exc:
                raise _http_error(422, "InvalidLabel", str(exc)) from exc
            except DuplicateEventError as exc:
                raise _http_error(409, "DuplicateEvent", str(exc)) from exc
            except AnnotriageError as exc:
                raise _http_error(422, type(exc).__name__, str(exc)) from exc
            store.append_event_line(os.path.join(state.directory, "events.jsonl"), event)
        return {
            "instance_id": event.instance_id,
            "effective_label": event.assigned_label,
            "round": event.round,
        }

    @app.post("/api/recompute")
    def post_recompute():
        with state.lock:
            try:
                return _recompute(state)
            except MissingSamplesError as exc:
                raise _http_error(409, "MissingSamples", str(exc)) from exc
            except ClassTooSmallError as exc:
                raise _http_error(409, "ClassTooSmall", str(exc)) from exc

    @app.get("/api/instances/{instance_id}")
    def get_instance(instance_id: str):
        if instance_id not in state.project.dataset:
            raise _http_error(404, "UnknownInstance", f"unknown instance {instance_id!r}")
        effective = state.project.effective_dataset()
        inst = effective.get(instance_id)
        stats = []
        for model_id, matrix in sorted(state.matrices.items()):
            if instance_id in matrix.instance_ids:
                i = matrix.instance_ids.index(instance_id)
                mean = matrix.samples[i].mean(axis=0)
                rec = state.records.get(instance_id)
                stats.append(
                    {
                        "model_id": model_id,
                        "T": matrix.t_samples,
                        "mean": [float(x) for x in mean],
                        "variance": rec.variance
                        if rec is not None and model_id == state.triage_model
                        else None,
                    }
                )
        events = [
            e.as_dict() for e in state.project.events if e.instance_id == instance_id
        ]
        return {
            "instance_id": inst.id,
            "text": inst.text,
            "status": inst.status.value,
            "current_label": inst.gold_label,
            "sample_stats": stats,
            "events": events,
        }

    return app


def run(project_dir: str, host: str = "127.0.0.1", port: int = 8765,
        hint_override: str | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(project_dir, hint_override), host=host, port=port)
