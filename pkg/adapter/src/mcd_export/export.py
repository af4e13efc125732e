"""Stochastic-sample export against the annotriage samples file format."""

from __future__ import annotations

import importlib
import json
import os
import tempfile

PROB_TOL = 1e-6


class ModelLoadFailure(Exception):
    """The model reference could not be resolved to a usable object."""


class NonProbabilisticOutput(Exception):
    """A forward pass returned something that is not a probability vector."""


def load_model(model_ref: str):
    """Resolve ``package.module:attr`` to a model object.

    A zero-argument callable attribute is treated as a factory and called.
    """
    if ":" not in model_ref:
        raise ModelLoadFailure(f"model reference {model_ref!r} must be 'module:attr'")
    module_name, attr = model_ref.split(":", 1)
    try:
        module = importlib.import_module(module_name)
    except ImportError as exc:
        raise ModelLoadFailure(f"cannot import {module_name!r}: {exc}") from exc
    try:
        obj = getattr(module, attr)
    except AttributeError as exc:
        raise ModelLoadFailure(f"{module_name!r} has no attribute {attr!r}") from exc
    if callable(obj) and not hasattr(obj, "stochastic_proba"):
        try:
            obj = obj()
        except Exception as exc:
            raise ModelLoadFailure(f"factory {model_ref!r} failed: {exc}") from exc
    if not hasattr(obj, "stochastic_proba"):
        raise ModelLoadFailure(
            f"{model_ref!r} does not expose stochastic_proba(texts)"
        )
    return obj


def _model_classes(model) -> int:
    if hasattr(model, "n_classes"):
        return int(model.n_classes)
    if hasattr(model, "classes"):
        return len(model.classes)
    raise ModelLoadFailure("model declares neither n_classes nor classes")


def enable_dropout(module) -> int:
    """Put every dropout layer of a torch module into train mode.

    Returns the number of layers switched; leaves everything else in eval
    mode, which is the standard recipe for dropout-at-inference sampling.
    """
    import torch.nn as nn

    module.eval()
    switched = 0
    for layer in module.modules():
        if isinstance(layer, (nn.Dropout, nn.Dropout1d, nn.Dropout2d, nn.Dropout3d)):
            layer.train()
            switched += 1
    return switched


def read_dataset_texts(dataset_path) -> tuple[list[str], list[str]]:
    """(instance ids, texts) from an annotriage dataset file."""
    ids, texts = [], []
    with open(dataset_path, "r", encoding="utf-8") as f:
        header = None
        for line_number, raw in enumerate(f, start=1):
            raw = raw.strip()
            if not raw:
                continue
            obj = json.loads(raw)
            if "format" in obj:
                if obj["format"] != "dataset":
                    raise ValueError(f"line {line_number}: not a dataset header")
                header = obj
                continue
            if header is None:
                raise ValueError("missing dataset header")
            ids.append(str(obj["id"]))
            texts.append(str(obj["text"]))
    return ids, texts


def _check_row(row, m: int, instance_id: str) -> list[float]:
    try:
        values = [float(v) for v in row]
    except (TypeError, ValueError) as exc:
        raise NonProbabilisticOutput(
            f"instance {instance_id!r}: forward pass returned {row!r}"
        ) from exc
    if len(values) != m:
        raise NonProbabilisticOutput(
            f"instance {instance_id!r}: {len(values)} entries, expected {m}"
        )
    if any(v < 0.0 or v > 1.0 for v in values):
        raise NonProbabilisticOutput(
            f"instance {instance_id!r}: entry outside [0, 1] in {values}"
        )
    total = sum(values)
    if abs(total - 1.0) > PROB_TOL:
        raise NonProbabilisticOutput(
            f"instance {instance_id!r}: entries sum to {total!r} "
            "(softmax output expected)"
        )
    return values


def export_samples(
    model_ref: str,
    dataset_path,
    t_samples: int,
    out_path,
    seed: int = 0,
    model_id: str | None = None,
) -> None:
    """Run T stochastic passes over the dataset and write the samples file.

    Each pass covers all instances; the model's seed hook (when present)
    receives seed + pass index so runs are reproducible where the runtime
    supports seeded dropout. Rows are written instance-major with exactly
    T rows per instance.
    """
    if t_samples < 1:
        raise ValueError("need at least one pass (T >= 1)")
    model = load_model(model_ref) if isinstance(model_ref, str) else model_ref
    m = _model_classes(model)
    ids, texts = read_dataset_texts(dataset_path)

    passes: list[list[list[float]]] = []
    for t in range(t_samples):
        if hasattr(model, "seed"):
            model.seed(seed + t)
        rows = list(model.stochastic_proba(texts))
        if len(rows) != len(texts):
            raise NonProbabilisticOutput(
                f"pass {t}: {len(rows)} rows for {len(texts)} texts"
            )
        passes.append([_check_row(row, m, ids[i]) for i, row in enumerate(rows)])

    header = {
        "format": "samples",
        "version": 1,
        "model_id": model_id or (model_ref if isinstance(model_ref, str) else "model"),
        "T": t_samples,
        "m": m,
    }
    lines = [json.dumps(header)]
    for i, instance_id in enumerate(ids):
        for t in range(t_samples):
            lines.append(
                json.dumps(
                    {"instance_id": instance_id, "sample_index": t, "p": passes[t][i]}
                )
            )
    _atomic_write(out_path, "\n".join(lines) + "\n")


def _atomic_write(path, text: str) -> None:
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
