import json

import numpy as np
import pytest

from annotriage import store
from annotriage.core import Dataset, Instance, LabelSpace
from annotriage.triage import aggregate_samples
from mcd_export import (
    ModelLoadFailure,
    NonProbabilisticOutput,
    enable_dropout,
    export_samples,
    load_model,
)
from mcd_export.cli import main
from mcd_export.mocks import ConstantModel, JitteredModel


@pytest.fixture
def dataset_path(tmp_path):
    space = LabelSpace(classes=("calm", "hostile"), positive_class=1)
    ds = Dataset(
        space,
        (
            Instance("a", "first text", 0),
            Instance("b", "second, longer text", 1),
            Instance("c", "third", None),
        ),
    )
    path = tmp_path / "dataset.jsonl"
    store.save_dataset(ds, path)
    return path


class TestConformance:
    def test_constant_export_has_zero_variance(self, dataset_path, tmp_path):
        out = tmp_path / "samples.jsonl"
        export_samples(ConstantModel(), dataset_path, 5, out, seed=0, model_id="const")
        matrix = store.load_samples(out)  # primary loader validates the file
        assert matrix.t_samples == 5
        assert matrix.instance_ids == ("a", "b", "c")
        for record in aggregate_samples(matrix):
            assert record.variance == 0.0
            assert record.mean.values == pytest.approx((0.9, 0.1))

    def test_row_count_contract(self, dataset_path, tmp_path):
        out = tmp_path / "samples.jsonl"
        export_samples(ConstantModel(), dataset_path, 5, out, model_id="const")
        lines = out.read_text().strip().splitlines()
        header = json.loads(lines[0])
        assert header["T"] == 5 and header["m"] == 2
        assert len(lines) == 1 + 15  # header + T rows per instance

    def test_reload_matches_export_exactly(self, dataset_path, tmp_path):
        out = tmp_path / "samples.jsonl"
        export_samples("mcd_export.mocks:jittered_model", dataset_path, 7, out, seed=3)
        matrix = store.load_samples(out)
        assert matrix.samples.shape == (3, 7, 2)
        # re-serializing through the primary must preserve every value
        again = tmp_path / "again.jsonl"
        store.save_samples(matrix, again)
        assert np.array_equal(store.load_samples(again).samples, matrix.samples)

    def test_deterministic_under_seed(self, dataset_path, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        export_samples("mcd_export.mocks:jittered_model", dataset_path, 4, a, seed=9)
        export_samples("mcd_export.mocks:jittered_model", dataset_path, 4, b, seed=9)
        assert a.read_bytes() == b.read_bytes()

    def test_seeded_passes_vary_within_run(self, dataset_path, tmp_path):
        out = tmp_path / "samples.jsonl"
        export_samples("mcd_export.mocks:jittered_model", dataset_path, 10, out, seed=1)
        matrix = store.load_samples(out)
        assert any(rec.variance > 0 for rec in aggregate_samples(matrix))


class TestModelResolution:
    def test_missing_module(self, dataset_path, tmp_path):
        with pytest.raises(ModelLoadFailure):
            export_samples("no.such.module:thing", dataset_path, 2, tmp_path / "x")

    def test_missing_attribute(self, dataset_path, tmp_path):
        with pytest.raises(ModelLoadFailure):
            export_samples("mcd_export.mocks:nope", dataset_path, 2, tmp_path / "x")

    def test_bad_reference_shape(self):
        with pytest.raises(ModelLoadFailure):
            load_model("not-a-reference")

    def test_factory_is_called(self):
        model = load_model("mcd_export.mocks:constant_model")
        assert isinstance(model, ConstantModel)


class TestOutputValidation:
    class BadSum:
        n_classes = 2

        def stochastic_proba(self, texts):
            return [[0.7, 0.7] for _ in texts]

    class NoSoftmax:
        n_classes = 2

        def stochastic_proba(self, texts):
            return [[2.0, -1.0] for _ in texts]

    def test_not_normalized_rejected(self, dataset_path, tmp_path):
        with pytest.raises(NonProbabilisticOutput):
            export_samples(self.BadSum(), dataset_path, 1, tmp_path / "x")

    def test_out_of_range_rejected(self, dataset_path, tmp_path):
        with pytest.raises(NonProbabilisticOutput):
            export_samples(self.NoSoftmax(), dataset_path, 1, tmp_path / "x")

    def test_no_partial_file_on_failure(self, dataset_path, tmp_path):
        out = tmp_path / "samples.jsonl"
        with pytest.raises(NonProbabilisticOutput):
            export_samples(self.BadSum(), dataset_path, 1, out)
        assert not out.exists()
        assert not list(tmp_path.glob(".tmp*"))


class TestTorchBridge:
    def test_dropout_passes_vary_and_seed_reproduces(self, dataset_path, tmp_path):
        torch = pytest.importorskip("torch")
        import torch.nn as nn

        class TinyTextClassifier(nn.Module):
            n_classes = 2

            def __init__(self):
                super().__init__()
                torch.manual_seed(0)
                self.linear = nn.Linear(4, 2)
                self.dropout = nn.Dropout(p=0.5)

            def features(self, texts):
                rows = [
                    [len(t) % 5, t.count(" "), len(t) % 3, 1.0] for t in texts
                ]
                return torch.tensor(rows, dtype=torch.float32)

            def stochastic_proba(self, texts):
                x = self.dropout(self.features(texts))
                return torch.softmax(self.linear(x), dim=1).tolist()

            def seed(self, value):
                torch.manual_seed(value)

        model = TinyTextClassifier()
        assert enable_dropout(model) == 1
        assert model.dropout.training and not model.linear.training

        out_a, out_b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        export_samples(model, dataset_path, 8, out_a, seed=4, model_id="tiny")
        export_samples(model, dataset_path, 8, out_b, seed=4, model_id="tiny")
        assert out_a.read_bytes() == out_b.read_bytes()
        matrix = store.load_samples(out_a)
        assert any(rec.variance > 0 for rec in aggregate_samples(matrix))


class TestCli:
    def test_export_roundtrip(self, dataset_path, tmp_path, capsys):
        out = tmp_path / "samples.jsonl"
        code = main([
            "--model", "mcd_export.mocks:constant_model",
            "--dataset", str(dataset_path),
            "--samples-per-instance", "3",
            "--out", str(out),
            "--seed", "1",
        ])
        assert code == 0
        summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert summary["T"] == 3
        assert store.load_samples(out).t_samples == 3

    def test_failure_exit_code(self, dataset_path, tmp_path, capsys):
        code = main([
            "--model", "no.module:x",
            "--dataset", str(dataset_path),
            "--out", str(tmp_path / "x"),
        ])
        assert code == 1
