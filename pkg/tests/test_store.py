import json
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from annotriage import mm, store
from annotriage.core import Dataset, Instance, InstanceStatus, LabelSpace
from annotriage.errors import (
    DuplicateEventError,
    DuplicateIdError,
    InconsistentTError,
    InvalidLabelError,
    MalformedRecordError,
    OutOfRangeError,
    UnknownInstanceError,
)
from annotriage.store import AnnotationEvent, ProjectStore, append_annotation, replay_events
from annotriage.synthgen import generate, preset_generator, synth_text_dataset
from annotriage.triage import SampleMatrix

from conftest import make_matrix


@pytest.fixture
def small_dataset(binary_space):
    return Dataset(
        binary_space,
        (
            Instance("a", "gentle words", 0),
            Instance("b", "angry words\twith tabs", 1, InstanceStatus.FLAGGED),
            Instance("c", "unlabeled text", None),
        ),
        "train",
    )


class TestDatasetFile:
    def test_roundtrip_identity(self, small_dataset, tmp_path):
        path = tmp_path / "d.jsonl"
        store.save_dataset(small_dataset, path)
        loaded = store.load_dataset(path)
        assert loaded == small_dataset
        assert loaded.class_counts() == small_dataset.class_counts()

    def test_roundtrip_twice_stable(self, tmp_path):
        dataset, _, _ = synth_text_dataset(40, seed=1, noise=0.1)
        p1, p2 = tmp_path / "1.jsonl", tmp_path / "2.jsonl"
        store.save_dataset(dataset, p1)
        store.save_dataset(store.load_dataset(p1), p2)
        assert p1.read_text() == p2.read_text()

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "d.jsonl"
        header = {"format": "dataset", "version": 1, "classes": ["x", "y"],
                  "positive_class": 0, "split": "train"}
        rows = [{"id": "a", "text": "t", "label": 0, "status": "active"}] * 2
        path.write_text("\n".join(json.dumps(r) for r in [header, *rows]) + "\n")
        with pytest.raises(DuplicateIdError):
            store.load_dataset(path)

    def test_missing_text_reports_line(self, tmp_path):
        path = tmp_path / "d.jsonl"
        header = {"format": "dataset", "version": 1, "classes": ["x", "y"],
                  "positive_class": 0, "split": "train"}
        lines = [json.dumps(header), json.dumps({"id": "a", "text": "t"}),
                 json.dumps({"id": "b"})]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(MalformedRecordError) as excinfo:
            store.load_dataset(path)
        assert excinfo.value.line_number == 3

    def test_invalid_json_reports_line(self, tmp_path):
        path = tmp_path / "d.jsonl"
        header = {"format": "dataset", "version": 1, "classes": ["x", "y"],
                  "positive_class": 0, "split": "train"}
        path.write_text(json.dumps(header) + "\n{oops\n")
        with pytest.raises(MalformedRecordError) as excinfo:
            store.load_dataset(path)
        assert excinfo.value.line_number == 2

    def test_concatenated_files_with_same_header(self, small_dataset, tmp_path):
        p1 = tmp_path / "d.jsonl"
        store.save_dataset(small_dataset, p1)
        text = p1.read_text()
        header_line = text.splitlines()[0]
        extra = json.dumps({"id": "z", "text": "more", "label": 1, "status": "active"})
        p1.write_text(text + header_line + "\n" + extra + "\n")
        loaded = store.load_dataset(p1)
        assert "z" in loaded


class TestSamplesFile:
    def test_roundtrip_close(self, tmp_path):
        matrix = make_matrix({"a": 0.01, "b": 0.2, "c": 0.003})
        path = tmp_path / "s.jsonl"
        store.save_samples(matrix, path)
        loaded = store.load_samples(path)
        assert loaded.model_id == matrix.model_id
        assert loaded.instance_ids == matrix.instance_ids
        assert np.abs(loaded.samples - matrix.samples).max() <= 1e-9

    def test_inconsistent_t(self, tmp_path):
        matrix = make_matrix({"a": 0.01, "b": 0.2}, t_samples=2)
        path = tmp_path / "s.jsonl"
        store.save_samples(matrix, path)
        lines = path.read_text().strip().splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n")  # drop b's last row
        with pytest.raises(InconsistentTError, match="b"):
            store.load_samples(path)

    def test_out_of_range_names_instance(self, tmp_path):
        path = tmp_path / "s.jsonl"
        header = {"format": "samples", "version": 1, "model_id": "m", "T": 1, "m": 2}
        row = {"instance_id": "bad-one", "sample_index": 0, "p": [1.2, -0.2]}
        path.write_text(json.dumps(header) + "\n" + json.dumps(row) + "\n")
        with pytest.raises(OutOfRangeError, match="bad-one"):
            store.load_samples(path)


class TestFrameAndParams:
    def test_frame_roundtrip(self, tmp_path):
        frame = generate(preset_generator("correlated3", n=25, seed=4))
        path = tmp_path / "f.jsonl"
        store.save_frame(frame, path)
        loaded = store.load_frame(path)
        assert loaded.model_ids == frame.model_ids
        assert np.abs(loaded.predictions - frame.predictions).max() <= 1e-9
        assert np.array_equal(loaded.labels, frame.labels)

    def test_unlabeled_frame_roundtrip(self, tmp_path):
        frame = generate(preset_generator("mirror", n=10, seed=4))
        frame = mm.EnsembleFrame(
            frame.model_ids, frame.instance_ids, frame.predictions
        )
        path = tmp_path / "f.jsonl"
        store.save_frame(frame, path)
        assert store.load_frame(path).labels is None

    def test_params_roundtrip_preserves_predictions(self, tmp_path):
        train = generate(preset_generator("mirror", n=400, seed=4))
        params, _ = mm.fit_mm(
            train, mm.GibbsConfig(iterations=120, burn_in=40, thinning=2, seed=1)
        )
        path = tmp_path / "params.json"
        store.save_params(params, path)
        loaded = store.load_params(path)
        u = np.array([[0.3], [-1.4]])
        assert mm.mm_predict_batch(u, loaded) == pytest.approx(
            mm.mm_predict_batch(u, params), abs=1e-12
        )
        assert loaded.n_draws() == params.n_draws()

    def test_params_without_draws(self, tmp_path):
        train = generate(preset_generator("mirror", n=400, seed=4))
        params, _ = mm.fit_mm(
            train, mm.GibbsConfig(iterations=120, burn_in=40, thinning=2, seed=1)
        )
        path = tmp_path / "params.json"
        store.save_params(params, path, include_draws=False)
        loaded = store.load_params(path)
        assert loaded.draws is None
        probs = mm.mm_predict_batch(np.array([[0.5]]), loaded)
        assert probs.shape == (1, 2)

    def test_generator_spec_roundtrip(self, tmp_path):
        spec = preset_generator("biased3", n=60, seed=11)
        path = tmp_path / "spec.json"
        store.save_generator_spec(spec, path)
        loaded = store.load_generator_spec(path)
        assert np.array_equal(
            generate(loaded).predictions, generate(spec).predictions
        )


class TestAnnotationLog:
    def event(self, instance_id="a", label=1, annotator="ann1", round_=1, ts=1000):
        return AnnotationEvent(
            instance_id=instance_id,
            annotator_id=annotator,
            assigned_label=label,
            hint=store.validate_prob_vector([0.2, 0.8], 2),
            variance_shown=0.05,
            timestamp=ts,
            round=round_,
        )

    def test_append_sets_effective_label(self, small_dataset):
        project = ProjectStore(small_dataset)
        project = append_annotation(project, self.event(label=1))
        assert project.effective_labels()["a"] == 1
        assert project.effective_dataset().get("a").status is InstanceStatus.REANNOTATED

    def test_last_round_wins(self, small_dataset):
        project = ProjectStore(small_dataset)
        project = append_annotation(project, self.event(label=1, round_=1))
        project = append_annotation(project, self.event(label=0, round_=2))
        assert project.effective_labels()["a"] == 0

    def test_unknown_instance(self, small_dataset):
        with pytest.raises(UnknownInstanceError):
            append_annotation(ProjectStore(small_dataset), self.event(instance_id="zz"))

    def test_invalid_label(self, small_dataset):
        with pytest.raises(InvalidLabelError):
            append_annotation(ProjectStore(small_dataset), self.event(label=7))

    def test_duplicate_event(self, small_dataset):
        project = append_annotation(ProjectStore(small_dataset), self.event())
        with pytest.raises(DuplicateEventError):
            append_annotation(project, self.event(label=0))

    def test_log_file_roundtrip(self, small_dataset, tmp_path):
        path = tmp_path / "events.jsonl"
        events = [self.event(), self.event(instance_id="b", label=0, ts=2000)]
        for e in events:
            store.append_event_line(path, e)
        loaded = store.load_events(path, m=2)
        assert loaded == events
        assert store.load_events(tmp_path / "missing.jsonl", m=2) == []

    @given(st.data())
    def test_replay_reproduces_state(self, data):
        space = LabelSpace(classes=("calm", "hostile"), positive_class=1)
        dataset = Dataset(
            space,
            tuple(Instance(f"i{k}", f"text {k}", k % 2) for k in range(4)),
        )
        n_events = data.draw(st.integers(min_value=0, max_value=8))
        project = ProjectStore(dataset)
        log = []
        for step in range(n_events):
            event = AnnotationEvent(
                instance_id=data.draw(st.sampled_from(["i0", "i1", "i2", "i3"])),
                annotator_id=data.draw(st.sampled_from(["a1", "a2"])),
                assigned_label=data.draw(st.integers(min_value=0, max_value=1)),
                hint=store.validate_prob_vector([0.5, 0.5], 2),
                variance_shown=0.1,
                timestamp=1000 + step,
                round=step + 1,
            )
            project = append_annotation(project, event)
            log.append(event)
        replayed = replay_events(dataset, log)
        assert replayed.effective_labels() == project.effective_labels()
        assert replayed.events == project.events


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "out.txt"
    store.atomic_write(target, "payload\n")
    assert target.read_text() == "payload\n"
    assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]
