import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from annotriage.errors import LengthMismatchError
from annotriage.metrics import brier_score, calibration_report, confusion_metrics


class TestConfusionMetrics:
    def test_textbook_counts(self):
        # TP=2, FP=1, FN=1, TN=6 against positive class 1
        predicted = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0]
        gold = [1, 1, 0, 1, 0, 0, 0, 0, 0, 0]
        rep = confusion_metrics(predicted, gold, positive_class=1)
        assert (rep.tp, rep.fp, rep.fn, rep.tn) == (2, 1, 1, 6)
        assert rep.accuracy == pytest.approx(0.8)
        assert rep.precision == pytest.approx(2 / 3)
        assert rep.recall == pytest.approx(2 / 3)
        assert rep.f1 == pytest.approx(2 / 3)

    def test_perfect_classifier(self):
        rep = confusion_metrics([0, 1, 1, 0], [0, 1, 1, 0], 1)
        assert rep.accuracy == rep.precision == rep.recall == rep.f1 == 1.0

    def test_zero_denominator_convention(self):
        with pytest.warns(UserWarning, match="precision"):
            rep = confusion_metrics([0, 0, 0], [1, 0, 0], 1)
        assert rep.precision == 0.0
        assert rep.recall == 0.0
        assert rep.f1 == 0.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            confusion_metrics([1, 0], [1], 1)


class TestBrier:
    def test_confident_correct(self):
        assert brier_score([1.0], [1]) == 0.0

    def test_half_probability(self):
        assert brier_score([0.5, 0.5], [0, 1]) == pytest.approx(0.25)

    def test_confident_wrong(self):
        assert brier_score([1.0], [0]) == pytest.approx(1.0)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            brier_score([0.5], [1, 0])

    @given(st.lists(st.integers(min_value=0, max_value=1), min_size=1, max_size=50))
    def test_constant_half_predicts_quarter(self, labels):
        assert brier_score([0.5] * len(labels), labels) == pytest.approx(0.25)


class TestCalibration:
    def test_single_bin_matching_confidence(self):
        probs = [0.95] * 100
        gold = [1] * 95 + [0] * 5
        rep = calibration_report(probs, gold, bins=10)
        assert rep.ece == pytest.approx(0.0)

    def test_all_certain_all_correct(self):
        rep = calibration_report([1.0] * 20, [1] * 20, bins=10)
        assert rep.ece == pytest.approx(0.0)

    def test_two_bin_hand_computation(self):
        # 4 at 0.1 (1 positive), 6 at 0.9 (4 positive):
        # ECE = 0.4*|0.1-0.25| + 0.6*|0.9-0.6667| = 0.2
        probs = [0.1] * 4 + [0.9] * 6
        gold = [1, 0, 0, 0] + [1, 1, 1, 1, 0, 0]
        rep = calibration_report(probs, gold, bins=10)
        assert rep.ece == pytest.approx(0.2, abs=1e-9)

    def test_bin_counts_sum_to_n(self):
        rng = np.random.default_rng(0)
        probs = rng.random(137)
        gold = rng.integers(0, 2, 137)
        rep = calibration_report(probs, gold, bins=10)
        assert sum(count for _, _, count in rep.bins) == 137
        assert len(rep.bins) == 10

    def test_zero_assigned_to_first_bin(self):
        rep = calibration_report([0.0, 0.05], [0, 0], bins=10)
        assert rep.bins[0][2] == 2

    def test_needs_two_bins(self):
        with pytest.raises(ValueError):
            calibration_report([0.5], [1], bins=1)

    @given(st.data())
    def test_permutation_invariance_and_range(self, data):
        n = data.draw(st.integers(min_value=1, max_value=40))
        probs = data.draw(
            st.lists(
                st.floats(min_value=0.0, max_value=1.0),
                min_size=n,
                max_size=n,
            )
        )
        gold = data.draw(
            st.lists(st.integers(min_value=0, max_value=1), min_size=n, max_size=n)
        )
        perm = data.draw(st.permutations(range(n)))
        rep = calibration_report(probs, gold, bins=10)
        shuffled = calibration_report(
            [probs[i] for i in perm], [gold[i] for i in perm], bins=10
        )
        assert 0.0 <= rep.ece <= 1.0
        assert rep.ece == pytest.approx(shuffled.ece, abs=1e-12)


@given(
    st.lists(st.integers(min_value=0, max_value=1), min_size=1, max_size=30),
)
def test_self_agreement_accuracy_one(pred):
    rep = confusion_metrics(pred, pred, 1)
    assert rep.accuracy == 1.0
