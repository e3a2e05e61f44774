"""Classification metrics against hand formulas and pairwise AUC oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqclr.metrics import (
    MetricsReport,
    benchmark_inference,
    binary_auc,
    classification_metrics,
    confusion_matrix,
    evaluate,
    roc_auc_ovr,
    roc_points,
    roc_points_csv,
    trapezoid_area,
)

from _oracles import auc_pairwise, macro_auc_ovr, prf_from_confusion


class TestConfusionMatrix:
    def test_perfect_predictions_diagonal(self):
        labels = np.array([0, 1, 2, 3, 2, 1])
        cm = confusion_matrix(labels, labels)
        assert np.array_equal(cm, np.diag([1, 2, 2, 1]))

    def test_all_predicted_class_zero(self):
        labels = np.array([0, 1, 2, 3])
        cm = confusion_matrix(np.zeros(4, dtype=int), labels)
        assert np.array_equal(cm[:, 0], np.ones(4, dtype=int))
        assert cm[:, 1:].sum() == 0

    def test_total_equals_sample_count(self):
        rng = np.random.default_rng(0)
        preds = rng.integers(0, 4, 57)
        labels = rng.integers(0, 4, 57)
        assert confusion_matrix(preds, labels).sum() == 57

    def test_row_sums_equal_support(self):
        rng = np.random.default_rng(1)
        preds = rng.integers(0, 4, 40)
        labels = rng.integers(0, 4, 40)
        cm = confusion_matrix(preds, labels)
        for c in range(4):
            assert cm[c].sum() == (labels == c).sum()

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="mismatch"):
            confusion_matrix(np.zeros(3, dtype=int), np.zeros(4, dtype=int))

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="indices"):
            confusion_matrix(np.array([4]), np.array([0]))


class TestClassificationMetrics:
    def test_diagonal_matrix_all_ones(self):
        out = classification_metrics(np.diag([3, 5, 2, 4]))
        assert out["accuracy"] == 1.0
        assert out["precision"] == out["recall"] == out["f1"] == 1.0

    def test_symmetric_two_class_half(self):
        out = classification_metrics(np.array([[1, 1], [1, 1]]))
        assert out["accuracy"] == 0.5
        assert out["precision"] == out["recall"] == out["f1"] == 0.5

    @pytest.mark.parametrize("seed", range(5))
    def test_random_matches_hand_formula(self, seed):
        cm = np.random.default_rng(seed).integers(0, 20, (4, 4))
        cm[0, 0] += 1  # guarantee nonempty
        out = classification_metrics(cm)
        p, r, f = prf_from_confusion(cm.astype(float))
        assert np.isclose(out["accuracy"], np.trace(cm) / cm.sum(), atol=1e-12)
        assert np.allclose(out["per_class_precision"], p, atol=1e-12)
        assert np.allclose(out["per_class_recall"], r, atol=1e-12)
        assert np.allclose(out["per_class_f1"], f, atol=1e-12)
        assert np.isclose(out["f1"], f.mean(), atol=1e-12)

    def test_zero_denominator_resolves_to_zero_with_warning(self):
        cm = np.array([[2, 0, 0, 0], [0, 0, 0, 0], [0, 0, 1, 0], [1, 0, 0, 1]])
        with pytest.warns(RuntimeWarning, match="0/0"):
            out = classification_metrics(cm)
        assert out["per_class_precision"][1] == 0.0
        assert out["per_class_recall"][1] == 0.0

    def test_macro_f1_between_min_and_max(self):
        cm = np.random.default_rng(7).integers(0, 9, (4, 4)) + 1
        out = classification_metrics(cm)
        assert min(out["per_class_f1"]) <= out["f1"] <= max(out["per_class_f1"])

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            classification_metrics(np.zeros((4, 4), dtype=int))


class TestBinaryAuc:
    def test_perfect_separation(self):
        assert binary_auc([0.9, 0.8], [0.1, 0.2]) == 1.0

    def test_spec_example_three_quarters(self):
        assert binary_auc([0.8, 0.4], [0.6, 0.2]) == 0.75

    def test_inverted_labels_zero(self):
        assert binary_auc([0.1, 0.2], [0.9, 0.8]) == 0.0

    def test_ties_count_half(self):
        assert binary_auc([0.5], [0.5]) == 0.5

    @given(seed=st.integers(0, 200))
    @settings(max_examples=40, deadline=None)
    def test_matches_pairwise_oracle(self, seed):
        rng = np.random.default_rng(seed)
        pos = rng.normal(size=rng.integers(1, 12))
        neg = rng.normal(size=rng.integers(1, 12))
        assert binary_auc(pos, neg) == auc_pairwise(pos, neg)


class TestRocOvr:
    def test_macro_matches_oracle(self):
        rng = np.random.default_rng(3)
        scores = rng.normal(size=(40, 4))
        labels = rng.integers(0, 4, 40)
        out = roc_auc_ovr(scores, labels)
        assert np.isclose(out["macro"], macro_auc_ovr(scores, labels, 4), atol=1e-12)
        for c in range(4):
            expected = auc_pairwise(scores[labels == c, c], scores[labels != c, c])
            assert np.isclose(out["per_class"][c], expected, atol=1e-12)

    def test_degenerate_class_excluded_with_warning(self):
        scores = np.random.default_rng(0).normal(size=(10, 4))
        labels = np.array([0, 0, 1, 1, 2, 2, 0, 1, 2, 0])  # class 3 absent
        with pytest.warns(RuntimeWarning, match="class 3"):
            out = roc_auc_ovr(scores, labels)
        assert out["per_class"][3] is None
        defined = [a for a in out["per_class"] if a is not None]
        assert np.isclose(out["macro"], np.mean(defined), atol=1e-12)

    def test_threshold_sweep_area_agrees_with_pairwise(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            scores = rng.normal(size=30)
            is_pos = rng.uniform(size=30) < 0.4
            if is_pos.all() or not is_pos.any():
                continue
            area = trapezoid_area(roc_points(scores, is_pos))
            pairwise = binary_auc(scores[is_pos], scores[~is_pos])
            assert np.isclose(area, pairwise, atol=1e-9)

    def test_roc_points_anchored(self):
        pts = roc_points(np.array([0.1, 0.9, 0.5]), np.array([False, True, False]))
        assert pts[0] == (0.0, 0.0)
        assert pts[-1] == (1.0, 1.0)
        fprs = [p[0] for p in pts]
        tprs = [p[1] for p in pts]
        assert all(np.diff(fprs) >= 0) and all(np.diff(tprs) >= 0)

    def test_csv_export(self):
        pts = [[(0.0, 0.0), (1.0, 1.0)], [], [], []]
        csv = roc_points_csv(pts)
        lines = csv.strip().splitlines()
        assert lines[0] == "class,fpr,tpr"
        assert lines[1] == "0,0,0"
        assert lines[2] == "0,1,1"


class TestEvaluate:
    def test_full_report_on_separable_scores(self):
        labels = np.repeat(np.arange(4), 5)
        scores = np.full((20, 4), -1.0)
        scores[np.arange(20), labels] = 1.0
        report = evaluate(scores, labels, parameter_count=123)
        assert report.accuracy == 1.0 and report.f1 == 1.0 and report.auc == 1.0
        assert report.parameter_count == 123
        assert np.array_equal(report.confusion, np.eye(4, dtype=int) * 5)

    def test_report_serialization(self):
        labels = np.repeat(np.arange(4), 3)
        scores = np.random.default_rng(2).normal(size=(12, 4))
        report = evaluate(scores, labels)
        d = report.to_dict()
        assert set(d) >= {"accuracy", "precision", "recall", "f1", "auc", "confusion"}
        text = report.to_text()
        assert "accuracy:" in text and "confusion:" in text

    def test_pure_function(self):
        labels = np.repeat(np.arange(4), 4)
        scores = np.random.default_rng(5).normal(size=(16, 4))
        a = evaluate(scores, labels)
        b = evaluate(scores, labels)
        assert a.to_dict() == b.to_dict()

    def test_rates_bounded(self):
        labels = np.repeat(np.arange(4), 4)
        scores = np.random.default_rng(9).normal(size=(16, 4))
        r = evaluate(scores, labels)
        for v in (r.accuracy, r.precision, r.recall, r.f1, r.auc):
            assert 0.0 <= v <= 1.0


class TestBenchmark:
    def test_reports_mean_and_stddev(self):
        calls = []
        out = benchmark_inference(lambda: calls.append(1), num_sequences=10, repeats=3)
        assert len(calls) == 4  # warm-up plus three timed passes
        assert out["mean_pass_seconds"] >= 0.0
        assert np.isfinite(out["stddev_pass_seconds"])
        assert out["mean_sequence_seconds"] == pytest.approx(out["mean_pass_seconds"] / 10)

    def test_too_few_repeats_rejected(self):
        with pytest.raises(ValueError, match="repeats"):
            benchmark_inference(lambda: None, num_sequences=1, repeats=2)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            benchmark_inference(lambda: None, num_sequences=0)
