"""Classification metrics: confusion matrix, macro precision/recall/F1,
one-vs-rest ROC/AUC by pairwise counting, and an inference benchmark.

All functions are pure. Ratios with zero denominators resolve to 0 with a
warning so reports stay total. Per-class AUC is computed by exact pairwise
counting (ties worth 1/2); ROC points come from a threshold sweep over the
distinct scores and are exportable as CSV.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

NUM_CLASSES = 4


@dataclass
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float | None
    confusion: np.ndarray
    per_class_precision: list[float]
    per_class_recall: list[float]
    per_class_f1: list[float]
    per_class_auc: list[float | None]
    roc_points: list[list[tuple[float, float]]]
    parameter_count: int | None = None
    mean_inference_seconds: float | None = None

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auc": self.auc,
            "confusion": self.confusion.tolist(),
            "per_class_precision": self.per_class_precision,
            "per_class_recall": self.per_class_recall,
            "per_class_f1": self.per_class_f1,
            "per_class_auc": self.per_class_auc,
            "parameter_count": self.parameter_count,
            "mean_inference_seconds": self.mean_inference_seconds,
        }

    def to_text(self) -> str:
        lines = [f"accuracy: {self.accuracy:.4f}",
                 f"precision: {self.precision:.4f}",
                 f"recall: {self.recall:.4f}",
                 f"f1: {self.f1:.4f}",
                 f"auc: {self.auc:.4f}" if self.auc is not None else "auc: n/a"]
        if self.parameter_count is not None:
            lines.append(f"parameter_count: {self.parameter_count}")
        if self.mean_inference_seconds is not None:
            lines.append(f"mean_inference_seconds: {self.mean_inference_seconds:.4f}")
        lines.append("confusion:")
        for row in self.confusion:
            lines.append("  " + " ".join(f"{int(v):5d}" for v in row))
        return "\n".join(lines)


def confusion_matrix(preds, labels, num_classes: int = NUM_CLASSES) -> np.ndarray:
    """entry[r][c] = count of samples with true label r predicted as c."""
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    if preds.shape != labels.shape:
        raise ValueError(f"length mismatch: {preds.shape} vs {labels.shape}")
    if preds.size and (preds.min() < 0 or preds.max() >= num_classes
                       or labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError(f"class indices must lie in 0..{num_classes - 1}")
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (labels, preds), 1)
    return cm


def _safe_div(num: float, den: float, what: str) -> float:
    if den == 0:
        if num != 0:
            raise ValueError(f"{what}: nonzero numerator with zero denominator")
        warnings.warn(f"{what}: 0/0 resolved to 0", RuntimeWarning, stacklevel=3)
        return 0.0
    return num / den


def classification_metrics(cm: np.ndarray) -> dict:
    """Accuracy plus per-class and unweighted-macro precision/recall/F1."""
    cm = np.asarray(cm)
    total = cm.sum()
    if total == 0:
        raise ValueError("empty confusion matrix")
    k = cm.shape[0]
    accuracy = float(np.trace(cm)) / float(total)
    precision, recall, f1 = [], [], []
    for c in range(k):
        tp = float(cm[c, c])
        p = _safe_div(tp, float(cm[:, c].sum()), f"precision[{c}]")
        r = _safe_div(tp, float(cm[c, :].sum()), f"recall[{c}]")
        f = _safe_div(2 * p * r, p + r, f"f1[{c}]") if (p + r) > 0 else 0.0
        precision.append(p)
        recall.append(r)
        f1.append(f)
    return {
        "accuracy": accuracy,
        "precision": float(np.mean(precision)),
        "recall": float(np.mean(recall)),
        "f1": float(np.mean(f1)),
        "per_class_precision": precision,
        "per_class_recall": recall,
        "per_class_f1": f1,
    }


def binary_auc(scores_pos: np.ndarray, scores_neg: np.ndarray) -> float:
    """Pairwise counting: P(pos > neg) + 0.5 * P(pos == neg)."""
    pos = np.asarray(scores_pos, dtype=np.float64)
    neg = np.asarray(scores_neg, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("binary_auc needs at least one positive and one negative")
    diff = pos[:, None] - neg[None, :]
    wins = (diff > 0).sum() + 0.5 * (diff == 0).sum()
    return float(wins) / (pos.size * neg.size)


def roc_points(scores: np.ndarray, is_pos: np.ndarray) -> list[tuple[float, float]]:
    """(FPR, TPR) pairs from a threshold sweep over the distinct scores,
    anchored at (0,0) and (1,1); predicted positive means score >= threshold."""
    scores = np.asarray(scores, dtype=np.float64)
    is_pos = np.asarray(is_pos, dtype=bool)
    n_pos = int(is_pos.sum())
    n_neg = int((~is_pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_points needs at least one positive and one negative")
    points = [(0.0, 0.0)]
    for thr in np.unique(scores)[::-1]:
        hit = scores >= thr
        tpr = float((hit & is_pos).sum()) / n_pos
        fpr = float((hit & ~is_pos).sum()) / n_neg
        points.append((fpr, tpr))
    if points[-1] != (1.0, 1.0):
        points.append((1.0, 1.0))
    return points


def trapezoid_area(points: list[tuple[float, float]]) -> float:
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    trapezoid = getattr(np, "trapezoid", None) or np.trapz
    return float(trapezoid(ys, xs))


def roc_auc_ovr(scores: np.ndarray, labels: np.ndarray,
                num_classes: int = NUM_CLASSES) -> dict:
    """One-vs-rest AUC per class plus macro average and ROC point lists.

    Classes lacking positives or negatives get AUC None and are excluded
    from the macro with a warning.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 2 or scores.shape[1] != num_classes:
        raise ValueError(f"scores must be [B,{num_classes}], got {scores.shape}")
    if labels.shape != (scores.shape[0],):
        raise ValueError("labels length must match scores rows")
    per_class: list[float | None] = []
    points: list[list[tuple[float, float]]] = []
    for c in range(num_classes):
        is_pos = labels == c
        n_pos = int(is_pos.sum())
        n_neg = int((~is_pos).sum())
        if n_pos == 0 or n_neg == 0:
            warnings.warn(f"class {c}: AUC undefined "
                          f"({n_pos} positives, {n_neg} negatives); excluded from macro",
                          RuntimeWarning, stacklevel=2)
            per_class.append(None)
            points.append([])
            continue
        col = scores[:, c]
        per_class.append(binary_auc(col[is_pos], col[~is_pos]))
        points.append(roc_points(col, is_pos))
    defined = [a for a in per_class if a is not None]
    macro = float(np.mean(defined)) if defined else None
    return {"per_class": per_class, "macro": macro, "roc_points": points}


def roc_points_csv(points_by_class: list[list[tuple[float, float]]]) -> str:
    """Flatten per-class ROC points to CSV rows of class,fpr,tpr."""
    lines = ["class,fpr,tpr"]
    for c, pts in enumerate(points_by_class):
        for fpr, tpr in pts:
            lines.append(f"{c},{fpr:.10g},{tpr:.10g}")
    return "\n".join(lines) + "\n"


def evaluate(scores: np.ndarray, labels: np.ndarray,
             num_classes: int = NUM_CLASSES,
             parameter_count: int | None = None,
             mean_inference_seconds: float | None = None) -> MetricsReport:
    """Full report from class scores (e.g. logits) and true labels."""
    scores = np.asarray(scores)
    labels = np.asarray(labels)
    preds = scores.argmax(axis=1)
    cm = confusion_matrix(preds, labels, num_classes)
    cls = classification_metrics(cm)
    auc = roc_auc_ovr(scores, labels, num_classes)
    return MetricsReport(
        accuracy=cls["accuracy"], precision=cls["precision"], recall=cls["recall"],
        f1=cls["f1"], auc=auc["macro"], confusion=cm,
        per_class_precision=cls["per_class_precision"],
        per_class_recall=cls["per_class_recall"],
        per_class_f1=cls["per_class_f1"],
        per_class_auc=auc["per_class"], roc_points=auc["roc_points"],
        parameter_count=parameter_count,
        mean_inference_seconds=mean_inference_seconds)


def benchmark_inference(run_pass, num_sequences: int, repeats: int = 3) -> dict:
    """Time `run_pass()` over the dataset; the warm-up pass is excluded.

    Returns mean/stddev wall time per dataset pass and per sequence.
    """
    if repeats < 3:
        raise ValueError("repeats must be >= 3")
    if num_sequences < 1:
        raise ValueError("empty dataset")
    run_pass()  # warm-up, excluded from stats
    times = []
    for _ in range(repeats):
        t0 = time.monotonic()
        run_pass()
        times.append(time.monotonic() - t0)
    times = np.array(times)
    return {
        "mean_pass_seconds": float(times.mean()),
        "stddev_pass_seconds": float(times.std(ddof=0)),
        "mean_sequence_seconds": float(times.mean() / num_sequences),
        "stddev_sequence_seconds": float(times.std(ddof=0) / num_sequences),
        "repeats": repeats,
        "num_sequences": num_sequences,
    }
