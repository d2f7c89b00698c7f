"""Evaluation: accuracy, multiclass correlation, confidence calibration,
the performance/coverage trade-off, and neighborhood co-occurrence counts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .datagen import PartialDataset
from .errors import BetaOutOfRange, KTooLarge, LengthMismatch, TruthMissing
from .neighbors import BallTree
from .pll import Prediction

#: column order of EvalReport.to_row()
REPORT_COLUMNS = (
    "n",
    "accuracy",
    "mcc",
    "frac_confident",
    "n_confident",
    "accuracy_confident",
    "mcc_confident",
)


@dataclass
class EvalReport:
    """Scores over all predictions plus the confident subset.

    Confident-subset scores are zero when nothing was confident, matching
    the convention of scoring absent results as zero.
    """

    accuracy: float
    mcc: float
    frac_confident: float
    mcc_confident: float
    accuracy_confident: float
    counts: np.ndarray
    n_confident: int
    n: int

    def to_row(self) -> list:
        """One CSV row in REPORT_COLUMNS order."""
        return [
            self.n,
            self.accuracy,
            self.mcc,
            self.frac_confident,
            self.n_confident,
            self.accuracy_confident,
            self.mcc_confident,
        ]


def confusion(truth, predicted, num_classes: int) -> np.ndarray:
    """counts[t-1][p-1] = number of instances with truth t predicted as p."""
    if len(truth) != len(predicted):
        raise LengthMismatch(f"{len(truth)} truth labels vs {len(predicted)} predictions")
    if len(truth) == 0:
        raise LengthMismatch("need at least one instance")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    for t, p in zip(truth, predicted):
        if not (1 <= t <= num_classes and 1 <= p <= num_classes):
            raise ValueError(f"labels ({t}, {p}) outside 1..{num_classes}")
        counts[t - 1, p - 1] += 1
    return counts


def mcc(counts) -> float:
    """Multiclass correlation from a confusion matrix (covariance form).

    MCC = (c*s - sum_k p_k t_k) / sqrt((s^2 - sum p_k^2)(s^2 - sum t_k^2))
    with c the trace, s the total, and t_k / p_k the per-class true and
    predicted totals. Reduces to the familiar binary coefficient; returns 0
    when the denominator vanishes (degenerate single-class situations).
    """
    counts = np.asarray(counts, dtype=np.int64)
    c = int(np.trace(counts))
    s = int(counts.sum())
    t = counts.sum(axis=1).astype(object)
    p = counts.sum(axis=0).astype(object)
    num = c * s - int(np.dot(p, t))
    den_t = s * s - int(np.dot(t, t))
    den_p = s * s - int(np.dot(p, p))
    if den_t == 0 or den_p == 0:
        return 0.0
    return float(num / np.sqrt(float(den_t) * float(den_p)))


def evaluate(truth, predictions: list[Prediction], num_classes: int) -> EvalReport:
    """Score predictions against ground truth, overall and confident-only."""
    if len(truth) != len(predictions):
        raise LengthMismatch(f"{len(truth)} truth labels vs {len(predictions)} predictions")
    labels = [p.label for p in predictions]
    counts = confusion(truth, labels, num_classes)
    n = len(truth)
    accuracy = float(np.trace(counts)) / n

    confident_idx = [i for i, p in enumerate(predictions) if p.confident]
    n_conf = len(confident_idx)
    if n_conf:
        conf_counts = confusion(
            [truth[i] for i in confident_idx],
            [labels[i] for i in confident_idx],
            num_classes,
        )
        acc_conf = float(np.trace(conf_counts)) / n_conf
        mcc_conf = mcc(conf_counts)
    else:
        acc_conf = 0.0
        mcc_conf = 0.0
    return EvalReport(
        accuracy=accuracy,
        mcc=mcc(counts),
        frac_confident=n_conf / n,
        mcc_confident=mcc_conf,
        accuracy_confident=acc_conf,
        counts=counts,
        n_confident=n_conf,
        n=n,
    )


def tradeoff(confident_score: float, confident_fraction: float, beta: float) -> float:
    """Weighted objective beta * score + (1 - beta) * fraction.

    Callers clamp a negative correlation score at zero before weighing it,
    keeping the objective inside [0, 1].
    """
    if not 0.0 <= beta <= 1.0:
        raise BetaOutOfRange(f"beta {beta!r} outside [0, 1]")
    return beta * confident_score + (1.0 - beta) * confident_fraction


def cooccurrence_matrix(ds: PartialDataset, k: int) -> np.ndarray:
    """Candidate-label counts in each instance's k-neighborhood, by true label.

    Entry [t-1][y-1] totals, over all instances whose true label is t, how
    often label y appears in the candidate sets of their k nearest
    neighbors (the instance itself excluded). Diagnostic for checking that
    the true label dominates neighborhoods and which classes co-occur.
    """
    if ds.truth is None:
        raise TruthMissing("co-occurrence counts need ground-truth labels")
    if not 1 <= k <= ds.n - 1:
        raise KTooLarge(f"k={k} outside 1..{ds.n - 1} (self is excluded)")
    tree = BallTree(ds.features)
    counts = np.zeros((ds.num_classes, ds.num_classes), dtype=np.int64)
    for i in range(ds.n):
        hits = tree.query(ds.features[i], k + 1)
        rows = [j for j, _ in hits if j != i][:k]
        t = ds.truth[i] - 1
        for j in rows:
            for y in ds.candidates[j]:
                counts[t, y - 1] += 1
    return counts


def paired_ttest(scores_a, scores_b) -> tuple[float, float]:
    """Two-sided paired t-test on per-fold scores; returns (t, p-value)."""
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatch(f"shapes {a.shape} vs {b.shape}")
    if a.size < 2:
        raise LengthMismatch("need at least two folds")
    diff = a - b
    sd = diff.std(ddof=1)
    if sd == 0.0:
        # a constant difference: no evidence of one (p = 1) or an exact,
        # noiseless shift (p = 0)
        if diff.mean() == 0.0:
            return 0.0, 1.0
        return float(np.sign(diff.mean()) * np.inf), 0.0
    t = float(diff.mean() / (sd / np.sqrt(diff.size)))
    p = float(2.0 * stats.t.sf(abs(t), diff.size - 1))
    return t, p
