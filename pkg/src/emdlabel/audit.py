"""Bias audit for label counts and model quality diagnostics.

The sign test asks whether two class counts are consistent with a fair
coin: exact Binomial(n, 1/2) tail sums, no normal approximation. The
two-tailed value is double the smaller tail, clipped at 1; both tails are
always reported because published tables mix the two conventions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp
from scipy.stats import rankdata

from .glm import DesignMatrix, ridge_least_squares, ridge_logistic_fit, stratified_folds

DEFAULT_ALPHA = 0.05


@dataclass(frozen=True)
class AuditResult:
    """Counts, exact p-values, and the bias verdict at level alpha."""

    count_a: int
    count_b: int
    n: int
    p_one_tailed: float
    p_two_tailed: float
    alpha: float
    verdict: str  # "biased" | "unbiased"

    def __post_init__(self):
        if self.n != self.count_a + self.count_b:
            raise ValueError("n must equal count_a + count_b")
        for p in (self.p_one_tailed, self.p_two_tailed):
            if not 0.0 <= p <= 1.0:
                raise ValueError("p-values must lie in [0, 1]")
        expected = "biased" if self.p_two_tailed < self.alpha else "unbiased"
        if self.verdict != expected:
            raise ValueError("verdict inconsistent with p_two_tailed and alpha")


@dataclass(frozen=True)
class RocCurve:
    """(fpr, tpr) points swept over score thresholds, with trapezoidal AUC."""

    points: np.ndarray  # (k, 2), rows (fpr, tpr), threshold descending
    auc: float

    def __post_init__(self):
        pts = self.points
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("points must be a (k, 2) array")
        if not (np.allclose(pts[0], (0.0, 0.0)) and np.allclose(pts[-1], (1.0, 1.0))):
            raise ValueError("curve must run from (0,0) to (1,1)")
        if np.any(np.diff(pts, axis=0) < 0):
            raise ValueError("fpr and tpr must be non-decreasing")
        if abs(np.trapezoid(pts[:, 1], pts[:, 0]) - self.auc) > 1e-12:
            raise ValueError("auc does not equal the trapezoidal area")


def sign_test(count_a: int, count_b: int, alpha: float = DEFAULT_ALPHA) -> AuditResult:
    """Exact two-sided binomial sign test of count_a vs count_b.

    one-tailed = P(X <= min(a, b)) for X ~ Binomial(a + b, 1/2);
    two-tailed = min(1, 2 * one-tailed). Tail sums use log-domain binomial
    coefficients, so large n does not overflow.
    """
    a, b = int(count_a), int(count_b)
    if a < 0 or b < 0:
        raise ValueError("counts must be nonnegative")
    n = a + b
    if n < 1:
        raise ValueError("need at least one observation")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    k = min(a, b)
    i = np.arange(k + 1)
    log_terms = gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1) - n * np.log(2.0)
    p_one = min(1.0, float(np.exp(logsumexp(log_terms))))
    p_two = min(1.0, 2.0 * p_one)
    verdict = "biased" if p_two < alpha else "unbiased"
    return AuditResult(
        count_a=a,
        count_b=b,
        n=n,
        p_one_tailed=p_one,
        p_two_tailed=p_two,
        alpha=alpha,
        verdict=verdict,
    )


def roc_auc(scores, labels) -> RocCurve:
    """ROC curve over all unique score thresholds (ties grouped) plus AUC.

    The trapezoidal AUC is cross-checked against the Mann-Whitney
    pair-counting statistic; disagreement indicates an internal bug.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be equal-length vectors")
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("labels must contain both classes")

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    tp = np.cumsum(substream := (sorted_labels == 1).astype(float))
    fp = np.cumsum(1.0 - substream)
    # keep only the last index of each tied-score group
    keep = np.flatnonzero(np.diff(sorted_scores, append=-np.inf) != 0)
    points = np.vstack(
        [
            [0.0, 0.0],
            np.column_stack([fp[keep] / n_neg, tp[keep] / n_pos]),
        ]
    )
    auc = float(np.trapezoid(points[:, 1], points[:, 0]))

    ranks = rankdata(scores, method="average")
    u_stat = float(ranks[labels == 1].sum()) - n_pos * (n_pos + 1) / 2.0
    auc_mw = u_stat / (n_pos * n_neg)
    if abs(auc - auc_mw) > 1e-9:
        raise RuntimeError(
            f"trapezoidal AUC {auc} disagrees with Mann-Whitney AUC {auc_mw}"
        )
    return RocCurve(points=points, auc=auc)


def cv_scores_for_roc(
    d: DesignMatrix,
    lam: float,
    folds: int = 5,
    seed: int = 0,
    kind: str = "ridge_logistic",
):
    """Held-out predicted scores for every observation, in observation order.

    Each observation is scored by the fold model that excluded it, giving
    honest (score, label) pairs for the ROC sweep.
    """
    scores = np.zeros(d.n)
    all_rows = np.arange(d.n)
    for val_rows in stratified_folds(d.y, folds, seed):
        train_rows = np.setdiff1d(all_rows, val_rows)
        y_train = d.y[train_rows]
        if not (np.any(y_train == 0) and np.any(y_train == 1)):
            raise ValueError("a training fold lost a class; reduce folds")
        train = d.subset(train_rows)
        if kind == "ridge_logistic":
            fit = ridge_logistic_fit(train, lam)
            scores[val_rows] = fit.predict_proba(d.x[val_rows])
        else:
            fit = ridge_least_squares(train, lam)
            scores[val_rows] = fit.intercept + d.x[val_rows] @ fit.coefficients
    return [(float(s), int(y)) for s, y in zip(scores, d.y)]


def write_roc_csv(curve: RocCurve, path) -> None:
    """Dump the curve as ``fpr,tpr`` rows for external plotting."""
    import csv

    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["fpr", "tpr"])
        for fpr, tpr in curve.points:
            writer.writerow([repr(float(fpr)), repr(float(tpr))])
