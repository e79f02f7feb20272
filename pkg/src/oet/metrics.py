"""Tracking evaluation: overlap/center criteria, OPE curves, FDR and DRR."""

from dataclasses import dataclass

import numpy as np

PRECISION_THRESHOLDS = np.arange(51.0)          # 0..50 px
SUCCESS_THRESHOLDS = np.arange(21) * 0.05       # 0, 0.05, ..., 1.0


@dataclass(frozen=True)
class EvaluationReport:
    """One-pass-evaluation summary of a tracking run against ground truth."""

    precision_curve: np.ndarray
    precision_at_20: float
    success_curve: np.ndarray
    auc: float
    mean_center_error: float
    mean_overlap: float


def iou(a, b):
    """Intersection-over-union of two boxes; 0 when disjoint."""
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.w * a.h + b.w * b.h - inter
    return float(inter / union)


def center_error(a, b):
    """Euclidean distance between box centers, in pixels."""
    (ax, ay), (bx, by) = a.center, b.center
    return float(np.hypot(ax - bx, ay - by))


def evaluate(results, gt):
    """Compute OPE precision/success curves for per-frame box lists.

    precision_curve[t] is the fraction of frames whose center error is at
    most t pixels; success_curve[k] the fraction whose overlap meets the
    k-th threshold (strictly positive overlap at threshold 0, so fully
    disjoint results score zero across the board).  auc is the mean of the
    success curve over its uniform grid.
    """
    if len(results) != len(gt):
        raise ValueError(f"result count {len(results)} != ground-truth count {len(gt)}")
    if len(results) == 0:
        raise ValueError("nothing to evaluate")

    errors = np.array([center_error(r, g) for r, g in zip(results, gt)])
    overlaps = np.array([iou(r, g) for r, g in zip(results, gt)])

    precision = np.array([np.mean(errors <= t) for t in PRECISION_THRESHOLDS])
    success = np.array(
        [np.mean(overlaps > 0) if t == 0 else np.mean(overlaps >= t) for t in SUCCESS_THRESHOLDS]
    )
    return EvaluationReport(
        precision_curve=precision,
        precision_at_20=float(precision[20]),
        success_curve=success,
        auc=float(success.mean()),
        mean_center_error=float(errors.mean()),
        mean_overlap=float(overlaps.mean()),
    )


def drr(d, m, n):
    """Dimension reduction ratio d / min(m, n)."""
    if m < 1 or n < 1:
        raise ValueError("matrix sides must be at least 1")
    if not 0 <= d <= min(m, n):
        raise ValueError(f"d must be in [0, {min(m, n)}], got {d}")
    return d / min(m, n)


def fdr(scores_pos, scores_neg):
    """Fisher discriminative ratio of two sets of classifier responses.

    (mean_pos - mean_neg)^2 / (var_pos + var_neg + 1e-12); large when the
    classes are well separated relative to their scatter.
    """
    pos = np.asarray(scores_pos, dtype=float).ravel()
    neg = np.asarray(scores_neg, dtype=float).ravel()
    if pos.size == 0 or neg.size == 0:
        raise ValueError("both score lists must be non-empty")
    sep = (pos.mean() - neg.mean()) ** 2
    return float(sep / (pos.var() + neg.var() + 1e-12))


def report_lines(report):
    """Flat key-value rendering of the scalar report fields."""
    return [
        f"frames_precision_at_20 = {report.precision_at_20:.6f}",
        f"success_auc = {report.auc:.6f}",
        f"mean_center_error_px = {report.mean_center_error:.6f}",
        f"mean_overlap = {report.mean_overlap:.6f}",
    ]


def curve_rows(report):
    """CSV rows (kind, threshold, value) for both curves."""
    rows = ["kind,threshold,value"]
    for t, v in zip(PRECISION_THRESHOLDS, report.precision_curve):
        rows.append(f"precision,{t:.10g},{v:.10g}")
    for t, v in zip(SUCCESS_THRESHOLDS, report.success_curve):
        rows.append(f"success,{t:.10g},{v:.10g}")
    return rows
