"""Threshold-free ranking metrics for binary classifiers.

Every curve is built from the ranked list (descending score) with tied
scores committed as one block, so no metric depends on the order of items
that share a score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import EmptyClass, InvalidArgument

ROC = "roc"
PRC = "prc"
EF_FRACTION_FOUND = "ef_fraction_found"
EF_RATIO = "ef_ratio"
CURVE_KINDS = (ROC, PRC, EF_FRACTION_FOUND, EF_RATIO)

ENRICHMENT_MODES = {"fraction_found": EF_FRACTION_FOUND, "ef_ratio": EF_RATIO}


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """Scored, binary-labelled items from one (assay, method, fold).

    ``labels`` are coerced to bool (True = active) and ``scores`` to float64.
    Both arrays are made read-only.
    """

    labels: np.ndarray
    scores: np.ndarray
    item_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        labels = np.asarray(self.labels)
        scores = np.asarray(self.scores, dtype=np.float64)
        if labels.ndim != 1 or scores.ndim != 1:
            raise InvalidArgument("labels and scores must be one-dimensional")
        if labels.shape != scores.shape:
            raise InvalidArgument(
                f"labels ({labels.shape[0]}) and scores ({scores.shape[0]}) differ in length"
            )
        if labels.size == 0:
            raise InvalidArgument("a prediction set needs at least one item")
        if labels.dtype != bool:
            if not np.isin(labels, (0, 1)).all():
                raise InvalidArgument("labels must be binary (0/1 or bool)")
            labels = labels.astype(bool)
        if not np.isfinite(scores).all():
            raise InvalidArgument("scores must be finite")
        labels = labels.copy()
        scores = scores.copy()
        labels.setflags(write=False)
        scores.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "scores", scores)
        if self.item_ids is not None:
            ids = tuple(str(i) for i in self.item_ids)
            if len(ids) != labels.size:
                raise InvalidArgument("item_ids length does not match labels")
            object.__setattr__(self, "item_ids", ids)
        n_pos = int(labels.sum())
        object.__setattr__(self, "n_pos", n_pos)
        object.__setattr__(self, "n_neg", int(labels.size) - n_pos)

    @classmethod
    def from_pairs(cls, pos_scores, neg_scores) -> "PredictionSet":
        pos = np.asarray(pos_scores, dtype=float)
        neg = np.asarray(neg_scores, dtype=float)
        labels = np.concatenate([np.ones(pos.size, bool), np.zeros(neg.size, bool)])
        return cls(labels, np.concatenate([pos, neg]))

    def __len__(self):
        return self.labels.size

    def swapped(self) -> "PredictionSet":
        """The same scores with active/inactive labels exchanged."""
        return PredictionSet(~self.labels, self.scores, self.item_ids)


@dataclass(frozen=True, eq=False)
class Curve:
    kind: str
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise InvalidArgument(f"unknown curve kind {self.kind!r}")
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if x.shape != y.shape or x.ndim != 1 or x.size < 1:
            raise InvalidArgument("curve needs matching, non-empty x and y arrays")
        if np.any(np.diff(x) < 0):
            raise InvalidArgument("curve x values must be nondecreasing")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.y.tolist()))

    def __len__(self):
        return self.x.size


def _require_both(preds: PredictionSet) -> None:
    if preds.n_pos == 0 or preds.n_neg == 0:
        raise EmptyClass(
            f"need both classes (n_pos={preds.n_pos}, n_neg={preds.n_neg})"
        )


def _require_pos(preds: PredictionSet) -> None:
    if preds.n_pos == 0:
        raise EmptyClass("need at least one positive item")


def _ranked_counts(preds: PredictionSet):
    """Cumulative (n_seen, tp, fp) at the end of each tied-score block."""
    order = np.argsort(-preds.scores, kind="mergesort")
    s = preds.scores[order]
    y = preds.labels[order]
    ends = np.flatnonzero(np.diff(s) != 0)
    ends = np.append(ends, s.size - 1)
    tp = np.cumsum(y, dtype=np.int64)[ends]
    seen = ends.astype(np.int64) + 1
    return seen, tp, seen - tp


def _drop_collinear(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Mask that keeps endpoints and every vertex where an integer path turns."""
    keep = np.ones(xs.size, dtype=bool)
    if xs.size > 2:
        dx1, dy1 = xs[1:-1] - xs[:-2], ys[1:-1] - ys[:-2]
        dx2, dy2 = xs[2:] - xs[1:-1], ys[2:] - ys[1:-1]
        keep[1:-1] = dx1 * dy2 - dy1 * dx2 != 0
    return keep


def roc_curve(preds: PredictionSet) -> Curve:
    """ROC vertices (FPR, TPR) from (0, 0) to (1, 1).

    A tied block becomes one diagonal segment. Intermediate vertices that
    lie on a straight run are dropped; they carry no area.
    """
    _require_both(preds)
    _, tp, fp = _ranked_counts(preds)
    tp = np.concatenate([[0], tp])
    fp = np.concatenate([[0], fp])
    keep = _drop_collinear(fp, tp)
    return Curve(ROC, fp[keep] / preds.n_neg, tp[keep] / preds.n_pos)


def auc_roc(preds: PredictionSet) -> float:
    """Mann-Whitney estimate: (concordant + 0.5 * tied pairs) / (n_pos * n_neg)."""
    _require_both(preds)
    ranks = rankdata(preds.scores, method="average")
    u = ranks[preds.labels].sum() - preds.n_pos * (preds.n_pos + 1) / 2.0
    return float(u / (preds.n_pos * preds.n_neg))


def pr_curve(preds: PredictionSet) -> Curve:
    """(recall, precision) after each tied block of the ranked list."""
    _require_pos(preds)
    seen, tp, _ = _ranked_counts(preds)
    return Curve(PRC, tp / preds.n_pos, tp / seen)


def auc_prc(preds: PredictionSet) -> float:
    """Average precision: sum of recall increments times precision."""
    _require_both(preds)
    return average_precision_from_curve(pr_curve(preds))


def average_precision_from_curve(curve: Curve) -> float:
    recall = np.concatenate([[0.0], curve.x])
    return float(np.sum(np.diff(recall) * curve.y))


def trapezoid_area(curve: Curve) -> float:
    return float(np.sum(np.diff(curve.x) * (curve.y[1:] + curve.y[:-1]) / 2.0))


def enrichment_curve(preds: PredictionSet, mode: str = "fraction_found") -> Curve:
    """Actives retrieved against the fraction of the ranked list screened.

    ``fraction_found`` gives the share of all actives recovered and starts
    at (0, 0); ``ef_ratio`` divides that share by the fraction screened, so
    random ranking sits at 1.
    """
    if mode not in ENRICHMENT_MODES:
        raise InvalidArgument(f"mode must be one of {sorted(ENRICHMENT_MODES)}")
    _require_pos(preds)
    seen, tp, _ = _ranked_counts(preds)
    x = seen / len(preds)
    found = tp / preds.n_pos
    if mode == "fraction_found":
        return Curve(EF_FRACTION_FOUND, np.concatenate([[0.0], x]), np.concatenate([[0.0], found]))
    return Curve(EF_RATIO, x, found / x)


def enrichment_at(preds: PredictionSet, fraction: float, mode: str = "fraction_found") -> float:
    """Enrichment after screening ``fraction`` of the list.

    Values inside a tied block are linearly interpolated, which is the
    expectation over random orderings of the tie.
    """
    if not 0.0 < fraction <= 1.0:
        raise InvalidArgument("fraction must lie in (0, 1]")
    curve = enrichment_curve(preds, "fraction_found")
    found = float(np.interp(fraction, curve.x, curve.y))
    if mode == "fraction_found":
        return found
    if mode == "ef_ratio":
        return found / fraction
    raise InvalidArgument(f"mode must be one of {sorted(ENRICHMENT_MODES)}")


def roc_enrichment(preds: PredictionSet, fpr: float) -> float:
    """TPR of the ROC curve at a fixed false-positive rate.

    On a vertical run the highest TPR reached at that FPR is used; between
    vertices the curve is interpolated linearly.
    """
    if not 0.0 < fpr < 1.0:
        raise InvalidArgument("fpr must lie strictly between 0 and 1")
    curve = roc_curve(preds)
    i = int(np.searchsorted(curve.x, fpr, side="right")) - 1
    x0, y0 = curve.x[i], curve.y[i]
    x1, y1 = curve.x[i + 1], curve.y[i + 1]
    return float(y0 + (y1 - y0) * (fpr - x0) / (x1 - x0))
