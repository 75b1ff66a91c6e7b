"""Brute-force reference computations, independent of the library code paths."""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import comb

from scipy import integrate


def pairwise_auc(pos, neg) -> Fraction:
    """Enumerate every (positive, negative) pair."""
    total = Fraction(0)
    for p in pos:
        for n in neg:
            if p > n:
                total += 1
            elif p == n:
                total += Fraction(1, 2)
    return total / (len(pos) * len(neg))


def threshold_sweep_roc(labels, scores):
    """(FPR, TPR) at every distinct threshold, highest first, with (0, 0) prepended."""
    n_pos = sum(labels)
    n_neg = len(labels) - n_pos
    pts = [(Fraction(0), Fraction(0))]
    for t in sorted(set(scores), reverse=True):
        tp = sum(1 for l, s in zip(labels, scores) if l and s >= t)
        fp = sum(1 for l, s in zip(labels, scores) if not l and s >= t)
        pts.append((Fraction(fp, n_neg), Fraction(tp, n_pos)))
    return pts


def null_auc_by_enumeration(n_pos: int, n_neg: int) -> dict[Fraction, Fraction]:
    """AUC distribution over every placement of positives in the ranked list."""
    n = n_pos + n_neg
    counts: dict[Fraction, int] = {}
    for pos_ranks in itertools.combinations(range(n), n_pos):
        # ranks count from the bottom: a positive at rank r beats r - (#positives below) negatives
        u = sum(r - i for i, r in enumerate(sorted(pos_ranks)))
        a = Fraction(u, n_pos * n_neg)
        counts[a] = counts.get(a, 0) + 1
    total = comb(n, n_pos)
    return {a: Fraction(c, total) for a, c in sorted(counts.items())}


def signed_rank_p_by_enumeration(diffs, alternative: str) -> float:
    """Exact p-value by flipping every sign of the nonzero differences."""
    nz = [d for d in diffs if d != 0]
    mags = sorted(abs(d) for d in nz)

    def midrank(v):
        first = mags.index(v) + 1
        last = len(mags) - mags[::-1].index(v)
        return Fraction(first + last, 2)

    ranks = [midrank(abs(d)) for d in nz]
    observed = sum(r for r, d in zip(ranks, nz) if d > 0)
    ge = le = 0
    total = 0
    for signs in itertools.product((0, 1), repeat=len(nz)):
        w = sum(r for r, s in zip(ranks, signs) if s)
        ge += w >= observed
        le += w <= observed
        total += 1
    upper, lower = Fraction(ge, total), Fraction(le, total)
    if alternative == "greater":
        p = upper
    elif alternative == "less":
        p = lower
    else:
        p = min(Fraction(1), 2 * min(upper, lower))
    return float(p)


def binomial_tail_ge(k: int, n: int) -> Fraction:
    return Fraction(sum(comb(n, i) for i in range(k, n + 1)), 2**n)


def population_average_precision(pos_sf, pos_pdf, neg_sf, prevalence, lo, hi) -> float:
    """Average precision of a scorer with known class score laws.

    AP = integral of precision(t) dTPR(t), where TPR(t) = pos_sf(t) and
    FPR(t) = neg_sf(t), integrated over thresholds t in [lo, hi].
    """
    def integrand(t):
        tpr, fpr = pos_sf(t), neg_sf(t)
        denom = prevalence * tpr + (1.0 - prevalence) * fpr
        return prevalence * tpr / denom * pos_pdf(t) if denom > 0 else 0.0

    value, _ = integrate.quad(integrand, lo, hi, limit=500)
    return value
