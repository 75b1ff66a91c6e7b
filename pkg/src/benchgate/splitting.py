"""Deterministic k-fold, group k-fold and nested n x k split planning."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .errors import InvalidArgument, TooFewGroups


def _rng(seed, *extra: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), *extra])


def kfold(
    n_items: int, k: int, seed: int = 0, stratify_labels: Sequence | None = None
) -> list[list[int]]:
    """Shuffle ``range(n_items)`` and deal it round-robin into k folds.

    With ``stratify_labels`` the shuffled items are dealt class by class,
    continuing the round-robin across classes, which keeps both fold sizes
    and per-fold class counts within one of each other.
    """
    if k < 2:
        raise InvalidArgument("k must be at least 2")
    if k > n_items:
        raise InvalidArgument(f"k={k} exceeds the number of items ({n_items})")
    rng = _rng(seed)
    if stratify_labels is None:
        order = rng.permutation(n_items)
    else:
        labels = np.asarray(stratify_labels)
        if labels.shape != (n_items,):
            raise InvalidArgument("stratify_labels must have one entry per item")
        parts = []
        for cls in np.unique(labels):
            members = np.flatnonzero(labels == cls)
            parts.append(members[rng.permutation(members.size)])
        order = np.concatenate(parts)
    folds: list[list[int]] = [[] for _ in range(k)]
    for pos, item in enumerate(order):
        folds[pos % k].append(int(item))
    return [sorted(f) for f in folds]


def group_kfold(groups: Sequence[Hashable], k: int, seed: int = 0) -> list[list[int]]:
    """k folds that never split a group.

    Groups are placed largest first, each into the currently smallest fold
    (lowest index on ties). Equal-sized groups are ordered by a seeded
    shuffle.
    """
    if k < 2:
        raise InvalidArgument("k must be at least 2")
    members: dict[Hashable, list[int]] = {}
    for i, g in enumerate(groups):
        members.setdefault(g, []).append(i)
    if len(members) < k:
        raise TooFewGroups(f"{len(members)} distinct groups cannot fill {k} folds")
    keys = sorted(members, key=str)
    shuffle = _rng(seed).permutation(len(keys))
    keyed = [(-len(members[keys[j]]), pos, keys[j]) for pos, j in enumerate(shuffle)]
    keyed.sort(key=lambda t: (t[0], t[1]))
    folds: list[list[int]] = [[] for _ in range(k)]
    for _, _, g in keyed:
        target = min(range(k), key=lambda f: (len(folds[f]), f))
        folds[target].extend(members[g])
    return [sorted(f) for f in folds]


@dataclass(frozen=True)
class GroupedDataset:
    n_items: int
    labels: tuple[int, ...] | None = None
    group_of: tuple[Hashable, ...] | None = None

    def __post_init__(self):
        if self.n_items < 1:
            raise InvalidArgument("dataset must contain at least one item")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(int(v) for v in self.labels))
            if len(self.labels) != self.n_items:
                raise InvalidArgument("labels must cover every item")
        if self.group_of is not None:
            object.__setattr__(self, "group_of", tuple(self.group_of))
            if len(self.group_of) != self.n_items:
                raise InvalidArgument("group ids must cover every item")


@dataclass(frozen=True)
class OuterFold:
    test: tuple[int, ...]
    inner_folds: tuple[tuple[int, ...], ...]

    @property
    def train(self) -> tuple[int, ...]:
        return tuple(sorted(i for f in self.inner_folds for i in f))


@dataclass(frozen=True)
class SplitPlan:
    n_items: int
    n_outer: int
    k_inner: int
    seed: int
    grouped: bool
    stratified: bool
    outer_folds: tuple[OuterFold, ...]

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "n_items": self.n_items,
            "n_outer": self.n_outer,
            "k_inner": self.k_inner,
            "seed": self.seed,
            "grouped": self.grouped,
            "stratified": self.stratified,
            "outer_fold_sizes": [len(f.test) for f in self.outer_folds],
            "outer_folds": [
                {
                    "test": list(f.test),
                    "inner_folds": [list(inner) for inner in f.inner_folds],
                    "inner_fold_sizes": [len(inner) for inner in f.inner_folds],
                }
                for f in self.outer_folds
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SplitPlan":
        return cls(
            n_items=doc["n_items"],
            n_outer=doc["n_outer"],
            k_inner=doc["k_inner"],
            seed=doc["seed"],
            grouped=doc["grouped"],
            stratified=doc.get("stratified", False),
            outer_folds=tuple(
                OuterFold(tuple(f["test"]), tuple(tuple(i) for i in f["inner_folds"]))
                for f in doc["outer_folds"]
            ),
        )


def _split(n_items, k, seed, labels, groups):
    if groups is not None:
        return group_kfold(groups, k, seed)
    return kfold(n_items, k, seed, labels)


def nested_cv_plan(
    dataset: GroupedDataset,
    n_outer: int = 3,
    k_inner: int = 2,
    seed: int = 0,
    stratify: bool = False,
) -> SplitPlan:
    if n_outer < 2 or k_inner < 2:
        raise InvalidArgument("n_outer and k_inner must both be at least 2")
    if stratify and dataset.labels is None:
        raise InvalidArgument("stratification needs labels")
    labels = np.asarray(dataset.labels) if stratify else None
    groups = list(dataset.group_of) if dataset.group_of is not None else None

    outer = _split(dataset.n_items, n_outer, seed, labels, groups)
    folds = []
    for o, test in enumerate(outer):
        in_test = set(test)
        train = [i for i in range(dataset.n_items) if i not in in_test]
        sub_labels = labels[train] if labels is not None else None
        sub_groups = [groups[i] for i in train] if groups is not None else None
        inner_seed = int(_rng(seed, o).integers(2**31))
        local = _split(len(train), k_inner, inner_seed, sub_labels, sub_groups)
        inner = tuple(tuple(sorted(train[j] for j in f)) for f in local)
        folds.append(OuterFold(tuple(test), inner))
    return SplitPlan(
        n_items=dataset.n_items,
        n_outer=n_outer,
        k_inner=k_inner,
        seed=int(seed),
        grouped=groups is not None,
        stratified=stratify,
        outer_folds=tuple(folds),
    )


def verify_plan(plan: SplitPlan, groups: Sequence[Hashable] | None = None) -> list[str]:
    """Return every violated plan invariant as a message; empty means valid."""
    problems = []
    everything = set(range(plan.n_items))
    seen: list[int] = [i for f in plan.outer_folds for i in f.test]
    if sorted(seen) != sorted(everything):
        problems.append("outer test folds do not partition the items exactly")
    for o, fold in enumerate(plan.outer_folds):
        complement = everything - set(fold.test)
        inner_items = [i for f in fold.inner_folds for i in f]
        if sorted(inner_items) != sorted(complement):
            problems.append(f"outer fold {o}: inner folds do not partition the training set")
    if groups is not None:
        if len(groups) != plan.n_items:
            problems.append("group list length differs from plan n_items")
            return problems
        problems += _group_violations(
            [f.test for f in plan.outer_folds], groups, "outer folds"
        )
        for o, fold in enumerate(plan.outer_folds):
            problems += _group_violations(fold.inner_folds, groups, f"inner folds of outer {o}")
    return problems


def _group_violations(folds, groups, where: str) -> list[str]:
    home: dict = {}
    bad = set()
    for f, members in enumerate(folds):
        for i in members:
            g = groups[i]
            if home.setdefault(g, f) != f:
                bad.add(g)
    return [f"{where}: group {g!r} spans several folds" for g in sorted(bad, key=str)]
