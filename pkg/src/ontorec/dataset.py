"""Implicit-feedback triples: ingestion, statistics, and block cross-validation."""

from __future__ import annotations

from collections.abc import Iterable, Iterator
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, IngestError, ValidationError


@dataclass(frozen=True)
class IngestConfig:
    delimiter: str = ","


@dataclass(frozen=True)
class InteractionRecord:
    user: str
    item: str
    rating: int


class InteractionSet:
    """Deduplicated user/item/rating triples over a fixed id universe.

    External ids are mapped to dense integers in first-seen order. Subsets
    built with :meth:`subset` share the parent's id universe, so factor
    matrices and similarity caches stay index-aligned across folds.
    """

    def __init__(
        self,
        users: Iterable[str],
        items: Iterable[str],
        user_idx: np.ndarray,
        item_idx: np.ndarray,
        ratings: np.ndarray,
    ):
        self.users: tuple[str, ...] = tuple(users)
        self.items: tuple[str, ...] = tuple(items)
        self.user_ids: dict[str, int] = {u: i for i, u in enumerate(self.users)}
        self.item_ids: dict[str, int] = {t: i for i, t in enumerate(self.items)}
        self.user_idx = np.ascontiguousarray(user_idx, dtype=np.int64)
        self.item_idx = np.ascontiguousarray(item_idx, dtype=np.int64)
        self.ratings = np.ascontiguousarray(ratings, dtype=np.int64)
        for arr in (self.user_idx, self.item_idx, self.ratings):
            arr.setflags(write=False)

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def num_items(self) -> int:
        return len(self.items)

    @property
    def num_ratings(self) -> int:
        return int(self.ratings.shape[0])

    @property
    def sparsity(self) -> float:
        return 1.0 - self.num_ratings / (self.num_users * self.num_items)

    def records(self) -> Iterator[InteractionRecord]:
        for u, t, r in zip(self.user_idx, self.item_idx, self.ratings):
            yield InteractionRecord(self.users[u], self.items[t], int(r))

    def subset(self, mask: np.ndarray) -> "InteractionSet":
        """Record-level subset sharing this set's id universe."""
        return InteractionSet(
            self.users, self.items,
            self.user_idx[mask], self.item_idx[mask], self.ratings[mask],
        )

    def items_by_user(self) -> list[np.ndarray]:
        """Per-user array of distinct rated item ids, ascending."""
        out: list[list[int]] = [[] for _ in range(self.num_users)]
        for u, t in zip(self.user_idx, self.item_idx):
            out[u].append(int(t))
        return [np.unique(np.asarray(lst, dtype=np.int64)) for lst in out]


def load_interactions(source: Iterable[str], config: IngestConfig = IngestConfig()) -> InteractionSet:
    """Parse ``user,item,rating`` lines into a validated InteractionSet.

    Duplicate (user, item) pairs are merged by summing their ratings. A
    header line is auto-detected by a non-integer third field on the first
    content line. Blank lines are skipped.
    """
    delim = config.delimiter
    users: list[str] = []
    items: list[str] = []
    user_ids: dict[str, int] = {}
    item_ids: dict[str, int] = {}
    totals: dict[tuple[int, int], int] = {}
    first_content = True

    for lineno, raw in enumerate(source, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        fields = [f.strip() for f in line.split(delim)]
        if len(fields) != 3:
            raise IngestError(f"line {lineno}: expected 3 fields, got {len(fields)}")
        user, item, rating_text = fields
        if first_content:
            first_content = False
            try:
                int(rating_text)
            except ValueError:
                continue  # header line
        try:
            rating = int(rating_text)
        except ValueError:
            raise IngestError(f"line {lineno}: rating {rating_text!r} is not an integer") from None
        if rating < 1:
            raise ValidationError(f"line {lineno}: rating must be >= 1, got {rating}")
        if not user or not item:
            raise IngestError(f"line {lineno}: empty user or item field")
        uid = user_ids.setdefault(user, len(users))
        if uid == len(users):
            users.append(user)
        tid = item_ids.setdefault(item, len(items))
        if tid == len(items):
            items.append(item)
        key = (uid, tid)
        totals[key] = totals.get(key, 0) + rating

    if not totals:
        raise ValidationError("input contains no interaction records")

    pairs = np.array(list(totals.keys()), dtype=np.int64)
    ratings = np.array(list(totals.values()), dtype=np.int64)
    return InteractionSet(users, items, pairs[:, 0], pairs[:, 1], ratings)


@dataclass(frozen=True)
class StatsSummary:
    num_users: int
    num_items: int
    num_ratings: int
    sparsity: float
    rating_histogram: dict[int, int]

    def as_dict(self) -> dict:
        return {
            "num_users": self.num_users,
            "num_items": self.num_items,
            "num_ratings": self.num_ratings,
            "sparsity": self.sparsity,
            "rating_histogram": {str(k): v for k, v in sorted(self.rating_histogram.items())},
        }


def dataset_stats(ds: InteractionSet) -> StatsSummary:
    values, counts = np.unique(ds.ratings, return_counts=True)
    hist = {int(v): int(c) for v, c in zip(values, counts)}
    return StatsSummary(ds.num_users, ds.num_items, ds.num_ratings, ds.sparsity, hist)


def format_stats(stats: StatsSummary) -> str:
    """Human-readable stats table; sparsity shown with 3 significant digits."""
    lines = [
        f"{'users':<12}{stats.num_users}",
        f"{'items':<12}{stats.num_items}",
        f"{'ratings':<12}{stats.num_ratings}",
        f"{'sparsity':<12}{stats.sparsity * 100:.3g}%",
        "rating histogram:",
    ]
    for value, count in sorted(stats.rating_histogram.items()):
        lines.append(f"  {value:>6}  {count}")
    return "\n".join(lines)


@dataclass(frozen=True)
class FoldSplit:
    fold_id: int
    test_users: frozenset[int]
    test_items: frozenset[int]
    train: InteractionSet
    test: InteractionSet


def make_folds(ds: InteractionSet, num_folds: int, seed: int) -> list[FoldSplit]:
    """Split users and items into ``num_folds`` groups; fold i's test block is
    (user group i x item group i) and everything else is train.

    Ratings of test users on train items stay in train (they form the user
    profiles), as do ratings of train users on test items (so CF sees every
    item). Remainder users/items go one-per-fold from fold 0 upward.
    """
    if num_folds < 2:
        raise ConfigError(f"num_folds must be >= 2, got {num_folds}")
    if ds.num_users < num_folds or ds.num_items < num_folds:
        raise ConfigError(
            f"cannot split {ds.num_users} users x {ds.num_items} items into {num_folds} folds"
        )
    rng = np.random.default_rng(seed)
    user_groups = np.array_split(rng.permutation(ds.num_users), num_folds)
    item_groups = np.array_split(rng.permutation(ds.num_items), num_folds)

    fold_of_user = np.empty(ds.num_users, dtype=np.int64)
    fold_of_item = np.empty(ds.num_items, dtype=np.int64)
    for i in range(num_folds):
        fold_of_user[user_groups[i]] = i
        fold_of_item[item_groups[i]] = i

    folds = []
    for i in range(num_folds):
        in_test = (fold_of_user[ds.user_idx] == i) & (fold_of_item[ds.item_idx] == i)
        folds.append(
            FoldSplit(
                fold_id=i,
                test_users=frozenset(int(u) for u in user_groups[i]),
                test_items=frozenset(int(t) for t in item_groups[i]),
                train=ds.subset(~in_test),
                test=ds.subset(in_test),
            )
        )
    return folds
