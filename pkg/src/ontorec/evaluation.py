"""Offline top-k evaluation: per-fold ranking of test candidates under binary
relevance, six metrics over a k range, and cross-fold aggregation.

Relevance follows the implicit-feedback convention: within a fold, the test
items a user actually rated are relevant and the user's remaining test items
count as not relevant. Users with no relevant test item are skipped (recall
is undefined for them) and reported in the fold's skip counts.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .cf import AlsConfig, BprConfig, LatentFactorModel, train_als, train_bpr
from .dataset import FoldSplit
from .errors import ConfigError, ValidationError
from .ranker import FusionMode, RankedList, rank_user
from .semantic import SimilarityCache, build_profiles

log = logging.getLogger(__name__)

METRIC_NAMES = ("precision", "recall", "f_measure", "mrr", "ndcg", "lauc")


class Algorithm(Enum):
    ALS = "ALS"
    BPR = "BPR"
    ONTO = "ONTO"
    ALS_ONTO = "ALS_ONTO"
    BPR_ONTO = "BPR_ONTO"

    @property
    def uses_cf(self) -> bool:
        return self is not Algorithm.ONTO

    @property
    def uses_cb(self) -> bool:
        return self in (Algorithm.ONTO, Algorithm.ALS_ONTO, Algorithm.BPR_ONTO)

    @property
    def cf_side(self) -> str | None:
        if self in (Algorithm.ALS, Algorithm.ALS_ONTO):
            return "ALS"
        if self in (Algorithm.BPR, Algorithm.BPR_ONTO):
            return "BPR"
        return None


def _ranking_ids(ranked: RankedList | Sequence[int]) -> list[int]:
    if isinstance(ranked, RankedList):
        return ranked.item_ids()
    return list(ranked)


def _check_k(k: int) -> None:
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")


def precision_at_k(ranked: RankedList | Sequence[int], relevant: set[int], k: int) -> float:
    _check_k(k)
    ids = _ranking_ids(ranked)
    return len(set(ids[:k]) & relevant) / k


def recall_at_k(ranked: RankedList | Sequence[int], relevant: set[int], k: int) -> float:
    _check_k(k)
    if not relevant:
        raise ValidationError("recall is undefined without relevant items")
    ids = _ranking_ids(ranked)
    return len(set(ids[:k]) & relevant) / len(relevant)


def f_measure_at_k(ranked: RankedList | Sequence[int], relevant: set[int], k: int) -> float:
    p = precision_at_k(ranked, relevant, k)
    r = recall_at_k(ranked, relevant, k)
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


def mrr_at_k(ranked: RankedList | Sequence[int], relevant: set[int], k: int) -> float:
    """Reciprocal rank of the first relevant item, 0 if none lands in the top k."""
    _check_k(k)
    ids = _ranking_ids(ranked)
    for position, item in enumerate(ids[:k], start=1):
        if item in relevant:
            return 1.0 / position
    return 0.0


def ndcg_at_k(ranked: RankedList | Sequence[int], relevant: set[int], k: int) -> float:
    """Binary-gain DCG with log2 position discount, normalized by the ideal
    list that packs min(|relevant|, k) relevant items first."""
    _check_k(k)
    ids = _ranking_ids(ranked)
    dcg = sum(
        1.0 / math.log2(position + 1)
        for position, item in enumerate(ids[:k], start=1)
        if item in relevant
    )
    ideal_hits = min(len(relevant), k)
    idcg = sum(1.0 / math.log2(position + 1) for position in range(1, ideal_hits + 1))
    if idcg == 0.0:
        return 0.0
    return dcg / idcg


def lauc_at_k(ranked: RankedList | Sequence[int], relevant: set[int], k: int) -> float:
    """AUC over a top-k truncated ranking.

    A relevant item ranked beyond k is demoted below every listed item, so it
    loses its pair against any non-relevant that holds a list position; a pair
    where neither side holds a position counts as a 0.5 tie. With k >= list
    length nothing is demoted and this is classical AUC.
    """
    _check_k(k)
    ids = _ranking_ids(ranked)
    position = {item: p for p, item in enumerate(ids, start=1)}
    non_relevant = [item for item in ids if item not in relevant]
    if not relevant or not non_relevant:
        raise ValidationError("lAUC needs at least one relevant and one non-relevant candidate")
    correct = 0.0
    for rel_item in relevant:
        rel_pos = position.get(rel_item, math.inf)
        if rel_pos > k:
            rel_pos = math.inf
        for non_item in non_relevant:
            non_pos = position.get(non_item, math.inf)
            if rel_pos < non_pos:
                correct += 1.0
            elif rel_pos == non_pos:  # both demoted off the list
                correct += 0.5
    return correct / (len(relevant) * len(non_relevant))


@dataclass
class FoldReport:
    """Per-user-averaged metric values for one fold."""
    fold_id: int
    k_values: tuple[int, ...]
    algorithms: tuple[str, ...]
    values: dict[tuple[str, int, str], float]
    users_evaluated: int
    diagnostics: dict[str, int] = field(default_factory=dict)


@dataclass
class MetricReport:
    """Cross-fold aggregate: unweighted mean and standard deviation over folds
    for every (algorithm, k, metric)."""
    algorithms: tuple[str, ...]
    k_values: tuple[int, ...]
    fold_reports: list[FoldReport]
    mean: dict[tuple[str, int, str], float]
    std: dict[tuple[str, int, str], float]
    metadata: dict = field(default_factory=dict)


def evaluate_fold(
    fold: FoldSplit,
    algorithms: Iterable[Algorithm],
    als_config: AlsConfig | None = None,
    bpr_config: BprConfig | None = None,
    cache: SimilarityCache | None = None,
    fusion: FusionMode = FusionMode.RAW,
    k_values: Iterable[int] = range(1, 21),
) -> FoldReport:
    """Train the required CF models on the fold's train split (once each),
    rank every evaluable test user's candidates per algorithm, and average
    each metric over users for every k.
    """
    algorithms = sorted(set(algorithms), key=lambda a: a.value)
    k_values = tuple(k_values)
    for k in k_values:
        _check_k(k)
    if any(a.uses_cb for a in algorithms) and cache is None:
        raise ConfigError("ONTO-bearing algorithms need a similarity cache")

    models: dict[str, LatentFactorModel] = {}
    if any(a.cf_side == "ALS" for a in algorithms):
        models["ALS"] = train_als(fold.train, als_config or AlsConfig())
    if any(a.cf_side == "BPR" for a in algorithms):
        models["BPR"] = train_bpr(fold.train, bpr_config or BprConfig())

    profiles = build_profiles(fold.train)
    candidates = sorted(fold.test_items)

    relevant_by_user: dict[int, set[int]] = {}
    for u, t in zip(fold.test.user_idx, fold.test.item_idx):
        relevant_by_user.setdefault(int(u), set()).add(int(t))
    evaluable = sorted(u for u in fold.test_users if relevant_by_user.get(u))
    skipped_no_relevant = len(fold.test_users) - len(evaluable)

    cold_profiles = 0
    lauc_ineligible = 0
    sums: dict[tuple[str, int, str], float] = {
        (a.value, k, m): 0.0 for a in algorithms for k in k_values for m in METRIC_NAMES
    }
    lauc_users = 0

    for user in evaluable:
        relevant = relevant_by_user[user]
        profile = profiles[user]
        if profile.size == 0:
            cold_profiles += 1
        lauc_ok = len(relevant) < len(candidates)
        if not lauc_ok:
            lauc_ineligible += 1
        else:
            lauc_users += 1
        for algo in algorithms:
            ranked = rank_user(
                user,
                candidates,
                model=models.get(algo.cf_side),
                profile=profile if algo.uses_cb else None,
                cache=cache if algo.uses_cb else None,
                fusion=fusion,
                use_cf=algo.uses_cf,
                use_cb=algo.uses_cb,
            )
            ids = ranked.item_ids()
            for k in k_values:
                key = algo.value
                sums[(key, k, "precision")] += precision_at_k(ids, relevant, k)
                sums[(key, k, "recall")] += recall_at_k(ids, relevant, k)
                sums[(key, k, "f_measure")] += f_measure_at_k(ids, relevant, k)
                sums[(key, k, "mrr")] += mrr_at_k(ids, relevant, k)
                sums[(key, k, "ndcg")] += ndcg_at_k(ids, relevant, k)
                if lauc_ok:
                    sums[(key, k, "lauc")] += lauc_at_k(ids, relevant, k)

    if not evaluable:
        log.warning("fold %d has no evaluable test users", fold.fold_id)

    values: dict[tuple[str, int, str], float] = {}
    for (alg, k, metric), total in sums.items():
        count = lauc_users if metric == "lauc" else len(evaluable)
        values[(alg, k, metric)] = total / count if count else math.nan

    return FoldReport(
        fold_id=fold.fold_id,
        k_values=k_values,
        algorithms=tuple(a.value for a in algorithms),
        values=values,
        users_evaluated=len(evaluable),
        diagnostics={
            "skipped_no_relevant": skipped_no_relevant,
            "lauc_ineligible": lauc_ineligible,
            "cold_start_profiles": cold_profiles,
        },
    )


def aggregate(fragments: Sequence[FoldReport]) -> MetricReport:
    """Unweighted mean and population standard deviation over folds. Folds with
    no evaluable users are excluded (with a warning); a metric a fold could
    not evaluate at all (NaN) does not contribute to its aggregate."""
    if not fragments:
        raise ValidationError("nothing to aggregate")
    k_sets = {f.k_values for f in fragments}
    if len(k_sets) > 1:
        raise ValidationError(f"mismatched k ranges across folds: {sorted(k_sets)}")
    alg_sets = {f.algorithms for f in fragments}
    if len(alg_sets) > 1:
        raise ValidationError("mismatched algorithm sets across folds")

    usable = [f for f in fragments if f.users_evaluated > 0]
    for f in fragments:
        if f.users_evaluated == 0:
            log.warning("excluding fold %d from aggregation (no evaluable users)", f.fold_id)
    if not usable:
        raise ValidationError("no fold produced evaluable users")

    k_values = usable[0].k_values
    algorithms = usable[0].algorithms
    mean: dict[tuple[str, int, str], float] = {}
    std: dict[tuple[str, int, str], float] = {}
    for alg in algorithms:
        for k in k_values:
            for metric in METRIC_NAMES:
                samples = [f.values[(alg, k, metric)] for f in usable]
                finite = [v for v in samples if not math.isnan(v)]
                if finite:
                    mean[(alg, k, metric)] = float(np.mean(finite))
                    std[(alg, k, metric)] = float(np.std(finite))
                else:
                    mean[(alg, k, metric)] = math.nan
                    std[(alg, k, metric)] = math.nan
    return MetricReport(
        algorithms=algorithms,
        k_values=k_values,
        fold_reports=list(fragments),
        mean=mean,
        std=std,
    )


def _format_value(v: float) -> str:
    return "" if math.isnan(v) else f"{v:.12g}"


def per_fold_table(report: MetricReport) -> str:
    """Delimited per-fold table ``algorithm,fold,k,metric,value``. A null row
    is emitted at k=0, where every metric is degenerate, so downstream plots
    spanning k from 0 line up."""
    lines = ["algorithm,fold,k,metric,value"]
    for fold in report.fold_reports:
        for alg in report.algorithms:
            for metric in METRIC_NAMES:
                lines.append(f"{alg},{fold.fold_id},0,{metric},")
                for k in report.k_values:
                    value = _format_value(fold.values[(alg, k, metric)])
                    lines.append(f"{alg},{fold.fold_id},{k},{metric},{value}")
    return "\n".join(lines) + "\n"


def aggregate_table(report: MetricReport) -> str:
    """Delimited aggregate table ``algorithm,k,metric,mean,std``."""
    lines = ["algorithm,k,metric,mean,std"]
    for alg in report.algorithms:
        for metric in METRIC_NAMES:
            lines.append(f"{alg},0,{metric},,")
            for k in report.k_values:
                mean = _format_value(report.mean[(alg, k, metric)])
                std = _format_value(report.std[(alg, k, metric)])
                lines.append(f"{alg},{k},{metric},{mean},{std}")
    return "\n".join(lines) + "\n"
