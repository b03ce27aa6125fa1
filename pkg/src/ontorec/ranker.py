"""Score fusion and per-user ranking.

The final score of a candidate is the product of its CF and CB scores; a
candidate the CF model never saw in train (cold-start item) has no CF score
and falls back to its CB score alone. Pure-CF and pure-CB rankings are the
same pipeline with the other side pinned to 1, so the five evaluated
algorithms (ALS, BPR, ONTO and the two hybrids) share one code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np

from .cf import LatentFactorModel, cf_score
from .errors import ContractViolation, NumericalError, ValidationError
from .semantic import SimilarityCache, UserProfile, onto_score


class FusionMode(Enum):
    RAW = "raw"
    NORMALIZED = "normalized"


_RESCALE_EPSILON = 1e-6


@dataclass(frozen=True)
class CandidateScore:
    item: int
    cf: float | None  # None for cold-start items (CF never saw them)
    cb: float
    final: float


@dataclass(frozen=True)
class RankedList:
    user: int
    entries: tuple[CandidateScore, ...]

    def item_ids(self) -> list[int]:
        return [e.item for e in self.entries]


def fuse(s_cf: float | None, s_cb: float, mode: FusionMode = FusionMode.RAW) -> float:
    """Combine one candidate's CF and CB scores into its final score.

    In NORMALIZED mode the caller must already have min-max rescaled s_cf over
    the user's candidate set (see :func:`rank_user`); the product itself is
    the same in both modes.
    """
    if not math.isfinite(s_cb):
        raise NumericalError(f"non-finite CB score {s_cb}")
    if s_cf is None:
        return s_cb
    if not math.isfinite(s_cf):
        raise NumericalError(f"non-finite CF score {s_cf}")
    return s_cf * s_cb


def minmax_rescale(values: np.ndarray, eps: float = _RESCALE_EPSILON) -> np.ndarray:
    """Affine rescale to [eps, 1]; constant input maps to all ones."""
    lo = float(values.min())
    hi = float(values.max())
    if hi == lo:
        return np.ones_like(values)
    return eps + (values - lo) * (1.0 - eps) / (hi - lo)


def rank_user(
    user: int,
    candidates: Iterable[int],
    model: LatentFactorModel | None = None,
    profile: UserProfile | None = None,
    cache: SimilarityCache | None = None,
    fusion: FusionMode = FusionMode.RAW,
    use_cf: bool = True,
    use_cb: bool = True,
) -> RankedList:
    """Score each candidate and sort descending by final score, ties broken by
    ascending item id so rankings are reproducible across runs and platforms.

    With use_cb=False (pure CF) the CB score is pinned to 1; with use_cf=False
    (pure CB) the CF score is pinned to 1. In NORMALIZED fusion the present CF
    scores are min-max rescaled over this candidate set before multiplying;
    the rescaled value is what the entry records.
    """
    items = list(candidates)
    if not use_cf and not use_cb:
        raise ValidationError("at least one of use_cf/use_cb must be enabled")
    if use_cf and model is None:
        raise ValidationError("CF scoring requested but no model supplied")
    if use_cb and (profile is None or cache is None):
        raise ValidationError("CB scoring requested but profile or cache missing")
    if profile is not None:
        overlap = set(items) & set(profile.items)
        if overlap:
            raise ContractViolation(
                f"candidates {sorted(overlap)} are in user {user}'s train profile"
            )

    if use_cf:
        cf_scores: list[float | None] = [
            cf_score(model, user, item) if item in model.seen_items else None
            for item in items
        ]
    else:
        cf_scores = [1.0] * len(items)

    if use_cb:
        cb_scores = [onto_score(profile, item, cache) for item in items]
    else:
        cb_scores = [1.0] * len(items)

    if fusion is FusionMode.NORMALIZED:
        present = [i for i, s in enumerate(cf_scores) if s is not None]
        if present:
            rescaled = minmax_rescale(np.array([cf_scores[i] for i in present]))
            for i, value in zip(present, rescaled):
                cf_scores[i] = float(value)

    entries = [
        CandidateScore(item=item, cf=s_cf, cb=s_cb, final=fuse(s_cf, s_cb, fusion))
        for item, s_cf, s_cb in zip(items, cf_scores, cb_scores)
    ]
    entries.sort(key=lambda e: (-e.final, e.item))
    return RankedList(user=user, entries=tuple(entries))
