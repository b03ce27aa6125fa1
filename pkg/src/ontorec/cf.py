"""Latent-factor models for implicit feedback: confidence-weighted ALS and
pairwise-ranking BPR.

Both trainers are deterministic for a fixed (train set, config, seed): factor
matrices are initialized from a seeded generator, ALS row solves are order
independent, and BPR applies its sampled updates sequentially.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .dataset import InteractionSet
from .errors import ConfigError, NumericalError, ValidationError

log = logging.getLogger(__name__)

_INIT_SCALE = 1.0  # factors start uniform in [0, 1/sqrt(f)], keeping scores O(1)


@dataclass(frozen=True)
class AlsConfig:
    factors: int = 150
    alpha: float = 40.0
    regularization: float = 0.01
    iterations: int = 15
    seed: int = 0
    log_confidence: bool = False

    def __post_init__(self):
        if self.factors < 1:
            raise ConfigError("factors must be >= 1")
        if self.alpha <= 0:
            raise ConfigError("alpha must be > 0")
        if self.regularization < 0:
            raise ConfigError("regularization must be >= 0")
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")


@dataclass(frozen=True)
class BprConfig:
    factors: int = 150
    learning_rate: float = 0.01
    reg_user: float = 0.0025
    reg_item_pos: float = 0.0025
    reg_item_neg: float = 0.0025
    epochs: int = 100
    samples_per_epoch: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.factors < 1:
            raise ConfigError("factors must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.samples_per_epoch is not None and self.samples_per_epoch < 1:
            raise ConfigError("samples_per_epoch must be >= 1")


@dataclass
class LatentFactorModel:
    algorithm: str  # "ALS" or "BPR"
    user_factors: np.ndarray  # (U, f)
    item_factors: np.ndarray  # (I, f)
    config: AlsConfig | BprConfig
    seen_users: frozenset[int]
    seen_items: frozenset[int]

    @property
    def factors(self) -> int:
        return self.user_factors.shape[1]

    @property
    def num_users(self) -> int:
        return self.user_factors.shape[0]

    @property
    def num_items(self) -> int:
        return self.item_factors.shape[0]


def cf_score(model: LatentFactorModel, user: int, item: int) -> float:
    """Predicted preference: dot product of the user and item factor rows."""
    if not 0 <= user < model.num_users:
        raise IndexError(f"user id {user} out of range [0, {model.num_users})")
    if not 0 <= item < model.num_items:
        raise IndexError(f"item id {item} out of range [0, {model.num_items})")
    return float(model.user_factors[user] @ model.item_factors[item])


def _init_factors(rng: np.random.Generator, num_users: int, num_items: int,
                  factors: int) -> tuple[np.ndarray, np.ndarray]:
    scale = _INIT_SCALE / np.sqrt(factors)
    user_factors = rng.uniform(0.0, scale, size=(num_users, factors))
    item_factors = rng.uniform(0.0, scale, size=(num_items, factors))
    return user_factors, item_factors


def _confidence(ratings: np.ndarray, cfg: AlsConfig) -> np.ndarray:
    if cfg.log_confidence:
        return 1.0 + cfg.alpha * np.log1p(ratings.astype(np.float64))
    return 1.0 + cfg.alpha * ratings.astype(np.float64)


def _by_row(num_rows: int, row_idx: np.ndarray, col_idx: np.ndarray,
            conf: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    grouped: list[tuple[list[int], list[float]]] = [([], []) for _ in range(num_rows)]
    for r, c, w in zip(row_idx, col_idx, conf):
        grouped[r][0].append(int(c))
        grouped[r][1].append(float(w))
    return [
        (np.asarray(cols, dtype=np.int64), np.asarray(ws, dtype=np.float64))
        for cols, ws in grouped
    ]


def _solve_side(target: np.ndarray, other: np.ndarray,
                observed: list[tuple[np.ndarray, np.ndarray]],
                regularization: float) -> None:
    """Exact regularized least-squares update of every row of ``target`` given
    ``other``, under preference 1 for observed pairs and 0 elsewhere.

    Uses the Gram-matrix trick: the f x f system for a row only needs rank
    corrections for that row's observed columns, so the dense base Gram is
    computed once per sweep.
    """
    f = other.shape[1]
    gram = other.T @ other + regularization * np.eye(f)
    for row, (cols, conf) in enumerate(observed):
        if cols.size == 0:
            target[row] = 0.0
            continue
        factors = other[cols]
        a = gram + factors.T @ ((conf - 1.0)[:, None] * factors)
        b = factors.T @ conf
        target[row] = np.linalg.solve(a, b)


def train_als(train: InteractionSet, cfg: AlsConfig,
              on_iteration: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
              ) -> LatentFactorModel:
    """Alternating least squares on binarized preferences with confidence
    weights c = 1 + alpha * rating (optionally log-scaled).

    Each iteration solves all user rows exactly given the item rows, then all
    item rows given the updated user rows; both half-steps minimize the full
    weighted objective, so it is non-increasing across iterations.
    ``on_iteration(i, user_factors, item_factors)`` receives copies after
    iteration i, for instrumentation.
    """
    if train.num_ratings == 0:
        raise ValidationError("cannot train ALS on an empty interaction set")
    rng = np.random.default_rng(cfg.seed)
    user_factors, item_factors = _init_factors(rng, train.num_users, train.num_items, cfg.factors)

    conf = _confidence(train.ratings, cfg)
    by_user = _by_row(train.num_users, train.user_idx, train.item_idx, conf)
    by_item = _by_row(train.num_items, train.item_idx, train.user_idx, conf)

    for iteration in range(cfg.iterations):
        _solve_side(user_factors, item_factors, by_user, cfg.regularization)
        _solve_side(item_factors, user_factors, by_item, cfg.regularization)
        if not (np.isfinite(user_factors).all() and np.isfinite(item_factors).all()):
            raise NumericalError(f"non-finite factors after ALS iteration {iteration}")
        if on_iteration is not None:
            on_iteration(iteration, user_factors.copy(), item_factors.copy())

    return LatentFactorModel(
        algorithm="ALS",
        user_factors=user_factors,
        item_factors=item_factors,
        config=cfg,
        seen_users=frozenset(int(u) for u in np.unique(train.user_idx)),
        seen_items=frozenset(int(t) for t in np.unique(train.item_idx)),
    )


def als_objective(train: InteractionSet, user_factors: np.ndarray,
                  item_factors: np.ndarray, cfg: AlsConfig) -> float:
    """Full weighted regularized objective over every user x item cell."""
    scores = user_factors @ item_factors.T
    conf = np.ones_like(scores)
    pref = np.zeros_like(scores)
    conf[train.user_idx, train.item_idx] = _confidence(train.ratings, cfg)
    pref[train.user_idx, train.item_idx] = 1.0
    penalty = cfg.regularization * (
        float(np.sum(user_factors ** 2)) + float(np.sum(item_factors ** 2))
    )
    return float(np.sum(conf * (pref - scores) ** 2)) + penalty


def bpr_sample_objective(user_vec: np.ndarray, pos_vec: np.ndarray,
                         neg_vec: np.ndarray, cfg: BprConfig) -> float:
    """Per-sample criterion: log-sigmoid of the pairwise score margin minus
    L2 penalties (with the 1/2 convention matching :func:`bpr_gradients`)."""
    margin = float(user_vec @ (pos_vec - neg_vec))
    return (
        -np.log1p(np.exp(-margin))
        - 0.5 * cfg.reg_user * float(user_vec @ user_vec)
        - 0.5 * cfg.reg_item_pos * float(pos_vec @ pos_vec)
        - 0.5 * cfg.reg_item_neg * float(neg_vec @ neg_vec)
    )


def bpr_gradients(user_vec: np.ndarray, pos_vec: np.ndarray, neg_vec: np.ndarray,
                  cfg: BprConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact ascent directions of :func:`bpr_sample_objective` for the three
    touched factor rows."""
    margin = float(user_vec @ (pos_vec - neg_vec))
    weight = 1.0 / (1.0 + np.exp(margin))  # sigmoid(-margin)
    g_user = weight * (pos_vec - neg_vec) - cfg.reg_user * user_vec
    g_pos = weight * user_vec - cfg.reg_item_pos * pos_vec
    g_neg = -weight * user_vec - cfg.reg_item_neg * neg_vec
    return g_user, g_pos, g_neg


def train_bpr(train: InteractionSet, cfg: BprConfig) -> LatentFactorModel:
    """Stochastic pairwise training: each sample draws an observed (user, item)
    pair uniformly, a uniform unobserved item for that user, and takes one
    ascent step on the log-sigmoid ranking criterion. Users who rated every
    item cannot yield negatives and are skipped with a warning.
    """
    if train.num_ratings == 0:
        raise ValidationError("cannot train BPR on an empty interaction set")
    if train.num_items < 2:
        raise ValidationError("BPR needs at least 2 items to sample negatives")
    rng = np.random.default_rng(cfg.seed)
    user_factors, item_factors = _init_factors(rng, train.num_users, train.num_items, cfg.factors)

    rated: list[set[int]] = [set() for _ in range(train.num_users)]
    for u, t in zip(train.user_idx, train.item_idx):
        rated[u].add(int(t))

    num_items = train.num_items
    num_ratings = train.num_ratings
    samples = cfg.samples_per_epoch if cfg.samples_per_epoch is not None else num_ratings
    lr = cfg.learning_rate
    warned: set[int] = set()

    for epoch in range(cfg.epochs):
        for _ in range(samples):
            ridx = int(rng.integers(num_ratings))
            u = int(train.user_idx[ridx])
            pos = int(train.item_idx[ridx])
            if len(rated[u]) >= num_items:
                if u not in warned:
                    log.warning("user %d rated every item; skipping their BPR samples", u)
                    warned.add(u)
                continue
            neg = int(rng.integers(num_items))
            while neg in rated[u]:
                neg = int(rng.integers(num_items))
            g_user, g_pos, g_neg = bpr_gradients(
                user_factors[u], item_factors[pos], item_factors[neg], cfg
            )
            user_factors[u] += lr * g_user
            item_factors[pos] += lr * g_pos
            item_factors[neg] += lr * g_neg
        if not (np.isfinite(user_factors).all() and np.isfinite(item_factors).all()):
            raise NumericalError(f"non-finite factors after BPR epoch {epoch}")

    return LatentFactorModel(
        algorithm="BPR",
        user_factors=user_factors,
        item_factors=item_factors,
        config=cfg,
        seen_users=frozenset(int(u) for u in np.unique(train.user_idx)),
        seen_items=frozenset(int(t) for t in np.unique(train.item_idx)),
    )


_MODEL_FORMAT_VERSION = 1


def save_model(model: LatentFactorModel, path: str | Path) -> None:
    """Persist dims, config, and factor matrices; round-trips bit-exactly."""
    np.savez(
        path,
        format_version=np.int64(_MODEL_FORMAT_VERSION),
        algorithm=model.algorithm,
        config=json.dumps(asdict(model.config), sort_keys=True),
        user_factors=model.user_factors,
        item_factors=model.item_factors,
        seen_users=np.asarray(sorted(model.seen_users), dtype=np.int64),
        seen_items=np.asarray(sorted(model.seen_items), dtype=np.int64),
    )


def load_model(path: str | Path) -> LatentFactorModel:
    with np.load(path) as data:
        version = int(data["format_version"])
        if version != _MODEL_FORMAT_VERSION:
            raise ValidationError(f"unsupported model format version {version}")
        algorithm = str(data["algorithm"])
        config_fields = json.loads(str(data["config"]))
        config: AlsConfig | BprConfig
        if algorithm == "ALS":
            config = AlsConfig(**config_fields)
        elif algorithm == "BPR":
            config = BprConfig(**config_fields)
        else:
            raise ValidationError(f"unknown algorithm tag {algorithm!r} in model file")
        return LatentFactorModel(
            algorithm=algorithm,
            user_factors=data["user_factors"],
            item_factors=data["item_factors"],
            config=config,
            seen_users=frozenset(int(u) for u in data["seen_users"]),
            seen_items=frozenset(int(t) for t in data["seen_items"]),
        )
