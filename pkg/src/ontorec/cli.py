"""Command-line surface: dataset stats, similarity-cache building, top-k
recommendation, and the full cross-validated evaluation run.

Configuration precedence is flags > config file > defaults; the config file
is flat ``key = value`` text whose keys are the long flag names. Exit codes:
0 success, 1 usage/config error, 2 data/validation error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .cf import AlsConfig, BprConfig, LatentFactorModel, load_model, train_als, train_bpr
from .dataset import IngestConfig, dataset_stats, format_stats, load_interactions, make_folds
from .errors import ConfigError, DataError, NumericalError, ValidationError
from .evaluation import (
    Algorithm,
    aggregate,
    aggregate_table,
    evaluate_fold,
    per_fold_table,
)
from .ontology import IcMode, Metric, SharedIcMode, compute_ic, load_annotation_counts, load_ontology
from .ranker import FusionMode, rank_user
from .semantic import build_profiles, build_similarity_cache, load_cache, save_cache

PER_FOLD_FILENAME = "metrics_per_fold.csv"
AGGREGATE_FILENAME = "metrics_aggregate.csv"
MANIFEST_FILENAME = "manifest.json"
FIGURES_DIRNAME = "figures"

# Independent derived seed streams, so e.g. changing k_max cannot perturb
# training randomness.
_STREAM_FOLDS = 0
_STREAM_ALS = 1
_STREAM_BPR = 2


def derive_seed(root_seed: int, *stream: int) -> int:
    """Deterministic, platform-independent child seed for a named stream."""
    seq = np.random.SeedSequence([root_seed, *stream])
    return int(seq.generate_state(1, np.uint64)[0])


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in {"1", "true", "yes", "on"}:
        return True
    if lowered in {"0", "false", "no", "off"}:
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_algorithms(text: str) -> tuple[Algorithm, ...]:
    names = [part.strip() for part in text.split(",") if part.strip()]
    if not names:
        raise ConfigError("empty algorithm list")
    try:
        return tuple(Algorithm(name.upper()) for name in names)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _parse_algorithm(text: str) -> Algorithm:
    try:
        return Algorithm(text.strip().upper())
    except ValueError:
        choices = ", ".join(a.value for a in Algorithm)
        raise ConfigError(f"unknown algorithm {text!r} (choose from {choices})") from None


def _enum_parser(enum_cls) -> Callable[[str], object]:
    def convert(text: str):
        try:
            return enum_cls(text.strip().lower())
        except ValueError:
            choices = ", ".join(e.value for e in enum_cls)
            raise ConfigError(f"invalid value {text!r} (choose from {choices})") from None
    return convert


@dataclass(frozen=True)
class _Opt:
    key: str
    convert: Callable[[str], object]
    default: object
    help: str
    flag_const: object | None = None  # boolean flags set a constant instead of taking a value
    flag_name: str | None = None


_OPTIONS: dict[str, _Opt] = {
    opt.key: opt
    for opt in [
        _Opt("ratings", str, None, "delimited user,item,rating file"),
        _Opt("obo", str, None, "ontology in OBO format (optionally gzipped)"),
        _Opt("cache", str, None, "similarity cache file (loaded if present, else built and saved)"),
        _Opt("output", str, None, "output directory for report files"),
        _Opt("annotations", str, None, "term,count file for extrinsic IC"),
        _Opt("model", str, None, "previously saved factor model (.npz)"),
        _Opt("delimiter", str, ",", "field delimiter of the ratings file"),
        _Opt("algorithms", _parse_algorithms,
             tuple(Algorithm), "comma-separated algorithms to evaluate"),
        _Opt("algorithm", _parse_algorithm, Algorithm.ALS_ONTO, "algorithm used to recommend"),
        _Opt("metric", _enum_parser(Metric), Metric.LIN, "similarity metric: resnik, lin, jc"),
        _Opt("ic-mode", _enum_parser(IcMode), IcMode.INTRINSIC,
             "information-content mode: intrinsic, extrinsic"),
        _Opt("shared-mode", _enum_parser(SharedIcMode), SharedIcMode.DISHIN,
             "shared-IC mode: mica, dishin"),
        _Opt("fusion", _enum_parser(FusionMode), FusionMode.RAW,
             "score fusion mode: raw, normalized"),
        _Opt("folds", int, 5, "number of cross-validation folds"),
        _Opt("k-max", int, 20, "largest list cutoff k to evaluate"),
        _Opt("seed", int, 0, "root seed for folds, initialization and sampling"),
        _Opt("factors", int, 150, "latent factor count for ALS and BPR"),
        _Opt("als-alpha", float, 40.0, "ALS confidence scale"),
        _Opt("als-regularization", float, 0.01, "ALS L2 regularization"),
        _Opt("als-iterations", int, 15, "ALS sweeps"),
        _Opt("als-log-confidence", _parse_bool, False,
             "use log-scaled confidence 1 + alpha*log(1+r)", flag_const=True),
        _Opt("bpr-learning-rate", float, 0.01, "BPR learning rate"),
        _Opt("bpr-reg-user", float, 0.0025, "BPR user-factor regularization"),
        _Opt("bpr-reg-item-pos", float, 0.0025, "BPR positive-item regularization"),
        _Opt("bpr-reg-item-neg", float, 0.0025, "BPR negative-item regularization"),
        _Opt("bpr-epochs", int, 100, "BPR epochs"),
        _Opt("bpr-samples-per-epoch", int, None, "BPR samples per epoch (default: one per rating)"),
        _Opt("plots", _parse_bool, True, "render metric figures",
             flag_const=False, flag_name="no-plots"),
        _Opt("json", _parse_bool, False, "emit machine-readable JSON", flag_const=True),
        _Opt("user", str, None, "external user id to recommend for"),
        _Opt("top-k", int, 10, "number of recommendations to print"),
    ]
}

_COMMAND_OPTIONS = {
    "stats": ["ratings", "delimiter", "json"],
    "build-cache": ["ratings", "delimiter", "obo", "cache", "metric", "ic-mode",
                    "shared-mode", "annotations"],
    "evaluate": ["ratings", "delimiter", "obo", "cache", "output", "algorithms", "metric",
                 "ic-mode", "shared-mode", "annotations", "fusion", "folds", "k-max", "seed",
                 "factors", "als-alpha", "als-regularization", "als-iterations",
                 "als-log-confidence", "bpr-learning-rate", "bpr-reg-user", "bpr-reg-item-pos",
                 "bpr-reg-item-neg", "bpr-epochs", "bpr-samples-per-epoch", "plots"],
    "recommend": ["ratings", "delimiter", "obo", "cache", "model", "algorithm", "user", "top-k",
                  "metric", "ic-mode", "shared-mode", "annotations", "fusion", "seed", "factors",
                  "als-alpha", "als-regularization", "als-iterations", "als-log-confidence",
                  "bpr-learning-rate", "bpr-reg-user", "bpr-reg-item-pos", "bpr-reg-item-neg",
                  "bpr-epochs", "bpr-samples-per-epoch"],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems should exit 1, not argparse's 2
        raise ConfigError(message)


def _dest(key: str) -> str:
    return key.replace("-", "_")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ontorec", description=__doc__)
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for command, keys in _COMMAND_OPTIONS.items():
        sub = subparsers.add_parser(command)
        sub.add_argument("--config", help="flat key = value config file")
        for key in keys:
            opt = _OPTIONS[key]
            flag = "--" + (opt.flag_name or opt.key)
            if opt.flag_const is not None:
                sub.add_argument(flag, dest=_dest(opt.key), action="store_const",
                                 const=opt.flag_const, default=None, help=opt.help)
            else:
                sub.add_argument(flag, dest=_dest(opt.key), type=str, default=None,
                                 help=opt.help)
    return parser


def _read_config_file(path: str, allowed: list[str]) -> dict[str, object]:
    values: dict[str, object] = {}
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"config file not found: {path}")
    for lineno, raw in enumerate(config_path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in allowed:
            raise ConfigError(f"{path}:{lineno}: unknown or inapplicable key {key!r}")
        values[key] = _OPTIONS[key].convert(value.strip())
    return values


def effective_config(args: argparse.Namespace) -> dict[str, object]:
    """Merge defaults, config-file values, and command-line flags."""
    keys = _COMMAND_OPTIONS[args.command]
    merged = {key: _OPTIONS[key].default for key in keys}
    if args.config:
        merged.update(_read_config_file(args.config, keys))
    for key in keys:
        raw = getattr(args, _dest(key))
        if raw is None:
            continue
        merged[key] = raw if _OPTIONS[key].flag_const is not None else _OPTIONS[key].convert(raw)
    return merged


def _require_paths(config: dict, keys: list[str]) -> None:
    for key in keys:
        value = config.get(key)
        if value is None:
            raise ConfigError(f"--{key} is required")
        if not Path(value).exists():
            raise ConfigError(f"--{key}: file not found: {value}")


def _als_config(config: dict, seed: int) -> AlsConfig:
    return AlsConfig(
        factors=config["factors"],
        alpha=config["als-alpha"],
        regularization=config["als-regularization"],
        iterations=config["als-iterations"],
        seed=seed,
        log_confidence=config["als-log-confidence"],
    )


def _bpr_config(config: dict, seed: int) -> BprConfig:
    return BprConfig(
        factors=config["factors"],
        learning_rate=config["bpr-learning-rate"],
        reg_user=config["bpr-reg-user"],
        reg_item_pos=config["bpr-reg-item-pos"],
        reg_item_neg=config["bpr-reg-item-neg"],
        epochs=config["bpr-epochs"],
        samples_per_epoch=config["bpr-samples-per-epoch"],
        seed=seed,
    )


def _load_ratings(config: dict):
    with open(config["ratings"], "rt", encoding="utf-8") as fh:
        return load_interactions(fh, IngestConfig(delimiter=config["delimiter"]))


def _obtain_cache(config: dict, ds, save_if_missing: bool = True):
    """Load a provenance-matching cache, or build one (persisting it when a
    cache path was configured)."""
    graph = load_ontology(config["obo"])
    counts = None
    if config["ic-mode"] is IcMode.EXTRINSIC:
        if not config.get("annotations"):
            raise ConfigError("--annotations is required for extrinsic IC")
        with open(config["annotations"], "rt", encoding="utf-8") as fh:
            counts = load_annotation_counts(fh)
    compute_ic(graph, config["ic-mode"], counts)
    cache_path = config.get("cache")
    if cache_path and Path(cache_path).exists():
        return load_cache(
            cache_path,
            expect_items=ds.items,
            expect_metric=config["metric"],
            expect_ic_mode=config["ic-mode"],
            expect_shared_mode=config["shared-mode"],
            expect_ontology_checksum=graph.checksum(),
        )
    cache = build_similarity_cache(
        ds.items, graph,
        metric=config["metric"],
        ic_mode=config["ic-mode"],
        shared_mode=config["shared-mode"],
        annotation_counts=counts,
    )
    if cache_path and save_if_missing:
        save_cache(cache, cache_path)
    return cache


def _json_safe(value):
    if isinstance(value, (Metric, IcMode, SharedIcMode, FusionMode, Algorithm)):
        return value.value
    if isinstance(value, tuple):
        return [_json_safe(v) for v in value]
    return value


def cmd_stats(config: dict) -> int:
    _require_paths(config, ["ratings"])
    stats = dataset_stats(_load_ratings(config))
    if config["json"]:
        print(json.dumps(stats.as_dict(), indent=2, sort_keys=True))
    else:
        print(format_stats(stats))
    return 0


def cmd_build_cache(config: dict) -> int:
    _require_paths(config, ["ratings", "obo"])
    if not config.get("cache"):
        raise ConfigError("--cache output path is required")
    ds = _load_ratings(config)
    graph = load_ontology(config["obo"])
    counts = None
    if config["ic-mode"] is IcMode.EXTRINSIC:
        if not config.get("annotations"):
            raise ConfigError("--annotations is required for extrinsic IC")
        with open(config["annotations"], "rt", encoding="utf-8") as fh:
            counts = load_annotation_counts(fh)
    cache = build_similarity_cache(
        ds.items, graph,
        metric=config["metric"],
        ic_mode=config["ic-mode"],
        shared_mode=config["shared-mode"],
        annotation_counts=counts,
    )
    save_cache(cache, config["cache"])
    pairs = cache.num_items * (cache.num_items + 1) // 2
    print(f"wrote {pairs} item pairs to {config['cache']}")
    return 0


def cmd_evaluate(config: dict) -> int:
    _require_paths(config, ["ratings"])
    if not config.get("output"):
        raise ConfigError("--output directory is required")
    algorithms = tuple(config["algorithms"])
    if not algorithms:
        raise ConfigError("no algorithms selected")
    needs_cb = any(a.uses_cb for a in algorithms)
    if needs_cb:
        _require_paths(config, ["obo"])
    if config["folds"] < 2:
        raise ConfigError(f"--folds must be >= 2, got {config['folds']}")
    if config["k-max"] < 1:
        raise ConfigError(f"--k-max must be >= 1, got {config['k-max']}")

    ds = _load_ratings(config)
    cache = _obtain_cache(config, ds) if needs_cb else None
    seed = config["seed"]
    folds = make_folds(ds, config["folds"], derive_seed(seed, _STREAM_FOLDS))

    fragments = []
    for fold in folds:
        fragments.append(
            evaluate_fold(
                fold,
                algorithms,
                als_config=_als_config(config, derive_seed(seed, _STREAM_ALS, fold.fold_id)),
                bpr_config=_bpr_config(config, derive_seed(seed, _STREAM_BPR, fold.fold_id)),
                cache=cache,
                fusion=config["fusion"],
                k_values=range(1, config["k-max"] + 1),
            )
        )
    report = aggregate(fragments)

    out_dir = Path(config["output"])
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        per_fold_path = out_dir / PER_FOLD_FILENAME
        per_fold_path.write_text(per_fold_table(report), encoding="utf-8")
        written.append(per_fold_path)
        aggregate_path = out_dir / AGGREGATE_FILENAME
        aggregate_path.write_text(aggregate_table(report), encoding="utf-8")
        written.append(aggregate_path)

        manifest = {
            "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "seed": seed,
            "config": {k: _json_safe(v) for k, v in sorted(config.items())},
            "folds": [
                {
                    "fold_id": f.fold_id,
                    "users_evaluated": f.users_evaluated,
                    **f.diagnostics,
                }
                for f in report.fold_reports
            ],
        }
        manifest_path = out_dir / MANIFEST_FILENAME
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                 encoding="utf-8")
        written.append(manifest_path)

        if config["plots"]:
            from .plots import render_metric_figures

            written.extend(render_metric_figures(report, out_dir / FIGURES_DIRNAME))
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    print(f"wrote evaluation report to {out_dir}")
    return 0


def cmd_recommend(config: dict) -> int:
    _require_paths(config, ["ratings"])
    if not config.get("user"):
        raise ConfigError("--user is required")
    algo = config["algorithm"]
    if algo.uses_cb:
        _require_paths(config, ["obo"])
    ds = _load_ratings(config)
    user_ext = config["user"]
    if user_ext not in ds.user_ids:
        raise ValidationError(f"unknown user {user_ext!r}")
    user = ds.user_ids[user_ext]

    model: LatentFactorModel | None = None
    if algo.uses_cf:
        if config.get("model"):
            _require_paths(config, ["model"])
            model = load_model(config["model"])
            if model.algorithm != algo.cf_side:
                raise ConfigError(
                    f"model file holds {model.algorithm}, but {algo.value} needs {algo.cf_side}"
                )
            if model.num_users != ds.num_users or model.num_items != ds.num_items:
                raise ValidationError("model dimensions do not match the ratings file")
        elif algo.cf_side == "ALS":
            model = train_als(ds, _als_config(config, derive_seed(config["seed"], _STREAM_ALS, 0)))
        else:
            model = train_bpr(ds, _bpr_config(config, derive_seed(config["seed"], _STREAM_BPR, 0)))

    cache = _obtain_cache(config, ds) if algo.uses_cb else None
    profile = build_profiles(ds)[user]
    candidates = [t for t in range(ds.num_items) if t not in set(profile.items)]
    ranked = rank_user(
        user,
        candidates,
        model=model,
        profile=profile if algo.uses_cb else None,
        cache=cache if algo.uses_cb else None,
        fusion=config["fusion"],
        use_cf=algo.uses_cf,
        use_cb=algo.uses_cb,
    )

    print("rank,item,final_score,cf_score,cb_score")
    for rank, entry in enumerate(ranked.entries[: config["top-k"]], start=1):
        cf_text = "" if entry.cf is None else f"{entry.cf:.12g}"
        print(f"{rank},{ds.items[entry.item]},{entry.final:.12g},{cf_text},{entry.cb:.12g}")
    return 0


_COMMANDS = {
    "stats": cmd_stats,
    "build-cache": cmd_build_cache,
    "evaluate": cmd_evaluate,
    "recommend": cmd_recommend,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = effective_config(args)
        return _COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except (DataError, LookupError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
