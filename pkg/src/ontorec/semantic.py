"""Content-based scoring: a candidate item is scored for a user as the mean
semantic similarity between the candidate and the items the user rated in
train. All pairwise similarities come from a precomputed symmetric cache,
which is the expensive artifact worth persisting.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import InteractionSet
from .errors import ContractViolation, MappingError, ProvenanceError, ValidationError
from .ontology import IcMode, Metric, OntologyGraph, SharedIcMode, compute_ic, similarity

_CACHE_MAGIC = b"ONTOSIM\x00"
_CACHE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class UserProfile:
    """The distinct items a user rated in train; candidates are scored against
    these. Rating magnitudes do not weight the mean."""
    user: int
    items: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.items)


def build_profiles(train: InteractionSet) -> list[UserProfile]:
    """One profile per user in the id universe (possibly empty for users with
    no train ratings)."""
    per_user = train.items_by_user()
    return [UserProfile(u, tuple(int(t) for t in items)) for u, items in enumerate(per_user)]


class SimilarityCache:
    """Symmetric item-by-item similarity table for one (metric, IC mode,
    shared-IC mode) configuration, immutable after build."""

    def __init__(self, items: tuple[str, ...], table: np.ndarray, metric: Metric,
                 ic_mode: IcMode, shared_mode: SharedIcMode, ontology_checksum: str):
        self.items = items
        self.table = table
        self.table.setflags(write=False)
        self.metric = metric
        self.ic_mode = ic_mode
        self.shared_mode = shared_mode
        self.ontology_checksum = ontology_checksum

    @property
    def num_items(self) -> int:
        return len(self.items)

    def provenance(self) -> dict:
        return {
            "metric": self.metric.value,
            "ic_mode": self.ic_mode.value,
            "shared_mode": self.shared_mode.value,
            "ontology_checksum": self.ontology_checksum,
        }


def build_similarity_cache(
    items: tuple[str, ...] | list[str],
    graph: OntologyGraph,
    metric: Metric = Metric.LIN,
    ic_mode: IcMode = IcMode.INTRINSIC,
    shared_mode: SharedIcMode = SharedIcMode.DISHIN,
    annotation_counts: dict[str, int] | None = None,
) -> SimilarityCache:
    """Compute all I*(I+1)/2 pairwise similarities once.

    ``items`` maps dense item ids to ontology accessions (the order of an
    InteractionSet's item universe). Every accession must resolve; anything
    unresolved is reported in one error.
    """
    unresolved = [acc for acc in items if acc not in graph.index]
    if unresolved:
        raise MappingError(
            "item accessions not found in the ontology: " + ", ".join(sorted(unresolved))
        )
    if graph.ic is None or graph.ic_mode is not ic_mode:
        compute_ic(graph, ic_mode, annotation_counts)

    n = len(items)
    term_ids = [graph.index[acc] for acc in items]
    table = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i, n):
            value = similarity(graph, term_ids[i], term_ids[j], metric, shared_mode)
            table[i, j] = value
            table[j, i] = value
    return SimilarityCache(tuple(items), table, metric, ic_mode, shared_mode, graph.checksum())


def onto_score(profile: UserProfile, candidate: int, cache: SimilarityCache) -> float:
    """Mean similarity between the candidate and the profile's items.

    Empty profiles (cold-start users) score 0: there is no evidence to
    compare against. The candidate must not already be in the profile.
    """
    if candidate in profile.items:
        raise ContractViolation(
            f"candidate item {candidate} is already in user {profile.user}'s profile"
        )
    if not 0 <= candidate < cache.num_items:
        raise IndexError(f"item id {candidate} out of range [0, {cache.num_items})")
    if profile.size == 0:
        return 0.0
    return float(cache.table[candidate, list(profile.items)].sum() / profile.size)


def onto_score_all(profile: UserProfile, candidates: list[int],
                   cache: SimilarityCache) -> list[tuple[int, float]]:
    """Element-wise :func:`onto_score`, preserving candidate order."""
    return [(item, onto_score(profile, item, cache)) for item in candidates]


def save_cache(cache: SimilarityCache, path: str | Path) -> None:
    """Write the cache deterministically: a JSON header followed by the raw
    lower-triangular table. Same inputs produce byte-identical files."""
    header = {
        "format_version": _CACHE_FORMAT_VERSION,
        "metric": cache.metric.value,
        "ic_mode": cache.ic_mode.value,
        "shared_mode": cache.shared_mode.value,
        "ontology_checksum": cache.ontology_checksum,
        "num_items": cache.num_items,
        "items": list(cache.items),
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    tri = cache.table[np.tril_indices(cache.num_items)].astype("<f8")
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(tri.tobytes())


def load_cache(
    path: str | Path,
    expect_items: tuple[str, ...] | list[str] | None = None,
    expect_metric: Metric | None = None,
    expect_ic_mode: IcMode | None = None,
    expect_shared_mode: SharedIcMode | None = None,
    expect_ontology_checksum: str | None = None,
) -> SimilarityCache:
    """Load a persisted cache, validating the header against whatever parts of
    the current configuration are supplied."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_CACHE_MAGIC))
        if magic != _CACHE_MAGIC:
            raise ValidationError(f"{path}: not a similarity cache file")
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        if header.get("format_version") != _CACHE_FORMAT_VERSION:
            raise ValidationError(f"{path}: unsupported cache format version")
        n = int(header["num_items"])
        tri = np.frombuffer(fh.read(n * (n + 1) // 2 * 8), dtype="<f8")

    mismatches = []
    if expect_items is not None and list(expect_items) != header["items"]:
        mismatches.append("item universe")
    if expect_metric is not None and expect_metric.value != header["metric"]:
        mismatches.append(f"metric ({header['metric']} != {expect_metric.value})")
    if expect_ic_mode is not None and expect_ic_mode.value != header["ic_mode"]:
        mismatches.append(f"ic_mode ({header['ic_mode']} != {expect_ic_mode.value})")
    if expect_shared_mode is not None and expect_shared_mode.value != header["shared_mode"]:
        mismatches.append(f"shared_mode ({header['shared_mode']} != {expect_shared_mode.value})")
    if expect_ontology_checksum is not None and expect_ontology_checksum != header["ontology_checksum"]:
        mismatches.append("ontology checksum")
    if mismatches:
        raise ProvenanceError(f"{path}: cache was built under a different configuration: "
                              + "; ".join(mismatches))

    table = np.zeros((n, n), dtype=np.float64)
    table[np.tril_indices(n)] = tri
    table = table + table.T - np.diag(np.diag(table))
    return SimilarityCache(
        tuple(header["items"]),
        table,
        Metric(header["metric"]),
        IcMode(header["ic_mode"]),
        SharedIcMode(header["shared_mode"]),
        header["ontology_checksum"],
    )
