"""OBO ontology parsing and information-content semantic similarity.

The graph keeps only ``is_a`` subsumption edges. Similarity between two
terms is derived from the information content (IC) shared through their
common ancestors, either via the single most informative common ancestor
(MICA) or via disjunctive common ancestors (DISHIN): ancestors are grouped
by the absolute difference of their upward path counts from the two terms,
the most informative ancestor of each group is kept, and the shared IC is
the mean over those representatives. On single-inheritance ontologies every
common ancestor has path difference 0, so DISHIN reduces to MICA.
"""

from __future__ import annotations

import gzip
import hashlib
import logging
import math
from collections.abc import Iterable, Mapping
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import OntologyError, ValidationError

log = logging.getLogger(__name__)


class IcMode(Enum):
    INTRINSIC = "intrinsic"
    EXTRINSIC = "extrinsic"


class SharedIcMode(Enum):
    MICA = "mica"
    DISHIN = "dishin"


class Metric(Enum):
    RESNIK = "resnik"
    LIN = "lin"
    JC = "jc"


class OntologyGraph:
    """Immutable DAG of terms with reflexive ancestor closures and IC values.

    Query methods are pure; the graph is safe for concurrent readers once
    built (the lazy path-count memo only ever fills in identical values).
    """

    def __init__(self, accessions: list[str], names: list[str | None],
                 parents: list[list[int]]):
        self.accessions: tuple[str, ...] = tuple(accessions)
        self.names: tuple[str | None, ...] = tuple(names)
        self.index: dict[str, int] = {a: i for i, a in enumerate(self.accessions)}
        self.parents: tuple[tuple[int, ...], ...] = tuple(tuple(p) for p in parents)
        n = len(self.accessions)
        children: list[list[int]] = [[] for _ in range(n)]
        for child, ps in enumerate(self.parents):
            for p in ps:
                children[p].append(child)
        self.children: tuple[tuple[int, ...], ...] = tuple(tuple(c) for c in children)
        self.roots: tuple[int, ...] = tuple(i for i in range(n) if not self.parents[i])

        self._topo = self._topological_order()
        self.topo_position = np.empty(n, dtype=np.int64)
        self.topo_position[self._topo] = np.arange(n)

        # Reflexive closures, ancestors before descendants.
        closures: list[frozenset[int]] = [frozenset()] * n
        for t in self._topo:
            acc: set[int] = {t}
            for p in self.parents[t]:
                acc |= closures[p]
            closures[t] = frozenset(acc)
        self.ancestor_closure: tuple[frozenset[int], ...] = tuple(closures)

        counts = np.zeros(n, dtype=np.int64)
        for t in range(n):
            for a in closures[t]:
                counts[a] += 1
        self.descendant_count = counts - 1  # strict descendants
        self.descendant_count.setflags(write=False)

        self.ic: np.ndarray | None = None
        self.ic_mode: IcMode | None = None
        self._up_paths: dict[int, dict[int, int]] = {}

    @property
    def num_terms(self) -> int:
        return len(self.accessions)

    def resolve(self, term: int | str) -> int:
        if isinstance(term, str):
            try:
                return self.index[term]
            except KeyError:
                raise KeyError(f"unknown ontology term {term!r}") from None
        if not 0 <= term < self.num_terms:
            raise IndexError(f"term id {term} out of range [0, {self.num_terms})")
        return term

    def _topological_order(self) -> np.ndarray:
        """Kahn ordering, roots first; raises with a concrete cycle if cyclic."""
        n = self.num_terms
        if n == 0:
            raise OntologyError("ontology contains no terms")
        indegree = np.array([len(p) for p in self.parents], dtype=np.int64)
        order = []
        frontier = [i for i in range(n) if indegree[i] == 0]
        while frontier:
            t = frontier.pop()
            order.append(t)
            for c in self.children[t]:
                indegree[c] -= 1
                if indegree[c] == 0:
                    frontier.append(c)
        if len(order) < n:
            cycle = self._find_cycle()
            path = " -> ".join(self.accessions[i] for i in cycle)
            raise OntologyError(f"is_a relation contains a cycle: {path}")
        return np.asarray(order, dtype=np.int64)

    def _find_cycle(self) -> list[int]:
        color = [0] * self.num_terms  # 0 unvisited, 1 on stack, 2 done
        stack_path: list[int] = []

        def dfs(t: int) -> list[int] | None:
            color[t] = 1
            stack_path.append(t)
            for p in self.parents[t]:
                if color[p] == 1:
                    i = stack_path.index(p)
                    return stack_path[i:] + [p]
                if color[p] == 0:
                    found = dfs(p)
                    if found:
                        return found
            stack_path.pop()
            color[t] = 2
            return None

        for t in range(self.num_terms):
            if color[t] == 0:
                found = dfs(t)
                if found:
                    return found
        return []

    def checksum(self) -> str:
        """Structure digest (terms + edges), independent of IC configuration."""
        h = hashlib.sha256()
        for i, acc in enumerate(self.accessions):
            h.update(acc.encode("utf-8"))
            h.update(b"\x00")
            for p in sorted(self.parents[i]):
                h.update(self.accessions[p].encode("utf-8"))
                h.update(b"\x01")
            h.update(b"\n")
        return h.hexdigest()

    def upward_path_counts(self, term: int) -> dict[int, int]:
        """Map ancestor -> number of distinct is_a paths from ``term`` up to it."""
        cached = self._up_paths.get(term)
        if cached is not None:
            return cached
        closure = self.ancestor_closure[term]
        counts = {term: 1}
        # Visit descendants before ancestors so child counts are ready.
        for node in sorted(closure, key=lambda t: -self.topo_position[t]):
            if node == term:
                continue
            counts[node] = sum(counts[c] for c in self.children[node] if c in closure)
        self._up_paths[term] = counts
        return counts


def _clean_value(raw: str) -> str:
    bang = raw.find(" ! ")
    if bang >= 0:
        raw = raw[:bang]
    elif raw.endswith("!"):
        raw = raw[:-1]
    return raw.strip()


def parse_obo(source: Iterable[str]) -> OntologyGraph:
    """Build an OntologyGraph from OBO flat-file text (no IC yet).

    Handles the ``[Term]`` subset: ``id:``, ``name:``, ``is_a:`` and
    ``is_obsolete:``. Obsolete terms are dropped; ``relationship:`` lines and
    other stanza types are ignored. An ``is_a`` target that does not resolve
    to a retained term is a structural error.
    """
    stanzas: list[dict] = []
    current: dict | None = None
    for raw in source:
        line = raw.strip()
        if line.startswith("["):
            current = {"type": line, "id": None, "name": None, "is_a": [], "obsolete": False}
            stanzas.append(current)
            continue
        if current is None or current["type"] != "[Term]" or not line or ":" not in line:
            continue
        tag, _, value = line.partition(":")
        tag = tag.strip()
        value = _clean_value(value)
        if tag == "id":
            current["id"] = value
        elif tag == "name":
            current["name"] = value
        elif tag == "is_a":
            target = value.split()[0] if value else ""
            if target:
                current["is_a"].append(target)
        elif tag == "is_obsolete":
            current["obsolete"] = value.lower() == "true"

    terms = [s for s in stanzas if s["type"] == "[Term]" and not s["obsolete"]]
    accessions: list[str] = []
    names: list[str | None] = []
    index: dict[str, int] = {}
    for s in terms:
        if not s["id"]:
            raise OntologyError("[Term] stanza without an id")
        if s["id"] in index:
            raise OntologyError(f"duplicate term id {s['id']!r}")
        index[s["id"]] = len(accessions)
        accessions.append(s["id"])
        names.append(s["name"])

    if not accessions:
        raise OntologyError("ontology contains no (non-obsolete) terms")

    parents: list[list[int]] = [[] for _ in accessions]
    unknown: set[str] = set()
    for s in terms:
        child = index[s["id"]]
        for target in s["is_a"]:
            if target not in index:
                unknown.add(target)
            else:
                p = index[target]
                if p not in parents[child]:
                    parents[child].append(p)
    if unknown:
        raise OntologyError(
            "is_a targets not found among retained terms: " + ", ".join(sorted(unknown))
        )
    return OntologyGraph(accessions, names, parents)


def load_ontology(path: str | Path) -> OntologyGraph:
    """Parse an OBO file; gzip-compressed input is detected by magic bytes."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"\x1f\x8b":
        with gzip.open(path, "rt", encoding="utf-8") as fh:
            return parse_obo(fh)
    with open(path, "rt", encoding="utf-8") as fh:
        return parse_obo(fh)


def load_annotation_counts(source: Iterable[str], delimiter: str = ",") -> dict[str, int]:
    """Parse ``term,count`` lines for extrinsic IC."""
    counts: dict[str, int] = {}
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(delimiter)]
        if len(fields) != 2:
            raise ValidationError(f"line {lineno}: expected 'term,count', got {line!r}")
        try:
            count = int(fields[1])
        except ValueError:
            raise ValidationError(f"line {lineno}: count {fields[1]!r} is not an integer") from None
        if count < 0:
            raise ValidationError(f"line {lineno}: negative annotation count")
        counts[fields[0]] = counts.get(fields[0], 0) + count
    return counts


def compute_ic(
    g: OntologyGraph,
    mode: IcMode = IcMode.INTRINSIC,
    annotation_counts: Mapping[str, int] | None = None,
) -> OntologyGraph:
    """Attach per-term information content to the graph and return it.

    INTRINSIC uses structure-derived rarity: ic(t) = 1 - log(desc(t)+1)/log(N)
    with desc(t) the strict-descendant count, so the root of an N-term
    ontology gets 0 and leaves get 1. A single-term ontology gets ic = 0.

    EXTRINSIC propagates annotation counts up the DAG (each term counts every
    annotation in its closure once) and sets ic(t) = -log((freq(t)+1)/(total+1));
    the add-one keeps unannotated terms finite while the root of a single-root
    ontology still gets exactly 0.
    """
    n = g.num_terms
    if mode is IcMode.INTRINSIC:
        if n == 1:
            ic = np.zeros(1)
        else:
            ic = 1.0 - np.log(g.descendant_count + 1.0) / math.log(n)
    elif mode is IcMode.EXTRINSIC:
        if annotation_counts is None:
            raise ValidationError("extrinsic IC requires annotation counts")
        freq = np.zeros(n, dtype=np.int64)
        for acc, count in annotation_counts.items():
            if acc not in g.index:
                raise ValidationError(f"annotation count for unknown term {acc!r}")
            if count:
                for a in g.ancestor_closure[g.index[acc]]:
                    freq[a] += count
        total = sum(annotation_counts.values())
        if total <= 0:
            raise ValidationError("extrinsic IC requires a positive total annotation count")
        ic = -np.log((freq + 1.0) / (total + 1.0))
    else:
        raise ValidationError(f"unknown IC mode {mode!r}")
    ic = np.maximum(ic, 0.0)
    ic.setflags(write=False)
    g.ic = ic
    g.ic_mode = mode
    return g


def common_ancestors(g: OntologyGraph, t1: int | str, t2: int | str) -> frozenset[int]:
    """Reflexive set of shared ancestors (contains t1 if t1 subsumes t2)."""
    a = g.resolve(t1)
    b = g.resolve(t2)
    return g.ancestor_closure[a] & g.ancestor_closure[b]


def path_counts(g: OntologyGraph, ancestor: int | str, descendant: int | str) -> int:
    """Distinct directed is_a paths from descendant up to ancestor (0 if unrelated,
    1 for a term and itself)."""
    a = g.resolve(ancestor)
    d = g.resolve(descendant)
    return g.upward_path_counts(d).get(a, 0)


def shared_ic(g: OntologyGraph, t1: int | str, t2: int | str,
              mode: SharedIcMode = SharedIcMode.DISHIN) -> float:
    """IC shared by two terms through their common ancestors.

    MICA takes the maximum IC over all common ancestors. DISHIN groups the
    common ancestors by path-count difference and averages each group's
    most informative member. Cross-root pairs share nothing and score 0.
    """
    if g.ic is None:
        raise ValidationError("information content has not been computed for this graph")
    a = g.resolve(t1)
    b = g.resolve(t2)
    common = g.ancestor_closure[a] & g.ancestor_closure[b]
    if not common:
        return 0.0
    if mode is SharedIcMode.MICA:
        return float(max(g.ic[t] for t in common))
    if mode is SharedIcMode.DISHIN:
        up_a = g.upward_path_counts(a)
        up_b = g.upward_path_counts(b)
        best_by_diff: dict[int, float] = {}
        for t in common:
            diff = abs(up_a[t] - up_b[t])
            ic_t = float(g.ic[t])
            if diff not in best_by_diff or ic_t > best_by_diff[diff]:
                best_by_diff[diff] = ic_t
        return sum(best_by_diff.values()) / len(best_by_diff)
    raise ValidationError(f"unknown shared-IC mode {mode!r}")


def similarity(g: OntologyGraph, t1: int | str, t2: int | str,
               metric: Metric = Metric.LIN,
               mode: SharedIcMode = SharedIcMode.DISHIN) -> float:
    """Semantic similarity between two terms; all metrics are symmetric and
    oriented so that higher means more similar.
    """
    a = g.resolve(t1)
    b = g.resolve(t2)
    shared = shared_ic(g, a, b, mode)
    if metric is Metric.RESNIK:
        return shared
    ic_a = float(g.ic[a])
    ic_b = float(g.ic[b])
    if metric is Metric.LIN:
        denom = ic_a + ic_b
        if denom == 0.0:
            return 0.0
        value = 2.0 * shared / denom
        if value > 1.0 or value < 0.0:
            log.warning("clamping Lin similarity %.6f for (%s, %s) into [0, 1]",
                        value, g.accessions[a], g.accessions[b])
            value = min(max(value, 0.0), 1.0)
        return value
    if metric is Metric.JC:
        distance = max(ic_a + ic_b - 2.0 * shared, 0.0)
        return 1.0 / (1.0 + distance)
    raise ValidationError(f"unknown similarity metric {metric!r}")
