import gzip
import io
import math

import numpy as np
import pytest

from bruteforce import bf_ancestors, bf_dishin_shared_ic, bf_path_count
from conftest import DIAMOND_OBO, TOY_OBO, random_dag
from ontorec.errors import OntologyError, ValidationError
from ontorec.ontology import (
    IcMode,
    Metric,
    SharedIcMode,
    common_ancestors,
    compute_ic,
    load_annotation_counts,
    load_ontology,
    parse_obo,
    path_counts,
    shared_ic,
    similarity,
)


def names(graph, ids):
    return {graph.accessions[t] for t in ids}


# ------------------------------------------------------------------- parsing

def test_parse_toy(toy_graph):
    assert toy_graph.num_terms == 4
    assert sum(len(p) for p in toy_graph.parents) == 3
    assert toy_graph.names[toy_graph.index["A"]] == "mid a"


def test_obsolete_terms_dropped():
    text = TOY_OBO + "\n[Term]\nid: DEAD\nis_obsolete: true\n"
    g = parse_obo(io.StringIO(text))
    assert "DEAD" not in g.index
    assert g.num_terms == 4


def test_cycle_detected():
    text = "[Term]\nid: A\nis_a: B\n\n[Term]\nid: B\nis_a: A\n"
    with pytest.raises(OntologyError, match="cycle"):
        parse_obo(io.StringIO(text))


def test_unknown_is_a_target():
    text = "[Term]\nid: A\nis_a: NOPE\n"
    with pytest.raises(OntologyError, match="NOPE"):
        parse_obo(io.StringIO(text))


def test_empty_ontology_rejected():
    with pytest.raises(OntologyError):
        parse_obo(io.StringIO("format-version: 1.2\n"))


def test_duplicate_id_rejected():
    text = "[Term]\nid: A\n\n[Term]\nid: A\n"
    with pytest.raises(OntologyError, match="duplicate"):
        parse_obo(io.StringIO(text))


def test_is_a_comments_and_typedefs_ignored():
    text = (
        "[Typedef]\nid: part_of\n\n"
        "[Term]\nid: R\n\n"
        "[Term]\nid: A\nis_a: R ! the root\nrelationship: part_of R\n"
    )
    g = parse_obo(io.StringIO(text))
    assert g.num_terms == 2
    assert names(g, g.ancestor_closure[g.index["A"]]) == {"A", "R"}


def test_gzip_input(tmp_path):
    path = tmp_path / "toy.obo.gz"
    with gzip.open(path, "wt", encoding="utf-8") as fh:
        fh.write(TOY_OBO)
    g = load_ontology(path)
    assert g.num_terms == 4


def test_annotation_counts_parse():
    counts = load_annotation_counts(iter(["A,3", "B,0", "A,2"]))
    assert counts == {"A": 5, "B": 0}
    with pytest.raises(ValidationError):
        load_annotation_counts(iter(["A,x"]))
    with pytest.raises(ValidationError):
        load_annotation_counts(iter(["A,-1"]))


# ------------------------------------------------------------------- information content

def test_intrinsic_ic_toy(toy_graph):
    g = compute_ic(toy_graph, IcMode.INTRINSIC)
    assert g.ic[g.index["R"]] == 0.0
    assert g.ic[g.index["A"]] == pytest.approx(0.5)
    assert g.ic[g.index["B"]] == pytest.approx(1.0)
    assert g.ic[g.index["A1"]] == pytest.approx(1.0)


def test_single_term_ic_is_zero():
    g = parse_obo(io.StringIO("[Term]\nid: ONLY\n"))
    compute_ic(g, IcMode.INTRINSIC)
    assert g.ic[0] == 0.0


def test_intrinsic_ic_antitone_on_random_dags():
    rng = np.random.default_rng(17)
    for trial in range(20):
        g = random_dag(rng, int(rng.integers(2, 12)))
        compute_ic(g, IcMode.INTRINSIC)
        for child in range(g.num_terms):
            for parent in g.parents[child]:
                assert g.ic[parent] <= g.ic[child] + 1e-12


def test_extrinsic_ic(toy_graph):
    g = compute_ic(toy_graph, IcMode.EXTRINSIC, {"A1": 3, "B": 1})
    # counts propagate up: freq(R)=4, freq(A)=3, ic = -log((freq+1)/5)
    assert g.ic[g.index["R"]] == 0.0
    assert g.ic[g.index["A"]] == pytest.approx(-math.log(4 / 5))
    assert g.ic[g.index["A1"]] == pytest.approx(-math.log(4 / 5))
    assert g.ic[g.index["B"]] == pytest.approx(-math.log(2 / 5))
    for child in range(g.num_terms):
        for parent in g.parents[child]:
            assert g.ic[parent] <= g.ic[child] + 1e-12


def test_extrinsic_ic_requires_counts(toy_graph):
    with pytest.raises(ValidationError):
        compute_ic(toy_graph, IcMode.EXTRINSIC, None)
    with pytest.raises(ValidationError):
        compute_ic(toy_graph, IcMode.EXTRINSIC, {"A1": 0})


# ------------------------------------------------------------------- ancestors and paths

def test_common_ancestors_toy(toy_graph):
    g = toy_graph
    assert names(g, common_ancestors(g, "A1", "B")) == {"R"}
    assert names(g, common_ancestors(g, "A", "A1")) == {"R", "A"}
    assert common_ancestors(g, "A", "A") == g.ancestor_closure[g.index["A"]]


def test_common_ancestors_unknown_term(toy_graph):
    with pytest.raises(KeyError):
        common_ancestors(toy_graph, "A", "NOPE")
    with pytest.raises(IndexError):
        common_ancestors(toy_graph, 0, 99)


def test_path_counts_examples(toy_graph, diamond_graph):
    assert path_counts(toy_graph, "R", "A1") == 1
    assert path_counts(toy_graph, "A", "A") == 1
    assert path_counts(toy_graph, "A1", "R") == 0  # not an ancestor
    assert path_counts(diamond_graph, "A", "D") == 2


def test_path_counts_match_dfs_enumeration():
    rng = np.random.default_rng(23)
    for trial in range(30):
        g = random_dag(rng, int(rng.integers(2, 13)), parent_prob=0.5)
        for a in range(g.num_terms):
            for d in range(g.num_terms):
                assert path_counts(g, a, d) == bf_path_count(g.parents, a, d)


def test_closure_matches_bruteforce_expansion():
    rng = np.random.default_rng(29)
    for trial in range(20):
        g = random_dag(rng, int(rng.integers(1, 12)))
        for t in range(g.num_terms):
            assert set(g.ancestor_closure[t]) == bf_ancestors(g.parents, t)


# ------------------------------------------------------------------- shared IC

def test_mica_toy(toy_graph):
    g = compute_ic(toy_graph, IcMode.INTRINSIC)
    assert shared_ic(g, "A", "A1", SharedIcMode.MICA) == pytest.approx(0.5)
    assert shared_ic(g, "A1", "B", SharedIcMode.MICA) == 0.0


def test_dishin_equals_mica_on_trees():
    rng = np.random.default_rng(31)
    for trial in range(20):
        g = random_dag(rng, int(rng.integers(2, 12)), tree=True)
        compute_ic(g, IcMode.INTRINSIC)
        for a in range(g.num_terms):
            for b in range(g.num_terms):
                assert shared_ic(g, a, b, SharedIcMode.DISHIN) == pytest.approx(
                    shared_ic(g, a, b, SharedIcMode.MICA), abs=1e-12
                )


def test_dishin_diamond_hand_set_ics(diamond_graph):
    g = diamond_graph
    compute_ic(g, IcMode.INTRINSIC)
    g.ic = np.array([0.1, 0.7, 0.5, 1.3])  # A, B, C, D hand-set
    a, b, c, d = (g.index[x] for x in "ABCD")
    # (D, B): common {A, B}; paths A<-D=2 vs A<-B=1 (pd 1), B<-D=1 vs B<-B=1 (pd 0)
    assert shared_ic(g, d, b, SharedIcMode.DISHIN) == pytest.approx((0.1 + 0.7) / 2)
    # (B, C): common {A}; single group
    assert shared_ic(g, b, c, SharedIcMode.DISHIN) == pytest.approx(0.1)
    assert shared_ic(g, d, b, SharedIcMode.DISHIN) == pytest.approx(
        bf_dishin_shared_ic(g.parents, g.ic, d, b)
    )


def test_dishin_matches_bruteforce_on_random_dags():
    rng = np.random.default_rng(37)
    for trial in range(20):
        g = random_dag(rng, int(rng.integers(2, 12)), parent_prob=0.5)
        compute_ic(g, IcMode.INTRINSIC)
        for a in range(g.num_terms):
            for b in range(a, g.num_terms):
                assert shared_ic(g, a, b, SharedIcMode.DISHIN) == pytest.approx(
                    bf_dishin_shared_ic(g.parents, g.ic, a, b), abs=1e-12
                )


def test_multi_root_pairs_share_nothing():
    g = parse_obo(io.StringIO("[Term]\nid: X\n\n[Term]\nid: Y\n"))
    compute_ic(g, IcMode.INTRINSIC)
    assert shared_ic(g, "X", "Y", SharedIcMode.MICA) == 0.0
    assert shared_ic(g, "X", "Y", SharedIcMode.DISHIN) == 0.0
    assert similarity(g, "X", "Y", Metric.LIN) == 0.0


# ------------------------------------------------------------------- similarity metrics

def test_similarity_examples(toy_graph):
    g = compute_ic(toy_graph, IcMode.INTRINSIC)
    assert similarity(g, "A", "A", Metric.LIN, SharedIcMode.MICA) == 1.0
    assert similarity(g, "A1", "B", Metric.LIN, SharedIcMode.MICA) == 0.0
    assert similarity(g, "A", "A1", Metric.LIN, SharedIcMode.MICA) == pytest.approx(2 * 0.5 / 1.5)
    assert similarity(g, "A", "A1", Metric.RESNIK, SharedIcMode.MICA) == pytest.approx(0.5)
    # JC distance for (A, A1): 0.5 + 1 - 2*0.5 = 0.5 -> 1/1.5
    assert similarity(g, "A", "A1", Metric.JC, SharedIcMode.MICA) == pytest.approx(1 / 1.5)


def test_lin_zero_over_zero_defined_as_zero(toy_graph):
    g = compute_ic(toy_graph, IcMode.INTRINSIC)
    assert similarity(g, "R", "R", Metric.LIN) == 0.0


def test_similarity_properties_random_dags():
    rng = np.random.default_rng(41)
    for trial in range(25):
        g = random_dag(rng, int(rng.integers(2, 12)), parent_prob=0.5)
        compute_ic(g, IcMode.INTRINSIC)
        max_ic = float(g.ic.max())
        for metric in Metric:
            for mode in SharedIcMode:
                for a in range(g.num_terms):
                    for b in range(a, g.num_terms):
                        s_ab = similarity(g, a, b, metric, mode)
                        s_ba = similarity(g, b, a, metric, mode)
                        assert s_ab == pytest.approx(s_ba, abs=1e-15)
                        assert math.isfinite(s_ab)
                        if metric is Metric.RESNIK:
                            assert 0.0 <= s_ab <= max_ic + 1e-12
                        else:
                            assert 0.0 <= s_ab <= 1.0
                    ic_a = float(g.ic[a])
                    if ic_a > 0:
                        if metric is Metric.RESNIK:
                            assert similarity(g, a, a, metric, mode) == pytest.approx(ic_a)
                        else:
                            assert similarity(g, a, a, metric, mode) == pytest.approx(1.0)
