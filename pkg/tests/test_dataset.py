import numpy as np
import pytest

from conftest import interactions, random_interactions
from ontorec.dataset import (
    IngestConfig,
    dataset_stats,
    format_stats,
    load_interactions,
    make_folds,
)
from ontorec.errors import ConfigError, IngestError, ValidationError


def test_basic_ingest_assigns_dense_ids_first_seen():
    ds = interactions(["bob,t2,1", "alice,t1,2", "bob,t1,3"])
    assert ds.users == ("bob", "alice")
    assert ds.items == ("t2", "t1")
    assert ds.num_ratings == 3
    records = {(r.user, r.item): r.rating for r in ds.records()}
    assert records == {("bob", "t2"): 1, ("alice", "t1"): 2, ("bob", "t1"): 3}


def test_duplicates_merge_by_sum():
    ds = interactions(["u1,t1,2", "u1,t1,3"])
    assert ds.num_ratings == 1
    assert list(ds.records())[0].rating == 5


def test_merge_is_order_independent():
    lines = ["u1,t1,2", "u2,t1,1", "u1,t1,3", "u1,t2,4", "u1,t1,1"]
    rng = np.random.default_rng(42)
    want = None
    for _ in range(10):
        shuffled = [lines[i] for i in rng.permutation(len(lines))]
        ds = interactions(shuffled)
        got = {(r.user, r.item): r.rating for r in ds.records()}
        if want is None:
            want = got
        assert got == want


def test_zero_rating_rejected():
    with pytest.raises(ValidationError, match="line 1"):
        interactions(["u1,t1,0"])


def test_negative_rating_rejected():
    with pytest.raises(ValidationError):
        interactions(["u1,t1,-2"])


def test_malformed_lines_name_line_number():
    with pytest.raises(IngestError, match="line 2"):
        interactions(["u1,t1,1", "u2,t2"])
    with pytest.raises(IngestError, match="line 2.*integer"):
        interactions(["u1,t1,1", "u2,t2,x"])


def test_empty_source_rejected():
    with pytest.raises(ValidationError):
        interactions([])
    with pytest.raises(ValidationError):
        interactions(["user,item,rating"])  # header only


def test_header_autodetected():
    ds = interactions(["user,item,rating", "u1,t1,2"])
    assert ds.num_ratings == 1
    assert ds.users == ("u1",)


def test_custom_delimiter():
    ds = load_interactions(iter(["u1\tt1\t2"]), IngestConfig(delimiter="\t"))
    assert ds.num_ratings == 1


def test_stats_values():
    # exactly a 10x10 universe with 25 unique pairs
    lines = []
    pairs = set()
    rng = np.random.default_rng(1)
    for u in range(10):
        pairs.add((u, u))
    for i in range(10):
        pairs.add((0, i))
    while len(pairs) < 25:
        pairs.add((int(rng.integers(10)), int(rng.integers(10))))
    for u, i in sorted(pairs):
        lines.append(f"u{u},i{i},2")
    ds = interactions(lines)
    stats = dataset_stats(ds)
    assert (stats.num_users, stats.num_items, stats.num_ratings) == (10, 10, 25)
    assert stats.sparsity == 0.75
    assert stats.rating_histogram == {2: 25}


def test_stats_fully_dense():
    stats = dataset_stats(interactions(["u,i,1"]))
    assert stats.sparsity == 0.0
    assert "100" not in format_stats(stats)  # renders 0%


def test_sparsity_matches_dense_grid_count():
    rng = np.random.default_rng(3)
    for _ in range(5):
        ds = random_interactions(rng, int(rng.integers(3, 12)), int(rng.integers(3, 12)))
        grid = np.zeros((ds.num_users, ds.num_items), dtype=bool)
        grid[ds.user_idx, ds.item_idx] = True
        zeros = int((~grid).sum())
        occupied = ds.num_users * ds.num_items - zeros
        assert occupied == ds.num_ratings
        assert ds.sparsity == 1.0 - occupied / (ds.num_users * ds.num_items)


def test_fold_sizes_balanced_like_paper_dims():
    rng = np.random.default_rng(0)
    lines = [f"u{u},i{u % 102},1" for u in range(1184)]
    lines += [f"u{rng.integers(1184)},i{i},1" for i in range(102)]
    ds = interactions(lines)
    folds = make_folds(ds, 5, seed=11)
    sizes = sorted(len(f.test_users) for f in folds)
    assert sizes == [236, 237, 237, 237, 237]
    item_sizes = sorted(len(f.test_items) for f in folds)
    assert item_sizes == [20, 20, 20, 21, 21]


def test_make_folds_validation():
    ds = interactions(["u1,t1,1", "u2,t2,1", "u3,t3,1"])
    with pytest.raises(ConfigError):
        make_folds(ds, 1, seed=0)
    with pytest.raises(ConfigError):
        make_folds(ds, 4, seed=0)


def test_folds_deterministic_for_seed():
    rng = np.random.default_rng(5)
    ds = random_interactions(rng, 12, 9)
    a = make_folds(ds, 3, seed=7)
    b = make_folds(ds, 3, seed=7)
    for fa, fb in zip(a, b):
        assert fa.test_users == fb.test_users
        assert fa.test_items == fb.test_items
        assert np.array_equal(fa.train.user_idx, fb.train.user_idx)
    c = make_folds(ds, 3, seed=8)
    assert any(fa.test_users != fc.test_users for fa, fc in zip(a, c))


def test_fold_partition_and_coverage_properties():
    rng = np.random.default_rng(9)
    for trial in range(5):
        ds = random_interactions(rng, int(rng.integers(6, 20)), int(rng.integers(5, 15)))
        num_folds = int(rng.integers(2, 6))
        folds = make_folds(ds, num_folds, seed=trial)

        def pair_set(sub):
            return set(zip(sub.user_idx.tolist(), sub.item_idx.tolist()))

        all_pairs = pair_set(ds)
        seen_users, seen_items = [], []
        for fold in folds:
            train, test = pair_set(fold.train), pair_set(fold.test)
            assert train | test == all_pairs
            assert train & test == set()
            # test block is exactly test_users x test_items
            for u, t in test:
                assert u in fold.test_users and t in fold.test_items
            for u, t in train:
                assert not (u in fold.test_users and t in fold.test_items)
            seen_users.extend(fold.test_users)
            seen_items.extend(fold.test_items)
        assert sorted(seen_users) == list(range(ds.num_users))
        assert sorted(seen_items) == list(range(ds.num_items))


def test_subset_shares_id_universe():
    ds = interactions(["u1,t1,1", "u2,t2,1"])
    sub = ds.subset(np.array([True, False]))
    assert sub.users == ds.users and sub.items == ds.items
    assert sub.num_ratings == 1
    assert sub.num_users == 2
