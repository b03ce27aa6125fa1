"""Independent brute-force oracles used to cross-check the package.

Everything here is written directly from the metric/algorithm definitions
with plain loops and no shared code with ontorec's implementations.
"""

import math

import numpy as np


# ---------------------------------------------------------------- ranking metrics

def bf_precision(ids, rel, k):
    hits = 0
    for item in ids[:k]:
        if item in rel:
            hits += 1
    return hits / k


def bf_recall(ids, rel, k):
    hits = 0
    for item in ids[:k]:
        if item in rel:
            hits += 1
    return hits / len(rel)


def bf_f_measure(ids, rel, k):
    p = bf_precision(ids, rel, k)
    r = bf_recall(ids, rel, k)
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def bf_mrr(ids, rel, k):
    for rank, item in enumerate(ids, start=1):
        if rank > k:
            break
        if item in rel:
            return 1.0 / rank
    return 0.0


def bf_ndcg(ids, rel, k):
    dcg = 0.0
    for rank, item in enumerate(ids, start=1):
        if rank > k:
            break
        if item in rel:
            dcg += 1.0 / math.log2(rank + 1)
    idcg = 0.0
    for rank in range(1, min(len(rel), k) + 1):
        idcg += 1.0 / math.log2(rank + 1)
    return 0.0 if idcg == 0 else dcg / idcg


def bf_lauc(ids, rel, k):
    """Pair counting with the truncation rule: a relevant item ranked past k
    falls below every item that holds a list position; two positionless items
    tie at 0.5."""
    pos = {}
    for rank, item in enumerate(ids, start=1):
        pos[item] = rank
    nonrel = [item for item in ids if item not in rel]
    correct = 0.0
    for r in rel:
        pr = pos.get(r)
        if pr is None or pr > k:
            pr = None  # demoted
        for n in nonrel:
            pn = pos.get(n)
            if pr is not None and (pn is None or pr < pn):
                correct += 1.0
            elif pr is None and pn is None:
                correct += 0.5
    return correct / (len(rel) * len(nonrel))


BF_METRICS = {
    "precision": bf_precision,
    "recall": bf_recall,
    "f_measure": bf_f_measure,
    "mrr": bf_mrr,
    "ndcg": bf_ndcg,
    "lauc": bf_lauc,
}


# ---------------------------------------------------------------- ontology

def bf_path_count(parents, ancestor, descendant):
    """Exhaustive DFS enumeration of upward is_a paths."""
    if ancestor == descendant:
        return 1
    total = 0
    for p in parents[descendant]:
        total += bf_path_count(parents, ancestor, p)
    return total


def bf_ancestors(parents, node):
    """Reflexive ancestor set by repeated parent expansion."""
    seen = {node}
    frontier = [node]
    while frontier:
        current = frontier.pop()
        for p in parents[current]:
            if p not in seen:
                seen.add(p)
                frontier.append(p)
    return seen


def bf_dishin_shared_ic(parents, ic, t1, t2):
    """Enumerate every common ancestor, group by path-count difference, keep
    each group's highest IC, average the representatives."""
    common = bf_ancestors(parents, t1) & bf_ancestors(parents, t2)
    if not common:
        return 0.0
    groups = {}
    for a in common:
        diff = abs(bf_path_count(parents, a, t1) - bf_path_count(parents, a, t2))
        groups.setdefault(diff, []).append(ic[a])
    return sum(max(vals) for vals in groups.values()) / len(groups)


# ---------------------------------------------------------------- ALS

def bf_dense_rating_matrix(ds):
    grid = np.zeros((ds.num_users, ds.num_items))
    for u, i, r in zip(ds.user_idx, ds.item_idx, ds.ratings):
        grid[u, i] = r
    return grid


def bf_als_objective(ds, user_factors, item_factors, alpha, lam):
    """Cell-by-cell weighted objective with confidence 1 + alpha*r."""
    grid = bf_dense_rating_matrix(ds)
    total = 0.0
    for u in range(ds.num_users):
        for i in range(ds.num_items):
            c = 1.0 + alpha * grid[u, i]
            p = 1.0 if grid[u, i] > 0 else 0.0
            err = p - float(user_factors[u] @ item_factors[i])
            total += c * err * err
    total += lam * (float(np.sum(user_factors ** 2)) + float(np.sum(item_factors ** 2)))
    return total


def bf_als_solve_rows(ds, other_factors, alpha, lam, side):
    """Row-by-row normal equations built from explicit dense confidence and
    preference matrices (no Gram shortcut).

    side='user' solves every user row given item factors; side='item' solves
    every item row given user factors.
    """
    grid = bf_dense_rating_matrix(ds)
    if side == "item":
        grid = grid.T
    num_rows = grid.shape[0]
    f = other_factors.shape[1]
    rows = np.zeros((num_rows, f))
    for r in range(num_rows):
        conf = np.diag(1.0 + alpha * grid[r])
        pref = (grid[r] > 0).astype(float)
        a = other_factors.T @ conf @ other_factors + lam * np.eye(f)
        b = other_factors.T @ conf @ pref
        rows[r] = np.linalg.solve(a, b)
    return rows


# ---------------------------------------------------------------- BPR

def bf_bpr_objective(user_vec, pos_vec, neg_vec, reg_user, reg_pos, reg_neg):
    margin = float(np.dot(user_vec, pos_vec) - np.dot(user_vec, neg_vec))
    return (
        math.log(1.0 / (1.0 + math.exp(-margin)))
        - 0.5 * reg_user * float(np.dot(user_vec, user_vec))
        - 0.5 * reg_pos * float(np.dot(pos_vec, pos_vec))
        - 0.5 * reg_neg * float(np.dot(neg_vec, neg_vec))
    )


def bf_central_differences(objective, vectors, h=1e-6):
    """Central finite-difference gradient of ``objective(*vectors)`` with
    respect to every coordinate of every vector."""
    grads = []
    for vi, vec in enumerate(vectors):
        grad = np.zeros_like(vec)
        for j in range(vec.size):
            bumped = [v.copy() for v in vectors]
            bumped[vi][j] += h
            up = objective(*bumped)
            bumped[vi][j] -= 2 * h
            down = objective(*bumped)
            grad[j] = (up - down) / (2 * h)
        grads.append(grad)
    return grads
