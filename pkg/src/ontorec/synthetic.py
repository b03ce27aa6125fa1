"""Seeded synthetic benchmark data: a branch-structured ontology plus users
whose co-consumption follows the branches, so ontology similarity correlates
with collaborative signal. Used by the acceptance suite and handy for demos.
"""

from __future__ import annotations

import numpy as np

ROOT_ACC = "SYN:R000"


def branch_acc(branch: int) -> str:
    return f"SYN:B{branch:03d}"


def item_acc(index: int) -> str:
    return f"SYN:I{index:04d}"


def branch_ontology_obo(num_branches: int = 6, items_per_branch: int = 10) -> str:
    """OBO text for a two-level tree: root -> branches -> leaf items.

    Leaves within a branch share the branch ancestor (moderate IC), leaves in
    different branches share only the root (zero intrinsic IC), which gives
    the block similarity structure the generator's users follow.
    """
    chunks = ["format-version: 1.2", ""]
    chunks += ["[Term]", f"id: {ROOT_ACC}", "name: synthetic root", ""]
    for b in range(num_branches):
        chunks += ["[Term]", f"id: {branch_acc(b)}", f"name: branch {b}", f"is_a: {ROOT_ACC}", ""]
    for b in range(num_branches):
        for i in range(items_per_branch):
            idx = b * items_per_branch + i
            chunks += [
                "[Term]",
                f"id: {item_acc(idx)}",
                f"name: item {idx}",
                f"is_a: {branch_acc(b)}",
                "",
            ]
    return "\n".join(chunks)


def branch_ratings_csv(
    num_branches: int = 6,
    items_per_branch: int = 10,
    num_users: int = 300,
    seed: int = 0,
    min_items: int = 3,
    max_items: int = 7,
    min_stars: int = 1,
    max_stars: int = 3,
    noise_prob: float = 0.2,
) -> str:
    """Rating triples where each user mostly consumes one branch, plus a few
    globally popular "star" items from other branches.

    Within a branch, items are picked with a popularity skew that is permuted
    per branch, so popularity does not correlate with item index or with
    anything the ontology encodes. Each branch's most popular item is a star
    that users from other branches also rate; that cross-branch co-consumption
    is visible to collaborative filtering but looks semantically distant to a
    profile concentrated in one branch.
    """
    rng = np.random.default_rng(seed)
    num_items = num_branches * items_per_branch
    base = 1.0 / (np.arange(items_per_branch) + 1.0)
    base /= base.sum()
    branch_weights = [base[rng.permutation(items_per_branch)] for _ in range(num_branches)]
    star_of = [b * items_per_branch + int(np.argmax(branch_weights[b]))
               for b in range(num_branches)]

    lines = []
    for u in range(num_users):
        branch = int(rng.integers(num_branches))
        n_own = int(rng.integers(min_items, max_items + 1))
        picks = rng.choice(items_per_branch, size=min(n_own, items_per_branch),
                           replace=False, p=branch_weights[branch])
        items = {branch * items_per_branch + int(p) for p in picks}
        n_stars = int(rng.integers(min_stars, max_stars + 1))
        others = [b for b in range(num_branches) if b != branch]
        for b in rng.choice(others, size=min(n_stars, len(others)), replace=False):
            items.add(star_of[int(b)])
        if rng.random() < noise_prob:
            items.add(int(rng.integers(num_items)))
        for item in sorted(items):
            rating = 1 + int(rng.poisson(0.6))
            lines.append(f"u{u:04d},{item_acc(item)},{rating}")
    return "\n".join(lines) + "\n"
