import io

import numpy as np
import pytest

from ontorec.dataset import load_interactions
from ontorec.ontology import OntologyGraph, parse_obo

TOY_OBO = """format-version: 1.2

[Term]
id: R
name: root

[Term]
id: A
name: mid a
is_a: R

[Term]
id: B
name: leaf b
is_a: R

[Term]
id: A1
name: leaf a1
is_a: A
"""

DIAMOND_OBO = """[Term]
id: A

[Term]
id: B
is_a: A

[Term]
id: C
is_a: A

[Term]
id: D
is_a: B
is_a: C
"""


@pytest.fixture
def toy_graph():
    return parse_obo(io.StringIO(TOY_OBO))


@pytest.fixture
def diamond_graph():
    return parse_obo(io.StringIO(DIAMOND_OBO))


def interactions(lines):
    return load_interactions(iter(lines))


def random_interactions(rng, num_users, num_items, density=0.4, max_rating=5):
    """Random InteractionSet where every user and item occurs at least once."""
    lines = []
    for u in range(num_users):
        lines.append(f"u{u},i{u % num_items},{rng.integers(1, max_rating + 1)}")
    for i in range(num_items):
        lines.append(f"u{rng.integers(num_users)},i{i},{rng.integers(1, max_rating + 1)}")
    for u in range(num_users):
        for i in range(num_items):
            if rng.random() < density:
                lines.append(f"u{u},i{i},{rng.integers(1, max_rating + 1)}")
    return interactions(lines)


def random_dag(rng, num_nodes, parent_prob=0.4, tree=False):
    """Random DAG (node i may only point at nodes < i, so it is acyclic)."""
    parents = [[]]
    for i in range(1, num_nodes):
        if tree:
            parents.append([int(rng.integers(i))])
        else:
            ps = [j for j in range(i) if rng.random() < parent_prob]
            parents.append(ps)
    accessions = [f"T{i:03d}" for i in range(num_nodes)]
    return OntologyGraph(accessions, [None] * num_nodes, parents)
