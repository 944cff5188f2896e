import itertools
import math

import numpy as np
import pytest
from scipy import special

from netselect import (
    GeneScores,
    ValidationError,
    WeightedNetwork,
    greedy_module_search,
    module_score,
)


def scores_from_z(ids, z):
    # build GeneScores through the p-value side so the stored z match
    p = np.clip(special.ndtr(-np.asarray(z, dtype=np.float64)), 1e-300, 1.0)
    return GeneScores(ids, p)


def test_module_score_single():
    assert module_score([2.3]) == pytest.approx(2.3, abs=1e-12)


def test_module_score_four_equal():
    assert module_score([1.0, 1.0, 1.0, 1.0]) == pytest.approx(2.0, abs=1e-12)


def test_module_score_mixed_frozen():
    # (3 - 1) / sqrt(2)
    assert module_score([3.0, -1.0]) == pytest.approx(1.4142135623730951, abs=1e-12)


def test_module_score_rejects_empty():
    with pytest.raises(ValidationError):
        module_score([])


def test_star_keeps_center_alone():
    # center z=3, five leaves z=0.1: best growth gives 3.1/sqrt(2)
    # ~ 2.19, below the 3 * 1.1 improvement bar
    ids = ["c", "l1", "l2", "l3", "l4", "l5"]
    gs = scores_from_z(ids, [3.0, 0.1, 0.1, 0.1, 0.1, 0.1])
    G = WeightedNetwork(ids, [(0, k, 1.0) for k in range(1, 6)])
    mods = greedy_module_search(gs, G, r=0.1)
    assert mods[0].gene_ids == ("c",)
    assert mods[0].score == pytest.approx(3.0, abs=1e-6)


def test_huge_r_gives_only_singletons():
    # with every score positive, no growth clears the (1 + r) bar
    rng = np.random.default_rng(4)
    n = 12
    ids = [f"g{i}" for i in range(n)]
    edges = [(i, j, 1.0) for i in range(n) for j in range(i + 1, n)
             if rng.random() < 0.3]
    gs = scores_from_z(ids, np.abs(rng.normal(size=n)) + 0.1)
    mods = greedy_module_search(gs, WeightedNetwork(ids, edges), r=1e9)
    assert all(len(m) == 1 for m in mods)


def test_nonpositive_score_needs_only_strict_improvement():
    # from a negative singleton the multiplicative bar is meaningless;
    # any strictly better score is accepted
    ids = ["a", "b"]
    gs = scores_from_z(ids, [-2.0, 1.0])
    G = WeightedNetwork(ids, [(0, 1, 1.0)])
    mods = greedy_module_search(gs, G, r=1e9)
    by_seed = {m.seed: m for m in mods}
    assert set(by_seed[0].gene_ids) == {"a", "b"}  # (-2+1)/sqrt(2) > -2


def _connected(nodes, adj):
    nodes = set(nodes)
    stack = [next(iter(nodes))]
    seen = {stack[0]}
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v in nodes and v not in seen:
                seen.add(v)
                stack.append(v)
    return seen == nodes


def _planted_clique_instance(seed):
    rng = np.random.default_rng(seed)
    n = 30
    ids = [f"g{i}" for i in range(n)]
    clique = [0, 1, 2, 3]
    edges = {(i, j) for i, j in itertools.combinations(clique, 2)}
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in edges and rng.random() < 0.1:
                edges.add((i, j))
    z = rng.normal(size=n)
    z[clique] = 4.0
    G = WeightedNetwork(ids, [(i, j, 1.0) for i, j in sorted(edges)])
    return ids, z, G, clique


def test_planted_clique_is_global_max_and_found():
    # oracle: exhaustive sweep of every connected node set of size <= 5
    # (seed chosen so no background draw outscores the clique)
    ids, z, G, clique = _planted_clique_instance(102)
    adj = {i: set() for i in range(G.n_nodes)}
    for u, v, _ in G.edges:
        adj[u].add(v)
        adj[v].add(u)
    best_set, best_score = None, -math.inf
    for k in range(1, 6):
        for comb in itertools.combinations(range(G.n_nodes), k):
            if k > 1 and not _connected(comb, adj):
                continue
            s = float(z[list(comb)].sum()) / math.sqrt(k)
            if s > best_score:
                best_set, best_score = set(comb), s
    assert best_set == set(clique)

    gs = scores_from_z(ids, z)
    mods = greedy_module_search(gs, G, r=0.1)
    assert set(mods[0].gene_ids) == {ids[i] for i in clique}
    assert mods[0].score == pytest.approx(best_score, abs=1e-6)


def test_modules_deduplicated_and_sorted():
    rng = np.random.default_rng(8)
    n = 15
    ids = [f"g{i}" for i in range(n)]
    edges = [(i, j, 1.0) for i in range(n) for j in range(i + 1, n)
             if rng.random() < 0.25]
    gs = scores_from_z(ids, rng.normal(size=n))
    mods = greedy_module_search(gs, WeightedNetwork(ids, edges), r=0.1)
    sets = [frozenset(m.gene_ids) for m in mods]
    assert len(sets) == len(set(sets))
    scores = [m.score for m in mods]
    assert scores == sorted(scores, reverse=True)


def test_module_search_grows_within_depth():
    # chain g0-g1-g2-g3 with a hot pair at the far end: from seed g0
    # only nodes within 2 hops are reachable, so g3 stays out
    ids = ["g0", "g1", "g2", "g3"]
    gs = scores_from_z(ids, [2.0, 2.0, 2.0, 2.0])
    G = WeightedNetwork(ids, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)])
    mods = greedy_module_search(gs, G, r=0.0, max_depth=1)
    by_seed = {m.seed: m for m in mods}
    # growth candidates for seed 0 limited to its 1-hop ball {g0,g1}
    m0 = by_seed[0]
    assert set(m0.gene_ids) <= {"g0", "g1"}


def test_missing_score_for_network_gene_errors():
    gs = scores_from_z(["a"], [1.0])
    G = WeightedNetwork(["a", "b"], [(0, 1, 1.0)])
    with pytest.raises(ValidationError, match="b"):
        greedy_module_search(gs, G)


def test_negative_r_rejected():
    gs = scores_from_z(["a"], [1.0])
    G = WeightedNetwork(["a"], [])
    with pytest.raises(ValidationError):
        greedy_module_search(gs, G, r=-0.5)
