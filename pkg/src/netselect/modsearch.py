"""Greedy search for high-scoring connected gene modules.

Every network node is tried as a seed.  A module grows one gene at a
time: candidates are direct neighbors of the current module that lie
within max_depth network hops of the seed, and the best candidate is
admitted only while it improves the module score by the relative
margin r.  The aggregate score of k genes is sum(z) / sqrt(k), which
is mean-zero and unit-variance for independent standard-normal z, so
scores are comparable across module sizes.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .datamodel import ValidationError, WeightedNetwork
from .relevance import GeneScores

__all__ = ["Module", "module_score", "greedy_module_search"]


@dataclass(frozen=True)
class Module:
    """A connected gene set with its aggregate score and the seed it
    grew from."""

    genes: tuple[int, ...]
    gene_ids: tuple[str, ...]
    score: float
    seed: int

    def __len__(self) -> int:
        return len(self.genes)


def module_score(z) -> float:
    """sum(z) / sqrt(k) for a nonempty vector of gene z-scores."""
    arr = np.asarray(z, dtype=np.float64).ravel()
    if len(arr) == 0:
        raise ValidationError("module must contain at least one gene")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("z-scores must be finite")
    return float(arr.sum() / math.sqrt(len(arr)))


def _bfs_within(G: WeightedNetwork, seed: int, max_depth: int) -> set[int]:
    indptr, indices, _ = G.adjacency_csr()
    seen = {seed}
    frontier = deque([(seed, 0)])
    while frontier:
        node, d = frontier.popleft()
        if d == max_depth:
            continue
        for nb in indices[indptr[node] : indptr[node + 1]]:
            nb = int(nb)
            if nb not in seen:
                seen.add(nb)
                frontier.append((nb, d + 1))
    return seen


def greedy_module_search(
    scores: GeneScores,
    G: WeightedNetwork,
    r: float = 0.1,
    max_depth: int = 2,
) -> list[Module]:
    """Grow one module per seed node and return the deduplicated list,
    best score first.

    Growth accepts the highest-scoring neighbor (smallest index on
    ties) as long as the new score beats the old one by a factor of
    1 + r; modules whose current score is not positive only need a
    strict improvement.  Every network node must have a z-score.
    """
    if not np.isfinite(r) or r < 0:
        raise ValidationError("r must be finite and >= 0")
    if max_depth < 1:
        raise ValidationError("max_depth must be >= 1")
    z_by_id = scores.z_by_gene()
    missing = [gid for gid in G.node_ids if gid not in z_by_id]
    if missing:
        raise ValidationError(
            f"no z-score for network gene(s): {', '.join(missing[:5])}"
        )
    z = np.array([z_by_id[gid] for gid in G.node_ids])
    indptr, indices, _ = G.adjacency_csr()

    seen_sets: dict[frozenset, Module] = {}
    for seed in range(G.n_nodes):
        allowed = _bfs_within(G, seed, max_depth)
        members = [seed]
        member_set = {seed}
        total = z[seed]
        score = total
        cand = {
            int(nb)
            for nb in indices[indptr[seed] : indptr[seed + 1]]
            if int(nb) in allowed
        }
        while cand:
            best_g = -1
            best_score = -np.inf
            for g in sorted(cand):
                s = (total + z[g]) / math.sqrt(len(members) + 1)
                if s > best_score:
                    best_score = s
                    best_g = g
            if score > 0:
                ok = best_score > score * (1.0 + r)
            else:
                ok = best_score > score
            if not ok:
                break
            members.append(best_g)
            member_set.add(best_g)
            total += z[best_g]
            score = best_score
            cand.discard(best_g)
            for nb in indices[indptr[best_g] : indptr[best_g + 1]]:
                nb = int(nb)
                if nb in allowed and nb not in member_set:
                    cand.add(nb)
        key = frozenset(member_set)
        if key not in seen_sets:
            idx = tuple(sorted(members))
            seen_sets[key] = Module(
                genes=idx,
                gene_ids=tuple(G.node_ids[i] for i in idx),
                score=float(score),
                seed=seed,
            )

    out = list(seen_sets.values())
    out.sort(key=lambda mod: (-mod.score, mod.genes))
    return out
