"""Graph algebra and feature-network construction.

Laplacian quadratic forms, cut values, connected components, and the
construction of feature-level networks from genomic positions, gene
intervals, and an optional gene-gene interaction network.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .datamodel import ParseError, SelectionSet, ValidationError, WeightedNetwork, _read_rows

__all__ = [
    "GenomicPositions",
    "GeneIntervals",
    "laplacian_quadratic",
    "cut_value",
    "build_feature_network",
    "connected_components",
    "load_positions",
    "load_gene_intervals",
]


@dataclass
class GenomicPositions:
    """Chromosome and base-pair position per feature.

    Features without a known position are simply absent from the map.
    """

    by_feature: dict[str, tuple[str, int]]

    def __init__(self, by_feature: Mapping[str, tuple[str, int]]):
        out = {}
        for fid, (chrom, pos) in by_feature.items():
            pos = int(pos)
            if pos < 0:
                raise ValidationError(f"negative position for feature {fid!r}")
            out[str(fid)] = (str(chrom), pos)
        self.by_feature = out


@dataclass
class GeneIntervals:
    """Chromosome and [start, end] base-pair interval per gene."""

    by_gene: dict[str, tuple[str, int, int]]

    def __init__(self, by_gene: Mapping[str, tuple[str, int, int]]):
        out = {}
        for gid, (chrom, start, end) in by_gene.items():
            start, end = int(start), int(end)
            if start > end:
                raise ValidationError(f"gene {gid!r} has start > end")
            out[str(gid)] = (str(chrom), start, end)
        self.by_gene = out


def load_positions(path) -> GenomicPositions:
    """Load ``positions.tsv``: lines ``feature_id<TAB>chrom<TAB>pos``."""
    rows = _read_rows(path)
    out: dict[str, tuple[str, int]] = {}
    for i, row in enumerate(rows, start=1):
        if len(row) != 3:
            raise ParseError(f"{path}: row {i}: expected 3 fields, found {len(row)}")
        fid, chrom, pos = row
        if fid in out:
            raise ParseError(f"{path}: row {i}: duplicate feature {fid!r}")
        try:
            out[fid] = (chrom, int(pos))
        except ValueError:
            raise ParseError(f"{path}: row {i}, column 3: non-integer position {pos!r}") from None
    return GenomicPositions(out)


def load_gene_intervals(path) -> GeneIntervals:
    """Load ``genes.tsv``: lines ``gene_id<TAB>chrom<TAB>start<TAB>end``."""
    rows = _read_rows(path)
    out: dict[str, tuple[str, int, int]] = {}
    for i, row in enumerate(rows, start=1):
        if len(row) != 4:
            raise ParseError(f"{path}: row {i}: expected 4 fields, found {len(row)}")
        gid, chrom, start, end = row
        if gid in out:
            raise ParseError(f"{path}: row {i}: duplicate gene {gid!r}")
        try:
            out[gid] = (chrom, int(start), int(end))
        except ValueError:
            raise ParseError(f"{path}: row {i}: non-integer interval bound") from None
    return GeneIntervals(out)


def laplacian_quadratic(beta, G: WeightedNetwork, ordered_pairs: bool = False) -> float:
    """Quadratic smoothness of ``beta`` over the network.

    Returns sum over unordered edges of w * (beta_u - beta_v)**2, which
    equals beta' (D - W) beta for the graph Laplacian.  With
    ``ordered_pairs=True`` the sum runs over ordered pairs instead and
    the value doubles; the unordered (matrix) form is canonical.
    """
    beta = np.asarray(beta, dtype=np.float64).ravel()
    if len(beta) != G.n_nodes:
        raise ValidationError(
            f"beta has length {len(beta)} but the network has {G.n_nodes} nodes"
        )
    d = beta[G.edge_u] - beta[G.edge_v]
    val = float(np.dot(G.edge_w, d * d))
    return 2.0 * val if ordered_pairs else val


def cut_value(S, G: WeightedNetwork) -> float:
    """Total weight of edges crossing the (S, complement) boundary."""
    if isinstance(S, SelectionSet):
        idx = S.selected
    else:
        idx = np.asarray(sorted(int(i) for i in S), dtype=np.int64)
    if len(idx) > 0 and (idx[0] < 0 or idx[-1] >= G.n_nodes):
        raise ValidationError("selection index out of range")
    mask = np.zeros(G.n_nodes, dtype=bool)
    mask[idx] = True
    crossing = mask[G.edge_u] != mask[G.edge_v]
    return float(G.edge_w[crossing].sum())


def _pair_set_add(pairs: set, a: int, b: int) -> None:
    if a != b:
        pairs.add((a, b) if a < b else (b, a))


def build_feature_network(
    feature_ids: Sequence[str],
    pos: GenomicPositions,
    genes: GeneIntervals,
    gene_net: WeightedNetwork | None = None,
    window: int = 10_000,
    mode: str = "gene",
) -> WeightedNetwork:
    """Construct a feature-level network from genomic annotation.

    A feature maps to a gene when its position lies within
    [start - window, end + window] (inclusive) on the same chromosome.
    mode=sequence links consecutive features along each chromosome;
    mode=gene additionally links all features mapped to the same gene;
    mode=interaction additionally links every feature of gene A with
    every feature of gene B for each gene-network edge (A, B).  All
    constructed edges get weight 1; duplicates collapse to one edge.
    """
    if mode not in ("sequence", "gene", "interaction"):
        raise ValidationError(f"unknown mode {mode!r}")
    if window < 0:
        raise ValidationError("window must be >= 0")
    if mode == "interaction" and gene_net is None:
        raise ValidationError("mode=interaction requires a gene network")
    if gene_net is not None:
        missing = [g for g in gene_net.node_ids if g not in genes.by_gene]
        if missing:
            raise ValidationError(
                f"gene network node(s) missing from gene intervals: {missing[:5]}"
            )

    feature_ids = list(feature_ids)
    index = {fid: i for i, fid in enumerate(feature_ids)}
    if len(index) != len(feature_ids):
        raise ValidationError("duplicate feature IDs")

    # per-chromosome feature lists sorted by position
    by_chrom: dict[str, list[tuple[int, int]]] = {}
    for fid, (chrom, p) in pos.by_feature.items():
        if fid in index:
            by_chrom.setdefault(chrom, []).append((p, index[fid]))
    for lst in by_chrom.values():
        lst.sort()

    pairs: set[tuple[int, int]] = set()
    for lst in by_chrom.values():
        for (_, a), (_, b) in zip(lst, lst[1:]):
            _pair_set_add(pairs, a, b)

    if mode in ("gene", "interaction"):
        members: dict[str, list[int]] = {}
        for gid, (chrom, start, end) in genes.by_gene.items():
            lst = by_chrom.get(chrom, [])
            if not lst:
                members[gid] = []
                continue
            ps = np.array([p for p, _ in lst])
            lo = int(np.searchsorted(ps, start - window, side="left"))
            hi = int(np.searchsorted(ps, end + window, side="right"))
            members[gid] = [lst[k][1] for k in range(lo, hi)]
        for mem in members.values():
            for i in range(len(mem)):
                for j in range(i + 1, len(mem)):
                    _pair_set_add(pairs, mem[i], mem[j])
        if mode == "interaction":
            assert gene_net is not None
            for u, v in zip(gene_net.edge_u, gene_net.edge_v):
                for a in members.get(gene_net.node_ids[u], []):
                    for b in members.get(gene_net.node_ids[v], []):
                        _pair_set_add(pairs, a, b)

    ordered = sorted(pairs)
    eu = np.array([a for a, _ in ordered], dtype=np.int64)
    ev = np.array([b for _, b in ordered], dtype=np.int64)
    ew = np.ones(len(ordered))
    return WeightedNetwork(feature_ids, (eu, ev, ew))


def connected_components(G: WeightedNetwork) -> list[list[int]]:
    """Connected components as sorted index lists, ordered by their
    smallest contained index."""
    indptr, indices, _ = G.adjacency_csr()
    seen = np.zeros(G.n_nodes, dtype=bool)
    comps = []
    for start in range(G.n_nodes):
        if seen[start]:
            continue
        comp = [start]
        seen[start] = True
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in indices[indptr[u]:indptr[u + 1]]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(int(v))
                    queue.append(int(v))
        comps.append(sorted(comp))
    return comps
