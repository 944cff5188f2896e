"""Exact graph-cut feature selection.

Selects the feature set S maximizing

    sum_{p in S} c_p  -  eta |S|  -  lambda * cut(S)

where cut(S) is the weight of network edges leaving S.  The maximizer
is found exactly through an s/t min-cut: each feature gets a terminal
arc of capacity |c_p - eta| toward s (if c_p > eta) or t (if c_p <
eta), each network edge becomes an internal arc of capacity
lambda * w in both directions, and the source side of the minimum cut
is the optimal selection.  Among all minimum cuts the minimal source
side is returned, i.e. the sparsest optimal selection.

The multi-task variant couples per-task copies of each feature with
arcs of capacity mu, which charges mu for every feature selected in
exactly one task of a pair — the symmetric-difference penalty — and
keeps the problem a single exact min-cut.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._maxflow import solve_st_mincut
from .datamodel import SelectionSet, ValidationError, WeightedNetwork
from .netgraph import cut_value
from .relevance import RelevanceVector

__all__ = [
    "SconesParams",
    "STGraph",
    "build_st_graph",
    "max_flow_min_cut",
    "scones_select",
    "multi_scones_select",
    "multi_scones_objective",
]


@dataclass(frozen=True)
class SconesParams:
    """Prices: eta per selected feature, lam per unit of cut weight,
    mu per unit of cross-task disagreement (multi-task only)."""

    eta: float
    lam: float
    mu: float = 0.0

    def __post_init__(self):
        for name in ("eta", "lam", "mu"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValidationError(f"{name} must be finite and >= 0")

    def as_dict(self, include_mu: bool = False) -> dict[str, float]:
        d = {"eta": float(self.eta), "lambda": float(self.lam)}
        if include_mu:
            d["mu"] = float(self.mu)
        return d


@dataclass
class STGraph:
    """s/t network over n feature nodes plus implicit terminals.

    tr_cap[p] > 0 is the capacity of arc s->p, tr_cap[p] < 0 the
    capacity of p->t (so a node never has both terminal arcs); each
    internal edge carries its capacity in both directions.
    """

    n: int
    tr_cap: np.ndarray
    edge_u: np.ndarray
    edge_v: np.ndarray
    edge_cap: np.ndarray

    def __post_init__(self):
        self.tr_cap = np.asarray(self.tr_cap, dtype=np.float64)
        self.edge_u = np.asarray(self.edge_u, dtype=np.int64)
        self.edge_v = np.asarray(self.edge_v, dtype=np.int64)
        self.edge_cap = np.asarray(self.edge_cap, dtype=np.float64)
        if len(self.tr_cap) != self.n:
            raise ValidationError("terminal capacity length mismatch")
        if not np.all(np.isfinite(self.tr_cap)):
            raise ValidationError("terminal capacities must be finite")
        if not (len(self.edge_u) == len(self.edge_v) == len(self.edge_cap)):
            raise ValidationError("edge arrays must have equal length")
        if len(self.edge_u) and (
            min(self.edge_u.min(), self.edge_v.min()) < 0
            or max(self.edge_u.max(), self.edge_v.max()) >= self.n
        ):
            raise ValidationError("edge endpoint out of range")
        if np.any(~np.isfinite(self.edge_cap)) or np.any(self.edge_cap < 0):
            raise ValidationError("edge capacities must be finite and >= 0")


def _scores(c) -> np.ndarray:
    if isinstance(c, RelevanceVector):
        return c.scores
    arr = np.asarray(c, dtype=np.float64).ravel()
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValidationError("relevance scores must be finite and >= 0")
    return arr


def build_st_graph(c, params: SconesParams, G: WeightedNetwork) -> STGraph:
    """Translate relevance scores, prices, and a network into an s/t graph."""
    scores = _scores(c)
    if len(scores) != G.n_nodes:
        raise ValidationError("relevance length does not match network size")
    tr_cap = scores - params.eta
    cap = params.lam * G.edge_w
    keep = cap > 0
    return STGraph(
        n=G.n_nodes,
        tr_cap=tr_cap,
        edge_u=G.edge_u[keep],
        edge_v=G.edge_v[keep],
        edge_cap=cap[keep],
    )


def max_flow_min_cut(g: STGraph, eps: float = 1e-12) -> tuple[float, np.ndarray]:
    """Maximum s->t flow and the minimal min-cut source side (sorted
    node indices)."""
    flow, mask = solve_st_mincut(g.n, g.tr_cap, g.edge_u, g.edge_v, g.edge_cap, eps)
    return flow, np.flatnonzero(mask)


def _objective(selected: np.ndarray, scores: np.ndarray, params: SconesParams,
               G: WeightedNetwork) -> float:
    return (
        float(scores[selected].sum())
        - params.eta * len(selected)
        - params.lam * cut_value(selected, G)
    )


def scones_select(c, params: SconesParams, G: WeightedNetwork) -> SelectionSet:
    """Exact maximizer of relevance minus sparsity and connectivity prices.

    The stored objective is recomputed from its definition; the solver
    additionally checks the max-flow duality identity
    sum_p max(c_p - eta, 0) - flow = objective as a guard against
    capacity bookkeeping bugs.
    """
    scores = _scores(c)
    g = build_st_graph(scores, params, G)
    flow, selected = max_flow_min_cut(g)
    obj = _objective(selected, scores, params, G)
    total_pos = float(np.maximum(scores - params.eta, 0.0).sum())
    if abs(total_pos - flow - obj) > 1e-9 * max(1.0, total_pos):
        raise RuntimeError(
            f"min-cut duality identity violated: {total_pos} - {flow} != {obj}"
        )
    return SelectionSet(selected, obj, params.as_dict(), m=G.n_nodes)


def _selection_indices(sel) -> np.ndarray:
    if isinstance(sel, SelectionSet):
        return sel.selected
    return np.asarray(sorted(int(i) for i in sel), dtype=np.int64)


def multi_scones_objective(
    selections: Sequence,
    c_tasks: Sequence,
    params: SconesParams,
    G_tasks: Sequence[WeightedNetwork],
) -> float:
    """Value of the coupled multi-task objective for given selections:
    per-task terms minus mu times the pairwise symmetric differences."""
    T = len(selections)
    if not (len(c_tasks) == len(G_tasks) == T):
        raise ValidationError("task list lengths disagree")
    total = 0.0
    sets = []
    for sel, c, G in zip(selections, c_tasks, G_tasks):
        idx = _selection_indices(sel)
        total += _objective(idx, _scores(c), params, G)
        sets.append(set(int(i) for i in idx))
    for u in range(T):
        for v in range(u + 1, T):
            total -= params.mu * len(sets[u] ^ sets[v])
    return total


def multi_scones_select(
    c_tasks: Sequence,
    params: SconesParams,
    G_tasks: Sequence[WeightedNetwork],
) -> list[SelectionSet]:
    """Exact coupled selection across T tasks over the same m features.

    One min-cut on an augmented graph: per-task nodes (p, t) carry the
    usual terminal and internal arcs; each feature's copies are linked
    across every task pair with capacity mu.  Each returned
    SelectionSet stores its task's own objective term; the coupled
    total is available via multi_scones_objective.
    """
    T = len(c_tasks)
    if T < 1:
        raise ValidationError("need at least one task")
    if len(G_tasks) != T:
        raise ValidationError("one network per task required")
    score_list = [_scores(c) for c in c_tasks]
    m = len(score_list[0])
    for t, (sc, G) in enumerate(zip(score_list, G_tasks)):
        if len(sc) != m:
            raise ValidationError(f"task {t} has {len(sc)} features, expected {m}")
        if G.n_nodes != m:
            raise ValidationError(f"task {t} network has {G.n_nodes} nodes, expected {m}")

    tr_cap = np.concatenate([sc - params.eta for sc in score_list])
    eu_parts, ev_parts, cap_parts = [], [], []
    for t, G in enumerate(G_tasks):
        cap = params.lam * G.edge_w
        keep = cap > 0
        eu_parts.append(G.edge_u[keep] + t * m)
        ev_parts.append(G.edge_v[keep] + t * m)
        cap_parts.append(cap[keep])
    if params.mu > 0:
        base = np.arange(m, dtype=np.int64)
        for u in range(T):
            for v in range(u + 1, T):
                eu_parts.append(base + u * m)
                ev_parts.append(base + v * m)
                cap_parts.append(np.full(m, params.mu))
    eu = np.concatenate(eu_parts) if eu_parts else np.empty(0, dtype=np.int64)
    ev = np.concatenate(ev_parts) if ev_parts else np.empty(0, dtype=np.int64)
    ec = np.concatenate(cap_parts) if cap_parts else np.empty(0)

    flow, mask = solve_st_mincut(T * m, tr_cap, eu, ev, ec)

    out = []
    for t in range(T):
        sel = np.flatnonzero(mask[t * m : (t + 1) * m])
        obj = _objective(sel, score_list[t], params, G_tasks[t])
        out.append(SelectionSet(sel, obj, params.as_dict(include_mu=True), m=m))

    total = multi_scones_objective(out, score_list, params, G_tasks)
    total_pos = float(np.maximum(tr_cap, 0.0).sum())
    if abs(total_pos - flow - total) > 1e-9 * max(1.0, total_pos):
        raise RuntimeError(
            f"min-cut duality identity violated: {total_pos} - {flow} != {total}"
        )
    return out
