"""Model selection: cross-validated grid search over selection
hyperparameters, scored by stability across folds and held-out
predictivity, plus seeded synthetic benchmarks with a planted module.

Stability is the mean pairwise Jaccard overlap of the per-fold
selections (Kuncheva's corrected index is additionally reported when
all folds select the same number of features).  Predictivity is the
held-out R^2 of a small-ridge refit on the selected features.  Grid
points whose mean selection is empty or the full feature set are
excluded from the choice; the rule is recorded on the result so it
can be audited.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .datamodel import (
    CoefficientVector,
    FeatureMatrix,
    Phenotype,
    SelectionSet,
    ValidationError,
    WeightedNetwork,
)
from .netgraph import connected_components
from .relevance import skat_linear_score
from .scones import SconesParams, multi_scones_select, scones_select
from . import netreg

logger = logging.getLogger(__name__)

__all__ = [
    "GridSpec",
    "GridPointResult",
    "CvResult",
    "kuncheva_index",
    "stability_across_folds",
    "cv_grid_search",
    "default_grid",
    "generate_synthetic",
]

SINGLE_TASK_METHODS = ("scones", "lasso", "grace", "gfl", "ogl", "gggl")
MULTI_TASK_METHODS = ("multi-scones", "mtlasso")
CRITERIA = ("stability", "predictivity", "product")

# coefficients this close to zero count as unselected when a dense
# solver (ADMM) is used for selection
SELECT_EPS = 1e-6

ADMISSIBILITY_RULE = (
    "grid points are excluded when the mean fold-selection size is 0 "
    "or the full feature count"
)


def _parse_axis(token) -> np.ndarray:
    """Accept a list of values or a 'log:low:high:count' descriptor."""
    if isinstance(token, str):
        if token.startswith("log:"):
            parts = token.split(":")
            if len(parts) != 4:
                raise ValidationError(
                    f"bad grid descriptor {token!r}; want log:low:high:count"
                )
            lo, hi = float(parts[1]), float(parts[2])
            count = int(parts[3])
            if not (0 < lo <= hi) or count < 1:
                raise ValidationError(f"bad grid range in {token!r}")
            vals = np.geomspace(lo, hi, count)
        else:
            vals = np.array([float(v) for v in token.split(",")])
    else:
        vals = np.asarray(list(token), dtype=np.float64)
    if len(vals) == 0:
        raise ValidationError("grid axis is empty")
    if np.any(~np.isfinite(vals)) or np.any(vals < 0):
        raise ValidationError("grid values must be finite and >= 0")
    return np.sort(vals)


class GridSpec:
    """Named hyperparameter axes; the grid is their Cartesian product,
    enumerated with axes in sorted name order and values ascending."""

    def __init__(self, axes: dict):
        if not axes:
            raise ValidationError("grid needs at least one axis")
        self.axes = {str(k): _parse_axis(v) for k, v in axes.items()}

    def points(self) -> list[dict[str, float]]:
        keys = sorted(self.axes)
        out = []
        for combo in itertools.product(*(self.axes[k] for k in keys)):
            out.append({k: float(v) for k, v in zip(keys, combo)})
        return out

    def __repr__(self):
        inner = ", ".join(f"{k}={list(v)}" for k, v in self.axes.items())
        return f"GridSpec({inner})"


@dataclass
class GridPointResult:
    params: dict
    fold_selections: list
    stability: float
    kuncheva: float | None
    predictivity: float
    mean_size: float
    admissible: bool
    criterion_value: float
    chosen: bool = False
    all_empty: bool = False


@dataclass
class CvResult:
    method: str
    criterion: str
    folds: int
    seed: int
    points: list[GridPointResult]
    chosen_params: dict
    final: object
    admissibility_rule: str = ADMISSIBILITY_RULE

    def __post_init__(self):
        if sum(1 for p in self.points if p.chosen) != 1:
            raise ValidationError("exactly one grid point must be chosen")
        for p in self.points:
            if not (-1.0 - 1e-12 <= p.stability <= 1.0 + 1e-12):
                raise ValidationError("stability out of [-1, 1]")

    def chosen_point(self) -> GridPointResult:
        return next(p for p in self.points if p.chosen)


# ---------------------------------------------------------------------------
# stability metrics
# ---------------------------------------------------------------------------


def kuncheva_index(sets, m: int) -> float:
    """Mean pairwise consistency (r - k^2/m) / (k - k^2/m) over all
    pairs of equal-size selections out of m features.

    Undefined for k = 0 or k = m (the correction divides by zero);
    callers treating stability as a score should regard those cases
    as minus infinity.
    """
    sets = [frozenset(int(i) for i in s) for s in sets]
    if len(sets) < 2:
        raise ValidationError("need at least two selections")
    if m < 1:
        raise ValidationError("m must be >= 1")
    k = len(sets[0])
    if any(len(s) != k for s in sets):
        raise ValidationError("all selections must have the same size")
    if k == 0 or k == m:
        raise ValidationError(
            f"consistency index undefined for k={k} of m={m}"
        )
    denom = k - k * k / m
    total = 0.0
    pairs = 0
    for a, b in itertools.combinations(sets, 2):
        r = len(a & b)
        total += (r - k * k / m) / denom
        pairs += 1
    return total / pairs


def stability_across_folds(sets, m: int) -> float:
    """Mean pairwise Jaccard overlap |A&B| / |A|B|, which tolerates
    unequal sizes.  Two empty sets count as perfectly consistent; if
    every set is empty the value is defined as 0 and a warning is
    logged."""
    sets = [frozenset(int(i) for i in s) for s in sets]
    if len(sets) < 2:
        raise ValidationError("need at least two selections")
    if all(len(s) == 0 for s in sets):
        logger.warning("all fold selections are empty; stability defined as 0")
        return 0.0
    total = 0.0
    pairs = 0
    for a, b in itertools.combinations(sets, 2):
        union = len(a | b)
        total += 1.0 if union == 0 else len(a & b) / union
        pairs += 1
    return total / pairs


# ---------------------------------------------------------------------------
# cross-validated grid search
# ---------------------------------------------------------------------------


def _ridge_r2(Xtr, ytr, Xte, yte, alpha: float = 1e-3) -> float:
    """Held-out R^2 of a ridge refit (intercept via centering; dual
    form when there are more features than samples)."""
    if Xtr.shape[1] == 0:
        pred = np.full(len(yte), ytr.mean())
    else:
        mu = Xtr.mean(axis=0)
        ym = ytr.mean()
        Xc = Xtr - mu
        yc = ytr - ym
        n, k = Xc.shape
        if k <= n:
            w = np.linalg.solve(Xc.T @ Xc + alpha * np.eye(k), Xc.T @ yc)
        else:
            w = Xc.T @ np.linalg.solve(Xc @ Xc.T + alpha * np.eye(n), yc)
        pred = (Xte - mu) @ w + ym
    ss_res = float(np.sum((yte - pred) ** 2))
    ss_tot = float(np.sum((yte - yte.mean()) ** 2))
    if ss_tot == 0:
        return 0.0
    return 1.0 - ss_res / ss_tot


def _fold_partition(n: int, folds: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def _check_partition(parts, n: int):
    seen = np.concatenate([np.asarray(p, dtype=np.int64) for p in parts])
    if len(seen) != n or len(np.unique(seen)) != n or seen.min() < 0 or seen.max() >= n:
        raise ValidationError("fold indices must partition range(n)")


def _support(beta: np.ndarray) -> np.ndarray:
    return np.flatnonzero(np.abs(beta) > SELECT_EPS)


def _fit_single(method, Xtr, ytr, data, params, cfg):
    """One training-fold fit; returns (selected indices, objective)."""
    m = Xtr.shape[1]
    if method == "scones":
        c = skat_linear_score(Xtr, ytr)
        p = SconesParams(eta=params["eta"], lam=params["lambda"])
        sel = scones_select(c, p, data["network"])
        return sel.selected, sel.objective_value
    if method == "lasso":
        res = netreg.fit_lasso(Xtr, ytr, params["lambda"], cfg)
    elif method == "grace":
        res = netreg.fit_grace(
            Xtr, ytr, params.get("lambda1", 0.0), params.get("lambda2", 0.0),
            data["network"], cfg,
        )
    elif method == "gfl":
        res = netreg.fit_gfl(
            Xtr, ytr, params["lambda"], params.get("eta", 0.0),
            data["network"], cfg,
        )
    elif method == "ogl":
        res = netreg.fit_ogl(Xtr, ytr, params["lambda"], data["groups"], cfg)
    elif method == "gggl":
        res = netreg.fit_gggl(
            Xtr, ytr, params.get("eta1", 0.0), params.get("eta2", 0.0),
            data["groups"], data["gene_network"],
            params.get("lambda_group", 1.0), cfg,
        )
    else:
        raise ValidationError(f"unknown method {method!r}")
    return _support(res.beta), res.objective_value


def _final_single(method, X, y, data, params, cfg):
    if method == "scones":
        c = skat_linear_score(X, y)
        p = SconesParams(eta=params["eta"], lam=params["lambda"])
        return scones_select(c, p, data["network"])
    if method == "lasso":
        return netreg.fit_lasso(X, y, params["lambda"], cfg)
    if method == "grace":
        return netreg.fit_grace(
            X, y, params.get("lambda1", 0.0), params.get("lambda2", 0.0),
            data["network"], cfg,
        )
    if method == "gfl":
        return netreg.fit_gfl(
            X, y, params["lambda"], params.get("eta", 0.0), data["network"], cfg
        )
    if method == "ogl":
        return netreg.fit_ogl(X, y, params["lambda"], data["groups"], cfg)
    if method == "gggl":
        return netreg.fit_gggl(
            X, y, params.get("eta1", 0.0), params.get("eta2", 0.0),
            data["groups"], data["gene_network"],
            params.get("lambda_group", 1.0), cfg,
        )
    raise ValidationError(f"unknown method {method!r}")


def cv_grid_search(
    method: str,
    data: dict,
    grid: GridSpec,
    folds: int = 10,
    criterion: str = "product",
    seed: int = 0,
    cfg: netreg.SolverConfig | None = None,
    fold_indices=None,
    fixed_params: dict | None = None,
) -> CvResult:
    """Grid search with seeded k-fold cross-validation.

    data carries the method's inputs: X/y (arrays or containers) plus
    network, groups, or gene_network as the method requires;
    multi-task methods take tasks=[(X_t, y_t), ...] and networks=[...].
    Each grid point is fit on every training fold; stability is the
    mean Jaccard overlap of the fold selections, predictivity the mean
    held-out R^2 of a 1e-3-ridge refit on the selected features (0 for
    an empty selection).  criterion is stability, predictivity, or
    their product (with predictivity floored at 0); ties go to the
    earliest grid point in enumeration order.  Dense solver output
    counts a coefficient as selected when |beta| > 1e-6.  fold_indices
    (a partition of sample indices, per task for multi-task methods)
    overrides the seeded assignment.
    """
    if criterion not in CRITERIA:
        raise ValidationError(f"unknown criterion {criterion!r}")
    if folds < 2:
        raise ValidationError("folds must be >= 2")
    if method not in SINGLE_TASK_METHODS and method not in MULTI_TASK_METHODS:
        raise ValidationError(f"unknown method {method!r}")
    cfg = cfg or netreg.SolverConfig()
    fixed = dict(fixed_params or {})

    multi = method in MULTI_TASK_METHODS
    if multi:
        tasks = [
            (
                np.asarray(getattr(Xt, "values", Xt), dtype=np.float64),
                np.asarray(getattr(yt, "values", yt), dtype=np.float64).ravel(),
            )
            for Xt, yt in data["tasks"]
        ]
        T = len(tasks)
        m = tasks[0][0].shape[1]
        if method == "multi-scones":
            networks = data.get("networks")
            if networks is None:
                networks = [data["network"]] * T
        if fold_indices is None:
            parts = [
                _fold_partition(len(yt), folds, seed + t)
                for t, (Xt, yt) in enumerate(tasks)
            ]
        else:
            parts = [list(p) for p in fold_indices]
        for t, (Xt, yt) in enumerate(tasks):
            if len(yt) < 2 * folds:
                raise ValidationError("need at least 2*folds samples per task")
            if len(parts[t]) != folds:
                raise ValidationError("fold_indices length must equal folds")
            _check_partition(parts[t], len(yt))
    else:
        X = np.asarray(getattr(data["X"], "values", data["X"]), dtype=np.float64)
        y = np.asarray(getattr(data["y"], "values", data["y"]), dtype=np.float64).ravel()
        n, m = X.shape
        if n < 2 * folds:
            raise ValidationError("need at least 2*folds samples")
        parts = list(fold_indices) if fold_indices is not None else \
            _fold_partition(n, folds, seed)
        if len(parts) != folds:
            raise ValidationError("fold_indices length must equal folds")
        _check_partition(parts, n)

    points = []
    for gp in grid.points():
        params = {**fixed, **gp}
        fold_sels = []
        union_sets = []
        r2s = []
        if multi:
            for f in range(folds):
                tr_tasks, te_tasks = [], []
                for t, (Xt, yt) in enumerate(tasks):
                    te = np.asarray(parts[t][f], dtype=np.int64)
                    tr = np.setdiff1d(np.arange(len(yt)), te)
                    tr_tasks.append((Xt[tr], yt[tr]))
                    te_tasks.append((Xt[te], yt[te]))
                if method == "multi-scones":
                    p = SconesParams(
                        eta=params["eta"], lam=params["lambda"],
                        mu=params.get("mu", 0.0),
                    )
                    cs = [skat_linear_score(Xt, yt) for Xt, yt in tr_tasks]
                    sels = multi_scones_select(cs, p, networks)
                    per_task = [s.selected for s in sels]
                    fold_sels.append(sels)
                else:
                    res = netreg.fit_mtlasso(tr_tasks, params["lambda"], cfg)
                    per_task = [_support(r.beta) for r in res]
                    fold_sels.append([
                        SelectionSet(idx, r.objective_value, params, m=m)
                        for idx, r in zip(per_task, res)
                    ])
                union = sorted(set().union(*[set(s.tolist()) for s in per_task]))
                union_sets.append(union)
                fold_r2 = [
                    _ridge_r2(trX[:, idx], trY, teX[:, idx], teY)
                    if len(idx) else 0.0
                    for (trX, trY), (teX, teY), idx
                    in zip(tr_tasks, te_tasks, per_task)
                ]
                r2s.append(float(np.mean(fold_r2)))
            sizes = [len(u) for u in union_sets]
            sets_for_stability = union_sets
        else:
            for f in range(folds):
                te = np.asarray(parts[f], dtype=np.int64)
                tr = np.setdiff1d(np.arange(n), te)
                idx, obj = _fit_single(method, X[tr], y[tr], data, params, cfg)
                fold_sels.append(SelectionSet(idx, obj, params, m=m))
                union_sets.append(idx)
                r2s.append(
                    _ridge_r2(X[tr][:, idx], y[tr], X[te][:, idx], y[te])
                    if len(idx) else 0.0
                )
            sizes = [len(s) for s in union_sets]
            sets_for_stability = union_sets

        mean_size = float(np.mean(sizes))
        admissible = 0.0 < mean_size < float(m)
        all_empty = all(s == 0 for s in sizes)
        stability = stability_across_folds([list(s) for s in sets_for_stability], m)
        kun = None
        k0 = sizes[0]
        if all(s == k0 for s in sizes) and 0 < k0 < m:
            kun = kuncheva_index([list(s) for s in sets_for_stability], m)
        pred = float(np.mean(r2s))
        if criterion == "stability":
            crit = stability
        elif criterion == "predictivity":
            crit = pred
        else:
            crit = stability * max(pred, 0.0)
        points.append(GridPointResult(
            params=params,
            fold_selections=fold_sels,
            stability=stability,
            kuncheva=kun,
            predictivity=pred,
            mean_size=mean_size,
            admissible=admissible,
            criterion_value=crit,
            all_empty=all_empty,
        ))

    best = None
    for p in points:
        if not p.admissible:
            continue
        if best is None or p.criterion_value > best.criterion_value:
            best = p
    if best is None:
        raise ValidationError(
            "no admissible model: every grid point selected all or no features"
        )
    best.chosen = True

    if multi:
        if method == "multi-scones":
            p = SconesParams(
                eta=best.params["eta"], lam=best.params["lambda"],
                mu=best.params.get("mu", 0.0),
            )
            cs = [skat_linear_score(Xt, yt) for Xt, yt in tasks]
            final = multi_scones_select(cs, p, networks)
        else:
            final = netreg.fit_mtlasso(tasks, best.params["lambda"], cfg)
    else:
        final = _final_single(method, X, y, data, best.params, cfg)

    return CvResult(
        method=method,
        criterion=criterion,
        folds=folds,
        seed=seed,
        points=points,
        chosen_params=dict(best.params),
        final=final,
    )


def default_grid(method: str, data: dict, count: int = 7) -> GridSpec:
    """7 log-spaced values spanning [q/100, q*100] per tunable knob:
    q is the median positive relevance score for the cut-based
    methods, the exact zero-solution threshold for the regression
    methods."""
    if method in ("scones", "multi-scones"):
        if method == "scones":
            c = skat_linear_score(data["X"], data["y"]).scores
        else:
            c = np.concatenate([
                skat_linear_score(Xt, yt).scores for Xt, yt in data["tasks"]
            ])
        pos = c[c > 0]
        if len(pos) == 0:
            raise ValidationError("all relevance scores are 0; no usable grid")
        q = float(np.median(pos))
        axes = {
            "eta": np.geomspace(q * 1e-2, q * 1e2, count),
            "lambda": np.geomspace(q * 1e-2, q * 1e2, count),
        }
        if method == "multi-scones":
            axes["mu"] = np.geomspace(q * 1e-2, q * 1e2, count)
        return GridSpec(axes)
    if method == "mtlasso":
        Xs = [Xt for Xt, _ in data["tasks"]]
        ys = [yt for _, yt in data["tasks"]]
        q = netreg.lambda_max(Xs, ys, netreg.PenaltySpec(kind="mtlasso"))
    else:
        spec_kw = {}
        if method == "ogl":
            spec_kw["groups"] = tuple(tuple(g) for g in data["groups"])
        elif method == "gggl":
            spec_kw["groups"] = tuple(tuple(g) for g in data["groups"])
            spec_kw["gene_network"] = data["gene_network"]
        elif method == "gfl":
            spec_kw["network"] = data["network"]
            spec_kw["eta"] = float(data.get("eta", 0.0))
        elif method == "grace":
            spec_kw["network"] = data["network"]
        elif method != "lasso":
            raise ValidationError(f"unknown method {method!r}")
        q = netreg.lambda_max(data["X"], data["y"],
                              netreg.PenaltySpec(kind=method, **spec_kw))
    if q <= 0:
        raise ValidationError("zero-solution threshold is 0; no usable grid")
    key = "lambda1" if method == "grace" else "lambda"
    return GridSpec({key: np.geomspace(q * 1e-2, q * 1e2, count)})


# ---------------------------------------------------------------------------
# synthetic benchmarks
# ---------------------------------------------------------------------------


def _grid_edges(m: int) -> list[tuple[int, int]]:
    w = max(1, math.isqrt(m - 1) + 1) if m > 1 else 1
    edges = []
    for i in range(m):
        if (i % w) + 1 < w and i + 1 < m:
            edges.append((i, i + 1))
        if i + w < m:
            edges.append((i, i + w))
    return edges


def _scale_free_edges(m: int, rng) -> list[tuple[int, int]]:
    """Preferential attachment: a small starting clique, then each new
    node links to 2 distinct endpoints sampled from the edge-endpoint
    pool (so attachment probability tracks degree)."""
    init = min(3, m)
    edges = []
    pool = []
    for i in range(init):
        for j in range(i + 1, init):
            edges.append((i, j))
            pool.extend((i, j))
    for v in range(init, m):
        want = min(2, v)
        chosen = set()
        while len(chosen) < want:
            chosen.add(int(pool[rng.integers(len(pool))]))
        for u in sorted(chosen):
            edges.append((u, v))
            pool.extend((u, v))
    return edges


def generate_synthetic(
    n: int,
    m: int,
    module_size: int,
    effect: float,
    graph_kind: str = "grid",
    seed: int = 0,
):
    """Standard-normal features, a lattice or preferential-attachment
    network, a planted connected module of the given size grown by
    randomized BFS, and y = effect * sum of the module's columns plus
    unit noise.  Deterministic per seed.

    Returns (FeatureMatrix, Phenotype, WeightedNetwork, planted
    indices)."""
    if n < 2:
        raise ValidationError("need at least 2 samples")
    if m < 1:
        raise ValidationError("need at least 1 feature")
    if not (1 <= module_size <= m):
        raise ValidationError("module_size must be in [1, m]")
    if effect < 0 or not np.isfinite(effect):
        raise ValidationError("effect must be finite and >= 0")
    if graph_kind not in ("grid", "scale-free"):
        raise ValidationError(f"unknown graph kind {graph_kind!r}")
    rng = np.random.default_rng(seed)

    values = rng.standard_normal((n, m))
    sample_ids = [f"s{i}" for i in range(n)]
    feature_ids = [f"f{j}" for j in range(m)]
    X = FeatureMatrix(sample_ids, feature_ids, values)

    if graph_kind == "grid":
        pairs = _grid_edges(m)
    else:
        pairs = _scale_free_edges(m, rng)
    G = WeightedNetwork(feature_ids, [(u, v, 1.0) for u, v in pairs])

    comps = [c for c in connected_components(G) if len(c) >= module_size]
    if not comps:
        raise ValidationError(
            f"no connected component can hold a module of size {module_size}"
        )
    eligible = np.concatenate([np.asarray(c) for c in comps])
    start = int(eligible[rng.integers(len(eligible))])
    indptr, indices, _ = G.adjacency_csr()
    visited = [start]
    member = {start}
    queue = [start]
    while len(visited) < module_size:
        node = queue.pop(0)
        nbrs = [int(x) for x in indices[indptr[node] : indptr[node + 1]]
                if int(x) not in member]
        rng.shuffle(nbrs)
        for nb in nbrs:
            if len(visited) == module_size:
                break
            member.add(nb)
            visited.append(nb)
            queue.append(nb)
    planted = np.sort(np.asarray(visited, dtype=np.int64))

    noise = rng.standard_normal(n)
    yv = effect * values[:, planted].sum(axis=1) + noise
    y = Phenotype(sample_ids, yv)
    return X, y, G, planted
