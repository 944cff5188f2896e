"""Core data containers and file I/O.

Everything downstream works on the types defined here: dense feature
matrices with string IDs, aligned phenotypes, undirected weighted
networks, feature-to-gene maps, and the two result types (selected
index sets and regression coefficient vectors).

All containers validate their invariants at construction time and are
treated as immutable afterwards; numpy payloads are marked read-only.
File formats are plain tab-separated text (see the loader docstrings)
and numbers are serialized with 17 significant digits so a write/load
round trip reproduces doubles exactly.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "ParseError",
    "DuplicateIdError",
    "ValidationError",
    "FeatureMatrix",
    "Phenotype",
    "WeightedNetwork",
    "FeatureGeneMap",
    "SelectionSet",
    "CoefficientVector",
    "load_feature_matrix",
    "load_phenotype",
    "load_network",
    "load_feature_gene_map",
    "write_feature_matrix",
    "write_phenotype",
    "write_network",
    "align",
    "write_report",
]


class ParseError(ValueError):
    """Malformed input file; message names the offending row/column."""


class DuplicateIdError(ParseError):
    """Duplicate identifier where identifiers must be unique."""


class ValidationError(ValueError):
    """A container invariant is violated."""


def _readonly(a: np.ndarray) -> np.ndarray:
    # always copy so a caller's array is never frozen in place
    a = np.array(a, order="C")
    a.flags.writeable = False
    return a


def _check_unique(ids: Sequence[str], what: str) -> None:
    seen = set()
    for i in ids:
        if i in seen:
            raise DuplicateIdError(f"duplicate {what} ID {i!r}")
        seen.add(i)


def _fmt(v: float) -> str:
    # 17 significant digits: lossless text round trip for doubles.
    return format(float(v), ".17g")


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------


@dataclass
class FeatureMatrix:
    """Dense samples x features matrix with string IDs on both axes."""

    sample_ids: tuple[str, ...]
    feature_ids: tuple[str, ...]
    values: np.ndarray

    def __init__(self, sample_ids, feature_ids, values):
        self.sample_ids = tuple(sample_ids)
        self.feature_ids = tuple(feature_ids)
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise ValidationError("values must be a 2-D array")
        n, m = values.shape
        if n != len(self.sample_ids) or m != len(self.feature_ids):
            raise ValidationError(
                f"shape {values.shape} does not match "
                f"{len(self.sample_ids)} samples x {len(self.feature_ids)} features"
            )
        if n < 2:
            raise ValidationError("need at least 2 samples")
        if m < 1:
            raise ValidationError("need at least 1 feature")
        _check_unique(self.sample_ids, "sample")
        _check_unique(self.feature_ids, "feature")
        if not np.all(np.isfinite(values)):
            raise ValidationError("feature matrix contains non-finite values")
        self.values = _readonly(values)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


@dataclass
class Phenotype:
    """Per-sample continuous measurement."""

    sample_ids: tuple[str, ...]
    values: np.ndarray

    def __init__(self, sample_ids, values):
        self.sample_ids = tuple(sample_ids)
        values = np.asarray(values, dtype=np.float64).ravel()
        if len(values) != len(self.sample_ids):
            raise ValidationError("phenotype length does not match sample IDs")
        _check_unique(self.sample_ids, "sample")
        if not np.all(np.isfinite(values)):
            raise ValidationError("phenotype contains non-finite values")
        if len(values) > 0 and np.all(values == values[0]):
            raise ValidationError("phenotype is constant")
        self.values = _readonly(values)

    @property
    def n_samples(self) -> int:
        return len(self.values)


class WeightedNetwork:
    """Undirected weighted graph over string node IDs.

    Edges are stored once per unordered pair with ``u < v`` (by node
    index), as three parallel arrays ``edge_u``, ``edge_v``,
    ``edge_w``.  Self-loops, duplicate pairs, and non-positive weights
    are rejected.
    """

    def __init__(self, node_ids: Sequence[str], edges: Iterable | tuple = ()):
        self.node_ids = tuple(node_ids)
        _check_unique(self.node_ids, "node")
        n = len(self.node_ids)

        if isinstance(edges, tuple) and len(edges) == 3 and isinstance(edges[0], np.ndarray):
            eu = np.asarray(edges[0], dtype=np.int64).copy()
            ev = np.asarray(edges[1], dtype=np.int64).copy()
            ew = np.asarray(edges[2], dtype=np.float64).copy()
        else:
            rows = list(edges)
            eu = np.array([r[0] for r in rows], dtype=np.int64)
            ev = np.array([r[1] for r in rows], dtype=np.int64)
            ew = np.array([r[2] for r in rows], dtype=np.float64)

        if len(eu) != len(ev) or len(eu) != len(ew):
            raise ValidationError("edge arrays must have equal length")
        if len(eu) > 0:
            if eu.min() < 0 or ev.min() < 0 or eu.max() >= n or ev.max() >= n:
                raise ValidationError("edge endpoint out of range")
            if np.any(eu == ev):
                bad = int(np.flatnonzero(eu == ev)[0])
                raise ValidationError(f"self-loop on node {self.node_ids[eu[bad]]!r}")
            if not np.all(np.isfinite(ew)) or np.any(ew <= 0):
                raise ValidationError("edge weights must be positive and finite")
            # normalize orientation, then duplicates are detectable by key
            swap = eu > ev
            eu2 = np.where(swap, ev, eu)
            ev2 = np.where(swap, eu, ev)
            key = eu2.astype(np.int64) * n + ev2
            if len(np.unique(key)) != len(key):
                order = np.argsort(key, kind="stable")
                duppos = order[np.flatnonzero(np.diff(key[order]) == 0)[0] + 1]
                raise DuplicateIdError(
                    f"duplicate edge between {self.node_ids[eu2[duppos]]!r} "
                    f"and {self.node_ids[ev2[duppos]]!r}"
                )
            eu, ev = eu2, ev2
        self.edge_u = _readonly(eu)
        self.edge_v = _readonly(ev)
        self.edge_w = _readonly(ew)
        self._adj = None

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return len(self.edge_u)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [
            (int(u), int(v), float(w))
            for u, v, w in zip(self.edge_u, self.edge_v, self.edge_w)
        ]

    def degrees(self) -> np.ndarray:
        """Weighted degree of each node."""
        d = np.zeros(self.n_nodes)
        np.add.at(d, self.edge_u, self.edge_w)
        np.add.at(d, self.edge_v, self.edge_w)
        return d

    def adjacency_csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Symmetric adjacency as (indptr, indices, weights); cached."""
        if self._adj is None:
            n = self.n_nodes
            tails = np.concatenate([self.edge_u, self.edge_v])
            heads = np.concatenate([self.edge_v, self.edge_u])
            w = np.concatenate([self.edge_w, self.edge_w])
            order = np.argsort(tails, kind="stable")
            counts = np.bincount(tails, minlength=n)
            indptr = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(counts, out=indptr[1:])
            self._adj = (indptr, _readonly(heads[order]), _readonly(w[order]))
        return self._adj


@dataclass
class FeatureGeneMap:
    """Many-to-many feature -> gene assignment."""

    pairs: tuple[tuple[str, str], ...]

    def __init__(self, pairs: Iterable[tuple[str, str]]):
        self.pairs = tuple((str(f), str(g)) for f, g in pairs)
        seen = set()
        for f, g in self.pairs:
            if not f or not g:
                raise ValidationError("empty feature or gene ID in mapping")
            if (f, g) in seen:
                raise DuplicateIdError(f"duplicate mapping pair ({f!r}, {g!r})")
            seen.add((f, g))

    def features_by_gene(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for f, g in self.pairs:
            out.setdefault(g, []).append(f)
        return out

    def genes_by_feature(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for f, g in self.pairs:
            out.setdefault(f, []).append(g)
        return out


@dataclass
class SelectionSet:
    """A selected index set with the objective it achieved."""

    selected: np.ndarray
    objective_value: float
    params: dict[str, float] = field(default_factory=dict)
    m: int | None = None

    def __init__(self, selected, objective_value, params=None, m=None):
        sel = np.asarray(sorted(int(i) for i in np.asarray(selected, dtype=np.int64).ravel()),
                         dtype=np.int64)
        if len(np.unique(sel)) != len(sel):
            raise ValidationError("selected indices must be unique")
        if len(sel) > 0 and sel[0] < 0:
            raise ValidationError("negative feature index")
        if m is not None and len(sel) > 0 and sel[-1] >= m:
            raise ValidationError("feature index out of range")
        if not np.isfinite(objective_value):
            raise ValidationError("objective value must be finite")
        self.selected = _readonly(sel)
        self.objective_value = float(objective_value)
        self.params = dict(params) if params else {}
        self.m = None if m is None else int(m)

    def __len__(self) -> int:
        return len(self.selected)

    def as_set(self) -> frozenset[int]:
        return frozenset(int(i) for i in self.selected)


@dataclass
class CoefficientVector:
    """Regression weights with solver metadata."""

    beta: np.ndarray
    objective_value: float
    iterations: int
    converged: bool
    decomposition: list[np.ndarray] | None = None

    def __init__(self, beta, objective_value, iterations, converged, decomposition=None):
        beta = np.asarray(beta, dtype=np.float64).ravel()
        if not np.all(np.isfinite(beta)):
            raise ValidationError("coefficients contain non-finite values")
        if not np.isfinite(objective_value):
            raise ValidationError("objective value must be finite")
        if iterations < 0:
            raise ValidationError("iterations must be >= 0")
        self.beta = _readonly(beta)
        self.objective_value = float(objective_value)
        self.iterations = int(iterations)
        self.converged = bool(converged)
        self.decomposition = decomposition

    def support(self) -> np.ndarray:
        """Indices of nonzero coefficients."""
        return np.flatnonzero(self.beta != 0.0)


# ---------------------------------------------------------------------------
# TSV loading
# ---------------------------------------------------------------------------


def _read_rows(path) -> list[list[str]]:
    text = Path(path).read_text()
    rows = []
    for line in text.split("\n"):
        if line == "":
            continue
        rows.append(line.split("\t"))
    if not rows:
        raise ParseError(f"{path}: file is empty")
    return rows


def _parse_float(cell: str, path, row: int, col: int) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise ParseError(
            f"{path}: row {row}, column {col}: non-numeric value {cell!r}"
        ) from None
    if not np.isfinite(v):
        raise ParseError(f"{path}: row {row}, column {col}: non-finite value {cell!r}")
    return v


def load_feature_matrix(path) -> FeatureMatrix:
    """Load ``features.tsv``.

    The first row is the header ``sample_id<TAB>f1<TAB>f2...``; each
    following row is a sample ID and one numeric field per feature.
    Rows and columns in error messages are 1-based file positions.
    """
    rows = _read_rows(path)
    header = rows[0]
    if len(header) < 2 or header[0] != "sample_id":
        raise ParseError(f"{path}: row 1: header must start with 'sample_id'")
    feature_ids = header[1:]
    try:
        _check_unique(feature_ids, "feature")
    except DuplicateIdError as e:
        raise DuplicateIdError(f"{path}: row 1: {e}") from None

    m = len(feature_ids)
    sample_ids: list[str] = []
    data = np.empty((len(rows) - 1, m))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != m + 1:
            raise ParseError(
                f"{path}: row {i}: expected {m + 1} fields, found {len(row)}"
            )
        sample_ids.append(row[0])
        for j, cell in enumerate(row[1:], start=2):
            data[i - 2, j - 2] = _parse_float(cell, path, i, j)
    try:
        _check_unique(sample_ids, "sample")
    except DuplicateIdError as e:
        raise DuplicateIdError(f"{path}: {e}") from None
    return FeatureMatrix(sample_ids, feature_ids, data)


def load_phenotype(path) -> Phenotype:
    """Load ``phenotype.tsv``: header ``sample_id<TAB>value`` then one
    row per sample."""
    rows = _read_rows(path)
    if rows[0] != ["sample_id", "value"]:
        raise ParseError(f"{path}: row 1: header must be 'sample_id<TAB>value'")
    ids, vals = [], []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise ParseError(f"{path}: row {i}: expected 2 fields, found {len(row)}")
        ids.append(row[0])
        vals.append(_parse_float(row[1], path, i, 2))
    try:
        _check_unique(ids, "sample")
    except DuplicateIdError as e:
        raise DuplicateIdError(f"{path}: {e}") from None
    return Phenotype(ids, vals)


def load_network(path, node_universe: Sequence[str]) -> WeightedNetwork:
    """Load an edge list ``id_a<TAB>id_b[<TAB>weight]`` (no header).

    A missing weight field defaults to 1.0.  Node IDs must be members
    of ``node_universe``; nodes of the universe that appear in no edge
    stay isolated.
    """
    node_ids = list(node_universe)
    index = {nid: i for i, nid in enumerate(node_ids)}
    if len(index) != len(node_ids):
        raise DuplicateIdError("node universe contains duplicate IDs")
    try:
        rows = _read_rows(path)
    except ParseError:
        rows = []  # empty network file: all nodes isolated
    eu, ev, ew = [], [], []
    for i, row in enumerate(rows, start=1):
        if len(row) not in (2, 3):
            raise ParseError(f"{path}: row {i}: expected 2 or 3 fields, found {len(row)}")
        a, b = row[0], row[1]
        if a not in index:
            raise ParseError(f"{path}: row {i}: unknown node ID {a!r}")
        if b not in index:
            raise ParseError(f"{path}: row {i}: unknown node ID {b!r}")
        w = 1.0 if len(row) == 2 else _parse_float(row[2], path, i, 3)
        if w <= 0:
            raise ParseError(f"{path}: row {i}: non-positive weight {w!r}")
        if a == b:
            raise ParseError(f"{path}: row {i}: self-loop on {a!r}")
        eu.append(index[a])
        ev.append(index[b])
        ew.append(w)
    try:
        return WeightedNetwork(
            node_ids,
            (np.array(eu, dtype=np.int64), np.array(ev, dtype=np.int64), np.array(ew)),
        )
    except DuplicateIdError as e:
        raise DuplicateIdError(f"{path}: {e}") from None


def load_feature_gene_map(path) -> FeatureGeneMap:
    """Load ``mapping.tsv``: lines ``feature_id<TAB>gene_id`` (no header)."""
    rows = _read_rows(path)
    pairs = []
    for i, row in enumerate(rows, start=1):
        if len(row) != 2:
            raise ParseError(f"{path}: row {i}: expected 2 fields, found {len(row)}")
        pairs.append((row[0], row[1]))
    return FeatureGeneMap(pairs)


# ---------------------------------------------------------------------------
# TSV writing
# ---------------------------------------------------------------------------


def write_feature_matrix(X: FeatureMatrix, path) -> None:
    lines = ["\t".join(("sample_id",) + X.feature_ids)]
    for i, sid in enumerate(X.sample_ids):
        lines.append(sid + "\t" + "\t".join(_fmt(v) for v in X.values[i]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_phenotype(y: Phenotype, path) -> None:
    lines = ["sample_id\tvalue"]
    for sid, v in zip(y.sample_ids, y.values):
        lines.append(f"{sid}\t{_fmt(v)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_network(G: WeightedNetwork, path) -> None:
    lines = []
    for u, v, w in zip(G.edge_u, G.edge_v, G.edge_w):
        lines.append(f"{G.node_ids[u]}\t{G.node_ids[v]}\t{_fmt(w)}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


# ---------------------------------------------------------------------------
# alignment and reports
# ---------------------------------------------------------------------------


def align(X: FeatureMatrix, y: Phenotype) -> tuple[FeatureMatrix, Phenotype]:
    """Restrict X and y to their common samples, in X's row order.

    Dropped sample IDs are reported through the module logger.  The
    operation is idempotent.
    """
    yindex = {sid: i for i, sid in enumerate(y.sample_ids)}
    keep = [i for i, sid in enumerate(X.sample_ids) if sid in yindex]
    if not keep:
        raise ValidationError("no common sample IDs between X and y")
    dropped_x = [sid for sid in X.sample_ids if sid not in yindex]
    xset = set(X.sample_ids)
    dropped_y = [sid for sid in y.sample_ids if sid not in xset]
    if dropped_x or dropped_y:
        logger.warning(
            "align dropped %d sample(s) from X %s and %d from y %s",
            len(dropped_x), dropped_x[:10], len(dropped_y), dropped_y[:10],
        )
    if not dropped_x and not dropped_y and tuple(X.sample_ids) == tuple(y.sample_ids):
        return X, y
    ids = [X.sample_ids[i] for i in keep]
    X2 = FeatureMatrix(ids, X.feature_ids, X.values[keep])
    y2 = Phenotype(ids, y.values[[yindex[sid] for sid in ids]])
    return X2, y2


def _ids_path(path) -> Path:
    p = Path(path)
    return p.with_suffix(".selected.txt") if p.suffix else p.with_name(p.name + ".selected.txt")


def write_report(
    result,
    path,
    *,
    method: str,
    feature_ids: Sequence[str],
    params: dict | None = None,
    runtime_ms: float = 0.0,
) -> None:
    """Write a JSON report plus a plain selected-ID list.

    The JSON document at ``path`` has keys ``method``, ``params``,
    ``selected_ids``, ``objective``, ``converged``, ``runtime_ms``.
    A sibling file (``path`` with its suffix replaced by
    ``.selected.txt``) holds one selected feature ID per line.  Output
    bytes are deterministic given the same inputs.
    """
    if isinstance(result, SelectionSet):
        sel_idx = [int(i) for i in result.selected]
        converged = True
        if params is None:
            params = result.params
    elif isinstance(result, CoefficientVector):
        sel_idx = [int(i) for i in result.support()]
        converged = result.converged
    else:
        raise TypeError(f"cannot report a {type(result).__name__}")
    if sel_idx and sel_idx[-1] >= len(feature_ids):
        raise ValidationError("feature index out of range for the given feature IDs")
    selected_ids = [str(feature_ids[i]) for i in sel_idx]
    doc = {
        "method": method,
        "params": dict(params or {}),
        "selected_ids": selected_ids,
        "objective": float(result.objective_value),
        "converged": bool(converged),
        "runtime_ms": float(runtime_ms),
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    _ids_path(path).write_text("".join(s + "\n" for s in selected_ids))
