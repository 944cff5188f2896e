"""Command-line front end.

Subcommands: build-network, gene-pvals, modules, scones, multi-scones,
lasso, grace, gfl, ogl, gggl, mtlasso, cv, synth.  Selection commands
write a JSON report (method, params, selected_ids, objective,
converged, runtime_ms) plus a sibling .selected.txt ID list;
regression commands additionally write beta.tsv.  All numeric output
uses 17 significant digits so files round-trip exactly.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import datamodel as dm
from . import netreg
from .datamodel import ParseError, ValidationError
from .modsearch import greedy_module_search
from .netgraph import (
    GeneIntervals,
    build_feature_network,
    load_gene_intervals,
    load_positions,
)
from .relevance import GeneScores, skat_linear_score, summarize_gene_pvalues
from .scones import SconesParams, multi_scones_objective, multi_scones_select, scones_select
from .selectpipe import GridSpec, cv_grid_search, default_grid, generate_synthetic

logger = logging.getLogger(__name__)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _load_xy(args):
    X = dm.load_feature_matrix(args.features)
    y = dm.load_phenotype(args.phenotype)
    return dm.align(X, y)


def _ids_path(path) -> Path:
    p = Path(path)
    return p.with_suffix(".selected.txt") if p.suffix else p.with_name(p.name + ".selected.txt")


def _sibling(path, suffix: str) -> Path:
    p = Path(path)
    return p.with_suffix(suffix) if p.suffix else p.with_name(p.name + suffix)


def _write_beta(path, feature_ids, beta) -> None:
    lines = ["feature_id\tbeta"]
    for fid, b in zip(feature_ids, beta):
        lines.append(f"{fid}\t{_fmt(b)}")
    Path(path).write_text("\n".join(lines) + "\n")


def _load_groups(path, feature_ids):
    """groups.tsv: group_id<TAB>feature_id (no header).  Returns group
    IDs in first-appearance order and per-group feature index tuples."""
    index = {fid: i for i, fid in enumerate(feature_ids)}
    order: list[str] = []
    members: dict[str, list[int]] = {}
    text = Path(path).read_text()
    for i, line in enumerate(text.split("\n"), start=1):
        if line == "":
            continue
        row = line.split("\t")
        if len(row) != 2:
            raise ParseError(f"{path}: row {i}: expected 2 fields, found {len(row)}")
        gid, fid = row
        if fid not in index:
            raise ParseError(f"{path}: row {i}: unknown feature {fid!r}")
        if gid not in members:
            members[gid] = []
            order.append(gid)
        members[gid].append(index[fid])
    if not order:
        raise ParseError(f"{path}: no group assignments found")
    groups = [tuple(sorted(set(members[g]))) for g in order]
    covered = set().union(*[set(g) for g in groups])
    if len(covered) < len(feature_ids):
        logger.warning(
            "%d feature(s) belong to no group; treating each as its own "
            "singleton group", len(feature_ids) - len(covered),
        )
    return order, groups


def _load_tasks(tasks_dir, shared_network_path=None):
    """Each subdirectory of tasks_dir (sorted by name) is one task with
    features.tsv + phenotype.tsv and, optionally, its own network.tsv."""
    root = Path(tasks_dir)
    subdirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not subdirs:
        raise ValidationError(f"{tasks_dir}: no task subdirectories")
    names, pairs, networks = [], [], []
    feature_ids = None
    for sub in subdirs:
        X = dm.load_feature_matrix(sub / "features.tsv")
        y = dm.load_phenotype(sub / "phenotype.tsv")
        X, y = dm.align(X, y)
        if feature_ids is None:
            feature_ids = X.feature_ids
        elif X.feature_ids != feature_ids:
            raise ValidationError(
                f"task {sub.name!r} feature IDs differ from the first task"
            )
        names.append(sub.name)
        pairs.append((X, y))
        net_path = sub / "network.tsv"
        if net_path.exists():
            networks.append(dm.load_network(net_path, feature_ids))
        else:
            networks.append(None)
    if any(G is None for G in networks):
        if shared_network_path is None:
            missing = [n for n, G in zip(names, networks) if G is None]
            raise ValidationError(
                f"task(s) {missing} have no network.tsv and no --network was given"
            )
        shared = dm.load_network(shared_network_path, feature_ids)
        networks = [shared if G is None else G for G in networks]
    return names, feature_ids, pairs, networks


def _write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_build_network(args) -> int:
    pos = load_positions(args.positions)
    if args.mode in ("gene", "interaction") and args.genes is None:
        raise ValidationError(f"mode={args.mode} requires --genes")
    genes = load_gene_intervals(args.genes) if args.genes else GeneIntervals({})
    if args.features:
        feature_ids = dm.load_feature_matrix(args.features).feature_ids
    else:
        feature_ids = list(pos.by_feature.keys())
    gene_net = None
    if args.gene_network:
        gene_net = dm.load_network(args.gene_network, list(genes.by_gene.keys()))
    G = build_feature_network(
        feature_ids, pos, genes, gene_net=gene_net,
        window=args.window, mode=args.mode,
    )
    dm.write_network(G, args.out)
    print(f"wrote {args.out}: {G.n_nodes} nodes, {G.n_edges} edges")
    return 0


def cmd_gene_pvals(args) -> int:
    snp_p = {}
    text = Path(args.snp_pvals).read_text()
    for i, line in enumerate(text.split("\n"), start=1):
        if line == "":
            continue
        row = line.split("\t")
        if len(row) != 2:
            raise ParseError(
                f"{args.snp_pvals}: row {i}: expected 2 fields, found {len(row)}"
            )
        if row[0] in snp_p:
            raise ParseError(f"{args.snp_pvals}: row {i}: duplicate feature {row[0]!r}")
        try:
            snp_p[row[0]] = float(row[1])
        except ValueError:
            raise ParseError(
                f"{args.snp_pvals}: row {i}: bad p-value {row[1]!r}"
            ) from None
    mapping = dm.load_feature_gene_map(args.mapping)
    scores = summarize_gene_pvalues(snp_p, mapping, method=args.method)
    lines = [
        f"{g}\t{_fmt(p)}\t{_fmt(z)}"
        for g, p, z in zip(scores.gene_ids, scores.p_values, scores.z_scores)
    ]
    Path(args.out).write_text("\n".join(lines) + ("\n" if lines else ""))
    print(f"wrote {args.out}: {len(scores)} genes")
    return 0


def _load_gene_scores(path) -> GeneScores:
    ids, ps, zs = [], [], []
    text = Path(path).read_text()
    for i, line in enumerate(text.split("\n"), start=1):
        if line == "":
            continue
        row = line.split("\t")
        if len(row) != 3:
            raise ParseError(f"{path}: row {i}: expected 3 fields, found {len(row)}")
        ids.append(row[0])
        try:
            ps.append(float(row[1]))
            zs.append(float(row[2]))
        except ValueError:
            raise ParseError(f"{path}: row {i}: bad number") from None
    if not ids:
        raise ParseError(f"{path}: empty gene score file")
    return GeneScores(ids, ps, zs)


def cmd_modules(args) -> int:
    scores = _load_gene_scores(args.gene_scores)
    net = dm.load_network(args.network, scores.gene_ids)
    mods = greedy_module_search(scores, net, r=args.r, max_depth=args.max_depth)
    lines = []
    for rank, mod in enumerate(mods, start=1):
        lines.append(f"{rank}\t{_fmt(mod.score)}\t{','.join(mod.gene_ids)}")
    Path(args.out).write_text("\n".join(lines) + ("\n" if lines else ""))
    print(f"wrote {args.out}: {len(mods)} modules")
    return 0


def cmd_scones(args) -> int:
    X, y = _load_xy(args)
    G = dm.load_network(args.network, X.feature_ids)
    c = skat_linear_score(X, y)
    params = SconesParams(eta=args.eta, lam=args.lam)
    t0 = time.perf_counter()
    sel = scones_select(c, params, G)
    runtime_ms = (time.perf_counter() - t0) * 1000.0
    dm.write_report(
        sel, args.out, method="scones", feature_ids=X.feature_ids,
        runtime_ms=runtime_ms,
    )
    print(f"wrote {args.out}: selected {len(sel)} of {X.n_features} features")
    return 0


def cmd_multi_scones(args) -> int:
    names, feature_ids, pairs, networks = _load_tasks(args.tasks, args.network)
    cs = [skat_linear_score(X, y) for X, y in pairs]
    params = SconesParams(eta=args.eta, lam=args.lam, mu=args.mu)
    t0 = time.perf_counter()
    sels = multi_scones_select(cs, params, networks)
    runtime_ms = (time.perf_counter() - t0) * 1000.0
    total = multi_scones_objective(sels, cs, params, networks)
    tasks_doc = []
    for name, sel in zip(names, sels):
        ids = [feature_ids[i] for i in sel.selected]
        tasks_doc.append({
            "task": name,
            "selected_ids": ids,
            "objective": float(sel.objective_value),
        })
        out_ids = _sibling(args.out, f".{name}.selected.txt")
        out_ids.write_text("".join(s + "\n" for s in ids))
    union = sorted(set().union(*[s.as_set() for s in sels]))
    doc = {
        "method": "multi-scones",
        "params": params.as_dict(include_mu=True),
        "selected_ids": [feature_ids[i] for i in union],
        "objective": float(total),
        "converged": True,
        "runtime_ms": float(runtime_ms),
        "tasks": tasks_doc,
    }
    _write_json(args.out, doc)
    _ids_path(args.out).write_text(
        "".join(feature_ids[i] + "\n" for i in union)
    )
    print(f"wrote {args.out}: {len(names)} tasks, union of {len(union)} features")
    return 0


def _solver_cfg(args) -> netreg.SolverConfig:
    return netreg.SolverConfig(
        max_iters=args.max_iters, tol=args.tol, seed=args.seed
    )


def _reg_fit(kind, args, X, y, extras, cfg):
    if kind == "lasso":
        return netreg.fit_lasso(X, y, args.lam, cfg), {"lambda": args.lam}
    if kind == "grace":
        return (
            netreg.fit_grace(X, y, args.lambda1, args.lambda2, extras["network"], cfg),
            {"lambda1": args.lambda1, "lambda2": args.lambda2},
        )
    if kind == "gfl":
        return (
            netreg.fit_gfl(X, y, args.lam, args.eta, extras["network"], cfg),
            {"lambda": args.lam, "eta": args.eta},
        )
    if kind == "ogl":
        return (
            netreg.fit_ogl(X, y, args.lam, extras["groups"], cfg),
            {"lambda": args.lam},
        )
    if kind == "gggl":
        return (
            netreg.fit_gggl(
                X, y, args.eta1, args.eta2, extras["groups"],
                extras["gene_network"], args.lambda_group, cfg,
            ),
            {"eta1": args.eta1, "eta2": args.eta2, "lambda_group": args.lambda_group},
        )
    raise ValidationError(f"unknown regression kind {kind!r}")


def _reg_spec(kind, args, extras) -> netreg.PenaltySpec:
    # path mode varies the headline weight, so a missing --lambda is fine
    lam = getattr(args, "lam", None) or 0.0
    if kind == "lasso":
        return netreg.PenaltySpec(kind="lasso", lam=lam)
    if kind == "grace":
        return netreg.PenaltySpec(
            kind="grace", eta1=args.lambda1, eta2=args.lambda2,
            network=extras["network"],
        )
    if kind == "gfl":
        return netreg.PenaltySpec(
            kind="gfl", lam=lam, eta=args.eta, network=extras["network"]
        )
    if kind == "ogl":
        return netreg.PenaltySpec(kind="ogl", lam=lam, groups=extras["groups"])
    return netreg.PenaltySpec(
        kind="gggl", lam=args.lambda_group, eta1=args.eta1, eta2=args.eta2,
        groups=extras["groups"], gene_network=extras["gene_network"],
    )


def cmd_regression(args) -> int:
    kind = args.command
    cfg = _solver_cfg(args)
    if kind not in ("grace", "gggl") and args.lam is None and not args.lambda_path:
        raise ValidationError("--lambda is required unless --lambda-path is given")
    if kind == "mtlasso":
        names, feature_ids, pairs, _ = _load_tasks_no_network(args.tasks)
        if args.lambda_path:
            Xs = [X for X, _ in pairs]
            ys = [y for _, y in pairs]
            spec = netreg.PenaltySpec(kind="mtlasso")
            lams = netreg.lambda_path(Xs, ys, spec)
            return _run_path(
                args, feature_ids,
                lambda lam: netreg.fit_mtlasso(pairs, lam, cfg)[0], lams, kind,
            )
        t0 = time.perf_counter()
        results = netreg.fit_mtlasso(pairs, args.lam, cfg)
        runtime_ms = (time.perf_counter() - t0) * 1000.0
        support = results[0].support()
        tasks_doc = []
        for name, res in zip(names, results):
            tasks_doc.append({
                "task": name,
                "selected_ids": [feature_ids[i] for i in res.support()],
            })
            _write_beta(_sibling(args.out, f".{name}.beta.tsv"), feature_ids, res.beta)
        doc = {
            "method": "mtlasso",
            "params": {"lambda": args.lam},
            "selected_ids": [feature_ids[i] for i in support],
            "objective": float(results[0].objective_value),
            "converged": bool(results[0].converged),
            "runtime_ms": float(runtime_ms),
            "tasks": tasks_doc,
        }
        _write_json(args.out, doc)
        _ids_path(args.out).write_text(
            "".join(feature_ids[i] + "\n" for i in support)
        )
        print(f"wrote {args.out}: {len(support)} features selected across "
              f"{len(names)} tasks")
        return 0

    X, y = _load_xy(args)
    extras = {}
    if kind in ("grace", "gfl"):
        extras["network"] = dm.load_network(args.network, X.feature_ids)
    if kind in ("ogl", "gggl"):
        group_ids, groups = _load_groups(args.groups, X.feature_ids)
        extras["groups"] = groups
        if kind == "gggl":
            extras["gene_network"] = dm.load_network(args.gene_network, group_ids)
    if args.lambda_path:
        spec = _reg_spec(kind, args, extras)
        lams = netreg.lambda_path(X.values, y.values, spec)

        def fit_at(lam):
            if kind == "lasso":
                return netreg.fit_lasso(X, y, lam, cfg)
            if kind == "grace":
                return netreg.fit_grace(X, y, lam, args.lambda2, extras["network"], cfg)
            if kind == "gfl":
                return netreg.fit_gfl(X, y, lam, args.eta, extras["network"], cfg)
            if kind == "ogl":
                return netreg.fit_ogl(X, y, lam, extras["groups"], cfg)
            return netreg.fit_gggl(
                X, y, args.eta1, args.eta2, extras["groups"],
                extras["gene_network"], lam, cfg,
            )

        return _run_path(args, X.feature_ids, fit_at, lams, kind)

    t0 = time.perf_counter()
    result, params = _reg_fit(kind, args, X, y, extras, cfg)
    runtime_ms = (time.perf_counter() - t0) * 1000.0
    dm.write_report(
        result, args.out, method=kind, feature_ids=X.feature_ids,
        params=params, runtime_ms=runtime_ms,
    )
    _write_beta(_sibling(args.out, ".beta.tsv"), X.feature_ids, result.beta)
    print(f"wrote {args.out}: {len(result.support())} of "
          f"{X.n_features} features selected")
    return 0


def _load_tasks_no_network(tasks_dir):
    root = Path(tasks_dir)
    subdirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not subdirs:
        raise ValidationError(f"{tasks_dir}: no task subdirectories")
    names, pairs = [], []
    feature_ids = None
    for sub in subdirs:
        X = dm.load_feature_matrix(sub / "features.tsv")
        y = dm.load_phenotype(sub / "phenotype.tsv")
        X, y = dm.align(X, y)
        if feature_ids is None:
            feature_ids = X.feature_ids
        elif X.feature_ids != feature_ids:
            raise ValidationError(
                f"task {sub.name!r} feature IDs differ from the first task"
            )
        names.append(sub.name)
        pairs.append((X, y))
    return names, feature_ids, pairs, None


def _run_path(args, feature_ids, fit_at, lams, kind) -> int:
    rows = ["lambda\tnonzeros\tobjective\tconverged"]
    t0 = time.perf_counter()
    last = None
    for lam in lams:
        res = fit_at(float(lam))
        last = (float(lam), res)
        rows.append(
            f"{_fmt(lam)}\t{len(res.support())}\t{_fmt(res.objective_value)}"
            f"\t{str(bool(res.converged)).lower()}"
        )
    runtime_ms = (time.perf_counter() - t0) * 1000.0
    path_file = _sibling(args.out, ".path.tsv")
    Path(path_file).write_text("\n".join(rows) + "\n")
    lam, res = last
    dm.write_report(
        res, args.out, method=kind, feature_ids=feature_ids,
        params={"lambda": lam, "path_points": len(lams)},
        runtime_ms=runtime_ms,
    )
    print(f"wrote {path_file}: {len(lams)} points; report at {args.out} "
          f"for the smallest weight")
    return 0


def cmd_cv(args) -> int:
    method = args.method
    data = {}
    feature_ids = None
    if method in ("multi-scones", "mtlasso"):
        if args.tasks is None:
            raise ValidationError(f"method={method} requires --tasks")
        names, feature_ids, pairs, networks = (
            _load_tasks(args.tasks, args.network)
            if method == "multi-scones"
            else _load_tasks_no_network(args.tasks)
        )
        data["tasks"] = pairs
        if method == "multi-scones":
            data["networks"] = networks
    else:
        if args.features is None or args.phenotype is None:
            raise ValidationError(
                f"method={method} requires --features and --phenotype"
            )
        X, y = _load_xy(args)
        feature_ids = X.feature_ids
        data["X"] = X
        data["y"] = y
        if method in ("scones", "grace", "gfl"):
            if args.network is None:
                raise ValidationError(f"method={method} requires --network")
            data["network"] = dm.load_network(args.network, feature_ids)
        if method in ("ogl", "gggl"):
            if args.groups is None:
                raise ValidationError(f"method={method} requires --groups")
            group_ids, groups = _load_groups(args.groups, feature_ids)
            data["groups"] = groups
            if method == "gggl":
                if args.gene_network is None:
                    raise ValidationError("method=gggl requires --gene-network")
                data["gene_network"] = dm.load_network(args.gene_network, group_ids)
        if method == "gfl" and args.eta is not None:
            data["eta"] = args.eta

    axes = {}
    for axis, token in (
        ("eta", args.grid_eta),
        ("lambda", args.grid_lambda),
        ("mu", args.grid_mu),
        ("lambda1", args.grid_lambda1),
        ("lambda2", args.grid_lambda2),
        ("eta1", args.grid_eta1),
        ("eta2", args.grid_eta2),
    ):
        if token is not None:
            axes[axis] = token
    grid = GridSpec(axes) if axes else default_grid(method, data)

    fixed = {}
    for name, value in (
        ("eta", args.eta), ("eta1", args.eta1), ("eta2", args.eta2),
        ("lambda1", args.lambda1), ("lambda2", args.lambda2),
        ("lambda_group", args.lambda_group), ("mu", args.mu),
    ):
        if value is not None:
            fixed[name] = value

    cfg = netreg.SolverConfig(max_iters=args.max_iters, tol=args.tol, seed=args.seed)
    t0 = time.perf_counter()
    cv = cv_grid_search(
        method, data, grid, folds=args.folds, criterion=args.criterion,
        seed=args.seed, cfg=cfg, fixed_params=fixed,
    )
    runtime_ms = (time.perf_counter() - t0) * 1000.0

    final = cv.final
    if isinstance(final, list):
        if method == "multi-scones":
            union = sorted(set().union(*[s.as_set() for s in final]))
            cs = [skat_linear_score(Xt, yt) for Xt, yt in data["tasks"]]
            p = SconesParams(
                eta=cv.chosen_params["eta"], lam=cv.chosen_params["lambda"],
                mu=cv.chosen_params.get("mu", 0.0),
            )
            objective_value = multi_scones_objective(final, cs, p, data["networks"])
            converged = True
        else:
            union = sorted(set(int(i) for i in final[0].support()))
            objective_value = final[0].objective_value
            converged = final[0].converged
            for t, res in enumerate(final):
                _write_beta(_sibling(args.out, f".task{t}.beta.tsv"),
                            feature_ids, res.beta)
        selected = union
    elif isinstance(final, dm.SelectionSet):
        selected = [int(i) for i in final.selected]
        objective_value = final.objective_value
        converged = True
    else:
        selected = [int(i) for i in final.support()]
        objective_value = final.objective_value
        converged = final.converged
        _write_beta(_sibling(args.out, ".beta.tsv"), feature_ids, final.beta)

    table = []
    for p in cv.points:
        table.append({
            "params": p.params,
            "stability": p.stability,
            "kuncheva": p.kuncheva,
            "predictivity": p.predictivity,
            "mean_size": p.mean_size,
            "admissible": p.admissible,
            "criterion_value": p.criterion_value,
            "chosen": p.chosen,
        })
    doc = {
        "method": method,
        "params": cv.chosen_params,
        "selected_ids": [feature_ids[i] for i in selected],
        "objective": float(objective_value),
        "converged": bool(converged),
        "runtime_ms": float(runtime_ms),
        "cv": {
            "criterion": cv.criterion,
            "folds": cv.folds,
            "seed": cv.seed,
            "admissibility_rule": cv.admissibility_rule,
            "table": table,
        },
    }
    _write_json(args.out, doc)
    _ids_path(args.out).write_text(
        "".join(feature_ids[i] + "\n" for i in selected)
    )
    print(f"wrote {args.out}: chose {cv.chosen_params} "
          f"({len(selected)} features)")
    return 0


def cmd_synth(args) -> int:
    X, y, G, planted = generate_synthetic(
        n=args.n, m=args.m, module_size=args.module_size,
        effect=args.effect, graph_kind=args.graph, seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dm.write_feature_matrix(X, out / "features.tsv")
    dm.write_phenotype(y, out / "phenotype.tsv")
    dm.write_network(G, out / "network.tsv")
    (out / "planted.txt").write_text(
        "".join(X.feature_ids[i] + "\n" for i in planted)
    )
    print(f"wrote {out}/: n={args.n} m={args.m} module={len(planted)} "
          f"edges={G.n_edges}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_solver_flags(p) -> None:
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netselect",
        description="Network-guided feature selection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-network", help="construct a feature network "
                       "from genomic annotation")
    p.add_argument("--positions", required=True)
    p.add_argument("--genes")
    p.add_argument("--gene-network")
    p.add_argument("--features")
    p.add_argument("--mode", choices=("sequence", "gene", "interaction"),
                   default="gene")
    p.add_argument("--window", type=int, default=10_000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_network)

    p = sub.add_parser("gene-pvals", help="summarize feature p-values per gene")
    p.add_argument("--snp-pvals", required=True)
    p.add_argument("--mapping", required=True)
    p.add_argument("--method", choices=("min", "max", "mean"), default="min")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gene_pvals)

    p = sub.add_parser("modules", help="greedy search for high-scoring "
                       "gene modules")
    p.add_argument("--gene-scores", required=True)
    p.add_argument("--network", required=True)
    p.add_argument("--r", type=float, default=0.1)
    p.add_argument("--max-depth", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_modules)

    p = sub.add_parser("scones", help="exact min-cut feature selection")
    p.add_argument("--features", required=True)
    p.add_argument("--phenotype", required=True)
    p.add_argument("--network", required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scones)

    p = sub.add_parser("multi-scones", help="coupled selection across tasks")
    p.add_argument("--tasks", required=True,
                   help="directory of task subdirectories")
    p.add_argument("--network", help="shared network for tasks lacking one")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_multi_scones)

    reg_help = {
        "lasso": "l1-penalized regression",
        "grace": "l1 plus Laplacian-smoothed regression",
        "gfl": "fused penalty over network edges",
        "ogl": "overlapping group penalty",
        "gggl": "group penalty with cross-group smoothing",
        "mtlasso": "joint selection across tasks",
    }
    for kind in ("lasso", "grace", "gfl", "ogl", "gggl", "mtlasso"):
        p = sub.add_parser(kind, help=reg_help[kind])
        if kind == "mtlasso":
            p.add_argument("--tasks", required=True)
        else:
            p.add_argument("--features", required=True)
            p.add_argument("--phenotype", required=True)
        if kind in ("grace", "gfl"):
            p.add_argument("--network", required=True)
        if kind in ("ogl", "gggl"):
            p.add_argument("--groups", required=True)
        if kind == "gggl":
            p.add_argument("--gene-network", required=True)
            p.add_argument("--eta1", type=float, required=True)
            p.add_argument("--eta2", type=float, required=True)
            p.add_argument("--lambda-group", dest="lambda_group",
                           type=float, default=1.0)
        elif kind == "grace":
            p.add_argument("--lambda1", type=float, required=True)
            p.add_argument("--lambda2", type=float, required=True)
        else:
            p.add_argument("--lambda", dest="lam", type=float, default=None)
        if kind == "gfl":
            p.add_argument("--eta", type=float, required=True)
        p.add_argument("--lambda-path", action="store_true",
                       help="fit 30 log-spaced weights from the zero-solution "
                       "threshold down to 1e-3 of it")
        _add_solver_flags(p)
        p.add_argument("--out", required=True)
        p.set_defaults(func=cmd_regression)

    p = sub.add_parser("cv", help="cross-validated grid search")
    p.add_argument("--method", required=True, choices=(
        "scones", "multi-scones", "lasso", "grace", "gfl", "ogl",
        "gggl", "mtlasso",
    ))
    p.add_argument("--features")
    p.add_argument("--phenotype")
    p.add_argument("--network")
    p.add_argument("--groups")
    p.add_argument("--gene-network")
    p.add_argument("--tasks")
    p.add_argument("--grid-eta", "--eta-grid", dest="grid_eta")
    p.add_argument("--grid-lambda", "--lambda-grid", dest="grid_lambda")
    p.add_argument("--grid-mu", "--mu-grid", dest="grid_mu")
    p.add_argument("--grid-lambda1", dest="grid_lambda1")
    p.add_argument("--grid-lambda2", dest="grid_lambda2")
    p.add_argument("--grid-eta1", dest="grid_eta1")
    p.add_argument("--grid-eta2", dest="grid_eta2")
    p.add_argument("--eta", type=float, default=None,
                   help="fixed value when not gridded")
    p.add_argument("--eta1", type=float, default=None)
    p.add_argument("--eta2", type=float, default=None)
    p.add_argument("--lambda1", type=float, default=None)
    p.add_argument("--lambda2", type=float, default=None)
    p.add_argument("--lambda-group", dest="lambda_group", type=float,
                   default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--criterion",
                   choices=("stability", "predictivity", "product"),
                   default="product")
    _add_solver_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("synth", help="generate a seeded synthetic benchmark")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--module-size", type=int, required=True)
    p.add_argument("--effect", type=float, required=True)
    p.add_argument("--graph", choices=("grid", "scale-free"), default="grid")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
