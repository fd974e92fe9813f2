"""Command-line interface: ``fsurv <command> [options]``.

Commands read and write plain CSV/JSON artifacts in directories so they can
be chained::

    fsurv simulate --scenario A --n 200 --seed 1 --out run/data
    fsurv fpca --data run/data --out run/fpca
    fsurv grow-forest --data run/data --fpca run/fpca --trees 200 --out run/forest
    fsurv explain-global --forest run/forest/forest.jsonl --out run/pfi

Exit status is 0 on success, 1 for usage errors and 2 for data errors.
Every random draw is seeded from ``--seed`` through :func:`derive_seed`.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import zlib
from pathlib import Path

import numpy as np

from . import dataio, discrimination, forest as forest_mod, fpca, pfi, sim, survshap, tree as tree_mod
from .dataio import DataError

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    """Invalid command-line usage or parameter value."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def derive_seed(root: int, command: str, module: str, index: int = 0) -> int:
    """Stable 32-bit seed for ``(command, module, index)`` under ``root``."""
    key = [int(root) & 0xFFFFFFFF, zlib.crc32(command.encode()), zlib.crc32(module.encode()), int(index)]
    return int(np.random.SeedSequence(key).generate_state(1)[0])


# ---------------------------------------------------------------- helpers


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def _read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None


def _window(text: str | None):
    if text is None:
        return None
    try:
        a, b = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"window must look like A:B, got {text!r}") from None
    if not a < b:
        raise UsageError(f"invalid window {text!r}")
    return a, b


def _load_dataset(directory, window=None) -> dataio.MixedSurvivalDataset:
    directory = Path(directory)
    long = dataio.load_longitudinal(directory / "longitudinal.csv")
    surv = dataio.load_survival(directory / "survival.csv")
    truth = directory / "truth.json"
    if window is None and truth.is_file():
        window = tuple(_read_json(truth)["window"])
    return dataio.join(long, surv, window or dataio.infer_window(long, surv))


def _load_fpca(directory, ids=None):
    directory = Path(directory)
    basis = fpca.load_basis(directory / "basis.json")
    scores = fpca.ScoreMatrix.from_csv(directory / "scores.csv")
    if scores.values.shape[1] != basis.p:
        raise DataError("scores and basis disagree on the number of components")
    if ids is not None and list(scores.ids) != list(ids):
        raise DataError("score ids do not match the dataset subjects")
    return basis, scores


def _features(dataset, scores) -> tree_mod.FeatureMatrix:
    return tree_mod.FeatureMatrix.from_parts(dataset.covariates, scores.values)


def _resolve_features(spec: str, names) -> list[int]:
    if spec in (None, "all"):
        return list(range(len(names)))
    out = []
    for item in spec.split(","):
        item = item.strip()
        if item in names:
            out.append(list(names).index(item))
        elif item.isdigit() and int(item) < len(names):
            out.append(int(item))
        else:
            raise UsageError(f"unknown feature {item!r}; choose from {', '.join(names)}")
    return out


def _intervals(spec: str, times, status):
    if spec in (None, "auto"):
        return survshap.event_free_intervals(times, status)
    out = []
    for part in spec.split(","):
        a, b = _window(part)
        out.append((a, b))
    return out


def _lambda(spec):
    if spec in (None, "auto"):
        return None
    try:
        value = float(spec)
    except ValueError:
        raise UsageError(f"--lambda must be 'auto' or a number, got {spec!r}") from None
    if value < 0:
        raise UsageError("--lambda must be non-negative")
    return value


def _positive(name: str, value, minimum: int = 1) -> None:
    if value is not None and value < minimum:
        raise UsageError(f"--{name.replace('_', '-')} must be >= {minimum}")


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_forest(path) -> forest_mod.Forest:
    f = forest_mod.load_forest(path)
    if f.times is None or f.status is None:
        raise DataError(f"{path}: forest was saved without training outcomes")
    return f


# --------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    _positive("n", args.n, 2)
    try:
        cfg = sim.SimConfig(args.scenario, args.n, derive_seed(args.seed, "simulate", "sim"),
                            args.event_fraction)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    dataset, truth = sim.simulate(cfg)
    out = _out(args)
    dataio.write_dataset(dataset, out)
    _write_json(out / "truth.json", truth.to_json(dataset.ids))
    if args.svg:
        from . import plots

        plots.trajectories_by_status(dataset.samples, dataset.status, out / "trajectories.svg")
    print(f"wrote {len(dataset)} subjects ({int(dataset.status.sum())} events) to {out}")
    return EXIT_OK


def cmd_fpca(args) -> int:
    config = fpca.FPCAConfig(n_grid=args.n_grid, p=args.p, fve=args.fve, bw_mean=args.bw_mean, bw_cov=args.bw_cov)
    try:
        config.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    dataset = _load_dataset(args.data, _window(args.window))
    basis, scores = fpca.fit_pace(dataset.samples, dataset.window, config)
    out = _out(args)
    fpca.save_basis(basis, out / "basis.json")
    scores.to_csv(out / "scores.csv")
    if args.svg:
        from . import plots

        recon = fpca.reconstruct(scores.values, basis)
        plots.series_with_intervals(basis.grid, {f"xi{m + 1}": basis.eigenfunctions[m] for m in range(min(basis.p, 4))},
                                    [], out / "eigenfunctions.svg", "Leading eigenfunctions", "xi(t)")
        plots.lfsdc_with_regions(basis.grid, basis.mean.values, recon[dataset.status == 1], recon[dataset.status == 0],
                                 out / "reconstructions.svg", "Reconstructions (left: event, right: censored)")
    print(f"kept {basis.p} components, sigma2 = {basis.noise_variance:.6g}")
    return EXIT_OK


def _tree_config(args) -> tree_mod.TreeConfig:
    cfg = tree_mod.TreeConfig(args.min_node_size, args.max_depth, None, args.alpha)
    try:
        cfg.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return cfg


def cmd_grow_tree(args) -> int:
    cfg = _tree_config(args)
    dataset = _load_dataset(args.data, _window(args.window))
    basis, scores = _load_fpca(args.fpca, dataset.ids)
    fm = _features(dataset, scores)
    tree = tree_mod.grow_tree(fm, dataset.event_times, dataset.status, cfg)
    out = _out(args)
    payload = discrimination.export_tree(tree, scores, basis)
    _write_json(out / "tree.json", payload)
    _write_terminal_csv(tree, out / "terminals.csv")
    if args.svg:
        from . import plots

        terms = tree.terminals()
        plots.step_functions({f"node {n.node_id}": n.sf for n in terms}, out / "terminal_km.svg",
                             "Kaplan-Meier by terminal node", "S(t)")
        plots.step_functions({f"node {n.node_id}": n.chf for n in terms}, out / "terminal_na.svg",
                             "Nelson-Aalen by terminal node", "H(t)")
    root = tree.root.split
    desc = "none" if root is None else f"{fm.names[root.feature]} <= {root.threshold:.6g}"
    print(f"grew tree: {len(tree.nodes)} nodes, depth {tree.depth}, root split {desc}")
    return EXIT_OK


def _write_terminal_csv(tree, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "t", "sf", "chf"])
        for node in tree.terminals():
            for t in node.sf.jump_times.tolist():
                w.writerow([node.node_id, repr(t), repr(float(node.sf(t))), repr(float(node.chf(t)))])


def cmd_grow_forest(args) -> int:
    cfg = _tree_config(args)
    _positive("trees", args.trees)
    dataset = _load_dataset(args.data, _window(args.window))
    basis, scores = _load_fpca(args.fpca, dataset.ids)
    fm = _features(dataset, scores)
    if args.mtry is not None and not 1 <= args.mtry <= fm.n_features:
        raise UsageError(f"--mtry must be in [1, {fm.n_features}]")
    fcfg = forest_mod.ForestConfig(args.trees, args.mtry, cfg)
    seed = derive_seed(args.seed, "grow-forest", "forest")
    f = forest_mod.grow_forest(fm, dataset.event_times, dataset.status, fcfg, seed, ids=dataset.ids)
    out = _out(args)
    forest_mod.save_forest(f, out / "forest.jsonl")
    oob_sf = forest_mod.oob_predict_sf(f) if _always_oob(f) else None
    metrics = {
        "n_trees": f.n_trees,
        "mtry": fcfg.resolved_mtry(fm.n_features),
        "mean_oob_fraction": float(np.mean([o.size for o in f.oob_indices]) / len(dataset)),
        "oob_integrated_brier": None if oob_sf is None else forest_mod.oob_integrated_brier(f, f.times, f.status),
    }
    _write_json(out / "metrics.json", metrics)
    if oob_sf is not None:
        with open(out / "oob_sf.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", "t", "sf"])
            for sid, row in zip(dataset.ids, oob_sf.tolist()):
                for t, v in zip(f.event_grid.tolist(), row):
                    w.writerow([sid, repr(t), repr(v)])
    print(f"grew {f.n_trees} trees; OOB integrated Brier = {metrics['oob_integrated_brier']}")
    return EXIT_OK


def _always_oob(f) -> bool:
    seen = np.zeros(f.features.values.shape[0], dtype=bool)
    for oob in f.oob_indices:
        seen[oob] = True
    return bool(seen.all())


def cmd_predict(args) -> int:
    f = forest_mod.load_forest(args.forest)
    dataset = _load_dataset(args.data, _window(args.window))
    basis = fpca.load_basis(Path(args.fpca) / "basis.json")
    scores = fpca.pace_scores(dataset.samples, basis)
    fm = _features(dataset, scores)
    if fm.n_features != f.n_features:
        raise DataError(f"data give {fm.n_features} features but the forest expects {f.n_features}")
    chf, sf = forest_mod.predict_batch(f, fm.values)
    out = _out(args)
    forest_mod.write_predictions(out / "predictions.csv", dataset.ids, f.event_grid, chf, sf)
    if args.svg:
        from . import plots

        shown = {sid: sf[i] for i, sid in enumerate(dataset.ids[:10])}
        plots.series_with_intervals(f.event_grid, shown, [], out / "predictions.svg", "Ensemble survival", "S(t)")
    print(f"wrote predictions for {len(dataset)} subjects on {f.event_grid.size} times")
    return EXIT_OK


def cmd_lfsdc(args) -> int:
    payload = _read_json(args.tree)
    tree = tree_mod.tree_from_json(payload)
    basis, scores = _load_fpca(args.fpca)
    if args.node in (None, "all"):
        nodes = [n.node_id for n in tree.terminals()]
    else:
        try:
            nodes = [int(x) for x in args.node.split(",")]
        except ValueError:
            raise UsageError(f"--node must be 'all' or node ids, got {args.node!r}") from None
        bad = [n for n in nodes if not 0 <= n < len(tree.nodes)]
        if bad:
            raise UsageError(f"unknown node id {bad[0]}")
    out = _out(args)
    for node_id in nodes:
        curve = discrimination.lfsdc(tree, node_id, scores, basis)
        discrimination.write_curve_csv(curve, out / f"lfsdc_node{node_id}.csv")
        profile = discrimination.path_distance_profile(tree, node_id, scores, basis)
        with open(out / f"profile_node{node_id}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["depth", "d2"])
            for depth, d2 in profile:
                w.writerow([depth, repr(d2)])
        if args.svg:
            from . import plots

            node = tree.nodes[node_id]
            V = scores.values
            if node.split is not None:
                regions = discrimination.separation_regions(tree, node_id)
                left, right = fpca.reconstruct(V[regions.left_ids], basis), fpca.reconstruct(V[regions.right_ids], basis)
            else:
                left, right = fpca.reconstruct(V[node.members], basis), np.empty((0, basis.grid.size))
            plots.lfsdc_with_regions(basis.grid, curve.values, left, right, out / f"lfsdc_node{node_id}.svg",
                                     f"LFSDC at node {node_id}")
            plots.distance_profile(profile, out / f"profile_node{node_id}.svg")
    print(f"wrote LFSDC curves for {len(nodes)} node(s)")
    return EXIT_OK


def _background(f, size: int, seed: int) -> np.ndarray:
    W = f.features.values
    if W.shape[0] <= size:
        return W
    rng = np.random.default_rng(seed)
    return W[np.sort(rng.choice(W.shape[0], size=size, replace=False))]


def cmd_explain_local(args) -> int:
    _positive("background", args.background)
    f = _load_forest(args.forest)
    names = f.features.names
    selected = _resolve_features(args.features, names)
    lam = _lambda(args.lam)
    if args.unit not in f.ids:
        raise DataError(f"unit {args.unit!r} is not a training subject of this forest")
    i = f.ids.index(args.unit)
    w = f.features.values[i]
    d = w.size
    bg = _background(f, args.background, derive_seed(args.seed, "explain-local", "survshap", 1))
    mode = args.mode
    if mode == "auto":
        mode = "exact" if d <= survshap.EXACT_MAX_FEATURES else "kernel"
    if mode == "exact":
        if d > survshap.EXACT_MAX_FEATURES:
            raise UsageError(f"exact mode supports at most {survshap.EXACT_MAX_FEATURES} features; use --mode kernel")
        shap = survshap.survshap_exact(f, w, bg, unit_id=args.unit, feature_names=names)
    else:
        minimum = min(2 * d + 2, 2**d - 2)
        if args.budget is not None and args.budget < minimum:
            raise UsageError(f"--budget must be at least {minimum}")
        shap = survshap.survshap_kernel(f, w, bg, args.budget, derive_seed(args.seed, "explain-local", "survshap", 0),
                                        unit_id=args.unit, feature_names=names)
    intervals = _intervals(args.intervals, f.times, f.status)
    summaries = []
    for j in selected:
        summaries.extend(survshap.shap_summaries(shap, j, intervals, lam))
    out = _out(args)
    survshap.write_shap_csv(shap, out / f"shap_{args.unit}.csv")
    survshap.write_summary_csv(summaries, out / f"shap_summary_{args.unit}.csv", names)
    if args.svg:
        from . import plots

        bounds = sorted({x for iv in intervals for x in iv})
        plots.series_with_intervals(shap.times, {names[j]: shap.normalized[:, j] for j in selected}, bounds,
                                    out / f"shap_{args.unit}.svg", f"SurvSHAP(t) for {args.unit}", "phi*")
    print(f"explained unit {args.unit} ({mode} mode) over {len(intervals)} interval(s)")
    return EXIT_OK


def cmd_explain_global(args) -> int:
    _positive("repeats", args.repeats)
    f = _load_forest(args.forest)
    names = f.features.names
    selected = _resolve_features(args.features, names)
    lam = _lambda(args.lam)
    if not _always_oob(f):
        raise DataError("some training subjects are never out-of-bag; grow more trees")
    model = pfi.OOBModel(f)
    data = pfi.SurvivalData(f.features.values, f.times, f.status)
    seed = derive_seed(args.seed, "explain-global", "pfi")
    fi0 = pfi.baseline_loss(model, data)
    intervals = _intervals(args.intervals, f.times, f.status)
    out = _out(args)
    curves, summaries = {}, []
    for j in selected:
        curve = pfi.averaged_importance(model, data, j, args.repeats, seed, fi0)
        curves[j] = curve
        pfi.write_curve_csv(curve, out / f"pfi_{names[j]}.csv")
        summaries.extend(pfi.importance_summaries(curve, intervals, lam))
    pfi.write_summary_csv(summaries, out / "pfi_summary.csv", names)
    ranking = sorted(((j, abs(float(np.mean(c.raw)))) for j, c in curves.items()), key=lambda x: -x[1])
    with open(out / "pfi_ranking.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "feature", "importance"])
        for r, (j, score) in enumerate(ranking, start=1):
            w.writerow([r, names[j], repr(score)])
    if args.svg:
        from . import plots

        bounds = sorted({x for iv in intervals for x in iv})
        plots.series_with_intervals(f.event_grid, {names[j]: c.raw for j, c in curves.items()}, bounds,
                                    out / "pfi.svg", "Averaged time importance", "FI(t)")
    print("top features: " + ", ".join(names[j] for j, _ in ranking[:5]))
    return EXIT_OK


def cmd_report(args) -> int:
    if (args.tree is None) == (args.forest is None):
        raise UsageError("report needs exactly one of --tree or --forest")
    out = _out(args)
    if args.tree is not None:
        payload = _read_json(args.tree)
        tree = tree_mod.tree_from_json(payload)
        rebuilt = tree_mod.tree_to_json(tree)
        for item, original in zip(rebuilt["nodes"], payload["nodes"]):
            if "discrimination" in original:
                item["discrimination"] = original["discrimination"]
        if "grid" in payload:
            rebuilt["grid"] = payload["grid"]
        _write_json(out / "tree.json", rebuilt)
        with open(out / "splits.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["node", "depth", "feature", "threshold", "statistic", "p_value", "n"])
            for node in tree.nodes:
                if node.split is not None:
                    s = node.split
                    w.writerow([node.node_id, node.depth, tree.names[s.feature] if tree.names else s.feature,
                                repr(s.threshold), repr(s.statistic), repr(s.p_value), node.members.size])
        if args.svg:
            from . import plots

            plots.step_functions({f"node {n.node_id}": n.sf for n in tree.terminals()}, out / "terminal_km.svg",
                                 "Kaplan-Meier by terminal node", "S(t)")
        print(f"tree: {len(tree.nodes)} nodes, {len(tree.terminals())} terminals, depth {tree.depth}")
        return EXIT_OK
    f = forest_mod.load_forest(args.forest)
    n = f.features.values.shape[0]
    summary = {
        "n_trees": f.n_trees,
        "n_subjects": n,
        "n_features": f.n_features,
        "seed": f.seed,
        "mean_oob_fraction": float(np.mean([o.size for o in f.oob_indices]) / n),
        "mean_terminals": float(np.mean([len(t.terminals()) for t in f.trees])),
        "root_features": {name: sum(1 for t in f.trees if t.root.split is not None and t.root.split.feature == j)
                          for j, name in enumerate(f.features.names)},
    }
    _write_json(out / "forest_report.json", summary)
    print(f"forest: {f.n_trees} trees over {n} subjects")
    return EXIT_OK


# ----------------------------------------------------------------- parser


def build_parser() -> _Parser:
    parser = _Parser(prog="fsurv", description="Functional survival trees, forests and explanations.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", help="JSON file of option defaults (flags override)")
        p.add_argument("--seed", type=int, default=0, help="root seed")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--svg", action="store_true", help="also write SVG line charts")
        return p

    p = command("simulate", cmd_simulate, "generate a synthetic dataset")
    p.add_argument("--scenario", type=str.upper, choices=["A", "B"], default="A")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--event-fraction", dest="event_fraction", type=float, default=0.40)

    p = command("fpca", cmd_fpca, "estimate the functional basis and subject scores")
    p.add_argument("--data", required=True, help="directory with longitudinal.csv and survival.csv")
    p.add_argument("--window", help="study window A:B (default: from truth.json, else inferred)")
    p.add_argument("--p", type=int, default=14)
    p.add_argument("--fve", type=float)
    p.add_argument("--bw-mean", dest="bw_mean", type=float)
    p.add_argument("--bw-cov", dest="bw_cov", type=float)
    p.add_argument("--n-grid", dest="n_grid", type=int, default=101)

    def tree_flags(p):
        p.add_argument("--data", required=True)
        p.add_argument("--fpca", required=True, help="directory with basis.json and scores.csv")
        p.add_argument("--window")
        p.add_argument("--min-node-size", dest="min_node_size", type=int, default=5)
        p.add_argument("--max-depth", dest="max_depth", type=int, default=10)
        p.add_argument("--alpha", type=float)

    tree_flags(command("grow-tree", cmd_grow_tree, "grow a single survival tree"))
    p = command("grow-forest", cmd_grow_forest, "grow a bootstrap survival forest")
    tree_flags(p)
    p.add_argument("--trees", type=int, default=1000)
    p.add_argument("--mtry", type=int)

    p = command("predict", cmd_predict, "ensemble survival predictions for a dataset")
    p.add_argument("--forest", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--fpca", required=True)
    p.add_argument("--window")

    p = command("lfsdc", cmd_lfsdc, "localized discrimination curves along tree paths")
    p.add_argument("--tree", required=True)
    p.add_argument("--fpca", required=True)
    p.add_argument("--node", default="all", help="'all' terminals or comma-separated node ids")

    p = command("explain-local", cmd_explain_local, "time-dependent Shapley values for one subject")
    p.add_argument("--forest", required=True)
    p.add_argument("--unit", required=True)
    p.add_argument("--features", default="all")
    p.add_argument("--intervals", default="auto")
    p.add_argument("--lambda", dest="lam", default="auto")
    p.add_argument("--background", type=int, default=100)
    p.add_argument("--budget", type=int)
    p.add_argument("--mode", choices=["auto", "exact", "kernel"], default="auto")

    p = command("explain-global", cmd_explain_global, "time-resolved permutation importance")
    p.add_argument("--forest", required=True)
    p.add_argument("--features", default="all")
    p.add_argument("--repeats", type=int, default=pfi.DEFAULT_REPEATS)
    p.add_argument("--intervals", default="auto")
    p.add_argument("--lambda", dest="lam", default="auto")

    p = command("report", cmd_report, "summarize a saved tree or forest")
    p.add_argument("--tree")
    p.add_argument("--forest")
    return parser


def _apply_config(parser: _Parser, argv: list[str]) -> None:
    """Install ``--config`` values as defaults of the chosen subcommand."""
    if "--config" not in argv and not any(a.startswith("--config=") for a in argv):
        return
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    path = Path(known.config)
    if not path.is_file():
        raise DataError(f"config file {path} not found")
    config = _read_json(path)
    if not isinstance(config, dict):
        raise DataError(f"{path}: config must be a JSON object")
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    name = next((a for a in argv if a in subparsers.choices), None)
    if name is None:
        return
    sp = subparsers.choices[name]
    dests = {a.dest for a in sp._actions}
    unknown = sorted(k for k in config if k.replace("-", "_") not in dests)
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
    values = {k.replace("-", "_"): v for k, v in config.items()}
    for action in sp._actions:
        if action.dest in values:
            action.required = False
    sp.set_defaults(**values)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"fsurv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError, ValueError, KeyError) as exc:
        print(f"fsurv: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


run = main

if __name__ == "__main__":
    sys.exit(main())
