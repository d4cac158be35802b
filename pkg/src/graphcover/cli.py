"""graphcover command line: enumerate, cover, correlate, bound, ingest-check.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 resource cap exceeded.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import sys

import click

from . import bounds as B
from .covering import EXACT_LIMIT, TooLarge as CoverTooLarge, covering_curve, exact_cover, greedy_cover
from .families import FamilySpec, TooLarge as FamilyTooLarge, enumerate_family, integer_partitions, partition_path_family, wedderburn_etherington
from .graph_core import DataError, GraphCollection, ingest_tu_dataset, write_tu_dataset
from .metrics import METRIC_KINDS, MetricError, MetricSpec, PairFailure, TooLargeForExact, distance_matrix
from .mpnn import correlate, random_model
from .unrolling import DEFAULT_VERTEX_CAP, ResourceCap, forest_vertex_count
from .wl import STABLE, quotient_classes

EXIT_CONFIG, EXIT_DATA, EXIT_CAP = 2, 3, 4


def _exit_code(exc: BaseException) -> int | None:
    if isinstance(exc, PairFailure):
        exc = exc.cause
    if isinstance(exc, (ResourceCap, FamilyTooLarge, CoverTooLarge, TooLargeForExact)):
        return EXIT_CAP
    if isinstance(exc, DataError):
        return EXIT_DATA
    if isinstance(exc, (MetricError, B.BoundError, ValueError, KeyError, json.JSONDecodeError)):
        return EXIT_CONFIG
    return None


def _dump(path: str, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=True) + "\n"


def _floats(text: str) -> list[float]:
    try:
        out = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}") from exc
    if not out:
        raise click.BadParameter("list must not be empty")
    return out


def _load_source(source: str, name: str | None) -> tuple[GraphCollection, dict]:
    """A TU dataset directory, or a family written as kind:n / labeled:n,d,q."""
    if os.path.isdir(source):
        name = name or os.path.basename(os.path.normpath(source))
        return ingest_tu_dataset(source, name), {"dataset": name}
    if ":" not in source:
        raise DataError(f"{source!r} is neither a directory nor a family spec")
    spec = FamilySpec.parse(source)
    return enumerate_family(spec), {"family": spec.describe()}


@click.group()
def main() -> None:
    """Covering numbers, forest distances and generalization bounds for message-passing networks."""


@main.command("enumerate")
@click.argument("family")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--depth", "L", type=int, default=None, help="1-WL iterations for the class count (default: until stable).")
def cmd_enumerate(family: str, out_dir: str, L: int | None) -> None:
    """Write FAMILY as a TU dataset plus a census.json summary."""
    spec = FamilySpec.parse(family)
    coll = enumerate_family(spec)
    os.makedirs(out_dir, exist_ok=True)
    name = spec.describe().replace(":", "_").replace(",", "_")
    write_tu_dataset(coll, out_dir, name)
    by_order: dict[int, list] = {}
    for g in coll.graphs:
        by_order.setdefault(g.n, []).append(g)
    m = sum(len(quotient_classes(gs, "wl", STABLE if L is None else L)) for gs in by_order.values())
    census = {"family": spec.describe(), "count": len(coll), "m": m}
    if spec.kind == "otter":
        census["w_j"] = wedderburn_etherington((spec.n - 1) // 2)
    if spec.kind == "partition-paths":
        census["partitions"] = len(integer_partitions(spec.n))
        census["groups"] = len(partition_path_family(spec.n)[1])
    _dump(os.path.join(out_dir, "census.json"), _json(census))
    click.echo(json.dumps(census, sort_keys=True))


@main.command("cover")
@click.argument("source")
@click.option("--name", default=None, help="TU dataset name (default: directory name).")
@click.option("--metric", type=click.Choice(METRIC_KINDS), default="fd", show_default=True)
@click.option("--depth", "L", type=int, default=3, show_default=True)
@click.option("--radii", required=True, help="Comma-separated radii.")
@click.option("--pad/--no-pad", default=True, show_default=True, help="Pad graphs to the largest order.")
@click.option("--exact-limit", type=int, default=EXACT_LIMIT, show_default=True)
@click.option("--vertex-cap", type=int, default=DEFAULT_VERTEX_CAP, show_default=True,
              help="Largest padded forest (vertices per graph) the tree-mover route may build.")
@click.option("--lp-max-order", type=int, default=32, show_default=True, help="Largest order for delta-ds1.")
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
def cmd_cover(source, name, metric, L, radii, pad, exact_limit, vertex_cap, lp_max_order, threads, out_dir, fmt) -> None:
    """Distance matrix, then greedy and (when small) exact covers per radius."""
    radii_list = _floats(radii)
    coll, origin = _load_source(source, name)
    if pad:
        coll = coll.padded()
    n = coll.max_order
    if metric == "tmd" and n >= 2 and forest_vertex_count(n, L) > vertex_cap:
        raise ResourceCap(f"depth-{L} forests on {n} vertices exceed the vertex cap {vertex_cap}")
    if metric == "delta-ds1" and n > lp_max_order:
        raise TooLargeForExact(f"order {n} exceeds the LP cap {lp_max_order}")
    spec = MetricSpec(metric, L if metric != "wl" else None)
    dm = distance_matrix(coll, spec, threads)
    rows = covering_curve(dm, radii_list, exact_limit)
    os.makedirs(out_dir, exist_ok=True)
    covers = []
    for eps in sorted(radii_list):
        covers.append(json.loads(greedy_cover(dm, eps).to_json()))
        try:
            covers.append(json.loads(exact_cover(dm, eps, exact_limit).to_json()))
        except CoverTooLarge:
            pass
    meta = dict(origin, metric=spec.describe(), graphs=len(coll))
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epsilon", "N_greedy", "N_exact", "m"])
        for r in rows:
            w.writerow([repr(r["epsilon"]), r["N_greedy"], "" if r["N_exact"] is None else r["N_exact"], r["m"]])
        _dump(os.path.join(out_dir, "cover.csv"), buf.getvalue())
        _dump(os.path.join(out_dir, "distances.csv"), dm.to_csv())
    else:
        _dump(os.path.join(out_dir, "cover.json"), _json({"meta": meta, "curve": rows}))
        _dump(os.path.join(out_dir, "distances.json"), dm.to_json() + "\n")
    _dump(os.path.join(out_dir, "covers.json"), _json({"meta": meta, "covers": covers}))
    for r in rows:
        click.echo(f"eps={r['epsilon']:g} N_greedy={r['N_greedy']} N_exact={r['N_exact']} m={r['m']}")


@main.command("correlate")
@click.argument("source")
@click.option("--name", default=None)
@click.option("--depths", default="3", show_default=True, help="Comma-separated layer counts L.")
@click.option("--kinds", default="sum", show_default=True, help="Comma-separated model kinds (ord, sum, mean).")
@click.option("--models", "n_models", type=int, default=5, show_default=True)
@click.option("--width", type=int, default=16, show_default=True)
@click.option("--pairs", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def cmd_correlate(source, name, depths, kinds, n_models, width, pairs, seed, out_dir) -> None:
    """Scatter of forest distance against output distance and Pearson r per (L, model)."""
    coll, origin = _load_source(source, name)
    coll = coll.padded()
    os.makedirs(out_dir, exist_ok=True)
    d_in = coll.graphs[0].d if coll.graphs else 1
    summary = []
    for L in (int(x) for x in _floats(depths)):
        for kind in kinds.split(","):
            models = [random_model(kind, d_in, [width] * L, (width, 1), seed=seed + i) for i in range(n_models)]
            for i, res in enumerate(correlate(models, coll, L, pairs, seed)):
                stem = f"scatter_L{L}_{kind}_{i}.csv"
                _dump(os.path.join(out_dir, stem), res.to_csv())
                _dump(os.path.join(out_dir, f"model_L{L}_{kind}_{i}.json"), models[i].to_json() + "\n")
                summary.append({"L": L, "kind": kind, "model": i, "seed": seed + i,
                                "r": None if math.isnan(res.r) else res.r, "degenerate": res.degenerate, "scatter": stem})
                click.echo(f"L={L} kind={kind} model={i} r={res.r:.4f}{' (degenerate)' if res.degenerate else ''}")
    _dump(os.path.join(out_dir, "correlations.json"), _json(dict(origin, pairs=pairs, seed=seed, results=summary)))


_BOUNDS = {
    "xu-mannor": B.xu_mannor_bound,
    "extended": B.extended_bound,
    "kawaguchi": B.kawaguchi_bound,
    "wl-classification": B.wl_classification_bound,
    "wl-regression": B.wl_regression_bound,
    "fd": B.fd_bound,
    "mean-fd": B.mean_fd_bound,
    "tree-distance": B.tree_distance_bound,
    "vc": B.vc_bound,
}


def _bound_call(formula: str, params: dict, delta: float) -> B.BoundReport:
    args = dict(params, delta=delta)
    if formula == "tree-distance":
        table = args.pop("gamma_inverse", None)
        args["gamma_inverse"] = B.GammaInverse(table["x"], table["y"]) if table else None
        if "per_order" in args:
            args["per_order"] = {int(k): v for k, v in args["per_order"].items()}
    return _BOUNDS[formula](**args)


@main.command("bound")
@click.argument("formula", type=click.Choice(sorted(_BOUNDS)))
@click.option("--coefficients", "coef_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSON object of keyword arguments for the formula.")
@click.option("--delta", type=float, default=0.1, show_default=True)
@click.option("--k-max", type=int, default=None, help="Scan k = 0..k_max (tree variants).")
@click.option("--epsilon-scan", is_flag=True, help="Scan epsilon over (0,1) (wl-regression).")
@click.option("--target", type=float, default=None, help="Search for a delta reproducing this value.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def cmd_bound(formula, coef_path, delta, k_max, epsilon_scan, target, out_dir) -> None:
    """Evaluate FORMULA with coefficients from a JSON file; optional k, epsilon and delta scans."""
    with open(coef_path) as fh:
        try:
            params = json.load(fh)
        except json.JSONDecodeError as exc:
            raise click.UsageError(f"malformed coefficient file: {exc}") from exc
    if not isinstance(params, dict):
        raise click.UsageError("coefficient file must hold a JSON object")
    params.pop("delta", None)
    try:
        report = _bound_call(formula, params, delta)
    except TypeError as exc:
        raise click.UsageError(f"coefficients do not fit {formula}: {exc}") from exc
    os.makedirs(out_dir, exist_ok=True)
    result = {"report": report.to_dict()}
    if k_max is not None:
        sc = B.k_scan(k_max, lambda k: _bound_call(formula, dict(params, k=k), delta))
        _dump(os.path.join(out_dir, "k_scan.csv"), sc.to_csv())
        result["k_best"] = {"k": sc.best[0], "value": sc.best[1].value}
    if epsilon_scan:
        sc = B.scan("epsilon", B.epsilon_grid(), lambda e: _bound_call(formula, dict(params, epsilon=e), delta))
        _dump(os.path.join(out_dir, "epsilon_scan.csv"), sc.to_csv())
        result["epsilon_best"] = {"epsilon": sc.best[0], "value": sc.best[1].value}
    ds = B.delta_scan(lambda d: _bound_call(formula, params, d), target)
    result["delta_scan"] = ds
    _dump(os.path.join(out_dir, "bound.json"), json.dumps(result, indent=1, sort_keys=True, default=B._jsonable) + "\n")
    click.echo(f"{report.formula}: {report.value:.6g} (delta={delta})")
    if target is not None:
        click.echo(f"target {target}: {'matched at delta=%g' % ds['delta'] if ds['matched'] else 'not reproducible'}")


@main.command("ingest-check")
@click.argument("path", type=click.Path())
@click.option("--name", default=None)
def cmd_ingest_check(path, name) -> None:
    """Parse a TU dataset and print a summary."""
    coll, origin = _load_source(path, name)
    orders = [g.n for g in coll.graphs]
    info = dict(origin, graphs=len(coll), feature_dim=coll.graphs[0].d if coll.graphs else 0,
                max_order=max(orders, default=0), min_order=min(orders, default=0),
                edges=sum(len(g.edges) for g in coll.graphs), labels=sorted(set(coll.targets)))
    click.echo(json.dumps(info, sort_keys=True))


def run(argv: list[str] | None = None) -> int:
    """Entry point with the documented exit codes."""
    try:
        main.main(args=argv, prog_name="graphcover", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_CONFIG
    except click.exceptions.Abort:
        return 1
    except Exception as exc:
        code = _exit_code(exc)
        if code is None:
            raise
        click.echo(f"error: {exc}", err=True)
        return code
    return 0


def entry() -> None:
    sys.exit(run())
