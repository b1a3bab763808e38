"""Command-line front end: generate, cluster, eval, render, ingest.

Every run is a pure function of its config and input files; rerunning a
command writes byte-identical outputs.  Exit codes: 0 success, 2 for
configuration or parse problems, 3 for bad data.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import datagen, ingest
from .errors import ConfigError, DataError, ParseError
from .evaluation import Partition, adjusted_rand_index, confusion_matrix
from .hierarchy import (
    ClosestNode,
    QuasiHierarchy,
    RandomNeighbor,
    flatten,
    quasistructural_analysis,
)
from .similarity import (
    Criterion,
    EuclideanBall,
    FeatureTable,
    PearsonBall,
    SizeBall,
    build_basis,
)

_SCHEMA_VERSION = 1

_PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
]
_OUTLIER_COLOR = "#000000"


def _check_schema_version(doc: dict, what: str) -> None:
    version = doc.get("schema_version", _SCHEMA_VERSION)
    if version != _SCHEMA_VERSION:
        raise ConfigError(f"{what}: unsupported schema_version {version}")


def _load_json(path, what: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ConfigError(f"{what}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{what}: expected a JSON object")
    _check_schema_version(doc, what)
    return doc


def _dump_json(doc: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def criterion_from_dict(doc) -> Criterion:
    if not isinstance(doc, dict):
        raise ConfigError(f"criterion must be an object, got {doc!r}")
    kind = doc.get("kind")
    try:
        if kind == "euclidean":
            return EuclideanBall(radius=float(doc["radius"]))
        if kind == "size":
            return SizeBall(tolerance=float(doc["tolerance"]))
        if kind == "pearson":
            return PearsonBall(
                threshold=float(doc["threshold"]), channel=doc.get("channel")
            )
    except KeyError as exc:
        raise ConfigError(f"criterion {kind!r} is missing {exc}") from exc
    raise ConfigError(f"unknown criterion kind {kind!r}")


# -- generate ------------------------------------------------------------


def cmd_generate(args) -> int:
    spec = datagen.spec_from_dict(_load_json(args.spec, "generator spec"))
    table, labels = datagen.generate(spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    features_path = out_dir / "features.csv"
    labels_path = out_dir / "labels.csv"
    table.to_csv(features_path)
    datagen.write_labels_csv(labels_path, labels)
    print(json.dumps({
        "items": table.n_items,
        "features_csv": str(features_path),
        "labels_csv": str(labels_path),
    }, sort_keys=True))
    return 0


# -- cluster --------------------------------------------------------------


def _dataset_from_config(doc: dict):
    """Returns (table, criteria-or-None, labels-or-None)."""
    dataset = doc.get("dataset")
    if not isinstance(dataset, dict):
        raise ConfigError("config needs a 'dataset' object")
    kind = dataset.get("kind")
    if kind in ("features", "raw_series") and "path" not in dataset:
        raise ConfigError(f"{kind} dataset needs a 'path'")
    if kind == "generate":
        spec = datagen.spec_from_dict(dataset.get("spec", {}))
        table, _ = datagen.generate(spec)
        return table, None, None
    if kind == "features":
        return FeatureTable.from_csv(dataset["path"]), None, None
    if kind == "raw_series":
        sites = ingest.load_csv(dataset["path"])
        if not sites:
            return FeatureTable(), [], None
        resolutions = tuple(dataset.get("resolutions", ingest.RESOLUTIONS))
        table = ingest.build_resampled_table(
            sites, resolutions, dataset.get("aggregate", "mean")
        )
        rho = dataset.get("rho")
        if rho is None:
            raise ConfigError("raw_series dataset needs 'rho' (scalar or per-resolution map)")
        criteria = ingest.build_resolution_criteria(table, rho)
        return table.as_feature_table(), criteria, list(table.site_ids)
    raise ConfigError(f"unknown dataset kind {kind!r}")


def cmd_cluster(args) -> int:
    doc = _load_json(args.config, "cluster config")
    table, criteria, item_labels = _dataset_from_config(doc)
    if criteria is None:
        criteria = [criterion_from_dict(c) for c in doc.get("criteria", [])]
    mode = doc.get("mode", "prefilter")
    d = int(doc.get("d", 0))
    th_qh = float(doc.get("th_qh", 0.5))
    rng_seed = int(doc.get("rng_seed", 0))
    tie_break = doc.get("equivalence_tie_break", "lowest_index")

    out_dir = Path(args.out_dir if args.out_dir else doc.get("output_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)

    if table.n_items == 0:
        summary = {"clusters": 0, "outliers": 0, "sets": 0, "roots": 0}
        _dump_json(
            {"schema_version": _SCHEMA_VERSION, "threshold": th_qh,
             "universe_size": 0, "sets": [], "edges": [], "roots": []},
            out_dir / "hierarchy.json",
        )
        with open(out_dir / "assignment.csv", "w", newline="") as fh:
            fh.write("item_id,cluster_id\r\n")
        with open(out_dir / "hierarchy.dot", "w") as fh:
            fh.write("digraph quasihierarchy {\n  rankdir=TB;\n}\n")
        print(json.dumps(summary, sort_keys=True))
        return 0

    space = build_basis(table, criteria, mode, labels=item_labels)
    seed_name = doc.get("seed_func", "closest_node")
    if seed_name == "closest_node":
        seed_func = ClosestNode.from_criteria(criteria)
    elif seed_name == "random_neighbor":
        seed_func = RandomNeighbor(rng_seed)
    else:
        raise ConfigError(f"unknown seed_func {seed_name!r}")

    hierarchy = quasistructural_analysis(
        space, table, d, seed_func, th_qh, tie_break=tie_break
    )
    result = flatten(hierarchy)

    result.to_csv(out_dir / "assignment.csv")
    _dump_json(hierarchy.to_json_dict(), out_dir / "hierarchy.json")
    with open(out_dir / "hierarchy.dot", "w") as fh:
        fh.write(hierarchy.to_dot())
    summary = {
        "clusters": len(result.clusters),
        "outliers": len(result.outliers),
        "sets": len(hierarchy.family),
        "roots": len(hierarchy.roots),
    }
    print(json.dumps(summary, sort_keys=True))
    return 0


# -- eval -----------------------------------------------------------------


def _read_two_column_csv(path, what: str) -> dict[str, str]:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                return {}
            out = {}
            for row in reader:
                if len(row) < 2:
                    raise ConfigError(f"{what}: malformed row {row!r}")
                out[row[0]] = row[1]
            return out
    except OSError as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def cmd_eval(args) -> int:
    found = _read_two_column_csv(args.assignment, "assignment csv")
    truth = _read_two_column_csv(args.labels, "labels csv")
    if set(found) != set(truth):
        raise ConfigError("assignment and labels cover different item ids")
    items = list(truth)
    p = Partition(tuple(items), tuple(truth[i] for i in items))
    q = Partition(tuple(items), tuple(found[i] for i in items))
    matrix, rows, cols = confusion_matrix(p, q)
    print(json.dumps({
        "ari": adjusted_rand_index(p, q),
        "confusion": {"matrix": matrix, "rows": rows, "cols": cols},
        "n_items": len(items),
    }, sort_keys=True))
    return 0


# -- render ---------------------------------------------------------------


def svg_scatter(
    positions,
    cluster_ids,
    sizes=None,
    width: int = 640,
    height: int = 480,
) -> str:
    """Static scatter plot: one fill color per cluster, outliers black."""
    margin = 40.0
    xs = [p[0] for p in positions]
    ys = [p[1] for p in positions]
    if positions:
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
    else:
        x0 = y0 = 0.0
        x1 = y1 = 1.0
    span_x = (x1 - x0) or 1.0
    span_y = (y1 - y0) or 1.0
    scale = min((width - 2 * margin) / span_x, (height - 2 * margin) / span_y)

    def to_px(p):
        return (
            margin + (p[0] - x0) * scale,
            height - margin - (p[1] - y0) * scale,
        )

    if sizes is not None and sizes:
        s_hi = max(sizes) or 1.0
        radii = [3.0 + 9.0 * math.sqrt(max(s, 0.0) / s_hi) for s in sizes]
    else:
        radii = [4.0] * len(positions)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    for p, cid, r in zip(positions, cluster_ids, radii):
        px, py = to_px(p)
        color = _OUTLIER_COLOR if cid < 0 else _PALETTE[cid % len(_PALETTE)]
        lines.append(
            f'<circle cx="{px:.2f}" cy="{py:.2f}" r="{r:.2f}" '
            f'fill="{color}" fill-opacity="0.75"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def cmd_render(args) -> int:
    wrote = {}
    if args.svg:
        if not (args.assignment and args.features):
            raise ConfigError("svg output needs --assignment and --features")
        table = FeatureTable.from_csv(args.features)
        if table.positions is None:
            raise ConfigError("scatter rendering needs x,y columns in the features csv")
        assignment = _read_two_column_csv(args.assignment, "assignment csv")
        if len(assignment) != table.n_items:
            raise ConfigError("assignment and features disagree on item count")
        try:
            cluster_ids = [int(assignment[str(i)]) for i in range(table.n_items)]
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"assignment csv: {exc!r}") from exc
        svg = svg_scatter(table.positions, cluster_ids, table.sizes)
        with open(args.svg, "w") as fh:
            fh.write(svg)
        wrote["svg"] = args.svg
    if args.dot:
        if not args.hierarchy:
            raise ConfigError("dot output needs --hierarchy")
        doc = _load_json(args.hierarchy, "hierarchy json")
        try:
            hierarchy = QuasiHierarchy.from_json_dict(doc)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"hierarchy json: {exc!r}") from exc
        with open(args.dot, "w") as fh:
            fh.write(hierarchy.to_dot(min_size=args.min_size))
        wrote["dot"] = args.dot
    if not wrote:
        raise ConfigError("nothing to render: pass --svg and/or --dot")
    print(json.dumps(wrote, sort_keys=True))
    return 0


# -- ingest ---------------------------------------------------------------


def cmd_ingest(args) -> int:
    sites = ingest.load_csv(args.input)
    if not sites:
        raise DataError("input csv contains no readings")
    table = ingest.build_resampled_table(
        sites, tuple(args.resolutions), args.aggregate
    )
    written = table.write_csvs(args.out_dir)
    print(json.dumps({
        "sites": len(table.site_ids),
        "dropped": [list(d) for d in table.dropped],
        "window": list(table.window),
        "buckets": {r: int(table.data[r].shape[1]) for r in table.resolutions},
        "files": written,
    }, sort_keys=True))
    return 0


# -- entry point ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pretopo",
        description="Multi-criteria hierarchical clustering on pretopological spaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset from a JSON spec")
    p.add_argument("--spec", required=True, help="generator spec (JSON)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("cluster", help="run the full clustering pipeline")
    p.add_argument("--config", required=True, help="run config (JSON)")
    p.add_argument("--out-dir", default=None, help="overrides output_dir from the config")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("eval", help="compare an assignment against ground truth")
    p.add_argument("--assignment", required=True, help="item_id,cluster_id csv")
    p.add_argument("--labels", required=True, help="item_id,label csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render", help="draw clusters (svg) and/or the hierarchy (dot)")
    p.add_argument("--assignment", help="item_id,cluster_id csv")
    p.add_argument("--features", help="features csv with x,y columns")
    p.add_argument("--svg", help="output scatter svg path")
    p.add_argument("--hierarchy", help="hierarchy json")
    p.add_argument("--dot", help="output dot path")
    p.add_argument("--min-size", type=int, default=3,
                   help="hide hierarchy sets smaller than this (default 3)")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("ingest", help="resample a raw consumption csv")
    p.add_argument("--input", required=True, help="site_id,timestamp,value csv")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--resolutions", nargs="+", default=list(ingest.RESOLUTIONS),
                   choices=list(ingest.RESOLUTIONS))
    p.add_argument("--aggregate", default="mean", choices=["mean", "sum"])
    p.set_defaults(func=cmd_ingest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParseError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2
    except DataError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
