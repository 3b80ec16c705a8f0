"""Command line front end: ``topocluster <command> ...``.

Exit status is 0 on success, 1 for usage errors (bad flags or parameter
values) and 2 for data errors (unreadable or malformed input files).
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    SETTINGS,
    DataFormatError,
    LabeledDataset,
    generate_gaussian_mixture,
    generate_nested_spheres,
    generate_planar_toy,
    load_csv,
    save_csv,
    setting_spec,
    standardize,
)
from .density import DbscanParams, dbscan, write_labeling_csv
from .graph import DissimilarityMatrix, fuzzy_graph
from .harness import (
    SweepSpec,
    eps_sweep,
    fuzzy_only_sweep,
    replicate,
    run_pipeline,
    write_manifest,
)
from .layout import INIT_MODES, LayoutConfig, optimize_layout, write_embedding_csv
from .metrics import NOISE_POLICIES, ari, contingency, nmi_max
from .toy import toy_distance_matrix, toy_labels

PLANAR = ("overlapping", "bridged", "outliers", "outliers_with_noise")
GENERATORS = tuple(SETTINGS) + ("spheres", "toy") + PLANAR


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- arguments

def _add_input(p):
    p.add_argument("input", help="CSV of points (or a square dissimilarity matrix with --matrix)")
    p.add_argument("--label-column", default=None,
                   help="header name or column index of class labels; 'none' for no labels "
                        "(default: the column named 'label' if present)")
    p.add_argument("--matrix", action="store_true",
                   help="treat the feature columns as a precomputed dissimilarity matrix")
    p.add_argument("--standardize", choices=("none", "zscore", "minmax"), default="none")


def _add_layout(p):
    p.add_argument("--k", type=int, default=5, help="neighbourhood size (counts the point itself)")
    p.add_argument("--k-excludes-self", action="store_true",
                   help="interpret --k as the number of neighbours besides the point itself")
    p.add_argument("--dim", type=int, default=2, help="embedding dimension")
    p.add_argument("--epochs", type=int, default=None, help="default: 200 (n <= 10000) else 500")
    p.add_argument("--neg-samples", type=int, default=5)
    p.add_argument("--learning-rate", type=float, default=1.0)
    p.add_argument("--init", choices=INIT_MODES, default="spectral")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=True,
                   help="sequential, bit-reproducible SGD (default) or parallel updates")


def _add_sweep(p, eps_max=50.0):
    p.add_argument("--eps-min", type=float, default=0.01)
    p.add_argument("--eps-max", type=float, default=eps_max)
    p.add_argument("--eps-step", type=float, default=0.01)
    p.add_argument("--min-pts", type=int, default=5)
    p.add_argument("--noise-policy", choices=NOISE_POLICIES, default="noise_as_cluster")
    p.add_argument("--self-in-neighborhood", action="store_true",
                   help="count a point inside its own eps-neighbourhood")


def _add_out(p, required=True):
    p.add_argument("--out", required=required, help="output CSV (a .manifest sidecar is written next to it)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="topocluster", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    p.add_argument("setting", choices=GENERATORS)
    p.add_argument("--per-cluster", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    _add_out(p)

    p = sub.add_parser("embed", help="fuzzy graph + layout; write the embedding")
    _add_input(p)
    _add_layout(p)
    _add_out(p)

    p = sub.add_parser("cluster", help="DBSCAN at one eps; write the labeling")
    _add_input(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--min-pts", type=int, default=5)
    p.add_argument("--self-in-neighborhood", action="store_true")
    _add_out(p)

    p = sub.add_parser("sweep", help="eps sweep on the embedding (or the raw input)")
    _add_input(p)
    _add_layout(p)
    _add_sweep(p)
    p.add_argument("--input-kind", choices=("embedding", "raw"), default="embedding",
                   help="'embedding' runs graph + layout first; 'raw' clusters the input as is")
    _add_out(p)

    p = sub.add_parser("fuzzy-sweep", help="eps sweep over 1 - v fuzzy-graph dissimilarities")
    _add_input(p)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--k-excludes-self", action="store_true")
    _add_sweep(p, eps_max=1.0)
    _add_out(p)

    p = sub.add_parser("replicate", help="repeat the embedding sweep over consecutive seeds")
    _add_input(p)
    _add_layout(p)
    _add_sweep(p)
    p.add_argument("--runs", type=int, default=25)
    _add_out(p)

    p = sub.add_parser("score", help="ARI and NMI between two labelings")
    p.add_argument("truth", help="CSV with a 'cluster' or 'label' column")
    p.add_argument("predicted", help="CSV with a 'cluster' or 'label' column")
    p.add_argument("--noise-policy", choices=NOISE_POLICIES, default="noise_as_cluster")
    _add_out(p, required=False)
    return parser


# ---------------------------------------------------------------- helpers

def _sidecar(out) -> Path:
    return Path(str(out) + ".manifest")


def _layout_config(args) -> LayoutConfig:
    return LayoutConfig(d=args.dim, n_epochs=args.epochs, negative_samples=args.neg_samples,
                        initial_lr=args.learning_rate, init=args.init,
                        seed=args.seed, deterministic=args.deterministic)


def _sweep_spec(args, kind) -> SweepSpec:
    return SweepSpec(args.eps_min, args.eps_max, args.eps_step, args.min_pts, kind,
                     args.noise_policy, args.self_in_neighborhood)


def _validate(args):
    """Build parameter objects up front so bad values are usage errors."""
    try:
        cfg = _layout_config(args) if hasattr(args, "dim") else None
        if hasattr(args, "k") and args.k < 1:
            raise ValueError("--k must be >= 1")
        if getattr(args, "runs", 1) < 1:
            raise ValueError("--runs must be >= 1")
        if getattr(args, "per_cluster", 1) < 1:
            raise ValueError("--per-cluster must be >= 1")
        spec = None
        if hasattr(args, "eps_step"):
            kind = {"fuzzy-sweep": "fuzzy_dissimilarity"}.get(args.command,
                                                              getattr(args, "input_kind", "embedding"))
            spec = _sweep_spec(args, kind)
        if args.command == "cluster":
            DbscanParams(args.eps, args.min_pts)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return cfg, spec


def _label_column(path, requested):
    if requested is not None:
        if requested.lower() == "none":
            return None
        return int(requested) if requested.lstrip("-").isdigit() else requested
    with open(path, newline="") as fh:
        first = next(csv.reader(fh), [])
    return "label" if "label" in [c.strip() for c in first] else None


def _load(args):
    """Returns (data, labels, name); data is points or a DissimilarityMatrix."""
    ds = load_csv(args.input, label_column=_label_column(args.input, args.label_column))
    if args.standardize != "none":
        ds = standardize(ds, args.standardize)
    data = ds.points
    if args.matrix:
        try:
            data = DissimilarityMatrix(ds.points)
        except ValueError as exc:
            raise DataFormatError(f"{args.input}: {exc}") from None
    return data, ds.labels, ds.name


def _need_labels(labels, path):
    if labels is None:
        raise DataFormatError(f"{path}: no label column to score against")
    return labels


def _dataset_for(data, labels, name):
    if isinstance(data, DissimilarityMatrix):
        return data
    return LabeledDataset(data, labels, name=name)


def _base_manifest(args, **extra):
    m = {"command": args.command, "version": __version__}
    if hasattr(args, "input"):
        m["input"] = args.input
    m.update(extra)
    return m


def _read_assignments(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    head = [c.strip() for c in rows[0]]
    for col in ("cluster", "label"):
        if col in head:
            j = head.index(col)
            break
    else:
        raise DataFormatError(f"{path}: needs a 'cluster' or 'label' column")
    out = []
    names = {}
    for lineno, r in enumerate(rows[1:], start=2):
        if len(r) != len(head):
            raise DataFormatError(f"{path}: row {lineno} has {len(r)} fields, expected {len(head)}")
        cell = r[j].strip()
        try:
            out.append(int(cell))
        except ValueError:
            out.append(names.setdefault(cell, -2 - len(names)))
    return np.array(out, dtype=np.int64)


# ---------------------------------------------------------------- commands

def cmd_generate(args, cfg, spec):
    if args.setting in SETTINGS:
        ds = generate_gaussian_mixture(setting_spec(args.setting, args.per_cluster, args.seed))
    elif args.setting == "spheres":
        ds = generate_nested_spheres((1.0, 2.0, 3.0), (args.per_cluster,) * 3, 0.0, seed=args.seed)
    elif args.setting == "toy":
        ds = LabeledDataset(toy_distance_matrix().values, toy_labels(), name="toy")
    else:
        ds = generate_planar_toy(args.setting, {"count": args.per_cluster}, seed=args.seed)
    save_csv(ds, args.out)
    write_manifest(_base_manifest(args, setting=args.setting, per_cluster=args.per_cluster,
                                  seed=args.seed, n_obs=ds.n_obs, n_features=ds.n_features),
                   _sidecar(args.out))
    print(f"wrote {ds.n_obs} x {ds.n_features} to {args.out}")


def cmd_embed(args, cfg, spec):
    data, labels, name = _load(args)
    graph = fuzzy_graph(data, args.k, k_includes_self=not args.k_excludes_self)
    emb = optimize_layout(graph, cfg)
    write_embedding_csv(emb, args.out, labels=labels)
    m = _base_manifest(args, k=args.k, k_includes_self=not args.k_excludes_self,
                       n_obs=emb.n_obs, n_edges=graph.n_edges, init_failed=emb.init_failed,
                       n_epochs=emb.n_epochs, initial_loss=emb.initial_loss, loss=emb.loss)
    m.update({f"layout.{key}": val for key, val in vars(cfg).items()})
    write_manifest(m, _sidecar(args.out))
    print(f"cross-entropy {emb.initial_loss:.6g} -> {emb.loss:.6g}")


def cmd_cluster(args, cfg, spec):
    data, labels, _ = _load(args)
    lab = dbscan(data, DbscanParams(args.eps, args.min_pts, args.self_in_neighborhood))
    write_labeling_csv(lab, args.out)
    write_manifest(_base_manifest(args, eps=args.eps, min_pts=args.min_pts,
                                  self_in_neighborhood=args.self_in_neighborhood,
                                  n_clusters=lab.n_clusters, n_noise=lab.n_noise),
                   _sidecar(args.out))
    msg = f"clusters={lab.n_clusters} noise={lab.n_noise}"
    if labels is not None and len(labels) >= 2:
        t = contingency(labels, lab.assignments)
        msg += f" ari={ari(t):.6f} nmi={nmi_max(t):.6f}"
    print(msg)


def _report(res):
    best = res.max()
    print(f"max ari={best:.6f} at eps={res.eps_opt():g}")
    pr = res.perfect_range()
    if pr:
        print(f"ari=1 for eps in [{pr[0]:g}, {pr[1]:g}]" + ("" if pr[2] else " (with gaps)"))


def cmd_sweep(args, cfg, spec):
    data, labels, name = _load(args)
    labels = _need_labels(labels, args.input)
    if args.input_kind == "raw":
        res = eps_sweep(data, spec, labels)
        res.manifest = {"n_obs": len(labels)}
        res.manifest.update({f"sweep.{key}": val for key, val in vars(spec).items()})
    else:
        res = run_pipeline(_dataset_for(data, labels, name), args.k, cfg, spec, labels=labels,
                           k_includes_self=not args.k_excludes_self)
    res.write_csv(args.out)
    write_manifest({**_base_manifest(args), **res.manifest}, _sidecar(args.out))
    _report(res)


def cmd_fuzzy_sweep(args, cfg, spec):
    data, labels, name = _load(args)
    labels = _need_labels(labels, args.input)
    res = fuzzy_only_sweep(_dataset_for(data, labels, name), args.k, spec, labels=labels,
                           k_includes_self=not args.k_excludes_self)
    res.write_csv(args.out)
    write_manifest({**_base_manifest(args), **res.manifest}, _sidecar(args.out))
    _report(res)


def cmd_replicate(args, cfg, spec):
    data, labels, name = _load(args)
    labels = _need_labels(labels, args.input)
    summary = replicate(_dataset_for(data, labels, name), args.k, cfg, spec, runs=args.runs,
                        base_seed=args.seed, labels=labels,
                        k_includes_self=not args.k_excludes_self)
    summary.write_csv(args.out)
    m = {**_base_manifest(args), **summary.manifest,
         "seeds": " ".join(str(s) for s in summary.seeds)}
    write_manifest(m, _sidecar(args.out))
    print(f"{summary.n_runs} runs; best mean ari={np.nanmax(summary.ari_mean):.6f}")


def cmd_score(args, cfg, spec):
    a = _read_assignments(args.truth)
    b = _read_assignments(args.predicted)
    if a.size != b.size:
        raise DataFormatError(f"labelings differ in length: {a.size} vs {b.size}")
    t = contingency(a, b, args.noise_policy)
    if t.n < 2:
        raise DataFormatError("fewer than two points left to score")
    a_val, n_val = ari(t), nmi_max(t)
    text = f"ari={a_val!r}\nnmi={'NaN' if math.isnan(n_val) else repr(n_val)}\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)


COMMANDS = {
    "generate": cmd_generate,
    "embed": cmd_embed,
    "cluster": cmd_cluster,
    "sweep": cmd_sweep,
    "fuzzy-sweep": cmd_fuzzy_sweep,
    "replicate": cmd_replicate,
    "score": cmd_score,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, spec = _validate(args)
    except UsageError as exc:
        print(f"topocluster {args.command}: error: {exc}", file=sys.stderr)
        return 1
    try:
        COMMANDS[args.command](args, cfg, spec)
    except (DataFormatError, OSError, ValueError) as exc:
        print(f"topocluster {args.command}: data error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
