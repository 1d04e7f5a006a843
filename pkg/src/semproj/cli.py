"""Command-line entry point: ``semproj <command> [options]``."""

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .config import RunConfig
from .dataset import load_dataset, load_norming, load_pairs, select_pairs
from .embeddings import DEFAULT_VOCAB_LIMIT, load_embeddings, open_store, save_cache
from .evaluation import SCHEMES, evaluate_experiment, outlier_sweep, project_scheme
from .exceptions import ConfigError, SemprojError
from .projection import pca_viz
from .ratings import load_ratings
from .runner import run_all, write_outputs
from .stats import DEFAULT_EXHAUSTIVE_LIMIT, fdr_by
from .subspace import alignment_diagnostics

log = logging.getLogger("semproj")


def _common():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--embeddings", help="embedding text file or binary cache")
    g.add_argument("--vocab-limit", type=int, default=DEFAULT_VOCAB_LIMIT)
    g.add_argument("--permutations", type=int, default=10_000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--fdr-q", type=float, default=0.05)
    g.add_argument("--exhaustive-limit", type=int, default=DEFAULT_EXHAUSTIVE_LIMIT)
    g.add_argument("--out-dir", help="write result tables here instead of stdout")
    g.add_argument("--keep-going", action="store_true",
                   help="list failing experiments instead of aborting")
    g.add_argument("--dataset", help="dataset JSON (default: bundled)")
    g.add_argument("--jobs", type=int, default=1, help="worker processes for `run`")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(
        prog="semproj", description="Project word embeddings onto antonym feature scales and score them.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cache", parents=[common], help="convert an embedding text file to a binary cache")
    p.add_argument("source")
    p.add_argument("out")

    sub.add_parser("diag", parents=[common], help="within/cross feature line alignment")

    p = sub.add_parser("project", parents=[common], help="project one category on one feature")
    p.add_argument("--category", required=True)
    p.add_argument("--feature", required=True)
    p.add_argument("--scheme", choices=SCHEMES, default="subspace")

    p = sub.add_parser("eval", parents=[common], help="evaluate one experiment against ratings")
    p.add_argument("--category", required=True)
    p.add_argument("--feature", required=True)
    p.add_argument("--ratings", required=True)

    p = sub.add_parser("controls", parents=[common], help="single-end and distance baselines")
    p.add_argument("--ratings-dir", required=True)
    p.add_argument("--pairs")

    p = sub.add_parser("sweep", parents=[common], help="extreme-item removal curve")
    p.add_argument("--category", required=True)
    p.add_argument("--feature", required=True)
    p.add_argument("--ratings", required=True)
    p.add_argument("--max-remove", type=int, default=10)

    p = sub.add_parser("viz", parents=[common], help="PCA plot coordinates")
    p.add_argument("--category", required=True)
    p.add_argument("--feature", required=True)
    p.add_argument("--k", type=int, choices=(2, 3), default=2)

    p = sub.add_parser("select-pairs", parents=[common], help="choose pairs from norming means")
    p.add_argument("--norming", required=True)
    p.add_argument("--manual", help="CSV of manually chosen category,feature pairs")
    p.add_argument("--exclude", action="append", default=[], metavar="CATEGORY:FEATURE")
    p.add_argument("--percentile", type=float, default=75.0)

    p = sub.add_parser("run", parents=[common], help="full pipeline over all pairs")
    p.add_argument("--ratings-dir", required=True)
    p.add_argument("--pairs", help="CSV of category,feature pairs (default: dataset pairs)")
    p.add_argument("--svg", action="store_true", help="also write per-experiment SVG scatters")
    p.add_argument("--no-sweep", action="store_true")
    return parser


def _config(args):
    return RunConfig(
        embeddings=args.embeddings or "",
        vocab_limit=args.vocab_limit,
        n_perm=args.permutations,
        fdr_q=args.fdr_q,
        seed=args.seed,
        exhaustive_limit=args.exhaustive_limit,
        norming_percentile=getattr(args, "percentile", 75.0),
    )


def _store(args):
    if not args.embeddings:
        raise ConfigError("--embeddings is required for this command")
    t0 = time.perf_counter()
    store = open_store(args.embeddings, args.vocab_limit)
    log.info("loaded %d x %d vectors in %.1fs", len(store), store.dim, time.perf_counter() - t0)
    return store


def _emit(args, name, fieldnames, rows):
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        fh = open(out / name, "w", newline="", encoding="utf-8")
    else:
        fh = sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(float(v)) if isinstance(v, float) else v for k, v in row.items()})
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_cache(args):
    store = load_embeddings(args.source, args.vocab_limit)
    save_cache(store, args.out)
    log.info("wrote %d tokens to %s", len(store), args.out)


def cmd_diag(args):
    store = _store(args)
    ds = load_dataset(args.dataset)
    t0 = time.perf_counter()
    rep = alignment_diagnostics(store, list(ds.features.values()))
    _emit(args, "diag.csv", ["feature", "within", "within_deg", "cross", "cross_deg"], rep.as_rows())
    print(json.dumps({
        "within": rep.within, "within_deg": rep.within_degrees,
        "cross": rep.cross, "cross_deg": rep.cross_degrees,
        "within_pooled": rep.within_pooled, "cross_pooled": rep.cross_pooled,
        "seconds": round(time.perf_counter() - t0, 3),
    }, indent=2), file=sys.stderr)


def cmd_project(args):
    store = _store(args)
    ds = load_dataset(args.dataset)
    res = project_scheme(store, ds, args.category, args.feature, args.scheme)
    _emit(args, f"projection_{args.category}_{args.feature}.csv".replace(" ", "-"),
          ["item", "raw", "z", "method", "provenance"], res.as_rows())


def cmd_eval(args):
    store = _store(args)
    ds = load_dataset(args.dataset)
    table = load_ratings(args.ratings)
    if (table.category, table.feature) != (args.category, args.feature):
        raise ConfigError(f"{args.ratings} holds {table.experiment}, not {args.category}:{args.feature}")
    rep = evaluate_experiment(store, ds, table, _config(args))
    # A lone experiment is its own FDR family.
    (rep.p_r_fdr,), (r_ok,) = fdr_by([rep.p_r], args.fdr_q)
    (rep.p_ocp_fdr,), (o_ok,) = fdr_by([rep.p_ocp], args.fdr_q)
    rep.significant = bool(r_ok and o_ok)
    _emit(args, "eval.csv", list(rep.ROW_FIELDS), [rep.as_row()])


def _dataset_with_pairs(args):
    ds = load_dataset(args.dataset)
    if getattr(args, "pairs", None):
        ds = ds.with_pairs(load_pairs(args.pairs))
    return ds


def cmd_controls(args):
    store = _store(args)
    ds = _dataset_with_pairs(args)
    result = run_all(_config(args), ds, args.ratings_dir, store, jobs=args.jobs,
                     keep_going=args.keep_going, sweep=False)
    rows = [{"experiment": e, "scheme": s, "r": v["r"], "ocp": v["ocp"]}
            for e in result.kept for s, v in result.controls[e].items()]
    _emit(args, "controls.csv", ["experiment", "scheme", "r", "ocp"], rows)
    if result.comparisons:
        _emit(args, "scheme_comparison.csv",
              ["scheme", "measure", "median_a", "median_b", "cohen_d", "p", "n", "exhaustive"],
              result.comparisons)
    return _report_failures(result)


def _report_failures(result):
    for exp, msg in sorted(result.failures.items()):
        print(f"semproj: {exp} failed: {msg}", file=sys.stderr)
    # --keep-going finishes the run but still signals that something failed
    return 1 if result.failures else 0


def cmd_sweep(args):
    store = _store(args)
    ds = load_dataset(args.dataset)
    table = load_ratings(args.ratings)
    proj = project_scheme(store, ds, args.category, args.feature)
    rows = outlier_sweep(proj, table, args.max_remove, _config(args))
    _emit(args, "sweep.csv", ["experiment", "k", "removed", "n_items", "r", "ocp", "mean_is_r", "is_ocp"],
          [asdict(r) for r in rows])


def cmd_viz(args):
    store = _store(args)
    ds = load_dataset(args.dataset)
    res = pca_viz(store, ds.items(args.category), ds.poles(args.feature), args.k)
    fields = ["label", "kind"] + [f"pc{i + 1}" for i in range(args.k)]
    _emit(args, f"viz_{args.category}_{args.feature}_k{args.k}.csv".replace(" ", "-"), fields, res.as_rows())


def cmd_select_pairs(args):
    means = load_norming(args.norming)
    manual = load_pairs(args.manual) if args.manual else []
    exclusions = []
    for spec in args.exclude:
        cat, sep, feat = spec.partition(":")
        if not sep:
            raise ConfigError(f"--exclude expects CATEGORY:FEATURE, got {spec!r}")
        exclusions.append((cat, feat))
    sel = select_pairs(means, manual, exclusions, args.percentile)
    rows = [{"category": c, "feature": f, "route": sel.routes[(c, f)],
             "mean_rating": means.get((c, f), "")} for c, f in sel.pairs]
    _emit(args, "pairs.csv", ["category", "feature", "route", "mean_rating"], rows)
    print(json.dumps(sel.summary(), indent=2), file=sys.stderr)


def cmd_run(args):
    if not args.out_dir:
        raise ConfigError("`run` needs --out-dir")
    store = _store(args)
    ds = _dataset_with_pairs(args)
    t0 = time.perf_counter()
    result = run_all(_config(args), ds, args.ratings_dir, store, jobs=args.jobs,
                     keep_going=args.keep_going, sweep=not args.no_sweep)
    write_outputs(result, args.out_dir, svg=args.svg)
    log.info("evaluated %d experiments in %.1fs", len(result.reports), time.perf_counter() - t0)
    s = result.summary()
    print(json.dumps({k: s[k] for k in ("n_evaluated", "n_kept", "r", "ocp", "n_significant_both")},
                     indent=2), file=sys.stderr)
    return _report_failures(result)


COMMANDS = {
    "cache": cmd_cache,
    "diag": cmd_diag,
    "project": cmd_project,
    "eval": cmd_eval,
    "controls": cmd_controls,
    "sweep": cmd_sweep,
    "viz": cmd_viz,
    "select-pairs": cmd_select_pairs,
    "run": cmd_run,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        status = COMMANDS[args.command](args)
    except (SemprojError, OSError) as exc:
        print(f"semproj: error: {exc}", file=sys.stderr)
        return 1
    return status or 0


if __name__ == "__main__":
    sys.exit(main())
