"""Batch evaluation over every category/feature pair and report emission."""

import csv
import json
import logging
import math
import multiprocessing
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .evaluation import (
    SCHEMES,
    evaluate_experiment,
    experiment_seed,
    outlier_sweep,
    project_scheme,
)
from .exceptions import ConfigError, ExperimentError, RatingsFormatError, SemprojError
from .ratings import flag_low_reliability, load_ratings, reliability
from .stats import compare_schemes, fdr_by

logger = logging.getLogger(__name__)

CONTROL_SCHEMES = SCHEMES[1:]
R_EDGES = np.round(np.linspace(-1.0, 1.0, 21), 10)
OCP_EDGES = np.round(np.linspace(0.0, 1.0, 21), 10)


def index_ratings_dir(ratings_dir):
    """Map experiment id -> ratings CSV path by reading each file's first row."""
    out = {}
    for path in sorted(Path(ratings_dir).glob("*.csv")):
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            next(reader, None)
            row = next(reader, None)
        if not row:
            continue
        exp = row[0].strip()
        if exp in out:
            raise RatingsFormatError(f"experiment {exp!r} appears in both {out[exp]} and {path}")
        out[exp] = path
    return out


@dataclass
class RunResult:
    config: dict
    reports: list
    kept: list
    flagged: list
    failures: dict
    controls: dict = field(default_factory=dict)
    comparisons: list = field(default_factory=list)
    sweeps: list = field(default_factory=list)

    def kept_reports(self):
        keep = set(self.kept)
        return [r for r in self.reports if r.experiment in keep]

    def summary(self):
        rows = self.kept_reports()
        out = {
            "n_evaluated": len(self.reports),
            "n_kept": len(rows),
            "flagged_low_reliability": list(self.flagged),
            "failures": dict(self.failures),
            "config": self.config,
        }
        for name in ("r", "ocp", "adjusted_r", "adjusted_ocp", "mean_is_r", "is_ocp"):
            vals = np.array([getattr(r, name) for r in rows], dtype=np.float64)
            vals = vals[np.isfinite(vals)]
            if vals.size:
                q1, med, q3 = np.percentile(vals, [25, 50, 75])
                out[name] = {"median": float(med), "iqr": float(q3 - q1), "n": int(vals.size)}
            else:
                out[name] = {"median": None, "iqr": None, "n": 0}
        out["n_r_above_0.5"] = sum(r.r > 0.5 for r in rows)
        out["n_ocp_above_0.5"] = sum(r.ocp > 0.5 for r in rows)
        out["n_significant_both"] = sum(bool(r.significant) for r in rows)
        out["control_medians"] = {
            scheme: {
                m: float(np.median([self.controls[e][scheme][m] for e in self.kept]))
                for m in ("r", "ocp")
            }
            for scheme in CONTROL_SCHEMES
            if self.kept and all(scheme in self.controls.get(e, {}) for e in self.kept)
        }
        return out


# Worker state is inherited through fork; the store is never pickled.
_WORKER = {}


def _evaluate_one(task):
    experiment, path = task
    store, dataset, config, with_controls = (
        _WORKER["store"], _WORKER["dataset"], _WORKER["config"], _WORKER["controls"])
    try:
        table = load_ratings(path)
        if table.experiment != experiment:
            raise RatingsFormatError(f"{path} holds {table.experiment!r}, expected {experiment!r}")
        rel = reliability(table, config.exclusion_sd)
        report = evaluate_experiment(store, dataset, table, config, rater_reliability=rel)
        controls = {"subspace": {"r": report.r, "ocp": report.ocp}}
        if with_controls:
            for scheme in CONTROL_SCHEMES:
                c = evaluate_experiment(store, dataset, table, config, scheme=scheme,
                                        with_null=False, rater_reliability=rel)
                controls[scheme] = {"r": c.r, "ocp": c.ocp}
        return experiment, report, controls, None
    except SemprojError as exc:
        return experiment, None, None, str(exc)


def run_all(config, dataset, ratings_dir, store, jobs=1, keep_going=False,
            controls=True, sweep=True):
    """Evaluate every pair in ``dataset.pairs`` and assemble the run summary.

    Experiments whose mean IS-r falls below the reliability threshold are
    flagged and left out of every later step.  Results do
    not depend on ``jobs``.
    """
    if not dataset.pairs:
        raise ConfigError("dataset has no category/feature pairs to run")
    index = index_ratings_dir(ratings_dir)
    tasks, failures = [], {}
    for cat, feat in dataset.pairs:
        exp = f"{cat}:{feat}"
        if exp not in index:
            failures[exp] = f"no ratings file for {exp} in {ratings_dir}"
        else:
            tasks.append((exp, index[exp]))
    if failures and not keep_going:
        exp, msg = next(iter(failures.items()))
        raise ExperimentError(exp, msg)

    _WORKER.update(store=store, dataset=dataset, config=config, controls=controls)
    try:
        if jobs > 1 and len(tasks) > 1:
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(jobs) as pool:
                results = pool.map(_evaluate_one, tasks, chunksize=1)
        else:
            results = [_evaluate_one(t) for t in tasks]
    finally:
        _WORKER.clear()

    reports, control_scores = [], {}
    for exp, report, ctrl, err in results:
        if err is not None:
            if not keep_going:
                raise ExperimentError(exp, err)
            failures[exp] = err
            continue
        reports.append(report)
        control_scores[exp] = ctrl

    kept, flagged = flag_low_reliability({r.experiment: r.mean_is_r for r in reports},
                                         config.reliability_threshold)
    result = RunResult(config.as_dict(), reports, kept, flagged, failures, control_scores)
    kept_reports = result.kept_reports()
    if kept_reports:
        adj_r, rej_r = fdr_by([r.p_r for r in kept_reports], config.fdr_q)
        adj_o, rej_o = fdr_by([r.p_ocp for r in kept_reports], config.fdr_q)
        for rep, ar, rr, ao, ro in zip(kept_reports, adj_r, rej_r, adj_o, rej_o):
            rep.p_r_fdr, rep.p_ocp_fdr = float(ar), float(ao)
            rep.significant = bool(rr and ro)

    if controls and len(kept) >= 2:
        for scheme in CONTROL_SCHEMES:
            for measure in ("r", "ocp"):
                cmp = compare_schemes(
                    {e: control_scores[e]["subspace"][measure] for e in kept},
                    {e: control_scores[e][scheme][measure] for e in kept},
                    n_perm=config.n_perm,
                    seed=experiment_seed(config.seed, f"compare:{scheme}:{measure}"),
                    exhaustive_limit=config.exhaustive_limit,
                )
                result.comparisons.append({"scheme": scheme, "measure": measure, **asdict(cmp)})

    if sweep:
        by_exp = {r.experiment: r for r in kept_reports}
        for exp in kept:
            if not by_exp[exp].significant:
                continue
            table = load_ratings(index[exp])
            proj = project_scheme(store, dataset, table.category, table.feature)
            try:
                result.sweeps.extend(outlier_sweep(proj, table, config.max_outlier_removals, config))
            except SemprojError as exc:
                logger.warning("%s: sweep skipped: %s", exp, exc)
    return result


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def _write_csv(path, fieldnames, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fieldnames)
        for row in rows:
            w.writerow([_fmt(row[k]) for k in fieldnames])


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return None if not math.isfinite(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def histogram_rows(reports):
    rows = []
    for measure, edges in (("r", R_EDGES), ("ocp", OCP_EDGES)):
        raw = np.array([getattr(r, measure) for r in reports])
        adj = np.array([getattr(r, f"adjusted_{measure}") for r in reports])
        adj = adj[np.isfinite(adj)]
        c_raw, _ = np.histogram(raw, bins=edges)
        c_adj, _ = np.histogram(adj, bins=edges)
        for lo, hi, a, b in zip(edges[:-1], edges[1:], c_raw, c_adj):
            rows.append({"measure": measure, "bin_lo": float(lo), "bin_hi": float(hi),
                         "count": int(a), "count_adjusted": int(b)})
    return rows


def sweep_summary_rows(sweeps):
    rows = []
    ks = sorted({s.k for s in sweeps})
    for k in ks:
        at_k = [s for s in sweeps if s.k == k]
        row = {"k": k, "n_experiments": len(at_k)}
        for name in ("r", "ocp", "mean_is_r", "is_ocp"):
            vals = np.array([getattr(s, name) for s in at_k])
            row[f"mean_{name}"] = float(vals.mean())
            row[f"median_{name}"] = float(np.median(vals))
        rows.append(row)
    return rows


def write_outputs(result, out_dir, svg=False):
    """Write every report file into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kept = set(result.kept)
    exp_rows = []
    for r in result.reports:
        row = r.as_row()
        row["flagged"] = r.experiment not in kept
        exp_rows.append(row)
    fields = list(result.reports[0].ROW_FIELDS) + ["flagged"] if result.reports else ["category"]
    _write_csv(out / "experiments.csv", fields, exp_rows)

    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(_json_safe(result.summary()), fh, indent=2, sort_keys=True)
        fh.write("\n")

    kept_reports = result.kept_reports()
    _write_csv(out / "scatter.csv", ["experiment", "item", "model_z", "human_z"],
               [row for r in kept_reports for row in r.scatter_rows()])
    _write_csv(out / "histogram.csv", ["measure", "bin_lo", "bin_hi", "count", "count_adjusted"],
               histogram_rows(kept_reports))
    if result.controls:
        rows = [{"experiment": e, "scheme": s, "r": v["r"], "ocp": v["ocp"]}
                for e in result.kept for s, v in result.controls[e].items()]
        _write_csv(out / "controls.csv", ["experiment", "scheme", "r", "ocp"], rows)
    if result.comparisons:
        _write_csv(out / "scheme_comparison.csv",
                   ["scheme", "measure", "median_a", "median_b", "cohen_d", "p", "n", "exhaustive"],
                   result.comparisons)
    if result.sweeps:
        _write_csv(out / "sweep.csv", ["experiment", "k", "removed", "n_items", "r", "ocp",
                                       "mean_is_r", "is_ocp"],
                   [asdict(s) for s in result.sweeps])
        summary_rows = sweep_summary_rows(result.sweeps)
        _write_csv(out / "sweep_summary.csv", list(summary_rows[0]), summary_rows)
    if result.failures:
        _write_csv(out / "failures.csv", ["experiment", "error"],
                   [{"experiment": e, "error": m} for e, m in sorted(result.failures.items())])
    if svg:
        from .plots import write_scatter_svg

        svg_dir = out / "svg"
        svg_dir.mkdir(exist_ok=True)
        for r in kept_reports:
            write_scatter_svg(r, svg_dir / f"{r.category}__{r.feature}.svg".replace(" ", "-"))
