"""Per-experiment evaluation of projections against human ratings."""

import hashlib
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import RunConfig
from .exceptions import ExperimentError, InsufficientDataError, SemprojError
from .projection import distance_control, project, single_end_projection, zscore
from .ratings import inter_subject_ocp, inter_subject_r, mean_item_ratings, reliability
from .stats import adjust_upper_bound, pairwise_oc, pearson_r, permutation_nulls
from .subspace import build_subspace

logger = logging.getLogger(__name__)

SCHEMES = (
    "subspace",
    "single_end_strong",
    "single_end_weak",
    "cosine_strong",
    "cosine_weak",
    "euclidean_strong",
    "euclidean_weak",
)


def experiment_seed(seed, experiment):
    """Seed entropy for one experiment, stable across runs and processes."""
    digest = hashlib.sha256(experiment.encode("utf-8")).digest()
    return (int(seed), int.from_bytes(digest[:8], "little"))


def project_scheme(store, dataset, category, feature, scheme="subspace"):
    items = dataset.items(category)
    poles = dataset.poles(feature)
    if scheme == "subspace":
        return project(store, items, build_subspace(store, poles), category)
    if scheme in ("single_end_strong", "single_end_weak"):
        return single_end_projection(store, items, poles, scheme.rsplit("_", 1)[1], category)
    if scheme in SCHEMES:
        metric, end = scheme.split("_")
        words = poles.strong_words if end == "strong" else poles.weak_words
        res = distance_control(store, items, words, metric, category, feature, end)
        res.method = scheme
        return res
    raise ValueError(f"unknown scheme {scheme!r}")


def _item_key(name):
    return "-".join(name.strip().lower().split())


def match_items(projection, table):
    """Items scored by the model and rated by humans, in projection order.

    Returns ``(pairs, dropped)`` where ``pairs`` is a list of
    ``(projection_item, ratings_item)``.
    """
    rated = {_item_key(i): i for i in table.items}
    pairs, dropped = [], []
    for item in projection.items:
        key = _item_key(item)
        if key in rated:
            pairs.append((item, rated.pop(key)))
        else:
            dropped.append(item)
    dropped.extend(projection.dropped)
    dropped.extend(rated.values())
    return pairs, dropped


def agreement(model, human):
    """z-score both score lists; return (model_z, human_z, r, OC_p)."""
    mz = zscore(model)
    hz = zscore(human)
    return mz, hz, pearson_r(mz, hz), pairwise_oc(mz, hz)


@dataclass
class EvalReport:
    category: str
    feature: str
    scheme: str
    n_items: int
    n_participants: int
    r: float
    ocp: float
    mean_is_r: float
    is_ocp: float
    adjusted_r: float
    adjusted_r_sign: int
    adjusted_ocp: float
    p_r: float = float("nan")
    p_ocp: float = float("nan")
    p_r_fdr: float = float("nan")
    p_ocp_fdr: float = float("nan")
    significant: bool = False
    null_r_mean: float = float("nan")
    null_r_sd: float = float("nan")
    null_ocp_mean: float = float("nan")
    n_permutations: int = 0
    exhaustive: bool = False
    excluded: tuple = ()
    dropped_items: tuple = ()
    items: list = field(default_factory=list, repr=False)
    model_z: np.ndarray = field(default=None, repr=False)
    human_z: np.ndarray = field(default=None, repr=False)

    ROW_FIELDS = (
        "category", "feature", "scheme", "n_items", "n_participants", "r", "p_r", "p_r_fdr",
        "ocp", "p_ocp", "p_ocp_fdr", "significant", "mean_is_r", "is_ocp", "adjusted_r",
        "adjusted_r_sign", "adjusted_ocp", "null_r_mean", "null_r_sd", "null_ocp_mean",
        "n_permutations", "exhaustive", "excluded", "dropped_items",
    )

    @property
    def experiment(self):
        return f"{self.category}:{self.feature}"

    def as_row(self):
        d = asdict(self)
        row = {k: d[k] for k in self.ROW_FIELDS}
        row["excluded"] = ";".join(self.excluded)
        row["dropped_items"] = ";".join(self.dropped_items)
        return row

    def scatter_rows(self):
        return [
            {"experiment": self.experiment, "item": i, "model_z": float(m), "human_z": float(h)}
            for i, m, h in zip(self.items, self.model_z, self.human_z)
        ]


def _adjusted(value, reliability_value, kind):
    if not reliability_value > 0:
        return float("nan")
    return adjust_upper_bound(value, reliability_value, kind)


def evaluate_experiment(store, dataset, ratings_table, config=None, scheme="subspace",
                        with_null=True, rater_reliability=None):
    """Project one category on one feature and score it against human ratings.

    ``rater_reliability`` may carry a precomputed ``(retained_table, report)``
    from :func:`semproj.ratings.reliability` to avoid recomputation.  FDR
    fields are left as NaN; they are filled in across experiments by the
    runner.
    """
    config = config or RunConfig()
    experiment = ratings_table.experiment
    try:
        proj = project_scheme(store, dataset, ratings_table.category, ratings_table.feature, scheme)
        kept, rel = rater_reliability or reliability(ratings_table, config.exclusion_sd)
        pairs, dropped = match_items(proj, kept)
        if dropped:
            logger.warning("%s: %d item(s) not in both model and ratings: %s",
                           experiment, len(dropped), ", ".join(dropped))
        if len(pairs) < 3:
            raise InsufficientDataError(f"only {len(pairs)} item(s) shared by model and ratings")
        means = mean_item_ratings(kept)
        model = proj.orientation * proj.raw_array([p for p, _ in pairs])
        human = np.array([means[h] for _, h in pairs])
        mz, hz, r, ocp = agreement(model, human)
        report = EvalReport(
            category=ratings_table.category,
            feature=ratings_table.feature,
            scheme=scheme,
            n_items=len(pairs),
            n_participants=rel.n_participants_retained,
            r=r,
            ocp=ocp,
            mean_is_r=rel.mean_is_r,
            is_ocp=rel.is_ocp,
            adjusted_r=_adjusted(r, rel.mean_is_r, "r"),
            adjusted_r_sign=1 if r >= 0 else -1,
            adjusted_ocp=_adjusted(ocp, rel.is_ocp, "ocp"),
            excluded=tuple(rel.excluded),
            dropped_items=tuple(dropped),
            items=[p for p, _ in pairs],
            model_z=mz,
            human_z=hz,
        )
        if with_null:
            nulls = permutation_nulls(mz, hz, n_perm=config.n_perm,
                                      seed=experiment_seed(config.seed, experiment),
                                      exhaustive_limit=config.exhaustive_limit)
            report.p_r, null_r = nulls["r"]
            report.p_ocp, null_ocp = nulls["ocp"]
            report.null_r_mean, report.null_r_sd = null_r.mean, null_r.sd
            report.null_ocp_mean = null_ocp.mean
            report.n_permutations = null_r.n_permutations
            report.exhaustive = null_r.exhaustive
        return report
    except ExperimentError:
        raise
    except SemprojError as exc:
        raise ExperimentError(experiment, exc) from exc


@dataclass(frozen=True)
class SweepRow:
    experiment: str
    k: int
    removed: str
    n_items: int
    r: float
    ocp: float
    mean_is_r: float
    is_ocp: float


def outlier_sweep(projection, ratings, max_remove=10, config=None, rater_reliability=None):
    """Recompute agreement and reliability while dropping the most extreme items.

    Items are ranked once, by the absolute z-score (across items) of their
    mean human rating; ties go to the alphabetically first name.  Step ``k``
    removes the top ``k`` items from both model and ratings.  Raters kept by
    the exclusion step stay fixed across steps.
    """
    config = config or RunConfig()
    kept, _ = rater_reliability or reliability(ratings, config.exclusion_sd)
    pairs, _ = match_items(projection, kept)
    if len(pairs) - max_remove < 3:
        raise InsufficientDataError(
            f"{ratings.experiment}: {len(pairs)} items leave fewer than 3 after removing {max_remove}"
        )
    means = mean_item_ratings(kept)
    model_all = projection.orientation * projection.raw_array([p for p, _ in pairs])
    human_all = np.array([means[h] for _, h in pairs])
    extremeness = np.abs(zscore(human_all))
    order = sorted(range(len(pairs)), key=lambda i: (-extremeness[i], pairs[i][0]))

    rows = []
    removed = set()
    for k in range(max_remove + 1):
        if k:
            removed.add(order[k - 1])
        keep = [i for i in range(len(pairs)) if i not in removed]
        _, _, r, ocp = agreement(model_all[keep], human_all[keep])
        dropped_rated = {pairs[i][1] for i in removed}
        sub = kept.select(items=[it for it in kept.items if it not in dropped_rated])
        rows.append(SweepRow(
            experiment=ratings.experiment,
            k=k,
            removed=pairs[order[k - 1]][0] if k else "",
            n_items=len(keep),
            r=r,
            ocp=ocp,
            mean_is_r=inter_subject_r(sub).mean_is_r,
            is_ocp=inter_subject_ocp(sub)[0],
        ))
    return rows
