"""Human rating tables and inter-rater reliability."""

import csv
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ._validation import is_constant
from .exceptions import InsufficientDataError, RatingsFormatError, ZeroVarianceError
from .projection import zscore
from .stats import pairwise_oc, pearson_r

logger = logging.getLogger(__name__)

RATINGS_HEADER = ("experiment", "participant", "item", "rating")
# atanh(+-1) is infinite; perfect agreement is clipped just inside the bound.
FISHER_CLIP = 1.0 - 1e-12
EXCLUSION_SD = 2.5
RELIABILITY_THRESHOLD = 0.07


def split_experiment(experiment):
    category, sep, feature = experiment.partition(":")
    if not sep or not category or not feature:
        raise RatingsFormatError(f"experiment id must look like 'category:feature', got {experiment!r}")
    return category, feature


@dataclass(frozen=True)
class RatingsTable:
    """Participant x item ratings for one experiment.

    ``zscored`` stays ``None`` until :func:`zscore_participants` runs.
    """

    category: str
    feature: str
    participants: tuple
    items: tuple
    raw: np.ndarray
    zscored: np.ndarray = None

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=np.float64)
        if raw.shape != (len(self.participants), len(self.items)):
            raise RatingsFormatError(
                f"ratings shape {raw.shape} does not match "
                f"{len(self.participants)} participants x {len(self.items)} items"
            )
        if np.any(~np.isfinite(raw)) or np.any(raw < 0) or np.any(raw > 100):
            raise RatingsFormatError("ratings must lie in [0, 100]")
        object.__setattr__(self, "participants", tuple(self.participants))
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "raw", raw)

    @property
    def experiment(self):
        return f"{self.category}:{self.feature}"

    def select(self, participants=None, items=None):
        """Sub-table keeping the given participants/items (in table order)."""
        p_set = None if participants is None else set(participants)
        i_set = None if items is None else set(items)
        p_keep = [i for i, p in enumerate(self.participants) if p_set is None or p in p_set]
        i_keep = [j for j, it in enumerate(self.items) if i_set is None or it in i_set]
        z = None if self.zscored is None else self.zscored[np.ix_(p_keep, i_keep)]
        return RatingsTable(
            self.category,
            self.feature,
            tuple(self.participants[i] for i in p_keep),
            tuple(self.items[j] for j in i_keep),
            self.raw[np.ix_(p_keep, i_keep)],
            z,
        )


def load_ratings(path):
    """Read a ``experiment,participant,item,rating`` CSV for one experiment."""
    path = Path(path)
    cells = {}
    participants, items = [], []
    seen_p, seen_i = set(), set()
    experiment = None
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != RATINGS_HEADER:
            raise RatingsFormatError(f"{path}: header must be {','.join(RATINGS_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise RatingsFormatError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            exp, pid, item, value = (c.strip() for c in row)
            if experiment is None:
                experiment = exp
            elif exp != experiment:
                raise RatingsFormatError(f"{path}:{lineno}: second experiment {exp!r} in file for {experiment!r}")
            try:
                rating = float(value)
            except ValueError:
                raise RatingsFormatError(f"{path}:{lineno}: rating {value!r} is not a number") from None
            if not (math.isfinite(rating) and 0.0 <= rating <= 100.0):
                raise RatingsFormatError(f"{path}:{lineno}: rating {value} outside [0, 100]")
            if (pid, item) in cells:
                raise RatingsFormatError(f"{path}:{lineno}: duplicate rating for participant {pid!r}, item {item!r}")
            cells[pid, item] = rating
            if pid not in seen_p:
                seen_p.add(pid)
                participants.append(pid)
            if item not in seen_i:
                seen_i.add(item)
                items.append(item)
    if experiment is None:
        raise RatingsFormatError(f"{path}: no ratings")
    category, feature = split_experiment(experiment)
    for pid in participants:
        missing = [it for it in items if (pid, it) not in cells]
        if missing:
            raise RatingsFormatError(
                f"{path}: participant {pid!r} has no rating for {len(missing)} item(s): {', '.join(missing[:5])}"
            )
    raw = np.array([[cells[p, it] for it in items] for p in participants])
    return RatingsTable(category, feature, tuple(participants), tuple(items), raw)


def write_ratings(table, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RATINGS_HEADER)
        for p, row in zip(table.participants, table.raw):
            for item, v in zip(table.items, row):
                w.writerow([table.experiment, p, item, repr(float(v))])


def zscore_participants(table):
    """Z-score each participant's row; constant raters are dropped."""
    keep, rows = [], []
    for p, row in zip(table.participants, table.raw):
        if is_constant(row):
            logger.warning("%s: participant %r gave constant ratings; dropped", table.experiment, p)
            continue
        keep.append(p)
        rows.append(zscore(row))
    if not keep:
        raise ZeroVarianceError(f"{table.experiment}: every participant gave constant ratings")
    sub = table.select(participants=keep)
    return replace(sub, zscored=np.vstack(rows))


def _ensure_z(table):
    return table if table.zscored is not None else zscore_participants(table)


def _leave_one_out_means(z):
    total = z.sum(axis=0)
    return (total[None, :] - z) / (z.shape[0] - 1)


def fisher_z(r):
    return np.arctanh(np.clip(np.asarray(r, dtype=np.float64), -FISHER_CLIP, FISHER_CLIP))


@dataclass
class ReliabilityReport:
    participants: tuple
    is_r: np.ndarray
    fisher: np.ndarray
    mean_is_r: float
    n_items: int
    is_ocp: float = float("nan")
    is_ocp_per: np.ndarray = None
    excluded: tuple = ()

    @property
    def n_participants_retained(self):
        return len(self.participants)


def _check_participants(table):
    if len(table.participants) < 3:
        raise InsufficientDataError(
            f"{table.experiment}: reliability needs at least 3 participants, got {len(table.participants)}"
        )
    if len(table.items) < 3:
        raise InsufficientDataError(f"{table.experiment}: reliability needs at least 3 items")


def inter_subject_r(table):
    """Leave-one-out correlation of each rater with the mean of the others."""
    table = _ensure_z(table)
    _check_participants(table)
    loo = _leave_one_out_means(table.zscored)
    is_r = []
    for p, row, others in zip(table.participants, table.zscored, loo):
        if is_constant(others):
            raise ZeroVarianceError(f"{table.experiment}: mean of raters other than {p!r} is constant")
        is_r.append(pearson_r(row, others))
    is_r = np.array(is_r)
    fz = fisher_z(is_r)
    return ReliabilityReport(table.participants, is_r, fz, float(np.tanh(fz.mean())), len(table.items))


def inter_subject_ocp(table):
    """Mean leave-one-out pairwise order consistency; returns (mean, per-rater)."""
    table = _ensure_z(table)
    _check_participants(table)
    loo = _leave_one_out_means(table.zscored)
    per = np.array([pairwise_oc(row, others) for row, others in zip(table.zscored, loo)])
    return float(per.mean()), per


def exclude_outlier_participants(report, table, sd_cutoff=EXCLUSION_SD):
    """Drop raters whose Fisher-z IS-r falls below mean - sd_cutoff * SD.

    Single pass, decided by ``report``; participants already absent from
    ``table`` are ignored.  Returns ``(table, excluded_ids)``.
    """
    fz = np.asarray(report.fisher)
    if fz.size < 2:
        return table, ()
    cutoff = fz.mean() - sd_cutoff * fz.std(ddof=1)
    flagged = {p for p, z in zip(report.participants, fz) if z < cutoff}
    excluded = tuple(p for p in table.participants if p in flagged)
    if not excluded:
        return table, ()
    kept = [p for p in table.participants if p not in flagged]
    if len(kept) < 3:
        raise InsufficientDataError(
            f"{table.experiment}: excluding {len(excluded)} rater(s) would leave {len(kept)}"
        )
    return table.select(participants=kept), excluded


def reliability(table, sd_cutoff=EXCLUSION_SD):
    """Full rater pipeline: z-score, IS-r, one exclusion pass, recompute.

    Returns ``(retained_table, ReliabilityReport)``; the report describes the
    retained raters and lists the excluded ones.
    """
    table = _ensure_z(table)
    first = inter_subject_r(table)
    kept, excluded = exclude_outlier_participants(first, table, sd_cutoff)
    report = inter_subject_r(kept) if excluded else first
    report.excluded = excluded
    report.is_ocp, report.is_ocp_per = inter_subject_ocp(kept)
    return kept, report


def mean_item_ratings(table):
    """Per-item mean of the retained raters' z-scores."""
    table = _ensure_z(table)
    if table.zscored.size == 0:
        raise InsufficientDataError("empty ratings table")
    means = table.zscored.mean(axis=0)
    return {item: float(m) for item, m in zip(table.items, means)}


def flag_low_reliability(mean_is_r, threshold=RELIABILITY_THRESHOLD):
    """Split experiments by mean IS-r; strictly below ``threshold`` is flagged.

    Returns ``(kept, flagged)`` lists of experiment ids in input order.
    """
    kept, flagged = [], []
    for exp, value in mean_is_r.items():
        (flagged if value < threshold else kept).append(exp)
    return kept, flagged
