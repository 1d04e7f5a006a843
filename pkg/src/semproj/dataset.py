"""Category/feature dataset files and norming-based pair selection."""

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .exceptions import DatasetError, InvalidPoles
from .subspace import FeaturePoles

BUNDLED = "reference_dataset.json"

BUNDLED_COUNTS = {
    "animals": 34,
    "cities": 50,
    "clothing": 50,
    "mythological creatures": 50,
    "names": 50,
    "professions": 49,
    "sports": 50,
    "states": 50,
    "weather": 37,
}
BUNDLED_N_FEATURES = 17


@dataclass
class Dataset:
    categories: dict
    features: dict
    pairs: list
    provenance: str = ""

    def poles(self, feature):
        try:
            return self.features[feature]
        except KeyError:
            raise DatasetError(f"unknown feature {feature!r}") from None

    def items(self, category):
        try:
            return self.categories[category]
        except KeyError:
            raise DatasetError(f"unknown category {category!r}") from None

    def with_pairs(self, pairs):
        out = Dataset(self.categories, self.features, [], self.provenance)
        out.pairs = _check_pairs(out, pairs)
        return out


def _check_pairs(ds, pairs):
    out = []
    for cat, feat in pairs:
        if cat not in ds.categories:
            raise DatasetError(f"pair ({cat}, {feat}) references unknown category")
        if feat not in ds.features:
            raise DatasetError(f"pair ({cat}, {feat}) references unknown feature")
        out.append((cat, feat))
    return out


def parse_dataset(data, provenance=""):
    try:
        raw_cats = data["categories"]
        raw_feats = data["features"]
        raw_pairs = data.get("pairs", [])
    except (KeyError, TypeError):
        raise DatasetError("dataset needs 'categories' and 'features' collections") from None
    categories = {}
    for name, items in raw_cats.items():
        seen = set()
        for item in items:
            key = item.strip().lower()
            if not key:
                raise DatasetError(f"category {name!r} has an empty item")
            if key in seen:
                raise DatasetError(f"category {name!r} lists {item!r} twice")
            seen.add(key)
        categories[name] = list(items)
    features = {}
    for name, spec in raw_feats.items():
        try:
            features[name] = FeaturePoles(name, tuple(spec["strong"]), tuple(spec["weak"]))
        except (KeyError, TypeError):
            raise DatasetError(f"feature {name!r} needs 'strong' and 'weak' word lists") from None
        except InvalidPoles as exc:
            raise DatasetError(str(exc)) from None
    ds = Dataset(categories, features, [], provenance)
    ds.pairs = _check_pairs(ds, [(p["category"], p["feature"]) for p in raw_pairs])
    return ds


def check_bundled_counts(ds):
    counts = {name: len(items) for name, items in ds.categories.items()}
    if counts != BUNDLED_COUNTS:
        raise DatasetError(f"category sizes {counts} differ from the reference {BUNDLED_COUNTS}")
    if len(ds.features) != BUNDLED_N_FEATURES:
        raise DatasetError(f"expected {BUNDLED_N_FEATURES} features, found {len(ds.features)}")


def load_dataset(path=None):
    """Load a dataset JSON file, or the bundled one when ``path`` is None."""
    if path is None:
        text = resources.files("semproj.data").joinpath(BUNDLED).read_text(encoding="utf-8")
        ds = parse_dataset(json.loads(text), provenance=f"bundled:{BUNDLED}")
        check_bundled_counts(ds)
        return ds
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: {exc}") from None
    return parse_dataset(data, provenance=str(path))


def load_pairs(path):
    """Pair list file: CSV with ``category,feature`` header."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"category", "feature"} <= set(reader.fieldnames):
            raise DatasetError(f"{path}: header must contain category,feature")
        return [(row["category"].strip(), row["feature"].strip()) for row in reader]


def load_norming(path):
    """Norming file ``category,feature,mean_rating`` -> {(category, feature): mean}."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"category", "feature", "mean_rating"} <= set(reader.fieldnames):
            raise DatasetError(f"{path}: header must be category,feature,mean_rating")
        for lineno, row in enumerate(reader, start=2):
            key = (row["category"].strip(), row["feature"].strip())
            if key in out:
                raise DatasetError(f"{path}:{lineno}: duplicate pair {key}")
            try:
                out[key] = float(row["mean_rating"])
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: bad mean_rating {row['mean_rating']!r}") from None
    return out


@dataclass
class PairSelection:
    """Outcome of norming-based pair selection.

    ``percentile_value`` is the cut point; ``threshold`` is the smallest
    norming mean actually admitted.
    """

    pairs: list
    percentile: float
    percentile_value: float
    threshold: float
    routes: dict = field(default_factory=dict)
    n_normed: int = 0
    n_excluded: int = 0
    n_manual: int = 0
    n_overlap: int = 0

    @property
    def n_union(self):
        return len(self.pairs)

    def summary(self):
        return {
            "percentile": self.percentile,
            "percentile_value": self.percentile_value,
            "threshold": self.threshold,
            "n_above_threshold": self.n_normed,
            "n_excluded": self.n_excluded,
            "n_normed_after_exclusions": self.n_normed - self.n_excluded,
            "n_manual": self.n_manual,
            "n_overlap": self.n_overlap,
            "n_union": self.n_union,
        }


def select_pairs(norming_means, manual_pairs=(), exclusions=(), percentile=75.0):
    """Admit pairs whose norming mean is at or above the given percentile.

    The percentile uses linear interpolation between order statistics.
    Excluded pairs are removed from the normed set and never appear in the
    result; manual pairs are added afterwards.
    """
    if not norming_means:
        raise DatasetError("no norming means supplied")
    if not 0.0 < percentile < 100.0:
        raise ValueError("percentile must lie in (0, 100)")
    for key, v in norming_means.items():
        if not (math.isfinite(v) and 1.0 <= v <= 5.0):
            raise DatasetError(f"norming mean for {key} outside [1, 5]: {v}")
    values = np.array(sorted(norming_means.values()))
    cut = float(np.percentile(values, percentile))
    normed = {k for k, v in norming_means.items() if v >= cut}
    excl = {tuple(e) for e in exclusions}
    n_removed = len(normed & excl)
    normed -= excl
    manual = {tuple(m) for m in manual_pairs} - excl
    routes = {}
    for k in normed | manual:
        routes[k] = "both" if (k in normed and k in manual) else ("norming" if k in normed else "manual")
    admitted = [v for k, v in norming_means.items() if v >= cut]
    return PairSelection(
        pairs=sorted(routes),
        percentile=percentile,
        percentile_value=cut,
        threshold=min(admitted),
        routes=dict(sorted(routes.items())),
        n_normed=len(normed) + n_removed,
        n_excluded=n_removed,
        n_manual=len(manual),
        n_overlap=len(normed & manual),
    )
