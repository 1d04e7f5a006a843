"""Scoring category items against a feature direction, plus control scorers."""

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_1d_float, check_not_constant
from .embeddings import resolve_item
from .exceptions import InsufficientDataError, UnresolvableItem, ZeroVarianceError
from .subspace import FeaturePoles, FeatureSubspace, single_end_direction

logger = logging.getLogger(__name__)

METHODS = ("subspace", "single_end_strong", "single_end_weak", "cosine_dist", "euclidean_dist")


def zscore(values):
    """Standardize with the sample (n - 1) standard deviation."""
    v = as_1d_float(values, min_len=2)
    if v.shape[0] < 2:
        raise InsufficientDataError("zscore needs at least two values")
    check_not_constant(v)
    sd = float(v.std(ddof=1))
    if sd == 0.0:
        raise ZeroVarianceError("values have zero variance")
    return (v - v.mean()) / sd


@dataclass
class ProjectionResult:
    """Per-item scores for one category/feature experiment.

    ``orientation`` is +1 when larger raw scores mean more of the feature and
    -1 when they mean less (distance to the strong pole, projection on the
    weak pole).
    """

    category: str
    feature: str
    items: list
    raw_scores: dict
    z_scores: dict
    method: str = "subspace"
    provenance: dict = field(default_factory=dict)
    dropped: list = field(default_factory=list)
    orientation: int = 1

    @property
    def experiment(self):
        return f"{self.category}:{self.feature}"

    def raw_array(self, items=None):
        return np.array([self.raw_scores[i] for i in (items or self.items)])

    def as_rows(self):
        return [
            {"item": i, "raw": self.raw_scores[i], "z": self.z_scores[i],
             "method": self.method, "provenance": self.provenance[i]}
            for i in self.items
        ]

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=["item", "raw", "z", "method", "provenance"],
                                    lineterminator="\n")
            writer.writeheader()
            for row in self.as_rows():
                writer.writerow({**row, "raw": repr(row["raw"]), "z": repr(row["z"])})


def resolve_items(store, items):
    """Resolve a list of item names; returns (names, vectors, provenance, dropped)."""
    names, vecs, prov, dropped = [], [], {}, []
    for item in items:
        try:
            vec, how = resolve_item(store, item)
        except UnresolvableItem:
            dropped.append(item)
            continue
        names.append(item)
        vecs.append(vec)
        prov[item] = how
    if dropped:
        logger.warning("dropped %d unresolvable item(s): %s", len(dropped), ", ".join(dropped))
    if len(names) < 2:
        raise InsufficientDataError(f"need at least 2 resolvable items, got {len(names)}")
    return names, np.stack(vecs), prov, dropped


def _result(names, raw, prov, dropped, method, category, feature, orientation):
    raw = np.asarray(raw, dtype=np.float64)
    z = zscore(raw)
    return ProjectionResult(
        category=category,
        feature=feature,
        items=list(names),
        raw_scores={n: float(v) for n, v in zip(names, raw)},
        z_scores={n: float(v) for n, v in zip(names, z)},
        method=method,
        provenance=prov,
        dropped=list(dropped),
        orientation=orientation,
    )


def project(store, items, subspace, category="", method="subspace", orientation=1):
    """Inner product of each item vector with the (unnormalized) direction.

    ``subspace`` may be a :class:`FeatureSubspace` or a bare direction vector.
    """
    if isinstance(subspace, FeatureSubspace):
        direction, feature = subspace.direction, subspace.name
    else:
        direction, feature = np.asarray(subspace, dtype=np.float64), ""
    if not np.any(direction):
        raise ValueError("direction has zero norm")
    names, vecs, prov, dropped = resolve_items(store, items)
    return _result(names, vecs @ direction, prov, dropped, method, category, feature, orientation)


def single_end_projection(store, items, poles, end="strong", category=""):
    """Project on one pole's centroid instead of the strong-minus-weak line."""
    if end not in ("strong", "weak"):
        raise ValueError("end must be 'strong' or 'weak'")
    words = poles.strong_words if end == "strong" else poles.weak_words
    res = project(store, items, single_end_direction(store, words), category,
                  method=f"single_end_{end}", orientation=1 if end == "strong" else -1)
    res.feature = poles.name
    return res


def distance_control(store, items, pole_words, metric="cosine", category="", feature="",
                     end="strong"):
    """Distance from each item vector to the centroid of ``pole_words``.

    Cosine distance is ``1 - cosine similarity``.  ``end`` only sets the
    orientation tag: being far from the strong pole means less of the feature.
    """
    if metric not in ("cosine", "euclidean"):
        raise ValueError("metric must be 'cosine' or 'euclidean'")
    centroid = single_end_direction(store, pole_words)
    names, vecs, prov, dropped = resolve_items(store, items)
    if metric == "euclidean":
        raw = np.linalg.norm(vecs - centroid, axis=1)
    else:
        norms = np.linalg.norm(vecs, axis=1)
        cn = np.linalg.norm(centroid)
        if cn == 0.0 or np.any(norms == 0.0):
            raise ValueError("zero-norm vector under cosine distance")
        raw = 1.0 - (vecs @ centroid) / (norms * cn)
    return _result(names, raw, prov, dropped, f"{metric}_dist", category, feature,
                   -1 if end == "strong" else 1)


@dataclass
class PCAProjection:
    items: list
    coords: np.ndarray
    strong_end: np.ndarray
    weak_end: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    center: np.ndarray

    def as_rows(self):
        rows = []
        labels = list(self.items) + ["<strong>", "<weak>"]
        pts = np.vstack([self.coords, self.strong_end, self.weak_end])
        for label, p in zip(labels, pts):
            row = {"label": label, "kind": "item" if not label.startswith("<") else "pole"}
            row.update({f"pc{i + 1}": float(v) for i, v in enumerate(p)})
            rows.append(row)
        return rows


def pca_viz(store, items, poles, k=2):
    """Reduced coordinates of items and pole centroids for plotting.

    Items and both pole centroids are centered and projected onto the top
    ``k`` eigenvectors of their covariance.  Each component is signed so its
    largest-magnitude loading is positive.
    """
    if k not in (2, 3):
        raise ValueError("k must be 2 or 3")
    if isinstance(poles, FeatureSubspace):
        poles = FeaturePoles(poles.name, poles.provenance["strong"], poles.provenance["weak"])
    names, vecs, _, _ = resolve_items(store, items)
    if len(names) < k + 1:
        raise InsufficientDataError(f"need at least {k + 1} resolvable items for k={k}")
    strong = single_end_direction(store, poles.strong_words)
    weak = single_end_direction(store, poles.weak_words)
    X = np.vstack([vecs, strong, weak])
    center = X.mean(axis=0)
    Xc = X - center
    cov = Xc.T @ Xc / (X.shape[0] - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:k]
    comps = evecs[:, order].T
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    Y = Xc @ comps.T
    n = len(names)
    return PCAProjection(names, Y[:n], Y[n], Y[n + 1], comps,
                         np.clip(evals[order], 0.0, None), center)
