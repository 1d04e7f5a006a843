"""Feature directions built from antonym pole word sets."""

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .embeddings import lookup, normalize_token
from .exceptions import InsufficientDataError, InvalidPoles, MissingPoleWord, ZeroDirection

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeaturePoles:
    """Word sets for the two ends of a feature scale.

    ``strong_words`` denote the high end (100 on the human slider),
    ``weak_words`` the low end.
    """

    name: str
    strong_words: tuple
    weak_words: tuple

    def __post_init__(self):
        strong = tuple(normalize_token(w) for w in self.strong_words)
        weak = tuple(normalize_token(w) for w in self.weak_words)
        if not strong or not weak:
            raise InvalidPoles(f"feature {self.name!r}: both poles need at least one word")
        if len(set(strong)) != len(strong) or len(set(weak)) != len(weak):
            raise InvalidPoles(f"feature {self.name!r}: repeated word within a pole")
        shared = sorted(set(strong) & set(weak))
        if shared:
            raise InvalidPoles(f"feature {self.name!r}: word(s) on both poles: {', '.join(shared)}")
        object.__setattr__(self, "strong_words", strong)
        object.__setattr__(self, "weak_words", weak)

    def swapped(self):
        return FeaturePoles(self.name, self.weak_words, self.strong_words)


@dataclass(frozen=True)
class FeatureSubspace:
    name: str
    direction: np.ndarray
    line_count: int
    provenance: dict = field(default_factory=dict)

    def scaled(self, factor):
        return FeatureSubspace(self.name, self.direction * factor, self.line_count, dict(self.provenance))


def _pole_matrix(store, feature, words):
    missing = [w for w in words if w not in store]
    if missing:
        raise MissingPoleWord(feature, missing)
    return np.stack([lookup(store, w).astype(np.float64) for w in words])


def feature_lines(store, poles):
    """All strong-minus-weak word differences, shape ``(|strong|*|weak|, dim)``."""
    missing = [w for w in poles.strong_words + poles.weak_words if w not in store]
    if missing:
        raise MissingPoleWord(poles.name, missing)
    strong = _pole_matrix(store, poles.name, poles.strong_words)
    weak = _pole_matrix(store, poles.name, poles.weak_words)
    return (strong[:, None, :] - weak[None, :, :]).reshape(-1, store.dim)


def build_subspace(store, poles):
    """Average of every pairwise strong-minus-weak difference vector."""
    lines = feature_lines(store, poles)
    # Correctly rounded sums are order-free, so swapping poles negates exactly.
    direction = np.array([math.fsum(col) for col in lines.T]) / lines.shape[0]
    if not np.all(np.isfinite(direction)) or np.linalg.norm(direction) == 0.0:
        raise ZeroDirection(f"feature {poles.name!r} has a zero-norm direction")
    return FeatureSubspace(
        name=poles.name,
        direction=direction,
        line_count=lines.shape[0],
        provenance={"strong": list(poles.strong_words), "weak": list(poles.weak_words)},
    )


def single_end_direction(store, words):
    """Centroid of one pole's word vectors (control direction)."""
    words = [normalize_token(w) for w in words]
    if not words:
        raise InsufficientDataError("single-end direction needs at least one word")
    return _pole_matrix(store, "single-end", words).mean(axis=0)


def _cos(a, b):
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return float("nan")
    return float(np.dot(a, b) / (na * nb))


def _degrees(c):
    return math.degrees(math.acos(max(-1.0, min(1.0, c)))) if math.isfinite(c) else float("nan")


@dataclass
class AlignmentReport:
    """Line-alignment statistics within and across feature subspaces.

    ``within``/``cross`` average per feature first (then over features or
    ordered feature pairs); the ``*_pooled`` variants average over all
    lines at once.
    """

    within: float
    cross: float
    within_pooled: float
    cross_pooled: float
    per_feature_within: dict
    per_feature_cross: dict
    skipped: list

    @property
    def within_degrees(self):
        return _degrees(self.within)

    @property
    def cross_degrees(self):
        return _degrees(self.cross)

    def as_rows(self):
        rows = []
        for name in sorted(set(self.per_feature_within) | set(self.per_feature_cross)):
            w = self.per_feature_within.get(name, float("nan"))
            c = self.per_feature_cross.get(name, float("nan"))
            rows.append({"feature": name, "within": w, "within_deg": _degrees(w),
                         "cross": c, "cross_deg": _degrees(c)})
        return rows


def alignment_diagnostics(store, features):
    """Leave-one-out line alignment within features, and alignment across them."""
    lines = {}
    for poles in features:
        lines[poles.name] = feature_lines(store, poles)
    if len(lines) < 2:
        raise InsufficientDataError("cross-feature alignment needs at least two features")

    per_within = {}
    pooled_within = []
    skipped = []
    for name, L in lines.items():
        m = L.shape[0]
        if m < 2:
            logger.warning("feature %r has %d line(s); skipped for within-feature alignment", name, m)
            skipped.append(name)
            continue
        total = L.sum(axis=0)
        cosines = [_cos(L[i], (total - L[i]) / (m - 1)) for i in range(m)]
        per_within[name] = float(np.mean(cosines))
        pooled_within.extend(cosines)

    means = {name: L.mean(axis=0) for name, L in lines.items()}
    per_cross = {}
    pair_scores = []
    pooled_cross = []
    for a, b in itertools.permutations(lines, 2):
        cosines = [_cos(line, means[b]) for line in lines[a]]
        score = float(np.mean(cosines))
        pair_scores.append(score)
        per_cross.setdefault(a, []).append(score)
        pooled_cross.extend(cosines)
    per_cross = {name: float(np.mean(v)) for name, v in per_cross.items()}

    nan = float("nan")
    return AlignmentReport(
        within=float(np.mean(list(per_within.values()))) if per_within else nan,
        cross=float(np.mean(pair_scores)),
        within_pooled=float(np.mean(pooled_within)) if pooled_within else nan,
        cross_pooled=float(np.mean(pooled_cross)),
        per_feature_within=per_within,
        per_feature_cross=per_cross,
        skipped=skipped,
    )
