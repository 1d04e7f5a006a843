"""scikit-learn compatible wrappers around projection and rater reliability."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .embeddings import resolve_item
from .projection import zscore
from .ratings import EXCLUSION_SD, RatingsTable, reliability
from .stats import pairwise_oc, pearson_r
from .subspace import FeaturePoles, build_subspace, single_end_direction


class SemanticProjector(TransformerMixin, BaseEstimator):
    """Score words on a feature scale defined by two antonym pole sets.

    Parameters
    ----------
    store : EmbeddingStore
        Word vectors used both for the poles and for string inputs.
    strong_words, weak_words : sequence of str
        Words for the high and low ends of the scale.
    scheme : {"subspace", "strong", "weak"}
        ``"subspace"`` uses the mean strong-minus-weak difference; the other
        two project on a single pole centroid.
    standardize : bool
        If True, ``transform`` returns z-scores across the given items.

    Attributes
    ----------
    direction_ : ndarray of shape (n_features_in_,)
    n_lines_ : int
        Number of pairwise differences averaged (``subspace`` only).
    """

    def __init__(self, store=None, strong_words=(), weak_words=(), scheme="subspace",
                 standardize=False):
        self.store = store
        self.strong_words = strong_words
        self.weak_words = weak_words
        self.scheme = scheme
        self.standardize = standardize

    def fit(self, X=None, y=None):
        if self.store is None:
            raise ValueError("SemanticProjector needs an embedding store")
        if self.scheme == "subspace":
            poles = FeaturePoles("feature", tuple(self.strong_words), tuple(self.weak_words))
            sub = build_subspace(self.store, poles)
            self.direction_ = sub.direction
            self.n_lines_ = sub.line_count
        elif self.scheme in ("strong", "weak"):
            words = self.strong_words if self.scheme == "strong" else self.weak_words
            self.direction_ = single_end_direction(self.store, words)
            self.n_lines_ = 0
        else:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        self.n_features_in_ = self.direction_.shape[0]
        return self

    def _vectors(self, X):
        if len(X) and isinstance(X[0], str):
            return np.stack([resolve_item(self.store, item).vector for item in X])
        return check_array(X, dtype=np.float64)

    def transform(self, X):
        """Project items (names or raw vectors) on the fitted direction.

        Returns an array of shape ``(n_samples, 1)``.
        """
        check_is_fitted(self, "direction_")
        V = self._vectors(list(X) if not isinstance(X, np.ndarray) else X)
        if V.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} dimensions, got {V.shape[1]}")
        scores = V @ self.direction_
        if self.standardize:
            scores = zscore(scores)
        return scores[:, None]

    def score(self, X, y):
        """Pearson correlation between projections of ``X`` and ratings ``y``."""
        return pearson_r(self.transform(X)[:, 0], y)

    def order_consistency(self, X, y):
        return pairwise_oc(self.transform(X)[:, 0], y)


class RaterReliability(BaseEstimator):
    """Inter-rater reliability of a participants x items rating matrix.

    ``fit`` runs the rater pipeline: per-rater z-scoring, leave-one-out
    correlation with the other raters, one Fisher-z exclusion pass and a
    recomputation on the retained raters.

    Attributes
    ----------
    is_r_ : ndarray
        Leave-one-out correlation per retained rater.
    mean_is_r_ : float
    is_ocp_ : float
    excluded_ : tuple of int
        Row indices of excluded raters.
    item_means_ : ndarray
        Mean z-scored rating per item over retained raters.
    """

    def __init__(self, exclusion_sd=EXCLUSION_SD):
        self.exclusion_sd = exclusion_sd

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        ids = tuple(str(i) for i in range(X.shape[0]))
        table = RatingsTable("", "", ids, tuple(str(j) for j in range(X.shape[1])), X)
        kept, rep = reliability(table, self.exclusion_sd)
        self.retained_ = tuple(int(p) for p in kept.participants)
        self.excluded_ = tuple(int(p) for p in rep.excluded)
        self.is_r_ = rep.is_r
        self.fisher_z_ = rep.fisher
        self.mean_is_r_ = rep.mean_is_r
        self.is_ocp_ = rep.is_ocp
        self.item_means_ = kept.zscored.mean(axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        """Z-score each row (rater) of ``X`` independently."""
        check_is_fitted(self, "is_r_")
        X = check_array(X, dtype=np.float64)
        return np.vstack([zscore(row) for row in X])
