"""Synthetic embeddings and raters with a planted feature signal.

Useful for benchmarks and end-to-end checks when real human ratings
are unavailable.  Every feature gets a random unit direction; pole words
sit on either side of it, offset by a component shared by all adjectives;
items load on each feature direction through a latent value that raters
also see (through their own noise).
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import Dataset
from .embeddings import EmbeddingStore
from .ratings import RatingsTable, write_ratings
from .subspace import FeaturePoles


@dataclass
class SyntheticWorld:
    store: EmbeddingStore
    dataset: Dataset
    ratings: dict
    latent: dict = field(default_factory=dict)

    def write_ratings_dir(self, path):
        for exp, table in self.ratings.items():
            write_ratings(table, path / (exp.replace(":", "__").replace(" ", "-") + ".csv"))


def make_world(
    n_categories=2,
    n_features=3,
    n_items=30,
    n_raters=25,
    dim=50,
    words_per_pole=3,
    item_signal=1.0,
    item_noise=0.2,
    pole_separation=4.0,
    pole_noise=0.3,
    shared_adjective=3.0,
    item_adjective_sd=1.0,
    rater_noise=0.5,
    pairs=None,
    n_filler=0,
    seed=0,
):
    """Build an embedding store and dataset with one ratings table per pair.

    ``shared_adjective`` sets the size of the component common to every pole
    word; items carry a random, feature-unrelated amount of it
    (``item_adjective_sd``), which is what defeats single-pole controls.
    With the defaults, projection-rating correlations sit around 0.95.
    """
    rng = np.random.default_rng(seed)
    features = [f"feat{j}" for j in range(n_features)]
    categories = [f"cat{c}" for c in range(n_categories)]

    dirs = rng.standard_normal((n_features + 1, dim))
    q, _ = np.linalg.qr(dirs.T)
    adjective = q[:, 0]
    feature_dirs = {f: q[:, j + 1] for j, f in enumerate(features)}

    tokens, rows = [], []
    poles = {}
    for f in features:
        strong, weak = [], []
        for k in range(words_per_pole):
            for sign, bucket, tag in ((1.0, strong, "hi"), (-1.0, weak, "lo")):
                word = f"{f}{tag}{k}"
                vec = (shared_adjective * adjective
                       + sign * 0.5 * pole_separation * feature_dirs[f]
                       + pole_noise * rng.standard_normal(dim))
                tokens.append(word)
                rows.append(vec)
                bucket.append(word)
        poles[f] = FeaturePoles(f, tuple(strong), tuple(weak))

    items_by_cat, latent = {}, {}
    for cat in categories:
        names = [f"{cat}item{i:02d}" for i in range(n_items)]
        items_by_cat[cat] = names
        t = rng.standard_normal((n_items, n_features))
        latent[cat] = {f: t[:, j] for j, f in enumerate(features)}
        vecs = (item_noise * rng.standard_normal((n_items, dim))
                + item_adjective_sd * rng.standard_normal((n_items, 1)) * adjective
                + item_signal * t @ np.stack([feature_dirs[f] for f in features]))
        tokens.extend(n.lower() for n in names)
        rows.extend(vecs)

    for i in range(n_filler):
        tokens.append(f"filler{i}")
        rows.append(rng.standard_normal(dim))

    store = EmbeddingStore(tuple(tokens), np.asarray(rows, dtype=np.float32), f"synthetic seed={seed}")
    if pairs is None:
        pairs = [(c, f) for c in categories for f in features]
    dataset = Dataset(items_by_cat, poles, list(pairs), f"synthetic seed={seed}")

    ratings = {}
    for cat, f in pairs:
        t = latent[cat][f]
        scale = rng.uniform(10.0, 20.0, size=(n_raters, 1))
        offset = rng.uniform(35.0, 65.0, size=(n_raters, 1))
        noise = rater_noise * rng.standard_normal((n_raters, n_items))
        raw = np.clip(offset + scale * (t[None, :] + noise), 0.0, 100.0)
        ratings[f"{cat}:{f}"] = RatingsTable(
            cat, f, tuple(f"p{p:02d}" for p in range(n_raters)), tuple(items_by_cat[cat]), raw)
    return SyntheticWorld(store, dataset, ratings, latent)


def shuffle_items(table, seed):
    """Reassign whole item columns at random (same shuffle for every rater).

    Rater agreement is untouched; the link between items and ratings is not.
    """
    perm = np.random.default_rng(seed).permutation(len(table.items))
    return replace(table, raw=table.raw[:, perm], zscored=None)
