import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from semproj.estimators import RaterReliability, SemanticProjector
from semproj.projection import project
from semproj.ratings import RatingsTable, reliability
from semproj.subspace import build_subspace


def test_projector_params_and_clone(toy_store):
    est = SemanticProjector(toy_store, ["big"], ["small"], standardize=True)
    params = est.get_params()
    assert params["scheme"] == "subspace" and params["standardize"] is True
    twin = clone(est)
    assert twin.store is toy_store and not hasattr(twin, "direction_")
    twin.set_params(scheme="strong")
    assert twin.scheme == "strong"


def test_projector_matches_functional_api(world):
    poles = world.dataset.poles("feat1")
    items = world.dataset.items("cat0")
    est = SemanticProjector(world.store, poles.strong_words, poles.weak_words, standardize=True).fit()
    got = est.transform(items)
    assert got.shape == (len(items), 1)
    ref = project(world.store, items, build_subspace(world.store, poles))
    np.testing.assert_allclose(got[:, 0], [ref.z_scores[i] for i in items], atol=1e-12)
    assert est.n_lines_ == 9 and est.n_features_in_ == world.store.dim


def test_projector_accepts_vectors(toy_store):
    est = SemanticProjector(toy_store, ["big"], ["small"]).fit()
    out = est.transform(np.eye(4))
    np.testing.assert_allclose(out[:, 0], [4, 0, 0, 0])
    with pytest.raises(ValueError):
        est.transform(np.eye(3))


def test_projector_not_fitted(toy_store):
    with pytest.raises(NotFittedError):
        SemanticProjector(toy_store, ["big"], ["small"]).transform(["dog"])


@pytest.mark.parametrize("scheme", ["strong", "weak"])
def test_projector_single_end(toy_store, scheme):
    est = SemanticProjector(toy_store, ["big"], ["small"], scheme=scheme).fit()
    expected = toy_store.matrix[toy_store.index_of("big" if scheme == "strong" else "small")]
    np.testing.assert_allclose(est.direction_, expected)


def test_projector_bad_scheme(toy_store):
    with pytest.raises(ValueError):
        SemanticProjector(toy_store, ["big"], ["small"], scheme="middle").fit()


def test_projector_scores(toy_store):
    est = SemanticProjector(toy_store, ["big"], ["small"]).fit()
    items = ["whale", "dog", "mouse"]
    assert est.score(items, [3.0, 2.0, 1.0]) > 0.9
    assert est.order_consistency(items, [3.0, 2.0, 1.0]) == 1.0


def test_rater_reliability_matches_pipeline(world):
    table = world.ratings["cat0:feat2"]
    est = RaterReliability().fit(table.raw)
    kept, rep = reliability(table)
    assert est.mean_is_r_ == rep.mean_is_r
    assert est.is_ocp_ == rep.is_ocp
    assert len(est.retained_) == len(kept.participants)
    np.testing.assert_allclose(est.item_means_, kept.zscored.mean(axis=0))
    z = est.transform(table.raw[:2])
    np.testing.assert_allclose(z.std(axis=1, ddof=1), 1.0)


def test_rater_reliability_clone_and_exclusion():
    rng = np.random.default_rng(4)
    signal = rng.standard_normal(20)
    raw = np.clip(50 + 10 * (signal + 0.3 * rng.standard_normal((20, 20))), 0, 100)
    raw = np.vstack([raw, rng.uniform(0, 100, (1, 20))])
    est = clone(RaterReliability(exclusion_sd=2.5)).fit(raw)
    assert est.excluded_ == (20,)
    assert 20 not in est.retained_
