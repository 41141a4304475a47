import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from focusline.models import (KINDS, DegenerateTrainingError, ModelSpec, ShapeError, TrainedModel,
                              dumps_model, fit, importance, load_model, save_model)
from focusline.models._tree import Presorted, grow_classifier, grow_newton
from focusline.models.adaboost import softmax
from focusline.models.gbt import cross_entropy
from focusline.models.mlp import init_params, loss_and_grad
from focusline.models.svm import rbf_kernel, smo
from focusline.types import ValidationError

from oracles import ReferenceCART, best_stump, gini_decrease

FAST = {
    "random_forest": {"n_trees": 20},
    "adaboost": {"n_estimators": 20},
    "gbt": {"rounds": 10, "depth": 3},
    "svm": {},
    "mlp": {"epochs": 30},
}


def _blobs(n=120, d=4, seed=0, shift=2.5):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 3
    X = rng.normal(size=(n, d))
    X[:, 0] += shift * y
    return X, y


def test_spec_defaults_and_validation():
    spec = ModelSpec("random_forest")
    assert spec["n_trees"] == 200 and spec["max_depth"] is None
    assert ModelSpec("random_forest", {"max_depth": float("inf")})["max_depth"] is None
    with pytest.raises(ValidationError, match="n_trees"):
        ModelSpec("random_forest", {"n_trees": 0})
    with pytest.raises(ValidationError, match="unknown"):
        ModelSpec("svm", {"kernel": "linear"})
    with pytest.raises(ValidationError):
        ModelSpec("knn")
    with pytest.raises(ValidationError):
        ModelSpec("mlp", {"momentum": 1.0})
    assert ModelSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


@given(st.integers(0, 10_000))
def test_stump_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(10, 60))
    x = np.round(rng.normal(size=n), 1)
    y = rng.integers(0, 3, size=n)
    gain, thr = best_stump(x, y, 3)
    tree = grow_classifier(Presorted(x[:, None]), y, 3, max_depth=1)
    if thr is None:
        assert tree.n_nodes == 1
        return
    assert tree.feature[0] == 0
    split_gain = gini_decrease(y, x <= tree.threshold[0], 3)
    assert split_gain == gain
    assert tree.threshold[0] == thr


def test_depth_one_separable():
    rng = np.random.default_rng(1)
    x = np.sort(rng.uniform(size=80))
    y = (x > 0.37).astype(int)
    tree = grow_classifier(Presorted(x[:, None]), y, 2, max_depth=1)
    assert np.array_equal(tree.predict_value(x[:, None]).argmax(axis=1), y)
    assert tree.threshold[0] == best_stump(x, y, 2)[1]


@pytest.mark.parametrize("seed", range(5))
def test_single_tree_forest_equals_cart(seed):
    X, y = _blobs(200, 5, seed, shift=1.0)
    model = fit(ModelSpec("random_forest", {"n_trees": 1, "bootstrap": False, "max_features": "all"}, seed), X, y)
    ref = ReferenceCART(3).fit(X, y)
    Xt = np.random.default_rng(seed + 100).normal(size=(300, 5)) * 2
    assert np.array_equal(model.predict(X), ref.predict(X))
    assert np.array_equal(model.predict(Xt), ref.predict(Xt))
    assert np.array_equal(model.predict(X), y)


def test_min_samples_leaf_and_depth():
    X, y = _blobs(150, 3, 2, shift=0.5)
    tree = grow_classifier(Presorted(X), y, 3, min_samples_leaf=7, max_depth=4)
    leaves = tree.left < 0
    counts = np.bincount(tree.apply(X), minlength=tree.n_nodes)
    assert np.all(counts[leaves] >= 7)
    depth = np.zeros(tree.n_nodes, int)
    for i in range(tree.n_nodes):
        if tree.left[i] >= 0:
            depth[tree.left[i]] = depth[tree.right[i]] = depth[i] + 1
    assert depth.max() <= 4


def test_newton_leaf_weights():
    X, y = _blobs(90, 3, 3)
    rng = np.random.default_rng(0)
    g, h = rng.normal(size=90), rng.uniform(0.1, 1.0, size=90)
    tree = grow_newton(Presorted(X), g, h, lam=2.0, max_depth=2)
    leaf = tree.apply(X)
    for node in np.unique(leaf):
        m = leaf == node
        assert tree.value[node, 0] == pytest.approx(-g[m].sum() / (h[m].sum() + 2.0), rel=1e-12)


@pytest.mark.parametrize("lr", [0.1, 0.3])
def test_gbt_training_loss_non_increasing(lr):
    X, y = _blobs(150, 4, 4, shift=1.0)
    model = fit(ModelSpec("gbt", {"rounds": 30, "depth": 3, "learning_rate": lr}), X, y)
    hist = np.array(model.estimator.loss_history)
    assert hist[0] == pytest.approx(np.log(3))
    assert np.all(np.diff(hist) <= 1e-12)
    F = model.estimator.decision(X)
    assert cross_entropy(F, y) == pytest.approx(hist[-1], rel=1e-12)


def test_svm_dual_constraints():
    X, y = _blobs(80, 3, 5, shift=1.0)
    yk = np.where(y == 0, 1.0, -1.0)
    K = rbf_kernel(X, X, 0.5)
    C, tol = 1.0, 1e-3
    alpha, rho, _ = smo(K, yk, C, tol, 10**7)
    assert np.all(alpha >= 0) and np.all(alpha <= C)
    assert abs(alpha @ yk) < 1e-9
    # KKT gap: max violating pair within tolerance
    G = (yk[:, None] * yk[None, :] * K) @ alpha - 1.0
    up = ((yk > 0) & (alpha < C)) | ((yk < 0) & (alpha > 0))
    low = ((yk > 0) & (alpha > 0)) | ((yk < 0) & (alpha < C))
    assert np.max(-yk[up] * G[up]) - np.min(-yk[low] * G[low]) <= tol + 1e-12


def test_svm_matches_libsvm():
    svm = pytest.importorskip("sklearn.svm")
    X, y = _blobs(90, 3, 6, shift=1.0)
    yk = np.where(y == 1, 1.0, -1.0)
    alpha, rho, _ = smo(rbf_kernel(X, X, 0.3), yk, 2.0, 1e-6, 10**7)
    ref = svm.SVC(C=2.0, gamma=0.3, tol=1e-6).fit(X, yk)
    ours = rbf_kernel(X, X, 0.3) @ (alpha * yk) - rho
    np.testing.assert_allclose(ours, ref.decision_function(X), atol=1e-4)


def test_mlp_gradient_finite_differences():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(10, 6))
    y = rng.integers(0, 3, size=10)
    params = init_params([6, 8, 5, 3], rng)
    for p in params[1::2]:
        p += rng.normal(scale=0.1, size=p.shape)
    _, grads = loss_and_grad(params, X, y)
    eps = 1e-5
    for p, g in zip(params, grads):
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + eps
            up, _ = loss_and_grad(params, X, y)
            p[idx] = old - eps
            down, _ = loss_and_grad(params, X, y)
            p[idx] = old
            num = (up - down) / (2 * eps)
            assert abs(num - g[idx]) / max(abs(num) + abs(g[idx]), 1e-8) <= 1e-4


def test_mlp_loss_decreases():
    X, y = _blobs(150, 4, 7)
    model = fit(ModelSpec("mlp", {"epochs": 40}, 1), X, y)
    hist = model.estimator.loss_history
    assert hist[-1] < hist[0]


def test_adaboost_weights():
    X, y = _blobs(150, 4, 8, shift=5.0)
    model = fit(ModelSpec("adaboost", {"n_estimators": 15}, 0), X, y)
    assert all(a > 0 for a in model.estimator.alphas)
    assert np.mean(model.predict(X) == y) > 0.9


@pytest.mark.parametrize("kind", KINDS)
def test_every_model_learns_and_round_trips(kind, tmp_path):
    X, y = _blobs(150, 4, 9, shift=5.0)
    Xt, yt = _blobs(90, 4, 10, shift=5.0)
    model = fit(ModelSpec(kind, FAST[kind], 3), X, y)
    proba = model.predict_proba(Xt)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)
    assert np.mean(model.predict(Xt) == yt) > 0.9
    save_model(model, tmp_path / "m.bin")
    back = load_model(tmp_path / "m.bin")
    assert np.array_equal(back.predict_proba(Xt), proba)
    assert dumps_model(back) == dumps_model(model)
    imp = importance(model)
    if kind in ("svm", "mlp"):
        assert imp is None
    else:
        assert imp.shape == (4,) and imp.sum() == pytest.approx(1.0) and imp.argmax() == 0


@pytest.mark.parametrize("kind", KINDS)
def test_same_seed_same_model(kind):
    X, y = _blobs(100, 4, 11)
    a = fit(ModelSpec(kind, FAST[kind], 5), X, y)
    b = fit(ModelSpec(kind, FAST[kind], 5), X, y)
    assert dumps_model(a) == dumps_model(b)


def test_feature_subset_projection():
    X, y = _blobs(100, 6, 12)
    model = fit(ModelSpec("random_forest", {"n_trees": 10}), X, y, [0, 3])
    assert model.feature_subset == (0, 3)
    assert np.array_equal(model.predict(model.project(X)), model.predict(X[:, [0, 3]]))
    with pytest.raises(ShapeError):
        model.predict(X)
    assert model.predict(np.empty((0, 2))).shape == (0,)


def test_fit_rejects_bad_input():
    X, y = _blobs(30, 3, 13)
    spec = ModelSpec("random_forest", {"n_trees": 5})
    with pytest.raises(DegenerateTrainingError):
        fit(spec, X[:9], y[:9])
    with pytest.raises(DegenerateTrainingError):
        fit(spec, X, np.zeros(30, int))
    Xn = X.copy()
    Xn[0, 0] = np.nan
    with pytest.raises(ValidationError):
        fit(spec, Xn, y)
    with pytest.raises(ValidationError):
        fit(spec, X, y + 1)
    with pytest.raises(ShapeError):
        fit(spec, X, y[:-1])


def test_load_rejects_foreign_json(tmp_path):
    (tmp_path / "m.json").write_text('{"format": "other"}')
    with pytest.raises(ValidationError):
        load_model(tmp_path / "m.json")
    (tmp_path / "m.json").write_text("not json")
    with pytest.raises(ValidationError):
        load_model(tmp_path / "m.json")


@settings(max_examples=30)
@given(st.lists(st.floats(-50, 50), min_size=3, max_size=3))
def test_softmax_is_distribution(z):
    p = softmax(np.array([z]))
    assert p.sum() == pytest.approx(1.0) and np.all(p >= 0)
