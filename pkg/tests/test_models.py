import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from physiofuse import models
from physiofuse.dataset import FeatureMatrix
from physiofuse.errors import SingleClass, WidthMismatch
from physiofuse.models import (
    DTConfig,
    EnsembleKind,
    GBDTConfig,
    LinearModel,
    LRConfig,
    RFConfig,
    Tree,
    TreeEnsemble,
    fit_decision_tree,
    fit_gbdt,
    fit_logistic,
    fit_random_forest,
    loss_and_grad,
    softmax,
)


def fm(X, y, keys=None):
    X = np.asarray(X, dtype=float)
    keys = keys or tuple(("s", i) for i in range(len(X)))
    return FeatureMatrix(tuple(f"f{j}" for j in range(X.shape[1])), X, y, keys)


def blobs(n_per=40, sep=3.0, F=4, seed=0):
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((3, F)) * sep
    X = np.vstack([c + rng.standard_normal((n_per, F)) for c in centers])
    y = np.repeat([0, 1, 2], n_per)
    return fm(X, y)


def gini(counts):
    p = np.asarray(counts, float) / np.sum(counts)
    return 1.0 - float(np.sum(p ** 2))


class TestDecisionTree:
    def test_gini_half(self):
        assert gini([50, 50]) == 0.5

    def test_one_dimensional_split(self):
        X = np.array([[-3.0], [-2.0], [-1.0], [1.0], [2.0], [3.0]])
        model = fit_decision_tree(fm(X, [0, 0, 0, 1, 1, 1]))
        tree = model.trees[0]
        assert tree.max_depth == 1
        assert tree.threshold[0] == 0.0
        assert (models.predict(model, X) == [0, 0, 0, 1, 1, 1]).all()

    def test_xor(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
        model = fit_decision_tree(fm(X, [0, 0, 1, 1]))
        assert model.trees[0].max_depth == 2
        assert (models.predict(model, X) == [0, 0, 1, 1]).all()

    def test_leaf_frequencies(self):
        X = np.ones((4, 1))
        model = fit_decision_tree(fm(X, [0, 0, 0, 1]))
        assert models.predict_proba(model, X[:1]).tolist() == [[0.75, 0.25, 0.0]]

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10000), n=st.integers(4, 60))
    def test_pure_leaves_when_unbounded(self, seed, n):
        rng = np.random.default_rng(seed)
        X = rng.integers(0, 5, size=(n, 3)).astype(float)
        keys = {tuple(r): int(rng.integers(0, 3)) for r in X}
        y = np.array([keys[tuple(r)] for r in X])
        if len(np.unique(y)) < 2:
            return
        model = fit_decision_tree(fm(X, y))
        assert (models.predict(model, X) == y).all()

    def test_max_depth_and_min_leaf(self):
        data = blobs()
        assert fit_decision_tree(data, DTConfig(max_depth=2)).trees[0].max_depth <= 2
        tree = fit_decision_tree(data, DTConfig(min_samples_leaf=10)).trees[0]
        leaves = tree.left == -1
        assert tree.cover[leaves].min() >= 10

    def test_single_class(self):
        with pytest.raises(SingleClass):
            fit_decision_tree(fm(np.zeros((3, 1)), [1, 1, 1]))


class TestForest:
    def test_degenerate_forest_equals_tree(self):
        data = blobs(seed=4)
        rf = fit_random_forest(data, RFConfig(n_trees=1, bootstrap=False, max_features="all"))
        dt = fit_decision_tree(data)
        assert np.array_equal(models.predict_proba(rf, data), models.predict_proba(dt, data))

    def test_deterministic_and_row_order_invariant(self):
        data = blobs(seed=5, sep=1.0)
        cfg = RFConfig(n_trees=15, seed=9)
        a = models.predict_proba(fit_random_forest(data, cfg), data)
        b = models.predict_proba(fit_random_forest(data, cfg), data)
        assert np.array_equal(a, b)
        perm = np.random.default_rng(1).permutation(len(data))
        c = models.predict_proba(fit_random_forest(data.take(perm), cfg), data)
        assert np.array_equal(a, c)
        d = models.predict_proba(fit_random_forest(data, RFConfig(n_trees=15, seed=10)), data)
        assert not np.array_equal(a, d)

    def test_candidate_count(self):
        assert RFConfig().n_candidates(108) == 11
        assert RFConfig().n_candidates(45) == 7


class TestLogistic:
    def test_gradient_check(self):
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(20):
            n, F, K = int(rng.integers(5, 30)), int(rng.integers(1, 6)), 3
            Z = rng.standard_normal((n, F))
            Y = np.eye(K)[rng.integers(0, K, n)]
            theta = rng.standard_normal(K * F + K)
            l2 = float(rng.uniform(0, 2))
            _, g = loss_and_grad(theta, Z, Y, l2)
            h = 1e-6
            fd = np.array([(loss_and_grad(theta + h * e, Z, Y, l2)[0]
                            - loss_and_grad(theta - h * e, Z, Y, l2)[0]) / (2 * h)
                           for e in np.eye(theta.size)])
            rel = np.max(np.abs(fd - g) / np.maximum(np.abs(fd) + np.abs(g), 1e-8))
            worst = max(worst, rel)
        assert worst < 1e-5

    def test_zero_weights_two_classes(self):
        model = LinearModel(np.zeros((2, 3)), np.zeros(2), np.zeros(3), np.ones(3), ("a", "b", "c"))
        assert np.all(model.predict_proba(np.random.default_rng(0).standard_normal((5, 3))) == 0.5)

    def test_separable_blobs(self):
        # bounded noise around far-apart centers: separable by construction
        rng = np.random.default_rng(3)
        centers = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
        X = np.vstack([c + rng.uniform(-1, 1, (30, 2)) for c in centers])
        data = fm(X, np.repeat([0, 1, 2], 30))
        model = fit_logistic(data, LRConfig(l2=1e-4))
        assert (models.predict(model, data) == data.y).all()

    def test_shift_invariance_of_argmax(self):
        data = blobs(sep=1.0)
        model = fit_logistic(data)
        s = model.margin(data.X)
        assert np.array_equal(np.argmax(s, 1), np.argmax(s + 17.5, 1))
        assert np.allclose(softmax(s), softmax(s + 17.5), atol=1e-15)


class TestBoosting:
    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 10000), lr=st.sampled_from([0.05, 0.1, 0.3]),
           lam=st.sampled_from([0.0, 1.0]))
    def test_loss_non_increasing_without_sampling(self, seed, lr, lam):
        data = blobs(n_per=20, sep=0.7, seed=seed)
        cfg = GBDTConfig(n_rounds=25, learning_rate=lr, max_depth=3, subsample=1.0,
                         colsample=1.0, l2=lam)
        loss = np.array(fit_gbdt(data, cfg).train_loss)
        assert np.all(np.diff(loss) <= 1e-12)

    def test_single_stump(self):
        X = np.array([[-3.0], [-2.0], [-1.0], [1.0], [2.0], [3.0]])
        data = fm(X, [0, 0, 0, 1, 1, 1])
        cfg = GBDTConfig(n_rounds=1, learning_rate=1.0, l2=0.0, max_depth=1, subsample=1.0,
                         colsample=1.0)
        model = fit_gbdt(data, cfg)
        test = np.array([[-5.0], [-0.5], [0.5], [4.0]])
        assert models.predict(model, test).tolist() == [0, 0, 1, 1]

    def test_deterministic_and_row_order_invariant(self):
        data = blobs(seed=2, sep=1.0)
        cfg = GBDTConfig(n_rounds=10, seed=3)
        a = fit_gbdt(data, cfg)
        b = fit_gbdt(data, cfg)
        assert models.dumps(a) == models.dumps(b)
        perm = np.random.default_rng(7).permutation(len(data))
        c = fit_gbdt(data.take(perm), cfg)
        assert np.array_equal(models.predict_proba(a, data), models.predict_proba(c, data))

    def test_zero_trees_uniform(self):
        leaf = Tree([-1], [-1], [-1], [0.0], [[0.0]], [1.0])
        model = TreeEnsemble(EnsembleKind.BOOSTED, (leaf, leaf, leaf), 3, ("x",),
                             base_score=np.log(np.full(3, 1 / 3)), tree_class=(0, 1, 2))
        assert np.allclose(model.predict_proba(np.zeros((2, 1))), 1 / 3, atol=1e-15)


@pytest.mark.parametrize("name", models.CLASSIFIERS)
def test_probabilities_normalized_and_serializable(name):
    data = blobs(sep=1.0)
    cfg = models.TrainConfig(rf=RFConfig(n_trees=10), gbdt=GBDTConfig(n_rounds=10))
    model = models.fit(name, data, cfg)
    P = models.predict_proba(model, data)
    assert np.all(P >= 0) and np.max(np.abs(P.sum(axis=1) - 1)) < 1e-9
    back = models.loads(models.dumps(model))
    assert np.array_equal(models.predict_proba(back, data), P)
    with pytest.raises(WidthMismatch):
        models.predict_proba(model, np.zeros((1, 2)))
