import numpy as np
import pytest

from oracles import brute_shapley
from physiofuse import _core, models
from physiofuse.dataset import FeatureMatrix
from physiofuse.errors import EmptyInput, MissingCover
from physiofuse.explain import (
    ShapExplanation,
    explain_rows,
    global_importance,
    importance_from_csv,
    linear_shap,
    shap_document,
    tree_shap,
    tree_shap_values,
    waterfall,
)
from physiofuse.models import EnsembleKind, GBDTConfig, LinearModel, RFConfig, Tree, TreeEnsemble


def random_tree(rng, n_features, max_depth):
    """Random binary tree whose covers add up from the leaves."""
    left, right, feat, thr, val, cover = [], [], [], [], [], []

    def build(depth):
        i = len(left)
        for arr, v in ((left, -1), (right, -1), (feat, -1), (thr, 0.0), (val, 0.0), (cover, 0.0)):
            arr.append(v)
        if depth < max_depth and rng.random() < 0.8:
            feat[i] = int(rng.integers(0, n_features))
            thr[i] = float(rng.uniform(-1, 1))
            left[i] = build(depth + 1)
            right[i] = build(depth + 1)
            cover[i] = cover[left[i]] + cover[right[i]]
        else:
            val[i] = float(rng.normal())
            cover[i] = float(rng.integers(1, 20))
        return i

    build(0)
    return Tree(left, right, feat, thr, val, cover)


def _single(tree, n_features):
    return TreeEnsemble(EnsembleKind.BOOSTED, (tree,), 1, tuple(f"f{i}" for i in range(n_features)),
                        base_score=np.zeros(1), tree_class=(0,))


def test_matches_brute_force_shapley():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        F = int(rng.integers(1, 5))
        tree = random_tree(rng, F, int(rng.integers(1, 4)))
        x = rng.uniform(-1.2, 1.2, F)
        base, phi = tree_shap_values(_single(tree, F), x)
        ref = brute_shapley(tree, x, F)
        worst = max(worst, float(np.max(np.abs(phi[0, :, 0] - ref))))
    assert worst < 1e-9


def test_single_split_closed_form():
    a, b, p = 2.0, -1.0, 0.3
    tree = Tree([1, -1, -1], [2, -1, -1], [1, -1, -1], [0.5, 0, 0], [0.0, a, b],
                [10.0, 10 * p, 10 * (1 - p)])
    base, phi = tree_shap_values(_single(tree, 3), np.array([9.0, 0.0, 9.0]))
    assert base[0] == pytest.approx(p * a + (1 - p) * b, abs=1e-15)
    assert phi[0, 1, 0] == pytest.approx(a - (p * a + (1 - p) * b), abs=1e-15)
    assert phi[0, 0, 0] == 0.0 and phi[0, 2, 0] == 0.0


def test_null_player():
    rng = np.random.default_rng(1)
    for _ in range(20):
        tree = random_tree(rng, 3, 3)
        unused = [f for f in range(4) if f not in tree.used_features()]
        _, phi = tree_shap_values(_single(tree, 4), rng.uniform(-1, 1, (5, 4)))
        assert np.all(phi[:, unused, :] == 0.0)


def test_missing_cover():
    tree = Tree([1, -1, -1], [2, -1, -1], [0, -1, -1], [0.0, 0, 0], [0.0, 1, 2], [0.0, 0, 0])
    with pytest.raises(MissingCover):
        tree_shap_values(_single(tree, 1), np.zeros(1))


def _blobs(seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.standard_normal((40, 5)) + c for c in (0.0, 1.0, 2.0)])
    y = np.repeat([0, 1, 2], 40)
    return FeatureMatrix(tuple(f"f{i}" for i in range(5)), X, y,
                         tuple(("s", i) for i in range(120)))


@pytest.mark.parametrize("name", ["DT", "RF", "XGBOOST"])
def test_local_accuracy_tree_models(name):
    data = _blobs()
    cfg = models.TrainConfig(rf=RFConfig(n_trees=25), gbdt=GBDTConfig(n_rounds=20, max_depth=4))
    model = models.fit(name, data, cfg)
    rows = np.random.default_rng(5).normal(1.0, 1.5, (100, 5))
    base, phi = tree_shap_values(model, rows)
    err = np.abs(base + phi.sum(axis=1) - models.margin(model, rows))
    assert err.max() <= 1e-6


def test_forest_is_mean_of_tree_attributions():
    data = _blobs(2)
    model = models.fit("RF", data, models.TrainConfig(rf=RFConfig(n_trees=5)))
    row = data.X[:3]
    _, phi = tree_shap_values(model, row)
    parts = [tree_shap_values(TreeEnsemble(EnsembleKind.FOREST, (t,), 3, model.feature_names), row)[1]
             for t in model.trees]
    assert np.allclose(phi, np.mean(parts, axis=0), atol=1e-14)


class TestLinear:
    def model(self):
        W = np.array([[0.0, 2.5, 0.0], [1.0, -1.0, 0.5], [0.0, 0.0, 0.0]])
        return LinearModel(W, np.array([0.1, -0.2, 0.3]), np.array([1.0, 2.0, 3.0]),
                           np.array([2.0, 0.5, 1.0]), ("a", "b", "c"))

    def test_background_row_gives_zero(self):
        m = self.model()
        e = linear_shap(m, m.mean, m.mean)
        assert np.all(e.phi == 0.0)

    def test_single_weight(self):
        m = self.model()
        x = np.array([5.0, 3.0, -1.0])
        e = linear_shap(m, x, m.mean)
        z = (x - m.mean) / m.scale
        assert e.phi[1, 0] == 2.5 * z[1]
        assert e.phi[0, 0] == 0.0 and e.phi[2, 0] == 0.0

    def test_additivity(self):
        m = self.model()
        rng = np.random.default_rng(0)
        for x in rng.normal(0, 3, (100, 3)):
            e = linear_shap(m, x, m.mean)
            assert np.max(np.abs(e.base_value + e.phi.sum(axis=0) - m.margin(x)[0])) <= 1e-12


def _exp(phi, base=0.0, names=None):
    phi = np.asarray(phi, dtype=float).reshape(-1, 1)
    names = names or tuple(f"f{i}" for i in range(len(phi)))
    return ShapExplanation(np.array([base]), phi, np.zeros(len(phi)), names)


class TestGlobalImportance:
    def test_dominant_column(self):
        exps = [_exp([0, 0, 0, s]) for s in (1.0, -1.0, 1.0)]
        imp = global_importance(exps, 0)
        assert imp.items[0] == ("f3", 1.0)

    def test_tie_by_name(self):
        exps = [_exp([1.0, 1.0], names=("zeta", "alpha"))]
        assert [n for n, _ in global_importance(exps, 0).items] == ["alpha", "zeta"]

    def test_hand_computed(self):
        rows = [[1, -2, 0.5], [-1, 1, 0.5], [0, -3, -0.5], [2, 0, 0.5], [-1, 1, 0.5]]
        imp = global_importance([_exp(r) for r in rows], 0)
        # column means of |phi|: f0 = 5/5, f1 = 7/5, f2 = 2.5/5
        assert imp.items == (("f1", 1.4), ("f0", 1.0), ("f2", 0.5))
        assert importance_from_csv(imp.to_csv()).items == imp.items

    def test_empty(self):
        with pytest.raises(EmptyInput):
            global_importance([], 0)


class TestWaterfall:
    def test_example(self):
        wf = waterfall(_exp([2.0, -1.0, 0.5]), top_k=2)
        assert [s.contribution for s in wf.steps] == [2.0, -1.0]
        assert [s.cumulative for s in wf.steps] == [2.0, 1.0]
        assert wf.remainder == 0.5 and wf.final == 1.5

    def test_complete(self):
        e = _exp([0.3, -0.2, 0.1, 0.7], base=-1.0)
        wf = waterfall(e, top_k=4)
        assert wf.remainder == 0.0
        assert wf.final == pytest.approx(e.output(0), abs=1e-15)

    def test_top_k_validation(self):
        with pytest.raises(ValueError):
            waterfall(_exp([1.0]), top_k=0)


def test_explain_rows_and_document():
    data = _blobs(3)
    model = models.fit("XGBOOST", data, models.TrainConfig(gbdt=GBDTConfig(n_rounds=5)))
    exps = explain_rows(model, data.X[:4], data.keys[:4])
    doc = shap_document(exps, 2)
    assert doc["class"] == 2 and len(doc["rows"]) == 4
    assert doc["rows"][0]["row_key"] == ["s", 0]
    one = tree_shap(model, data.X[0])
    assert np.array_equal(one.phi, exps[0].phi)


def test_backend_is_reported():
    assert _core.BACKEND in ("compiled", "python")
