import itertools
import math
import warnings

import numpy as np
import pytest

from conftest import two_blobs
from refpred.errors import CatalogMismatch, NonBinaryLabels, SingleClass, UnsupportedAlgorithm
from refpred.ml import models as ml
from refpred.ml.bayes import fit_gaussian_nb, nb_posterior
from refpred.ml.linear import LR_TOL, fit_linear_svm, fit_logistic, fit_platt, lr_grad, lr_loss, sigmoid
from refpred.ml.neural import HIDDEN, KEEP_PROB, forward, init_params
from refpred.ml.sampling import near_miss_undersample, random_undersample
from refpred.ml.scaling import NotScaledWarning, ScalerParams, check_scaled, fit_scaler
from refpred.ml.space import (
    ALGORITHMS,
    LogUniform,
    default_hyperparameters,
    normalize_algorithm,
    sample_point,
    search_space,
)
from refpred.ml.tree import TreeParams, grow_tree, n_candidate_features

FAST = {"NN": {"epochs": 30}, "RF": {"n_estimators": 15}}


def scaled_blobs(n=120, seed=0, dims=3):
    X, y = two_blobs(n, seed=seed, dims=dims)
    return fit_scaler(X).transform(X), y


class TestScaling:
    def test_extremes_exact(self):
        X = np.random.default_rng(0).normal(size=(50, 4)) * [1, 100, 1e-6, 5]
        Z = fit_scaler(X).transform(X)
        assert (Z.min(axis=0) == 0.0).all() and (Z.max(axis=0) == 1.0).all()

    def test_constant_feature_maps_to_zero(self):
        X = np.array([[1.0, 5.0], [2.0, 5.0]])
        assert fit_scaler(X).transform(X)[:, 1].tolist() == [0.0, 0.0]

    def test_round_trip(self):
        s = fit_scaler(np.array([[0.1, -3.0], [0.7, 2.5]]))
        assert ScalerParams.from_dict(s.to_dict()) == s

    def test_out_of_range_warns(self):
        with pytest.warns(NotScaledWarning):
            assert not check_scaled(np.array([[1.5]]))
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert check_scaled(np.array([[1.0 + 1e-10, -1e-10]]))

    def test_fit_warns_on_raw_data(self):
        with pytest.warns(NotScaledWarning):
            ml.fit("LR", None, np.array([[0.0], [5.0]]), [0, 1])


class TestRandomUndersample:
    def test_large_imbalanced_counts(self):
        y = np.r_[np.ones(41191, dtype=int), np.zeros(10692, dtype=int)]
        _, yb = random_undersample(np.zeros((len(y), 1)), y, 0)
        assert (int(yb.sum()), int((yb == 0).sum())) == (10692, 10692)

    def test_balanced_unchanged(self):
        X, y = np.arange(10.0)[:, None], np.array([0, 1] * 5)
        Xb, yb = random_undersample(X, y, 3)
        assert np.array_equal(Xb, X) and np.array_equal(yb, y)

    def test_same_seed_same_rows(self):
        X, y = np.arange(40.0)[:, None], np.r_[np.ones(30, dtype=int), np.zeros(10, dtype=int)]
        a, b = random_undersample(X, y, 9), random_undersample(X, y, 9)
        assert np.array_equal(a[0], b[0])
        assert not np.array_equal(a[0], random_undersample(X, y, 10)[0])

    def test_uniform_selection(self):
        # every majority row should be kept about half the time
        X, y = np.arange(12.0)[:, None], np.r_[np.ones(8, dtype=int), np.zeros(4, dtype=int)]
        hits = np.zeros(8)
        for seed in range(2000):
            Xb, yb = random_undersample(X, y, seed)
            hits[Xb[yb == 1, 0].astype(int)] += 1
        assert np.allclose(hits / 2000, 0.5, atol=0.05)

    def test_single_class(self):
        with pytest.raises(SingleClass):
            random_undersample(np.zeros((3, 1)), [1, 1, 1], 0)

    def test_non_binary(self):
        with pytest.raises(NonBinaryLabels):
            random_undersample(np.zeros((3, 1)), [0, 1, 2], 0)


class TestNearMiss:
    def test_coincident_point_kept(self):
        X = np.array([[0.0], [10.0], [0.0]])
        y = np.array([0, 0, 1])
        Xb, yb = near_miss_undersample(X, y)
        assert Xb[yb == 0, 0].tolist() == [0.0]

    def test_balanced_unchanged(self):
        X, y = np.arange(4.0)[:, None], np.array([0, 1, 0, 1])
        Xb, yb = near_miss_undersample(X, y)
        assert np.array_equal(Xb, X)

    def test_line_against_brute_force(self):
        X = np.array([[0.0], [3.0], [7.0], [12.0], [4.0], [5.0]])
        y = np.array([0, 0, 0, 0, 1, 1])
        minority = [4.0, 5.0]

        def mean_dist(x):
            return sum(abs(x - m) for m in minority) / len(minority)

        best = min(itertools.combinations([0.0, 3.0, 7.0, 12.0], 2), key=lambda pair: sum(map(mean_dist, pair)))
        Xb, yb = near_miss_undersample(X, y)
        assert sorted(Xb[yb == 0, 0].tolist()) == sorted(best) == [3.0, 7.0]


class TestLogistic:
    def test_gradient_norm_at_optimum(self):
        X, y = scaled_blobs(seed=1)
        y = y.copy()
        y[:10] = 1 - y[:10]
        rng = np.random.default_rng(0)
        for C in (0.01, 1.0, 100.0):
            w = fit_logistic(X, y, C)
            # the stopping rule scales with the size of the data term
            assert np.linalg.norm(lr_grad(w, X, y, C)) <= LR_TOL * max(1.0, C * len(y))
            base = lr_loss(w, X, y, C)
            for _ in range(50):
                assert base <= lr_loss(w + rng.normal(scale=1e-3, size=w.shape), X, y, C) * (1 + 1e-12)

    def test_sigmoid_stable(self):
        z = sigmoid(np.array([-1000.0, 0.0, 1000.0]))
        assert z.tolist() == [0.0, 0.5, 1.0]


class TestSvm:
    def test_primal_optimality(self):
        X, y = scaled_blobs(80, seed=2, dims=2)
        y = y.copy()
        y[:6] = 1 - y[:6]
        s = np.where(y == 1, 1.0, -1.0)
        C = 0.7
        w = fit_linear_svm(X, y, C, seed=0)
        Xb = np.hstack([X, np.ones((len(X), 1))])

        def primal(v):
            return 0.5 * v @ v + C * np.maximum(0.0, 1 - s * (Xb @ v)).sum()

        base = primal(w)
        rng = np.random.default_rng(0)
        for _ in range(200):
            # dual coordinate descent stops at a 1e-6 projected gradient
            assert base <= primal(w + rng.normal(scale=1e-3, size=w.shape)) * (1 + 1e-5)

    def test_platt_monotone(self):
        scores = np.array([-2.0, -1.0, -0.5, 0.5, 1.0, 2.0])
        a, b = fit_platt(scores, np.array([0, 0, 1, 0, 1, 1]))
        assert a > 0

    def test_predict_uses_hyperplane_side(self):
        X, y = scaled_blobs(seed=3)
        model = ml.fit("SVM", {"C": 1.0}, X, y)
        assert np.array_equal(ml.predict(model, X), (ml.decision_scores(model, X) > 0).astype(int))


class TestNaiveBayes:
    def test_symmetric_query(self):
        model = ml.fit("NB", None, np.array([[0.0], [1.0]]), [0, 1])
        assert ml.predict(model, np.array([[0.1]])).tolist() == [0]

    def test_posterior_sums_to_one(self):
        rng = np.random.default_rng(0)
        X, y = rng.random((30, 4)), np.r_[np.zeros(15, dtype=int), np.ones(15, dtype=int)]
        post = nb_posterior(fit_gaussian_nb(X, y, 1e-9), rng.normal(size=(500, 4)) * 5)
        assert np.abs(post.sum(axis=1) - 1.0).max() <= 1e-12

    def test_smoothing_uses_max_variance(self):
        X = np.array([[0.0, 0.0], [1.0, 0.5], [0.0, 1.0], [1.0, 0.5]])
        params = fit_gaussian_nb(X, [0, 0, 1, 1], 0.1)
        assert params["epsilon"] == pytest.approx(0.1 * 0.25)

    def test_zero_variance_everywhere(self):
        X = np.array([[0.5], [0.5], [0.5], [0.5]])
        params = fit_gaussian_nb(X, [0, 0, 1, 1], 1e-9)
        post = nb_posterior(params, X)
        assert np.isfinite(post).all()


class TestTree:
    def test_four_point_root(self):
        model = ml.fit("DT", {"criterion": "gini"}, np.array([[1.0], [2.0], [3.0], [4.0]]) / 4, [0, 0, 1, 1])
        t = model.params["tree"]
        assert t["threshold"][0] == 2.5 / 4
        assert t["impurity"][t["left"][0]] == 0.0 and t["impurity"][t["right"][0]] == 0.0

    def test_single_split_importance(self):
        X = np.array([[0.3, 0.0], [0.3, 0.2], [0.3, 0.8], [0.3, 1.0]])
        model = ml.fit("DT", None, X, [0, 0, 1, 1])
        assert ml.feature_importance(model).tolist() == [0.0, 1.0]

    def test_max_depth_respected(self):
        X, y = scaled_blobs(seed=4)
        y = np.random.default_rng(0).permutation(y)
        t = ml.fit("DT", {"max_depth": 2}, X, y).params["tree"]
        depth = {0: 0}
        for i, (l, r) in enumerate(zip(t["left"], t["right"])):
            if l >= 0:
                depth[l] = depth[r] = depth[i] + 1
        assert max(depth.values()) <= 2

    def test_entropy_pure_leaves(self):
        X, y = scaled_blobs(seed=5)
        model = ml.fit("DT", {"criterion": "entropy", "splitter": "random"}, X, y, seed=3)
        assert np.array_equal(ml.predict(model, X), y)

    def test_min_samples_split(self):
        X = np.linspace(0, 1, 6)[:, None]
        t = grow_tree(X, np.array([0, 1, 0, 1, 0, 1]), TreeParams(min_samples_split=7), np.random.default_rng(0))
        assert len(t["feature"]) == 1

    @pytest.mark.parametrize("mf,d,expected", [("sqrt", 46, 6), ("log2", 46, 5), ("all", 46, 46), (None, 3, 3),
                                                ("log2", 1, 1)])
    def test_candidate_features(self, mf, d, expected):
        assert n_candidate_features(mf, d) == expected


class TestForest:
    def test_importance_normalized(self):
        rng = np.random.default_rng(0)
        for seed in range(5):
            X, y = rng.random((60, 5)), rng.integers(0, 2, 60)
            model = ml.fit("RF", {"n_estimators": 12}, X, y, seed)
            imp = ml.feature_importance(model)
            assert abs(imp.sum() - 1.0) <= 1e-9 and (imp >= 0).all()

    def test_proba_is_vote_fraction(self):
        X, y = scaled_blobs(seed=6)
        model = ml.fit("RF", {"n_estimators": 7}, X, y)
        p = ml.predict_proba(model, X)
        assert np.allclose(p * 7, np.round(p * 7))

    def test_seeded(self):
        X, y = scaled_blobs(seed=7)
        a = ml.fit("RF", {"n_estimators": 5}, X, y, 1)
        b = ml.fit("RF", {"n_estimators": 5}, X, y, 1)
        assert np.array_equal(ml.predict_proba(a, X), ml.predict_proba(b, X))


class TestNetwork:
    def test_architecture(self):
        params = init_params(5, np.random.default_rng(0))
        assert params["W1"].shape == (5, HIDDEN[0]) and params["W2"].shape == HIDDEN
        assert params["W3"].shape == (HIDDEN[1], 1)
        assert KEEP_PROB == 0.8

    def test_inference_has_no_dropout(self):
        params = init_params(3, np.random.default_rng(0))
        X = np.random.default_rng(1).random((4, 3))
        assert np.array_equal(forward(params, X)[0], forward(params, X)[0])

    def test_learns_blobs(self):
        X, y = scaled_blobs(seed=8)
        model = ml.fit("NN", {"epochs": 60}, X, y, seed=0)
        assert (ml.predict(model, X) == y).mean() >= 0.95


class TestModels:
    @pytest.mark.parametrize("algo", ALGORITHMS)
    def test_save_load_identical(self, algo, tmp_path):
        X, y = scaled_blobs(seed=9)
        model = ml.fit(algo, FAST.get(algo), X, y, seed=4).with_context(catalog_hash="abc", level="CLASS")
        ml.save_model(model, tmp_path / "m.json")
        back = ml.load_model(tmp_path / "m.json", "abc")
        assert np.array_equal(ml.predict_proba(model, X), ml.predict_proba(back, X))
        assert back.hyperparameters == model.hyperparameters
        probs = ml.predict_proba(back, X)
        assert ((probs >= 0) & (probs <= 1)).all()

    def test_load_catalog_mismatch(self, tmp_path):
        X, y = scaled_blobs(seed=10)
        ml.save_model(ml.fit("LR", None, X, y).with_context(catalog_hash="abc"), tmp_path / "m.json")
        with pytest.raises(CatalogMismatch):
            ml.load_model(tmp_path / "m.json", "def")

    def test_width_mismatch(self):
        X, y = scaled_blobs(seed=10)
        model = ml.fit("LR", None, X, y)
        with pytest.raises(CatalogMismatch):
            ml.predict(model, X[:, :2])

    def test_stored_scaler_applied(self):
        X, y = two_blobs(100, seed=11)
        scaler = fit_scaler(X)
        model = ml.fit("LR", None, scaler.transform(X), y).with_context(scaler=scaler)
        bare = ml.fit("LR", None, scaler.transform(X), y)
        assert np.array_equal(ml.predict_proba(model, X), ml.predict_proba(bare, scaler.transform(X)))

    def test_bad_labels(self):
        with pytest.raises(NonBinaryLabels):
            ml.fit("LR", None, np.zeros((3, 1)), [0, 1, 3])
        with pytest.raises(SingleClass):
            ml.fit("LR", None, np.zeros((3, 1)), [1, 1, 1])

    def test_lr_importance_is_absolute(self):
        model = ml.TrainedModel("LR", {}, {"coef": np.array([-2.0, 0.5, 0.0])}, 0, 2)
        assert ml.feature_importance(model).tolist() == [2.0, 0.5]

    @pytest.mark.parametrize("algo", ["NB", "NN"])
    def test_importance_unsupported(self, algo):
        X, y = scaled_blobs(seed=12)
        with pytest.raises(UnsupportedAlgorithm):
            ml.feature_importance(ml.fit(algo, {"epochs": 1} if algo == "NN" else None, X, y))

    def test_unknown_algorithm(self):
        with pytest.raises(UnsupportedAlgorithm):
            normalize_algorithm("XGB")
        assert normalize_algorithm("rf") == "RF"


class TestSpace:
    def test_draws_within_space(self):
        rng = np.random.default_rng(0)
        for algo in ALGORITHMS:
            space = search_space(algo)
            for _ in range(50):
                point = sample_point(space, rng)
                assert all(space[k].contains(v) for k, v in point.items())

    def test_defaults_inside_space(self):
        for algo in ALGORITHMS:
            space = search_space(algo)
            assert all(space[k].contains(v) for k, v in default_hyperparameters(algo).items())

    def test_reproducible(self):
        a = sample_point(search_space("RF"), np.random.default_rng(5))
        b = sample_point(search_space("RF"), np.random.default_rng(5))
        assert a == b

    def test_log_uniform_spread(self):
        rng = np.random.default_rng(0)
        draws = [LogUniform(1e-3, 1e3).sample(rng) for _ in range(4000)]
        below_one = sum(d < 1 for d in draws) / len(draws)
        assert abs(below_one - 0.5) < 0.05
        assert all(1e-3 <= d <= 1e3 for d in draws)
        assert math.isclose(min(draws), 1e-3, rel_tol=0.2)
