import warnings
from dataclasses import replace

import numpy as np
import pytest

from igann_sparse.data import load_csv, prepare_arrays, preprocess
from igann_sparse.elm import activations, init_layer
from igann_sparse.gam import (
    IGANNConfig,
    fit,
    load_model,
    predict,
    predict_raw,
    save_model,
    selected_features,
    shape_function,
    shape_values,
)
from igann_sparse.seeding import derive_seed
from igann_sparse.subset import sigmoid
from igann_sparse.synthetic import quadratic_selection_data
from tests.conftest import write_rows


def regression_data(n=300, m=4, seed=0, noise=0.3):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, m))
    y = np.sin(X[:, 0]) + 0.5 * X[:, 1] ** 2 + noise * rng.standard_normal(n)
    return prepare_arrays(X, y, "regression")


def classification_data(n=400, m=4, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, m))
    link = 1.5 * X[:, 0] - np.abs(X[:, 2])
    y = (rng.random(n) < sigmoid(link)).astype(float)
    return prepare_arrays(X, y, "classification")


class TestFit:
    def test_single_exact_stage(self):
        # target built from the exact layer the first round will draw
        seed = 31
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((120, 3))
        X_std = (X - X.mean(axis=0)) / X.std(axis=0)
        layer = init_layer(3, 10, "elu", derive_seed(seed, "layer", 0))
        beta_star = rng.standard_normal(30)
        y = activations(layer, X_std).values @ beta_star + 0.7
        data = prepare_arrays(X, y, "regression")
        config = IGANNConfig(
            learning_rate=1.0, n_rounds=1, lam=0.0, val_fraction=0.0, seed=seed
        )
        model = fit(data, config)
        assert len(model.stages) == 1
        assert model.train_losses[-1] < 1e-18

    def test_sparse_quadratic_selects_x1(self):
        for seed in range(5):
            X, y = quadratic_selection_data(n=1000, seed=seed)
            data = prepare_arrays(X, y, "regression")
            model = fit(data, IGANNConfig(sparse=True, seed=seed, n_rounds=20))
            assert selected_features(model) == ("x1",)

    def test_train_loss_monotone(self):
        for data in (regression_data(seed=1), classification_data(seed=1)):
            model = fit(data, IGANNConfig(n_rounds=40, val_fraction=0.0, seed=3))
            diffs = np.diff(model.train_losses)
            assert np.all(diffs <= 1e-9)

    def test_deterministic_fit(self):
        data = regression_data(seed=2)
        cfg = IGANNConfig(sparse=True, seed=5, n_rounds=25)
        a, b = fit(data, cfg), fit(data, cfg)
        assert np.array_equal(predict_raw(a, data.X), predict_raw(b, data.X))
        assert all(
            np.array_equal(sa.beta, sb.beta) for sa, sb in zip(a.stages, b.stages)
        )

    def test_early_stopping_truncates(self):
        data = regression_data(n=200, seed=4, noise=1.5)
        model = fit(
            data,
            IGANNConfig(n_rounds=100, val_fraction=0.25, early_stop_patience=3, seed=6),
        )
        assert len(model.stages) < 100
        assert len(model.train_losses) == len(model.stages) + 1
        assert len(model.val_losses) == len(model.stages) + 1
        # truncated to the best validation round
        assert model.val_losses[-1] == min(model.val_losses)

    def test_zero_rounds_intercept_only(self):
        data = regression_data(seed=7)
        model = fit(data, IGANNConfig(n_rounds=0, seed=0))
        assert model.stages == []
        pred = predict_raw(model, data.X)
        assert np.all(pred == pred[0])

    def test_empty_selection_intercept_only(self):
        data = regression_data(seed=8)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            model = fit(data, IGANNConfig(sparse=True, force_size=0, seed=0))
        assert model.empty_selection
        assert any("selected no blocks" in str(w.message) for w in caught)
        assert selected_features(model) == ()
        assert np.all(predict_raw(model, data.X) == model.intercept)

    def test_task_mismatch_rejected(self):
        data = regression_data(seed=9)
        with pytest.raises(ValueError, match="does not match"):
            fit(data, IGANNConfig(task="classification"))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            IGANNConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            IGANNConfig(val_fraction=0.6)
        with pytest.raises(ValueError):
            IGANNConfig(k=0)
        with pytest.raises(ValueError):
            IGANNConfig(df_mode="units")


class TestPredict:
    def test_intercept_only_constant(self):
        data = regression_data(seed=10)
        model = fit(data, IGANNConfig(n_rounds=0))
        assert np.all(predict_raw(model, data.X) == model.intercept)

    def test_sigmoid_of_zero_is_half(self):
        rng = np.random.default_rng(11)
        X = rng.standard_normal((100, 2))
        y = np.repeat([0.0, 1.0], 50)  # balanced: base-rate logit is 0
        data = prepare_arrays(X, y, "classification")
        model = fit(data, IGANNConfig(n_rounds=0))
        assert model.intercept == 0.0
        assert np.all(predict(model, data.X) == 0.5)

    def test_identity_target_params(self):
        data = regression_data(seed=12)
        data = replace(data, target_params=(0.0, 1.0))
        model = fit(data, IGANNConfig(n_rounds=10, seed=1))
        assert np.array_equal(predict(model, data.X), predict_raw(model, data.X))

    def test_probability_bounds(self):
        data = classification_data(seed=13)
        model = fit(data, IGANNConfig(n_rounds=20, seed=2))
        p = predict(model, data.X)
        assert np.all((p > 0) & (p < 1))

    def test_single_stage_matches_manual(self):
        data = regression_data(seed=14)
        model = fit(data, IGANNConfig(n_rounds=1, val_fraction=0.0, seed=3))
        stage = model.stages[0]
        acts = activations(stage.layer, data.X)
        manual = model.intercept + model.config.learning_rate * (
            acts.values @ stage.beta + stage.intercept
        )
        assert np.allclose(predict_raw(model, data.X), manual, atol=1e-12)

    def test_masked_features_inert(self):
        X, y = quadratic_selection_data(n=600, seed=15)
        data = prepare_arrays(X, y, "regression")
        model = fit(data, IGANNConfig(sparse=True, seed=4, n_rounds=15))
        assert selected_features(model) == ("x1",)
        X_mod = data.X.copy()
        X_mod[:, 1:] = 1e6  # clobber every unselected column
        assert np.array_equal(predict_raw(model, data.X), predict_raw(model, X_mod))

    def test_layout_mismatch(self):
        data = regression_data(seed=16)
        model = fit(data, IGANNConfig(n_rounds=1))
        with pytest.raises(ValueError, match="columns"):
            predict_raw(model, data.X[:, :2])


class TestShapes:
    @pytest.mark.parametrize("sparse", [False, True])
    @pytest.mark.parametrize("task", ["regression", "classification"])
    def test_additivity(self, sparse, task):
        data = regression_data(seed=17) if task == "regression" else classification_data(seed=17)
        model = fit(data, IGANNConfig(sparse=sparse, seed=7, n_rounds=15))
        rng = np.random.default_rng(0)
        points = rng.standard_normal((100, data.n_columns))
        total = np.full(100, model.effective_intercept)
        for name, active in zip(model.column_names, model.active_cols):
            if active:
                j = model.column_names.index(name)
                total += shape_values(model, name, points[:, j])
        assert np.max(np.abs(total - predict_raw(model, points))) < 1e-10

    def test_linear_target_recovers_slope(self):
        rng = np.random.default_rng(18)
        X = rng.standard_normal((1000, 3))
        y = 3.0 * X[:, 0]
        data = prepare_arrays(X, y, "regression")
        model = fit(data, IGANNConfig(n_rounds=300, val_fraction=0.0, seed=8))
        shape = shape_function(model, "x1", grid_size=200)
        keep = np.abs(shape.grid) <= 2.0
        grid_raw = shape.grid[keep] * X[:, 0].std() + X[:, 0].mean()
        values_raw = shape.values[keep] * data.target_params[1]
        line = 3.0 * grid_raw
        deviation = (values_raw - values_raw.mean()) - (line - line.mean())
        assert np.max(np.abs(deviation)) < 0.1

    def test_unselected_feature_rejected(self):
        X, y = quadratic_selection_data(n=500, seed=19)
        data = prepare_arrays(X, y, "regression")
        model = fit(data, IGANNConfig(sparse=True, seed=9, n_rounds=10))
        with pytest.raises(ValueError, match="feature not in model"):
            shape_function(model, "x5")

    def test_unknown_feature_rejected(self):
        data = regression_data(seed=20)
        model = fit(data, IGANNConfig(n_rounds=5))
        with pytest.raises(ValueError, match="unknown feature"):
            shape_function(model, "nope")

    def test_grid_spans_training_range(self):
        data = regression_data(seed=21)
        model = fit(data, IGANNConfig(n_rounds=5, seed=1))
        shape = shape_function(model, "x2", grid_size=50)
        j = data.column_names.index("x2")
        assert shape.grid[0] == data.X[:, j].min()
        assert shape.grid[-1] == data.X[:, j].max()


class TestCrimesLikeRegime:
    def test_sparse_matches_full_within_one_sd_keeping_few_features(self):
        # many columns, few informative: selection stays small and the sparse
        # model's CV error is within one SD of the full model's
        from igann_sparse.data import kfold_split, subset_rows
        from igann_sparse.evaluation import rmse

        rng = np.random.default_rng(33)
        n, m = 500, 100
        X = rng.standard_normal((n, m))
        y = np.sin(2 * X[:, 7]) + X[:, 42] ** 2 + 0.3 * rng.standard_normal(n)
        data = prepare_arrays(X, y, "regression")
        plan = kfold_split(n, 3, seed=0)
        full_vals, sparse_vals, pcts = [], [], []
        for fold in range(3):
            train, test = plan.train_rows(fold), plan.test_rows(fold)
            d_train = subset_rows(data, train)
            full = fit(d_train, IGANNConfig(seed=fold, n_rounds=25))
            sparse = fit(d_train, IGANNConfig(sparse=True, s_max=15, seed=fold, n_rounds=25))
            full_vals.append(rmse(data.y[test], predict_raw(full, data.X[test])))
            sparse_vals.append(rmse(data.y[test], predict_raw(sparse, data.X[test])))
            pcts.append(sparse.active_cols.sum() / m)
        assert np.mean(pcts) <= 0.08
        sd = np.std(full_vals, ddof=1)
        assert np.mean(sparse_vals) <= np.mean(full_vals) + sd


class TestSelectedFeatures:
    def test_full_model_selects_all(self):
        data = regression_data(seed=22)
        model = fit(data, IGANNConfig(n_rounds=3))
        assert selected_features(model) == data.feature_names

    def test_categorical_reported_once(self, tmp_path):
        rng = np.random.default_rng(23)
        n = 400
        cat = rng.choice(["a", "b", "c"], size=n)
        effect = {"a": -2.0, "b": 0.0, "c": 2.0}
        noise = rng.standard_normal((n, 2))
        y = np.array([effect[c] for c in cat]) + 0.1 * rng.standard_normal(n)
        path = tmp_path / "cat.csv"
        write_rows(
            path,
            ["color", "n1", "n2", "y"],
            [
                [cat[i], repr(float(noise[i, 0])), repr(float(noise[i, 1])), repr(float(y[i]))]
                for i in range(n)
            ],
        )
        data = preprocess(load_csv(path, target="y"))
        model = fit(data, IGANNConfig(sparse=True, seed=3, n_rounds=10))
        feats = selected_features(model)
        assert feats.count("color") == 1
        assert "n1" not in feats and "n2" not in feats
        # several dummy columns may be active, but the feature appears once
        start, stop = data.groups["color"]
        assert model.active_cols[start:stop].any()


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path):
        data = classification_data(seed=24)
        model = fit(data, IGANNConfig(sparse=True, seed=11, n_rounds=12))
        p1, p2, p3 = tmp_path / "m1.npz", tmp_path / "m2.npz", tmp_path / "m3.npz"
        save_model(model, p1)
        save_model(model, p2)
        assert p1.read_bytes() == p2.read_bytes()
        loaded = load_model(p1)
        save_model(loaded, p3)
        assert p1.read_bytes() == p3.read_bytes()
        assert np.array_equal(predict(loaded, data.X), predict(model, data.X))
        assert loaded.config == model.config
        assert loaded.selection.blocks == model.selection.blocks
        assert loaded.groups == model.groups
        assert loaded.train_losses == model.train_losses
