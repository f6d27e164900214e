import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from igann_sparse.data import (
    DataError,
    DatasetEntry,
    PreprocessConfig,
    kfold_split,
    load_csv,
    load_prepared,
    load_registry,
    prepare_arrays,
    preprocess,
    save_prepared,
    subset_rows,
)
from tests.conftest import write_rows


class TestLoadCsv:
    def test_college_like_counts(self, college_like_csv):
        raw = load_csv(college_like_csv, target="decision")
        assert raw.n == 1000
        numeric = [c for c, t in raw.types.items() if t == "numeric"]
        categorical = [c for c, t in raw.types.items() if t == "categorical"]
        assert len(numeric) == 4
        assert len(categorical) == 3
        assert raw.types["decision"] == "target"

    def test_header_only_is_zero_rows(self, tmp_path):
        path = tmp_path / "empty.csv"
        write_rows(path, ["a", "b", "y"], [])
        with pytest.raises(DataError, match="zero data rows"):
            load_csv(path, target="y")

    def test_minimal_three_rows(self, tmp_path):
        path = tmp_path / "tiny.csv"
        write_rows(path, ["x", "y"], [["1.0", "0"], ["2.0", "1"], ["3.5", "0"]])
        raw = load_csv(path, target="y")
        assert raw.n == 3
        assert raw.types["x"] == "numeric"

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="no such file"):
            load_csv(tmp_path / "nope.csv", target="y")

    def test_ragged_rows(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("a,b,y\n1,2,0\n1,2\n", encoding="utf-8")
        with pytest.raises(DataError, match="expected 3 cells"):
            load_csv(path, target="y")

    def test_missing_target_column(self, tmp_path):
        path = tmp_path / "t.csv"
        write_rows(path, ["a", "b"], [["1", "2"]])
        with pytest.raises(DataError, match="no target column"):
            load_csv(path, target="y")

    def test_type_overrides(self, tmp_path):
        path = tmp_path / "o.csv"
        write_rows(path, ["code", "y"], [["1", "0"], ["2", "1"], ["1", "0"]])
        raw = load_csv(path, target="y", type_overrides={"code": "categorical"})
        assert raw.types["code"] == "categorical"

    def test_mixed_column_is_categorical(self, tmp_path):
        path = tmp_path / "m.csv"
        write_rows(path, ["a", "y"], [["1", "0"], ["x", "1"], ["3", "0"]])
        raw = load_csv(path, target="y")
        assert raw.types["a"] == "categorical"


class TestPreprocess:
    def _raw(self, tmp_path, rows, header=("a", "y"), **kwargs):
        path = tmp_path / "d.csv"
        write_rows(path, list(header), rows)
        return load_csv(path, target="y", **kwargs)

    def test_high_cardinality_categorical_dropped(self, tmp_path):
        rows = [[f"lvl{i}", repr(float(i)), repr(float(i))] for i in range(26)]
        raw = self._raw(tmp_path, rows, header=("a", "b", "y"))
        prepared = preprocess(raw, PreprocessConfig(task="regression"))
        assert "a" in prepared.dropped
        assert "26 distinct values" in prepared.dropped["a"]
        assert "a" not in prepared.groups
        assert prepared.feature_names == ("b",)

    def test_25_levels_kept(self, tmp_path):
        rows = [[f"lvl{i}", repr(float(i))] for i in range(25)]
        raw = self._raw(tmp_path, rows)
        prepared = preprocess(raw, PreprocessConfig(task="regression"))
        assert prepared.groups["a"] == (0, 25)

    def test_constant_numeric_is_zero_column(self, tmp_path):
        rows = [["7.5", "1.0"], ["7.5", "2.0"], ["7.5", "3.0"]]
        raw = self._raw(tmp_path, rows)
        prepared = preprocess(raw, PreprocessConfig(task="regression"))
        assert np.all(prepared.X[:, 0] == 0.0)
        assert prepared.scaler_std[0] == 0.0

    def test_three_level_categorical_one_group(self, tmp_path):
        rows = [["r", "1"], ["g", "2"], ["b", "3"], ["r", "4"]]
        raw = self._raw(tmp_path, rows)
        prepared = preprocess(raw, PreprocessConfig(task="regression"))
        assert prepared.groups["a"] == (0, 3)
        assert prepared.column_names == ("a=b", "a=g", "a=r")
        # exactly one dummy on per row
        assert np.all(prepared.X.sum(axis=1) == 1.0)

    def test_standardization_invariants(self, college_like_csv):
        raw = load_csv(college_like_csv, target="decision")
        prepared = preprocess(raw)
        for name in ("gpa", "score", "rank", "essays"):
            j = prepared.groups[name][0]
            col = prepared.X[:, j]
            assert abs(col.mean()) < 1e-9
            assert abs(col.std() - 1.0) < 1e-9

    def test_column_count_is_numeric_plus_levels(self, college_like_csv):
        raw = load_csv(college_like_csv, target="decision")
        prepared = preprocess(raw)
        assert prepared.n_columns == 4 + 10
        widths = [stop - start for start, stop in prepared.groups.values()]
        assert sum(widths) == prepared.n_columns

    def test_groups_cover_disjoint_contiguous(self, college_like_csv):
        prepared = preprocess(load_csv(college_like_csv, target="decision"))
        covered = np.zeros(prepared.n_columns, dtype=int)
        for start, stop in prepared.groups.values():
            covered[start:stop] += 1
        assert np.all(covered == 1)

    def test_classification_target_is_binary(self, college_like_csv):
        prepared = preprocess(load_csv(college_like_csv, target="decision"))
        assert prepared.task == "classification"
        assert set(np.unique(prepared.y)) == {0.0, 1.0}
        assert prepared.class_labels == ("accept", "reject")

    def test_regression_target_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        y_raw = rng.normal(250.0, 40.0, size=50)
        rows = [[repr(float(rng.standard_normal())), repr(float(v))] for v in y_raw]
        raw = self._raw(tmp_path, rows)
        prepared = preprocess(raw, PreprocessConfig(task="regression"))
        recovered = prepared.inverse_transform_target(prepared.y)
        assert np.max(np.abs(recovered - y_raw) / np.abs(y_raw)) < 1e-9

    def test_idempotent_on_prepared_numeric_data(self, tmp_path):
        rng = np.random.default_rng(2)
        prepared = prepare_arrays(rng.standard_normal((40, 3)), rng.standard_normal(40), "regression")
        rows = [
            [repr(float(prepared.X[i, 0])), repr(float(prepared.X[i, 1])), repr(float(prepared.X[i, 2])), repr(float(prepared.y[i]))]
            for i in range(40)
        ]
        raw = self._raw(tmp_path, rows, header=("x1", "x2", "x3", "y"))
        again = preprocess(raw, PreprocessConfig(task="regression"))
        assert np.allclose(again.X, prepared.X, atol=1e-9)
        assert np.allclose(again.y, prepared.y, atol=1e-9)

    def test_numeric_missing_median_imputed(self, tmp_path):
        rows = [["1.0", "1"], ["", "2"], ["3.0", "3"], ["100.0", "4"]]
        raw = self._raw(tmp_path, rows)
        prepared = preprocess(raw, PreprocessConfig(task="regression"))
        # median of {1, 3, 100} is 3; the imputed row must equal the 3.0 row
        assert prepared.X[1, 0] == prepared.X[2, 0]

    def test_categorical_missing_is_own_level(self, tmp_path):
        rows = [["r", "1"], ["", "2"], ["g", "3"]]
        raw = self._raw(tmp_path, rows)
        prepared = preprocess(raw, PreprocessConfig(task="regression"))
        assert "a=(missing)" in prepared.column_names

    def test_id_columns_dropped(self, tmp_path):
        rows = [["7", "1.5", "1"], ["8", "2.5", "2"], ["9", "3.5", "3"]]
        raw = self._raw(tmp_path, rows, header=("user_id", "a", "y"))
        prepared = preprocess(
            raw, PreprocessConfig(task="regression", id_patterns=(r".*_id",))
        )
        assert prepared.dropped["user_id"] == "id column"
        assert prepared.feature_names == ("a",)

    def test_constant_target_rejected(self, tmp_path):
        rows = [["1", "5"], ["2", "5"], ["3", "5"]]
        raw = self._raw(tmp_path, rows)
        with pytest.raises(DataError, match="fewer than 2 distinct"):
            preprocess(raw)

    def test_all_features_dropped_rejected(self, tmp_path):
        rows = [["1", "1"], ["2", "2"], ["3", "3"]]
        raw = self._raw(tmp_path, rows, header=("row_id", "y"), id_columns=("row_id",))
        with pytest.raises(DataError, match="all feature columns were dropped"):
            preprocess(raw)

    def test_multiclass_classification_rejected(self, tmp_path):
        rows = [["1", "a"], ["2", "b"], ["3", "c"]]
        raw = self._raw(tmp_path, rows)
        with pytest.raises(DataError, match="must be binary"):
            preprocess(raw, PreprocessConfig(task="classification"))


class TestKfold:
    def test_even_division(self):
        plan = kfold_split(10, 5, seed=0)
        sizes = np.bincount(plan.assignments, minlength=5)
        assert list(sizes) == [2, 2, 2, 2, 2]

    def test_remainder_rule(self):
        plan = kfold_split(11, 5, seed=0)
        sizes = sorted(np.bincount(plan.assignments, minlength=5), reverse=True)
        assert sizes == [3, 2, 2, 2, 2]

    def test_deterministic(self):
        a = kfold_split(137, 5, seed=9)
        b = kfold_split(137, 5, seed=9)
        assert np.array_equal(a.assignments, b.assignments)

    def test_different_seeds_differ(self):
        a = kfold_split(137, 5, seed=1)
        b = kfold_split(137, 5, seed=2)
        assert not np.array_equal(a.assignments, b.assignments)

    def test_bad_k(self):
        with pytest.raises(DataError):
            kfold_split(10, 11, seed=0)
        with pytest.raises(DataError):
            kfold_split(10, 1, seed=0)

    @settings(max_examples=50, deadline=None)
    @given(
        n=st.integers(min_value=2, max_value=300),
        k=st.integers(min_value=2, max_value=10),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    def test_partition_properties(self, n, k, seed):
        if k > n:
            k = n
        plan = kfold_split(n, k, seed)
        sizes = np.bincount(plan.assignments, minlength=k)
        assert sizes.sum() == n
        assert sizes.max() - sizes.min() <= 1
        for fold in range(k):
            train, test = plan.train_rows(fold), plan.test_rows(fold)
            assert len(np.intersect1d(train, test)) == 0
            assert len(train) + len(test) == n


class TestRegistryAndArtifacts:
    def test_registry_round_trip(self, tmp_path, college_like_csv):
        registry = tmp_path / "registry.json"
        registry.write_text(
            '[{"name": "college_like", "path": "%s", "target": "decision", '
            '"task": "classification", "id_columns": []}]' % college_like_csv.name,
            encoding="utf-8",
        )
        (tmp_path / college_like_csv.name).write_bytes(college_like_csv.read_bytes())
        entries = load_registry(registry)
        assert entries == [
            DatasetEntry(
                name="college_like",
                path=str(tmp_path / college_like_csv.name),
                target="decision",
                task="classification",
            )
        ]

    def test_prepared_round_trip_and_determinism(self, tmp_path, college_like_csv):
        prepared = preprocess(load_csv(college_like_csv, target="decision"))
        p1, p2 = tmp_path / "a.npz", tmp_path / "b.npz"
        save_prepared(prepared, p1)
        save_prepared(prepared, p2)
        assert p1.read_bytes() == p2.read_bytes()
        loaded = load_prepared(p1)
        assert np.array_equal(loaded.X, prepared.X)
        assert np.array_equal(loaded.y, prepared.y)
        assert loaded.groups == prepared.groups
        assert loaded.feature_names == prepared.feature_names
        assert loaded.class_labels == prepared.class_labels

    def test_subset_rows(self, college_like_csv):
        prepared = preprocess(load_csv(college_like_csv, target="decision"))
        rows = np.arange(10)
        sub = subset_rows(prepared, rows)
        assert sub.n == 10
        assert np.array_equal(sub.X, prepared.X[:10])
        assert sub.groups == prepared.groups
