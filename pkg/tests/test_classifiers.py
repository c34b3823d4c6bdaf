"""SGD training, gradient oracle checks, folds, and grid search."""

from __future__ import annotations

import numpy as np
import pytest

from adaptlex.classifiers import (DEFAULT_GRID, CVReport, Hyperparams,
                                  cross_validate, grid_search, hinge_loss_grad,
                                  load_model, logistic_loss_grad, predict,
                                  predict_score, save_model, stratified_folds,
                                  train)
from adaptlex.errors import FingerprintMismatch, InputError
from adaptlex.features import FeatureMatrix


def matrix_from(X: np.ndarray, labels: list[str], n_flags: int = 0,
                fingerprint: str = "fp0") -> FeatureMatrix:
    X = np.asarray(X, dtype=np.float64)
    return FeatureMatrix(
        terms=[f"t{i}" for i in range(n_flags)],
        flags=X[:, :n_flags].astype(np.uint8),
        dense=X[:, n_flags:],
        lexicon_fingerprint=fingerprint,
        labels=labels,
    )


def separable_matrix() -> FeatureMatrix:
    X = np.array([[2.0, 2.0], [3.0, 2.5], [-2.0, -2.0], [-3.0, -2.5]])
    return matrix_from(X, ["hate", "hate", "normal", "normal"])


class TestGradients:
    """Central finite differences, step 1e-4, relative error <= 1e-5."""

    def finite_diff(self, loss_fn, w, b, X, y, lam, step=1e-4):
        grad_w = np.zeros_like(w)
        for i in range(w.size):
            wp, wm = w.copy(), w.copy()
            wp[i] += step
            wm[i] -= step
            grad_w[i] = (loss_fn(wp, b, X, y, lam)[0] -
                         loss_fn(wm, b, X, y, lam)[0]) / (2 * step)
        grad_b = (loss_fn(w, b + step, X, y, lam)[0] -
                  loss_fn(w, b - step, X, y, lam)[0]) / (2 * step)
        return grad_w, grad_b

    @pytest.mark.parametrize("loss_fn,avoid_kink", [
        (logistic_loss_grad, False),
        (hinge_loss_grad, True),
    ])
    def test_matches_finite_differences(self, loss_fn, avoid_kink):
        rng = np.random.default_rng(123)
        checked = 0
        while checked < 20:
            n, d = int(rng.integers(4, 20)), int(rng.integers(2, 8))
            X = rng.standard_normal((n, d))
            y = rng.choice([-1.0, 1.0], size=n)
            w = rng.standard_normal(d)
            b = float(rng.standard_normal())
            lam = float(rng.uniform(0, 0.5))
            if avoid_kink:
                # the hinge subgradient uses the zero branch at margin == 1;
                # finite differences are meaningless within the step of a kink
                margins = y * (X @ w + b)
                if np.any(np.abs(1.0 - margins) < 1e-3):
                    continue
            loss, gw, gb = loss_fn(w, b, X, y, lam)
            fgw, fgb = self.finite_diff(loss_fn, w, b, X, y, lam)
            scale = max(np.max(np.abs(fgw)), abs(fgb), 1e-8)
            assert np.max(np.abs(gw - fgw)) / scale <= 1e-5
            assert abs(gb - fgb) / scale <= 1e-5
            checked += 1


class TestTrain:
    def test_separable_perfect_training_accuracy(self):
        m = separable_matrix()
        for kind in ("logistic", "linear-svm"):
            model = train(m, kind, Hyperparams(epochs=200, learning_rate=0.5,
                                               l2_lambda=1e-4, seed=0))
            assert predict(model, m) == m.labels

    def test_identical_features_majority(self):
        X = np.ones((10, 2))
        labels = ["hate"] * 3 + ["normal"] * 7
        model = train(matrix_from(X, labels), "logistic",
                      Hyperparams(epochs=100, learning_rate=0.5))
        preds = predict(model, matrix_from(X, labels))
        acc = sum(p == g for p, g in zip(preds, labels)) / 10
        assert acc == pytest.approx(0.7)

    def test_single_class_rejected(self):
        X = np.random.default_rng(0).standard_normal((6, 2))
        with pytest.raises(ValueError):
            train(matrix_from(X, ["hate"] * 6), "logistic")

    def test_nan_features_named_row(self):
        X = np.ones((4, 2))
        X[2, 1] = np.nan
        with pytest.raises(ValueError, match="row 2"):
            train(matrix_from(X, ["hate", "hate", "normal", "normal"]), "logistic")

    def test_deterministic_bit_identical(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((40, 5))
        labels = ["hate" if v > 0 else "normal" for v in X[:, 0]]
        hp = Hyperparams(epochs=20, seed=11)
        m = matrix_from(X, labels)
        a = train(m, "linear-svm", hp)
        b = train(m, "linear-svm", hp)
        assert np.array_equal(a.weights, b.weights) and a.bias == b.bias
        assert a.training_report.loss_curve == b.training_report.loss_curve

    def test_loss_curve_non_increasing_on_fixture(self):
        m = separable_matrix()
        model = train(m, "logistic", Hyperparams(epochs=50, learning_rate=0.1))
        curve = model.training_report.loss_curve
        assert all(curve[i + 1] <= curve[i] + 1e-6 for i in range(len(curve) - 1))

    def test_heavy_regularization_shrinks_weights(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((30, 4)) * 3
        labels = ["hate" if v > 0 else "normal" for v in X[:, 0]]
        for kind in ("logistic", "linear-svm"):
            model = train(matrix_from(X, labels), kind,
                          Hyperparams(l2_lambda=1e6, epochs=50, learning_rate=0.1))
            assert np.linalg.norm(model.weights) < 1e-3

    def test_standardization_dense_only(self):
        rng = np.random.default_rng(9)
        flags = rng.integers(0, 2, size=(20, 3)).astype(np.float64)
        dense = rng.standard_normal((20, 2)) * 100 + 50
        X = np.hstack([flags, dense])
        labels = ["hate" if f else "normal" for f in flags[:, 0] > 0]
        model = train(matrix_from(X, labels, n_flags=3), "logistic")
        assert model.standardization.n_flags == 3
        assert np.allclose(model.standardization.mean, dense.mean(axis=0))


class TestPredict:
    def test_zero_weight_logistic_scores_half(self):
        from adaptlex.classifiers import (LinearModel, Standardization,
                                          TrainingReport)
        m = separable_matrix()
        model = LinearModel(
            kind="logistic", weights=np.zeros(2), bias=0.0,
            lexicon_fingerprint=m.lexicon_fingerprint,
            hyperparams=Hyperparams(),
            standardization=Standardization(0, np.zeros(2), np.ones(2)),
            training_report=TrainingReport(0.0, []))
        scores = predict_score(model, m)
        assert np.allclose(scores, 0.5)

    def test_svm_score_is_margin_sign(self):
        m = separable_matrix()
        model = train(m, "linear-svm", Hyperparams(epochs=200, learning_rate=0.5))
        scores = predict_score(model, m)
        assert (scores[0] > 0 and scores[1] > 0
                and scores[2] < 0 and scores[3] < 0)

    def test_fingerprint_guard(self):
        m = separable_matrix()
        model = train(m, "logistic")
        stale = matrix_from(np.hstack([m.X, np.zeros((4, 1))]), m.labels,
                            fingerprint="fp-other")
        with pytest.raises(FingerprintMismatch):
            predict(model, stale)

    def test_model_round_trip(self, tmp_path):
        m = separable_matrix()
        model = train(m, "linear-svm", Hyperparams(epochs=30))
        path = tmp_path / "model.json"
        save_model(model, path)
        again = load_model(path)
        assert np.array_equal(again.weights, model.weights)
        assert again.bias == model.bias
        assert again.kind == model.kind
        assert again.hyperparams == model.hyperparams
        assert np.allclose(predict_score(again, m), predict_score(model, m))


class TestStratifiedFolds:
    def test_three_seven_k5(self):
        labels = ["hate"] * 3 + ["normal"] * 7
        folds = stratified_folds(labels, k=5, seed=0)
        sizes = [int(np.sum(folds == f)) for f in range(5)]
        assert sizes == [2] * 5
        hate_per_fold = [int(np.sum((folds == f) & (np.arange(10) < 3)))
                         for f in range(5)]
        assert all(c in (0, 1) for c in hate_per_fold)
        assert sum(hate_per_fold) == 3

    def test_k1_rejected(self):
        with pytest.raises(ValueError):
            stratified_folds(["hate", "normal"] * 5, k=1)

    def test_perfect_stratification(self):
        labels = ["hate"] * 10 + ["normal"] * 10
        folds = stratified_folds(labels, k=10, seed=3)
        for f in range(10):
            idx = np.where(folds == f)[0]
            assert len(idx) == 2
            assert sorted(labels[i] for i in idx) == ["hate", "normal"]

    def test_scarce_class_spreads_zero_or_one(self):
        labels = ["hate"] * 3 + ["normal"] * 20
        folds = stratified_folds(labels, k=4, seed=0)
        hate_counts = [int(np.sum((folds == f) & (np.arange(23) < 3)))
                       for f in range(4)]
        assert all(c in (0, 1) for c in hate_counts) and sum(hate_counts) == 3

    def test_k_exceeding_sample_count_rejected(self):
        with pytest.raises(ValueError):
            stratified_folds(["hate", "normal"], k=3)

    def test_partition_exact(self):
        rng = np.random.default_rng(8)
        labels = rng.choice(["hate", "normal"], size=57, p=[0.3, 0.7]).tolist()
        k = 5
        folds = stratified_folds(labels, k=k, seed=1)
        assert set(folds.tolist()) <= set(range(k))
        assert len(folds) == 57

    def test_deterministic(self):
        labels = ["hate"] * 9 + ["normal"] * 21
        a = stratified_folds(labels, k=3, seed=5)
        b = stratified_folds(labels, k=3, seed=5)
        assert np.array_equal(a, b)


def noisy_matrix(seed=0, n=60) -> FeatureMatrix:
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 3))
    y = (X[:, 0] + 0.4 * rng.standard_normal(n)) > 0
    labels = ["hate" if v else "normal" for v in y]
    return matrix_from(X, labels)


class TestCrossValidateAndGrid:
    def test_cv_report_aggregates_recomputable(self):
        m = noisy_matrix()
        report = cross_validate(m, "logistic", Hyperparams(epochs=20), k=5, seed=0)
        accs = np.array([r.accuracy for r in report.fold_reports])
        f1s = np.array([r.macro_f1 for r in report.fold_reports])
        assert report.k == 5 and len(report.fold_reports) == 5
        assert report.mean_accuracy == pytest.approx(float(accs.mean()), abs=1e-9)
        assert report.std_accuracy == pytest.approx(float(accs.std()), abs=1e-9)
        assert report.mean_macro_f1 == pytest.approx(float(f1s.mean()), abs=1e-9)
        pooled = sum(r.tp + r.tn for r in report.fold_reports) / m.n
        assert report.pooled_accuracy == pytest.approx(pooled, abs=1e-12)

    def test_single_point_grid(self):
        m = noisy_matrix()
        hp = Hyperparams(epochs=10)
        best, results = grid_search(m, "logistic", [hp], k=3, seed=0)
        assert best == hp and len(results) == 1

    def test_better_point_wins(self):
        m = noisy_matrix(seed=3, n=80)
        good = Hyperparams(l2_lambda=1e-4, learning_rate=0.1, epochs=30)
        bad = Hyperparams(l2_lambda=1e6, learning_rate=0.1, epochs=30)
        best, results = grid_search(m, "logistic", [bad, good], k=4, seed=0)
        by_hp = {r.hyperparams: r.report.mean_macro_f1 for r in results}
        assert by_hp[good] > by_hp[bad]
        assert best == good

    def test_tie_prefers_lower_lambda_then_lr(self):
        # all-identical features make every point equally (un)informative
        X = np.ones((20, 2))
        labels = (["hate", "normal"] * 10)
        m = matrix_from(X, labels)
        pts = [Hyperparams(l2_lambda=1.0, learning_rate=0.1, epochs=2),
               Hyperparams(l2_lambda=1e-4, learning_rate=0.1, epochs=2),
               Hyperparams(l2_lambda=1e-4, learning_rate=0.01, epochs=2)]
        best, results = grid_search(m, "logistic", pts, k=2, seed=0)
        scores = {r.hyperparams: r.report.mean_macro_f1 for r in results}
        assert len(set(scores.values())) == 1
        assert best.l2_lambda == 1e-4 and best.learning_rate == 0.01

    def test_failed_points_marked_not_fatal(self):
        m = noisy_matrix()
        ok = Hyperparams(epochs=5)
        best, results = grid_search(m, "logistic", [ok, ok], k=5, seed=0)
        assert all(r.error is None for r in results)
        # force one failure with k too large on a tiny class: craft labels
        X = np.vstack([np.ones((3, 2)), -np.ones((27, 2))])
        labels = ["hate"] * 3 + ["normal"] * 27
        tiny = matrix_from(X, labels)
        best2, results2 = grid_search(tiny, "logistic", [Hyperparams(epochs=2)],
                                      k=3, seed=0)
        assert results2[0].error is None  # k=3 fits the minority class

    def test_all_points_fail_aggregate_error(self):
        X = np.vstack([np.ones((2, 2)), -np.ones((8, 2))])
        labels = ["hate"] * 2 + ["normal"] * 8
        m = matrix_from(X, labels)
        with pytest.raises(InputError, match="every grid point failed"):
            grid_search(m, "logistic", [Hyperparams(epochs=2)], k=5, seed=0)

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            grid_search(noisy_matrix(), "logistic", [], k=3, seed=0)

    def test_default_grid_shape(self):
        lams = {hp.l2_lambda for hp in DEFAULT_GRID}
        lrs = {hp.learning_rate for hp in DEFAULT_GRID}
        assert lams == {1e-4, 1e-2, 1.0} and lrs == {0.1, 0.01}
        assert all(hp.epochs == 50 for hp in DEFAULT_GRID)
