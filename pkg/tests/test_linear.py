import numpy as np
import pytest

from dupq.errors import NumericError
from dupq.linear import (LinearModel, SGDConfig, _sgd_kernel, _sgd_kernel_fast,
                         decision_scores, hyperparameter_sweep, predict,
                         predict_labels, predict_proba, regularized_objective,
                         train_sgd)
from dupq.ngrams import SparseMatrix, SparseVector

import oracles


def dense_to_sparse(X: np.ndarray) -> SparseMatrix:
    vectors = []
    for row in X:
        idx = np.flatnonzero(row)
        vectors.append(SparseVector(idx.astype(np.int64), row[idx].astype(np.float64)))
    return SparseMatrix.from_vectors(vectors, X.shape[1])


def random_sparse(n, d, density, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    X = rng.normal(scale=scale, size=(n, d)) * (rng.random((n, d)) < density)
    y = (rng.random(n) < 0.5).astype(int)
    return X, y


class TestTrainSGD:
    def test_separable_two_points(self):
        X = dense_to_sparse(np.array([[1.0, 0.0], [0.0, 1.0]]))
        y = np.array([1, 0])
        model = train_sgd(X, y, SGDConfig(loss="logistic", alpha=1e-4, n_iter=200, seed=0))
        assert predict_labels(model, X).tolist() == [1, 0]

    @pytest.mark.parametrize("loss", ["logistic", "hinge"])
    def test_scaled_trick_matches_naive_dense_oracle(self, loss):
        Xd, y = random_sparse(40, 12, density=0.4, seed=3)
        cfg = SGDConfig(loss=loss, alpha=1e-3, n_iter=5, t0=100.0, seed=11)
        model = train_sgd(dense_to_sparse(Xd), y, cfg)
        w_oracle, b_oracle = oracles.dense_sgd(Xd, y, loss, 1e-3, 5, 100.0, seed=11)
        np.testing.assert_allclose(model.weights, w_oracle, atol=1e-8)
        assert model.bias == pytest.approx(b_oracle, abs=1e-8)

    @pytest.mark.skipif(_sgd_kernel_fast is None, reason="numba not installed")
    def test_python_and_numba_kernels_agree(self):
        Xd, y = random_sparse(30, 8, density=0.5, seed=5)
        X = dense_to_sparse(Xd)
        cfg = SGDConfig(loss="logistic", alpha=1e-3, n_iter=3, seed=2)
        fast = train_sgd(X, y, cfg, use_numba=True)
        slow = train_sgd(X, y, cfg, use_numba=False)
        np.testing.assert_allclose(fast.weights, slow.weights, atol=1e-12)
        assert fast.bias == pytest.approx(slow.bias, abs=1e-12)

    def test_final_loss_near_full_batch_optimum(self):
        # 200-example dense synthetic set; oracle = full-batch gradient
        # descent on the same regularized objective, run to convergence.
        rng = np.random.default_rng(7)
        n, d = 200, 10
        Xd = rng.normal(size=(n, d))
        w_true = rng.normal(size=d)
        y = (Xd @ w_true + 0.3 * rng.normal(size=n) > 0).astype(int)
        alpha = 1e-2

        ys = np.where(y > 0, 1.0, -1.0)
        w, b = np.zeros(d), 0.0
        for _ in range(20000):
            s = Xd @ w + b
            g = -ys / (1.0 + np.exp(ys * s))
            grad_w = (g[:, None] * Xd).mean(axis=0) + alpha * w
            grad_b = g.mean()
            w -= 0.5 * grad_w
            b -= 0.5 * grad_b
        oracle_obj = float(np.logaddexp(0.0, -ys * (Xd @ w + b)).mean()
                           + 0.5 * alpha * w @ w)

        X = dense_to_sparse(Xd)
        model = train_sgd(X, y, SGDConfig(alpha=alpha, n_iter=300, seed=0))
        sgd_obj = regularized_objective(X, y, model, alpha)
        assert sgd_obj <= oracle_obj * 1.01

    def test_schedule_identity_exact(self):
        Xd, y = random_sparse(20, 5, density=0.6, seed=1)
        cfg = SGDConfig(alpha=1e-3, n_iter=2, t0=50.0, seed=0, record_schedule=True)
        model = train_sgd(dense_to_sparse(Xd), y, cfg)
        etas = model.history["etas"]
        # every recorded step size is exactly 1/(alpha*(t+t0)), bit for bit
        t = np.arange(1, len(etas) + 1, dtype=np.float64)
        np.testing.assert_array_equal(etas, 1.0 / (1e-3 * (t + 50.0)))
        np.testing.assert_allclose(etas * 1e-3 * (t + 50.0), 1.0, rtol=1e-15)

    def test_default_t0_first_step_near_point_one(self):
        cfg = SGDConfig(alpha=1e-5)
        eta1 = 1.0 / (cfg.alpha * (1 + cfg.effective_t0()))
        assert eta1 == pytest.approx(0.1, rel=1e-4)

    def test_non_finite_aborts_with_diagnostics(self):
        X = dense_to_sparse(np.array([[1e155, 1e155], [1e155, 1e155]]))
        y = np.array([1, 0])
        with pytest.raises(NumericError, match="non-finite"):
            train_sgd(X, y, SGDConfig(loss="hinge", alpha=1e-12, n_iter=2,
                                      t0=1e-6, seed=0))

    def test_row_count_mismatch(self):
        X = dense_to_sparse(np.eye(3))
        with pytest.raises(ValueError, match="rows"):
            train_sgd(X, np.array([1, 0]), SGDConfig())

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SGDConfig(loss="absolute")
        with pytest.raises(ValueError):
            SGDConfig(alpha=0.0)
        with pytest.raises(ValueError):
            SGDConfig(n_iter=0)


class TestPredict:
    def test_zero_score_predicts_negative(self):
        model = LinearModel(weights=np.zeros(4), bias=0.0, loss="logistic")
        label, score = predict(model, SparseVector(np.array([1]), np.array([2.0])))
        assert (label, score) == (0, 0.0)

    def test_aligned_unit_vectors_positive(self):
        model = LinearModel(weights=np.array([0.0, 1.0]), bias=0.0, loss="logistic")
        label, score = predict(model, SparseVector(np.array([1]), np.array([1.0])))
        assert label == 1 and score == 1.0

    def test_scores_match_dot_product_oracle(self):
        rng = np.random.default_rng(13)
        Xd = rng.normal(size=(15, 6)) * (rng.random((15, 6)) < 0.5)
        w = rng.normal(size=6)
        b = 0.37
        model = LinearModel(weights=w, bias=b, loss="hinge")
        X = dense_to_sparse(Xd)
        want = Xd @ w + b
        np.testing.assert_allclose(decision_scores(model, X), want, atol=1e-12)
        for i in range(15):
            _, score = predict(model, X.row(i))
            assert score == pytest.approx(want[i], abs=1e-12)

    def test_dimension_mismatch(self):
        model = LinearModel(weights=np.zeros(2), bias=0.0, loss="hinge")
        with pytest.raises(ValueError, match="out of range"):
            predict(model, SparseVector(np.array([5]), np.array([1.0])))
        with pytest.raises(ValueError, match="dimension"):
            decision_scores(model, dense_to_sparse(np.eye(3)))

    def test_proba_matches_sigmoid_of_score(self):
        rng = np.random.default_rng(4)
        Xd = rng.normal(size=(10, 3))
        model = LinearModel(weights=rng.normal(size=3), bias=-0.2, loss="logistic")
        X = dense_to_sparse(Xd)
        p = predict_proba(model, X)
        s = decision_scores(model, X)
        np.testing.assert_allclose(p, 1.0 / (1.0 + np.exp(-s)), atol=1e-12)
        assert np.array_equal(p > 0.5, s > 0)


class TestHingeApproximatesLinearSVM:
    def test_label_agreement_95_percent(self):
        from dupq.svm import KernelSVMConfig, train_kernel_svm

        rng = np.random.default_rng(21)
        n, d = 300, 2
        X = rng.normal(size=(n, d))
        y = (X @ np.array([2.0, -1.0]) + 0.1 * rng.normal(size=n) > 0).astype(int)
        X_test = rng.normal(size=(200, d))

        C = 1.0
        svm_model = train_kernel_svm(X, y, KernelSVMConfig(C=C, kernel="linear",
                                                           max_iter=200, seed=0))
        sgd_model = train_sgd(
            dense_to_sparse(X), y,
            SGDConfig(loss="hinge", alpha=1.0 / (n * C), n_iter=100, seed=0),
        )
        svm_labels = svm_model.predict(X_test)
        sgd_labels = predict_labels(sgd_model, dense_to_sparse(X_test))
        agreement = (svm_labels == sgd_labels).mean()
        assert agreement >= 0.95


class TestSweep:
    def test_single_point_equals_direct_call(self):
        Xd, y = random_sparse(60, 8, density=0.5, seed=9)
        X = dense_to_sparse(Xd)
        cfg = SGDConfig(alpha=1e-3, n_iter=5, seed=4)

        from dupq.metrics import score

        def train_fn(setting):
            return train_sgd(X, y, cfg)

        def eval_fn(model):
            m = score(predict_labels(model, X), y)
            return m.accuracy, m.f_score

        rows = hyperparameter_sweep([{"alpha": 1e-3}], train_fn, eval_fn)
        assert len(rows) == 1
        direct = score(predict_labels(train_sgd(X, y, cfg), X), y)
        assert rows[0].accuracy == direct.accuracy
        assert rows[0].f_score == direct.f_score
        assert rows[0].error == ""

    def test_failures_annotate_rows(self):
        def train_fn(setting):
            if setting["boom"]:
                raise NumericError("exploded")
            return "model"

        rows = hyperparameter_sweep(
            [{"boom": True}, {"boom": False}], train_fn, lambda m: (50.0, 25.0)
        )
        assert rows[0].error.startswith("NumericError")
        assert np.isnan(rows[0].accuracy)
        assert rows[1].accuracy == 50.0
