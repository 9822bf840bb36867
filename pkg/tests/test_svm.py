import numpy as np
import pytest

from dupq.svm import (KernelSVMConfig, KernelSVMModel, dual_feasibility,
                      train_kernel_svm)


def xor_data(copies=10):
    X = np.tile(np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]), (copies, 1))
    y = np.tile(np.array([0, 1, 1, 0]), copies)
    return X, y


def blobs(n=120, seed=0, gap=2.0):
    rng = np.random.default_rng(seed)
    half = n // 2
    X = np.vstack([
        rng.normal(loc=(-gap, 0.0), scale=0.6, size=(half, 2)),
        rng.normal(loc=(gap, 0.0), scale=0.6, size=(half, 2)),
    ])
    y = np.array([0] * half + [1] * half)
    return X, y


class TestXor:
    def test_rbf_separates_linear_does_not(self):
        X, y = xor_data()
        rbf = train_kernel_svm(X, y, KernelSVMConfig(kernel="rbf", gamma=1.0, seed=0))
        assert (rbf.predict(X) == y).mean() == 1.0
        lin = train_kernel_svm(X, y, KernelSVMConfig(kernel="linear", seed=0))
        assert (lin.predict(X) == y).mean() <= 0.75


class TestFeasibility:
    @pytest.mark.parametrize("kernel,gamma", [("linear", None), ("rbf", 0.7)])
    def test_duals_feasible(self, kernel, gamma):
        X, y = blobs(seed=3)
        cfg = KernelSVMConfig(C=2.0, kernel=kernel, gamma=gamma, seed=1)
        model = train_kernel_svm(X, y, cfg)
        box, balance = dual_feasibility(model)
        assert box <= 1e-12
        assert balance < 1e-6
        assert np.all(model.alphas > 0)
        assert np.all(model.alphas <= cfg.C + 1e-12)

    def test_xor_duals_feasible(self):
        X, y = xor_data()
        model = train_kernel_svm(X, y, KernelSVMConfig(kernel="rbf", gamma=1.0, C=5.0))
        box, balance = dual_feasibility(model)
        assert box <= 1e-12 and balance < 1e-6


class TestBehavior:
    def test_linearly_separable_perfect(self):
        X, y = blobs(seed=7, gap=3.0)
        model = train_kernel_svm(X, y, KernelSVMConfig(kernel="linear", seed=0))
        assert (model.predict(X) == y).mean() == 1.0

    def test_rbf_on_linear_problem_does_not_beat_linear(self):
        X, y = blobs(seed=9, gap=3.0)
        lin = train_kernel_svm(X, y, KernelSVMConfig(kernel="linear", seed=0))
        rbf = train_kernel_svm(X, y, KernelSVMConfig(kernel="rbf", seed=0))
        assert (rbf.predict(X) == y).mean() <= (lin.predict(X) == y).mean()

    def test_rbf_beats_linear_on_ring_data(self):
        # points inside a disc vs on a ring: linearly inseparable
        rng = np.random.default_rng(5)
        n = 150
        r = np.concatenate([rng.uniform(0, 1, n), rng.uniform(2, 3, n)])
        theta = rng.uniform(0, 2 * np.pi, 2 * n)
        X = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        y = np.array([1] * n + [0] * n)
        lin = train_kernel_svm(X, y, KernelSVMConfig(kernel="linear", seed=0))
        rbf = train_kernel_svm(X, y, KernelSVMConfig(kernel="rbf", gamma=1.0, seed=0))
        lin_acc = (lin.predict(X) == y).mean()
        rbf_acc = (rbf.predict(X) == y).mean()
        assert rbf_acc >= lin_acc + 0.05

    def test_gamma_default_is_one_over_n_features(self):
        X, y = blobs(seed=2)
        X4 = np.hstack([X, X])
        model = train_kernel_svm(X4, y, KernelSVMConfig(kernel="rbf"))
        assert model.gamma == pytest.approx(1.0 / 4)

    def test_decision_function_sign_matches_predict(self):
        X, y = blobs(seed=4)
        model = train_kernel_svm(X, y, KernelSVMConfig(kernel="rbf", gamma=0.5))
        scores = model.decision_function(X)
        np.testing.assert_array_equal(model.predict(X), (scores > 0).astype(int))

    def test_determinism(self):
        X, y = blobs(seed=8)
        a = train_kernel_svm(X, y, KernelSVMConfig(kernel="rbf", gamma=0.5, seed=42))
        b = train_kernel_svm(X, y, KernelSVMConfig(kernel="rbf", gamma=0.5, seed=42))
        np.testing.assert_array_equal(a.alphas, b.alphas)
        assert a.bias == b.bias

    def test_row_cap_subsamples_with_warning(self):
        X, y = blobs(n=200, seed=6)
        cfg = KernelSVMConfig(kernel="linear", row_cap=50, seed=0)
        with pytest.warns(UserWarning, match="subsample"):
            model = train_kernel_svm(X, y, cfg)
        assert len(model.support_vectors) <= 50

    def test_config_validation(self):
        with pytest.raises(ValueError):
            KernelSVMConfig(C=0.0)
        with pytest.raises(ValueError):
            KernelSVMConfig(kernel="poly")
        with pytest.raises(ValueError):
            KernelSVMConfig(gamma=-1.0)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            train_kernel_svm(np.zeros((3, 2)), np.array([0, 1]), KernelSVMConfig())
