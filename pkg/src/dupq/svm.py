"""Soft-margin SVM trained by two-variable dual coordinate ascent (SMO).

Intended for dense, low-dimensional feature sets (sentence embeddings,
distance features, hand features).  Inputs beyond the row cap are seeded-
subsampled with a warning.  Kernel rows are computed on demand, so no
full kernel matrix is materialized.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NumericError

DEFAULT_ROW_CAP = 50_000


@dataclass(frozen=True)
class KernelSVMConfig:
    C: float = 1.0
    kernel: str = "linear"  # "linear" or "rbf"
    gamma: Optional[float] = None  # rbf coefficient, default 1/n_features
    max_iter: int = 1000  # cap on examine-all sweeps
    tol: float = 1e-3  # KKT violation tolerance
    seed: int = 0
    row_cap: int = DEFAULT_ROW_CAP

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("C must be > 0")
        if self.kernel not in ("linear", "rbf"):
            raise ValueError("kernel must be 'linear' or 'rbf'")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be > 0")


@dataclass
class KernelSVMModel:
    support_vectors: np.ndarray  # (m, d)
    alphas: np.ndarray  # (m,), 0 < alpha <= C
    sv_labels: np.ndarray  # (m,), +-1
    bias: float
    kernel: str
    gamma: float
    C: float
    n_features: int

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        K = _kernel_matrix(X, self.support_vectors, self.kernel, self.gamma)
        return K @ (self.alphas * self.sv_labels) + self.bias

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(np.int64)


def _kernel_matrix(A: np.ndarray, B: np.ndarray, kernel: str, gamma: float) -> np.ndarray:
    if kernel == "linear":
        return A @ B.T
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


class _SMOState:
    """Working state of the SMO solver over one training matrix."""

    def __init__(self, X, y_signed, cfg: KernelSVMConfig, gamma: float):
        self.X = X
        self.y = y_signed
        self.C = cfg.C
        self.tol = cfg.tol
        self.kernel = cfg.kernel
        self.gamma = gamma
        n = len(y_signed)
        self.alphas = np.zeros(n)
        self.b = 0.0
        self.errors = -y_signed.astype(np.float64)  # f(x)=0 initially
        self._row_cache: dict[int, np.ndarray] = {}

    def kernel_row(self, i: int) -> np.ndarray:
        row = self._row_cache.get(i)
        if row is None:
            row = _kernel_matrix(self.X[i : i + 1], self.X, self.kernel, self.gamma)[0]
            if len(self._row_cache) > 256:
                self._row_cache.clear()
            self._row_cache[i] = row
        return row

    def take_step(self, i1: int, i2: int) -> bool:
        if i1 == i2:
            return False
        a1_old, a2_old = self.alphas[i1], self.alphas[i2]
        y1, y2 = self.y[i1], self.y[i2]
        E1, E2 = self.errors[i1], self.errors[i2]
        s = y1 * y2
        if s > 0:
            L = max(0.0, a1_old + a2_old - self.C)
            H = min(self.C, a1_old + a2_old)
        else:
            L = max(0.0, a2_old - a1_old)
            H = min(self.C, self.C + a2_old - a1_old)
        if L >= H:
            return False

        row1 = self.kernel_row(i1)
        row2 = self.kernel_row(i2)
        k11, k12, k22 = row1[i1], row1[i2], row2[i2]
        eta = k11 + k22 - 2.0 * k12
        if eta < -1e-8:
            raise NumericError(
                f"kernel accumulation is not positive semi-definite (eta={eta:g})"
            )
        if eta > 0.0:
            a2 = a2_old + y2 * (E1 - E2) / eta
            a2 = min(max(a2, L), H)
        else:
            # Flat direction (duplicate points): pick the better endpoint.
            f1 = y1 * (E1 - self.b) - a1_old * k11 - s * a2_old * k12
            f2 = y2 * (E2 - self.b) - s * a1_old * k12 - a2_old * k22
            L1 = a1_old + s * (a2_old - L)
            H1 = a1_old + s * (a2_old - H)
            obj_L = L1 * f1 + L * f2 + 0.5 * L1 * L1 * k11 + 0.5 * L * L * k22 + s * L * L1 * k12
            obj_H = H1 * f1 + H * f2 + 0.5 * H1 * H1 * k11 + 0.5 * H * H * k22 + s * H * H1 * k12
            if obj_L < obj_H - 1e-12:
                a2 = L
            elif obj_L > obj_H + 1e-12:
                a2 = H
            else:
                return False

        if a2 < 1e-10:
            a2 = 0.0
        elif a2 > self.C - 1e-10:
            a2 = self.C
        if abs(a2 - a2_old) < 1e-12 * (a2 + a2_old + 1e-12):
            return False
        a1 = a1_old + s * (a2_old - a2)
        a1 = min(max(a1, 0.0), self.C)

        d1 = y1 * (a1 - a1_old)
        d2 = y2 * (a2 - a2_old)
        b1 = self.b - E1 - d1 * k11 - d2 * k12
        b2 = self.b - E2 - d1 * k12 - d2 * k22
        if 0.0 < a1 < self.C:
            b_new = b1
        elif 0.0 < a2 < self.C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)

        self.errors += d1 * row1 + d2 * row2 + (b_new - self.b)
        self.alphas[i1], self.alphas[i2] = a1, a2
        self.b = b_new
        return True

    def examine(self, i2: int, rng) -> bool:
        y2, a2, E2 = self.y[i2], self.alphas[i2], self.errors[i2]
        r2 = E2 * y2
        if not ((r2 < -self.tol and a2 < self.C) or (r2 > self.tol and a2 > 0.0)):
            return False
        non_bound = np.flatnonzero((self.alphas > 0.0) & (self.alphas < self.C))
        if len(non_bound) > 1:
            gaps = np.abs(self.errors[non_bound] - E2)
            if self.take_step(int(non_bound[np.argmax(gaps)]), i2):
                return True
        if len(non_bound):
            start = rng.integers(len(non_bound))
            for k in range(len(non_bound)):
                if self.take_step(int(non_bound[(start + k) % len(non_bound)]), i2):
                    return True
        n = len(self.alphas)
        start = rng.integers(n)
        for k in range(n):
            if self.take_step(int((start + k) % n), i2):
                return True
        return False


def train_kernel_svm(X: np.ndarray, y, cfg: KernelSVMConfig) -> KernelSVMModel:
    """SMO on the soft-margin dual until no KKT violation exceeds cfg.tol
    or cfg.max_iter examine-all sweeps have run."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-d with one label per row")
    rng = np.random.default_rng(cfg.seed)
    if len(X) > cfg.row_cap:
        warnings.warn(
            f"{len(X)} rows exceed the kernel-SVM cap of {cfg.row_cap}; "
            "training on a seeded subsample"
        )
        keep = rng.choice(len(X), size=cfg.row_cap, replace=False)
        keep.sort()
        X, y = X[keep], y[keep]
    y_signed = np.where(y > 0, 1.0, -1.0)
    gamma = cfg.gamma if cfg.gamma is not None else 1.0 / X.shape[1]

    state = _SMOState(X, y_signed, cfg, gamma)
    examine_all = True
    passes = 0
    while passes < cfg.max_iter:
        passes += 1
        n_changed = 0
        if examine_all:
            for i in range(len(y_signed)):
                n_changed += state.examine(i, rng)
        else:
            for i in np.flatnonzero((state.alphas > 0.0) & (state.alphas < cfg.C)):
                n_changed += state.examine(int(i), rng)
        if examine_all:
            if n_changed == 0:
                break
            examine_all = False
        elif n_changed == 0:
            examine_all = True

    keep = state.alphas > 0.0
    return KernelSVMModel(
        support_vectors=X[keep].copy(),
        alphas=state.alphas[keep].copy(),
        sv_labels=y_signed[keep].copy(),
        bias=float(state.b),
        kernel=cfg.kernel,
        gamma=float(gamma),
        C=cfg.C,
        n_features=X.shape[1],
    )


def dual_feasibility(model: KernelSVMModel) -> tuple[float, float]:
    """(max box violation, |sum alpha_i y_i|) over the stored multipliers."""
    box = float(np.maximum(-model.alphas, model.alphas - model.C).max(initial=0.0))
    balance = float(abs((model.alphas * model.sv_labels).sum()))
    return box, balance
