"""SGD-trained linear classifiers (logistic and hinge loss) over sparse
features, with the 1/(alpha*(t+t0)) learning-rate schedule.

The L2 decay is applied through a scaled-weight trick so each update only
touches the example's nonzero columns; a naive dense update computes the
same weights (this is checked in the test suite).  The inner loop runs
through numba when available; the pure-Python fallback executes the same
statements in the same order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NumericError
from .ngrams import SparseMatrix, SparseVector

LOSS_CODES = {"logistic": 0, "hinge": 1}


@dataclass(frozen=True)
class SGDConfig:
    loss: str = "logistic"
    alpha: float = 1e-5
    n_iter: int = 20
    t0: Optional[float] = None  # default 10/alpha: first step is ~0.1
    seed: int = 0
    record_schedule: bool = False

    def __post_init__(self):
        if self.loss not in LOSS_CODES:
            raise ValueError(f"loss must be one of {sorted(LOSS_CODES)}")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.n_iter < 1:
            raise ValueError("n_iter must be >= 1")
        if self.t0 is not None and self.t0 <= 0:
            raise ValueError("t0 must be > 0")

    def effective_t0(self) -> float:
        return 10.0 / self.alpha if self.t0 is None else self.t0


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    loss: str
    feature_space_hash: str = ""
    history: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.weights)


def _sgd_kernel(indptr, indices, data, y_signed, order, n_iter, alpha, t0,
                loss_code, w, epoch_loss, etas):
    """Run n_iter passes of per-example updates; w is modified in place and
    the final (scale, bias) pair is returned.  `order` holds one seeded
    permutation per epoch, `etas` collects step sizes when non-empty."""
    scale = 1.0
    bias = 0.0
    t = 0
    record = etas.shape[0] > 0
    n = y_signed.shape[0]
    for epoch in range(n_iter):
        total = 0.0
        for k in range(n):
            i = order[epoch, k]
            t += 1
            eta = 1.0 / (alpha * (t + t0))
            if record:
                etas[t - 1] = eta
            s = 0.0
            for j in range(indptr[i], indptr[i + 1]):
                s += w[indices[j]] * data[j]
            s = s * scale + bias
            yi = y_signed[i]
            m = yi * s
            if loss_code == 0:
                if m > 0.0:
                    e = math.exp(-m)
                    total += math.log1p(e)
                    g = -yi * (e / (1.0 + e))
                else:
                    total += math.log1p(math.exp(m)) - m
                    g = -yi / (1.0 + math.exp(m))
            else:
                if m < 1.0:
                    total += 1.0 - m
                    g = -yi
                else:
                    g = 0.0
            scale *= 1.0 - eta * alpha
            if scale < 1e-9:
                for j in range(w.shape[0]):
                    w[j] *= scale
                scale = 1.0
            if g != 0.0:
                c = eta * g / scale
                for j in range(indptr[i], indptr[i + 1]):
                    w[indices[j]] -= c * data[j]
                bias -= eta * g
        epoch_loss[epoch] = total / n if n > 0 else 0.0
    return scale, bias


try:  # pragma: no cover - exercised when numba is installed
    import numba

    _sgd_kernel_fast = numba.njit(cache=True)(_sgd_kernel)
except ImportError:  # pragma: no cover
    _sgd_kernel_fast = None


def train_sgd(X: SparseMatrix, y, cfg: SGDConfig, use_numba: bool = True) -> LinearModel:
    """Seeded multi-pass SGD; labels are {0,1} and are remapped to -1/+1."""
    y = np.asarray(y)
    if X.n_rows != len(y):
        raise ValueError(f"X has {X.n_rows} rows but y has {len(y)} labels")
    y_signed = np.where(y > 0, 1.0, -1.0)

    rng = np.random.default_rng(cfg.seed)
    order = np.empty((cfg.n_iter, X.n_rows), dtype=np.int64)
    for e in range(cfg.n_iter):
        order[e] = rng.permutation(X.n_rows)

    w = np.zeros(X.n_columns)
    epoch_loss = np.zeros(cfg.n_iter)
    n_steps = cfg.n_iter * X.n_rows
    etas = np.zeros(n_steps if cfg.record_schedule else 0)

    kernel = _sgd_kernel_fast if (use_numba and _sgd_kernel_fast is not None) else _sgd_kernel
    scale, bias = kernel(
        X.indptr, X.indices, X.data, y_signed, order, cfg.n_iter,
        cfg.alpha, cfg.effective_t0(), LOSS_CODES[cfg.loss], w, epoch_loss, etas,
    )

    if not (np.isfinite(scale) and np.isfinite(bias) and np.all(np.isfinite(epoch_loss))):
        bad = int(np.argmax(~np.isfinite(epoch_loss))) if not np.all(np.isfinite(epoch_loss)) else -1
        raise NumericError(
            f"non-finite loss during SGD (first bad epoch {bad}, "
            f"scale={scale!r}, bias={bias!r}); try a smaller step or larger t0"
        )
    w *= scale
    if not np.all(np.isfinite(w)):
        raise NumericError("non-finite weights after SGD")

    history = {"epoch_loss": epoch_loss.tolist()}
    if cfg.record_schedule:
        history["etas"] = etas
    return LinearModel(weights=w, bias=float(bias), loss=cfg.loss, history=history)


def decision_scores(model: LinearModel, X: SparseMatrix) -> np.ndarray:
    if X.n_columns != model.dim:
        raise ValueError(f"feature dimension {X.n_columns} != model dimension {model.dim}")
    return X.dot(model.weights) + model.bias


def predict(model: LinearModel, x: SparseVector) -> tuple[int, float]:
    """Label and raw score for one example; a score of exactly 0 predicts
    the negative (majority) class."""
    if len(x.indices) and x.indices.max() >= model.dim:
        raise ValueError(
            f"feature index {int(x.indices.max())} out of range for dimension {model.dim}"
        )
    score = float(model.weights[x.indices] @ x.values + model.bias)
    return (1 if score > 0 else 0), score


def predict_labels(model: LinearModel, X: SparseMatrix) -> np.ndarray:
    return (decision_scores(model, X) > 0).astype(np.int64)


def predict_proba(model: LinearModel, X: SparseMatrix) -> np.ndarray:
    """Positive-class probability via the sigmoid of the score (logistic loss)."""
    s = decision_scores(model, X)
    out = np.empty_like(s)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    es = np.exp(s[~pos])
    out[~pos] = es / (1.0 + es)
    return out


def regularized_objective(X: SparseMatrix, y, model: LinearModel, alpha: float) -> float:
    """Mean data loss plus (alpha/2)*||w||^2, the quantity SGD minimizes."""
    s = decision_scores(model, X)
    m = np.where(np.asarray(y) > 0, 1.0, -1.0) * s
    if model.loss == "logistic":
        data_loss = np.logaddexp(0.0, -m).mean()
    else:
        data_loss = np.maximum(0.0, 1.0 - m).mean()
    return float(data_loss + 0.5 * alpha * (model.weights @ model.weights))


@dataclass
class SweepRow:
    setting: dict
    accuracy: float = float("nan")
    f_score: float = float("nan")
    error: str = ""


def hyperparameter_sweep(settings, train_fn, eval_fn) -> list[SweepRow]:
    """Train/evaluate one model per setting; failures annotate the row
    instead of aborting the sweep.

    ``train_fn(setting) -> model`` and ``eval_fn(model) -> (accuracy, f_score)``.
    """
    rows: list[SweepRow] = []
    for setting in settings:
        row = SweepRow(setting=dict(setting))
        try:
            model = train_fn(setting)
            row.accuracy, row.f_score = eval_fn(model)
        except Exception as exc:  # annotated, not raised: sweep must finish
            row.error = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows
