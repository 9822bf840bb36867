"""The ``dupq`` command line: stats, split, train, eval, sweep, errors.

Every command takes ``--config FILE`` plus ``--key value`` overrides against
a per-command schema; unknown keys are rejected.  Exit codes: 0 success,
1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import csv
import hashlib
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import corpus, hand_features, linear, metrics, neural, ngrams, serialize, svm, trees
from .config import Option, RunConfig
from .embeddings import (EmbeddingTable, distance_features, embed_sentence,
                         load_embeddings, pair_concat)
from .errors import DataError, NumericError, UsageError
from .text import PreprocessPipeline, tokenize

NEURAL_KINDS = set(neural.MODEL_KINDS)
MODEL_KINDS = ("lr", "svm_linear", "svm_rbf", "dtree", "rforest", "gbt") + neural.MODEL_KINDS

# Which feature kinds each model accepts; first entry is the default.
CAPABILITIES = {
    "lr": ("ngram",),
    "svm_linear": ("ngram", "hand", "embed", "dist"),
    "svm_rbf": ("embed", "dist", "hand"),
    "dtree": ("hand",),
    "rforest": ("hand",),
    "gbt": ("hand",),
    **{k: ("text",) for k in NEURAL_KINDS},
}

_INCOMPATIBLE_NOTES = {
    ("dtree", "ngram"): "exhaustive split search over millions of mostly-empty "
    "sparse columns is computationally intractable; use feature=hand",
    ("svm_rbf", "ngram"): "the kernel SVM is restricted to dense low-dimensional "
    "features; use feature=embed, dist, or hand",
}


def _incompatible(model: str, feature: str) -> UsageError:
    note = _INCOMPATIBLE_NOTES.get((model, feature))
    if note is None and model in ("rforest", "gbt"):
        note = _INCOMPATIBLE_NOTES.get(("dtree", feature))
    allowed = ", ".join(CAPABILITIES[model])
    msg = f"model {model!r} does not accept feature kind {feature!r} (allowed: {allowed})"
    if note:
        msg += f": {note}"
    return UsageError(msg)


# ---------------------------------------------------------------------------
# Schemas

_COMMON_TRAIN = [
    Option("train", "str", "", "training split CSV"),
    Option("valid", "str", "", "validation split CSV"),
    Option("seed", "int", 0),
]

SCHEMAS: dict[str, list[Option]] = {
    "stats": [
        Option("data", "str", "", "question-pair CSV"),
        Option("out", "str", "question_occurrences.csv", "histogram CSV path"),
    ],
    "split": [
        Option("data", "str", "", "question-pair CSV"),
        Option("kind", "str", "blind", "blind or disjoint"),
        Option("ratios", "floats", [0.7, 0.2, 0.1]),
        Option("seed", "int", 0),
        Option("outdir", "str", "", "output directory"),
    ],
    "train": _COMMON_TRAIN + [
        Option("model", "str", "", f"one of {', '.join(MODEL_KINDS)}"),
        Option("feature", "str", "", "ngram | hand | embed | dist (model default otherwise)"),
        Option("out", "str", "model", "output path prefix"),
        Option("ngram_order", "int", 3, "max n-gram order"),
        Option("min_count", "int", 1),
        Option("alpha", "float", 1e-5, "L2 weight for SGD"),
        Option("n_iter", "int", 20, "SGD passes"),
        Option("t0", "float", 0.0, "schedule offset; 0 = 10/alpha"),
        Option("svm_c", "float", 1.0),
        Option("svm_gamma", "float", 0.0, "0 = 1/n_features"),
        Option("svm_max_iter", "int", 1000),
        Option("svm_tol", "float", 1e-3),
        Option("row_cap", "int", svm.DEFAULT_ROW_CAP),
        Option("max_depth", "int", -1, "-1 = model default"),
        Option("min_samples_leaf", "int", -1),
        Option("n_estimators", "int", -1),
        Option("learning_rate", "float", 0.0, "0 = model default"),
        Option("features_per_split", "int", -1),
        Option("bootstrap", "bool", True),
        Option("hidden_dim", "int", 300),
        Option("embedding_dim", "int", 50),
        Option("dropout", "float", 0.1),
        Option("l2_beta", "float", 0.01),
        Option("epochs", "int", 10),
        Option("batch_size", "int", 128),
        Option("step_size", "float", 1e-3),
        Option("embeddings", "str", "", "word-vector file (embed/dist features, neural init)"),
    ],
    "eval": [
        Option("model", "str", ""),
        Option("data", "str", ""),
        Option("out", "str", "", "report CSV path (optional)"),
        Option("space", "str", "", "feature-space file (default: sibling of model)"),
        Option("embeddings", "str", ""),
        Option("name", "str", "", "row label (default: model file stem)"),
        Option("split_name", "str", "test"),
    ],
    "sweep": _COMMON_TRAIN + [
        Option("kind", "str", "", "preproc | alpha | iters | svm_c | ablation"),
        Option("out", "str", "sweep.csv"),
        Option("ngram_order", "int", 0, "0 = per-sweep default"),
        Option("alphas", "floats", [0.1, 0.01, 0.001, 0.0001, 0.00001, 0.000001]),
        Option("iters", "ints", [5, 10, 15, 20, 25, 30, 35, 40, 45, 50]),
        Option("c_values", "floats", [0.005, 0.01, 0.1, 0.5, 1.0, 10.0, 50.0]),
        Option("n_iter", "int", 0, "0 = per-sweep default"),
        Option("alpha", "float", 5e-5, "preproc/svm_c sweeps"),
        Option("repeats", "int", 3, "preproc sweep repetitions"),
        Option("pipelines", "strs", [
            "none", "replace_punc", "remove_punc", "remove_digits",
            "remove_punc+remove_digits", "fix_non_ascii", "remove_non_ascii",
            "fix_non_ascii+remove_non_ascii", "lowercase",
        ], "step names joined by '+'"),
        Option("groups", "strs", list(hand_features.GROUP_ORDER)),
    ],
    "errors": [
        Option("model", "str", ""),
        Option("data", "str", ""),
        Option("n", "int", 20),
        Option("space", "str", ""),
        Option("embeddings", "str", ""),
        Option("out", "str", ""),
    ],
}

USAGE = """usage: dupq <command> [--config FILE] [--key value ...]

commands:
  stats    dataset statistics and the question-occurrence histogram CSV
  split    blind or question-disjoint train/validation/test split
  train    fit a model (lr, svm_linear, svm_rbf, dtree, rforest, gbt,
           cbow, lstm, lstm_attn, bilstm, bilstm_attn)
  eval     score a saved model on a split CSV
  sweep    hyperparameter / preprocessing / ablation sweeps (CSV output)
  errors   most confidently misclassified pairs, for label review

`dupq <command> --help` lists that command's config keys.
"""


# ---------------------------------------------------------------------------
# Featurization shared by train / eval / errors


def _load_dataset(path: str) -> corpus.Dataset:
    if not path:
        raise UsageError("missing required data path")
    return corpus.load_pairs(path)


def _load_table(path: str, dim: int) -> EmbeddingTable:
    if not path:
        raise UsageError("this feature kind needs --embeddings <vector file>")
    return load_embeddings(path, dim)


def _sentence_vector(text: str, table: EmbeddingTable) -> np.ndarray:
    return embed_sentence(tokenize(text), table, oov="skip")


def _dense_features(d: corpus.Dataset, feature: str, table: EmbeddingTable | None) -> np.ndarray:
    if feature == "hand":
        return hand_features.extract_matrix(d)
    out = np.empty((len(d), 2 * table.dim if feature == "embed" else 7))
    for i, p in enumerate(d):
        u = _sentence_vector(p.question1, table)
        v = _sentence_vector(p.question2, table)
        out[i] = pair_concat(u, v) if feature == "embed" else distance_features(u, v)
    return out


def _file_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# Model persistence wrappers


def _save_linear(path, model: linear.LinearModel, model_kind, feature, order, space_hash):
    header = {
        "family": "linear",
        "model_kind": model_kind,
        "feature": feature,
        "loss": model.loss,
        "ngram_order": order,
        "space_hash": space_hash,
        "dim": model.dim,
    }
    serialize.write_model(path, header, [model.weights, np.array([model.bias])])


def _save_svm(path, model: svm.KernelSVMModel, model_kind, feature, emb_info):
    header = {
        "family": "svm",
        "model_kind": model_kind,
        "feature": feature,
        "kernel": model.kernel,
        "gamma": model.gamma,
        "C": model.C,
        "n_features": model.n_features,
        **emb_info,
    }
    serialize.write_model(
        path, header,
        [model.support_vectors, model.alphas, model.sv_labels, np.array([model.bias])],
    )


def _save_tree(path, model: trees.TreeEnsemble, model_kind):
    header = {
        "family": "tree",
        "model_kind": model_kind,
        "feature": "hand",
        "kind": model.kind,
        "learning_rate": model.learning_rate,
        "base_score": model.base_score,
        "n_features": model.n_features,
    }
    serialize.write_model(path, header, trees.ensemble_to_arrays(model))


class LoadedModel:
    """A persisted model plus everything needed to score datasets."""

    def __init__(self, path: str, space_path: str = "", embeddings_path: str = ""):
        self.path = Path(path)
        self.header, arrays = serialize.read_model(path)
        self.family = self.header.get("family")
        self.name = self.path.stem
        feature = self.header.get("feature")

        if self.family == "linear":
            self.model = linear.LinearModel(
                weights=arrays[0], bias=float(arrays[1][0]), loss=self.header["loss"]
            )
            space_file = Path(space_path) if space_path else self.path.with_suffix(".space")
            if not space_file.exists():
                raise DataError(f"feature-space file not found: {space_file}")
            self.space = ngrams.FeatureSpace.load(space_file)
            if self.space.content_hash() != self.header["space_hash"]:
                raise DataError(
                    f"feature-space hash mismatch: {space_file} does not match the "
                    "space this model was trained with"
                )
            self.cfg = ngrams.NGramConfig(
                max_n=self.space.max_n,
                pipeline=PreprocessPipeline(tuple(self.space.pipeline_steps)),
            )
        elif self.family == "svm":
            self.model = svm.KernelSVMModel(
                support_vectors=arrays[0], alphas=arrays[1], sv_labels=arrays[2],
                bias=float(arrays[3][0]), kernel=self.header["kernel"],
                gamma=self.header["gamma"], C=self.header["C"],
                n_features=self.header["n_features"],
            )
            self.table = None
            if feature in ("embed", "dist"):
                self.table = _load_table(embeddings_path, self.header["embed_dim"])
                if "embed_sha256" in self.header:
                    if _file_hash(embeddings_path) != self.header["embed_sha256"]:
                        print(
                            "warning: embedding file differs from the one used in "
                            "training", file=sys.stderr,
                        )
        elif self.family == "tree":
            self.model = trees.ensemble_from_arrays(
                self.header["kind"], self.header["n_features"],
                self.header["learning_rate"], self.header["base_score"], arrays,
            )
        elif self.family == "neural":
            self.model = neural.NeuralPairModel.load(path)
        else:
            raise DataError(f"{path}: unknown model family {self.family!r}")

    def margins(self, d: corpus.Dataset) -> np.ndarray:
        """Signed scores: positive predicts duplicate, magnitude is confidence."""
        if self.family == "linear":
            X = ngrams.vectorize_dataset(d, self.space, self.cfg)
            return linear.decision_scores(self.model, X)
        if self.family == "svm":
            X = _dense_features(d, self.header["feature"], self.table)
            return self.model.decision_function(X)
        if self.family == "tree":
            X = hand_features.extract_matrix(d)
            return self.model.predict_proba(X) - 0.5
        return self.model.predict_proba_dataset(d) - 0.5

    def predict(self, d: corpus.Dataset) -> np.ndarray:
        return (self.margins(d) > 0).astype(np.int64)


# ---------------------------------------------------------------------------
# Commands


def cmd_stats(cfg: RunConfig) -> int:
    d = _load_dataset(cfg.require("data"))
    stats = corpus.compute_stats(d)
    print(corpus.format_stats(stats))
    corpus.write_histogram_csv(cfg["out"], stats)
    print(f"histogram written to {cfg['out']}")
    return 0


def cmd_split(cfg: RunConfig) -> int:
    d = _load_dataset(cfg.require("data"))
    kind = cfg["kind"]
    if kind == "blind":
        result = corpus.blind_split(d, tuple(cfg["ratios"]), cfg["seed"])
    elif kind == "disjoint":
        result = corpus.disjoint_split(d, tuple(cfg["ratios"]), cfg["seed"])
    else:
        raise UsageError(f"split kind must be blind or disjoint, got {kind!r}")
    files = corpus.save_split(result, cfg.require("outdir"))
    for name, path in files.items():
        print(f"{name}: {path}")
    return 0


def _final_metrics_entry(name: str, m: metrics.Metrics) -> dict:
    return {
        f"final_{name}_accuracy": round(m.accuracy, 6),
        f"final_{name}_f_score": round(m.f_score, 6),
    }


def cmd_train(cfg: RunConfig) -> int:
    model_kind = cfg.require("model")
    if model_kind not in MODEL_KINDS:
        raise UsageError(f"unknown model {model_kind!r} (known: {', '.join(MODEL_KINDS)})")
    feature = cfg["feature"] or CAPABILITIES[model_kind][0]
    if feature not in CAPABILITIES[model_kind]:
        raise _incompatible(model_kind, feature)

    train_d = _load_dataset(cfg.require("train"))
    valid_d = _load_dataset(cfg.require("valid"))
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    model_path = out.with_suffix(".model")
    log_path = out.with_suffix(".metrics.jsonl")
    log_path.write_text("", encoding="utf-8")

    if feature == "ngram":
        ncfg = ngrams.NGramConfig(max_n=cfg["ngram_order"], min_count=cfg["min_count"])
        space = ngrams.fit_feature_space(train_d, ncfg)
        Xt = ngrams.vectorize_dataset(train_d, space, ncfg)
        Xv = ngrams.vectorize_dataset(valid_d, space, ncfg)
        scfg = linear.SGDConfig(
            loss="logistic" if model_kind == "lr" else "hinge",
            alpha=cfg["alpha"], n_iter=cfg["n_iter"],
            t0=cfg["t0"] if cfg["t0"] > 0 else None, seed=cfg["seed"],
        )
        model = linear.train_sgd(Xt, train_d.labels(), scfg)
        space_path = out.with_suffix(".space")
        space.save(space_path)
        model.feature_space_hash = space.content_hash()
        _save_linear(model_path, model, model_kind, feature, cfg["ngram_order"],
                     model.feature_space_hash)
        train_m = metrics.score(linear.predict_labels(model, Xt), train_d.labels())
        valid_m = metrics.score(linear.predict_labels(model, Xv), valid_d.labels())
    elif model_kind in ("svm_linear", "svm_rbf"):
        table = None
        emb_info = {}
        if feature in ("embed", "dist"):
            table = _load_table(cfg["embeddings"], cfg["embedding_dim"])
            emb_info = {"embed_dim": table.dim,
                        "embed_sha256": _file_hash(cfg["embeddings"])}
        Xt = _dense_features(train_d, feature, table)
        Xv = _dense_features(valid_d, feature, table)
        kcfg = svm.KernelSVMConfig(
            C=cfg["svm_c"], kernel="rbf" if model_kind == "svm_rbf" else "linear",
            gamma=cfg["svm_gamma"] or None, max_iter=cfg["svm_max_iter"],
            tol=cfg["svm_tol"], seed=cfg["seed"], row_cap=cfg["row_cap"],
        )
        model = svm.train_kernel_svm(Xt, train_d.labels(), kcfg)
        _save_svm(model_path, model, model_kind, feature, emb_info)
        train_m = metrics.score(model.predict(Xt), train_d.labels())
        valid_m = metrics.score(model.predict(Xv), valid_d.labels())
    elif model_kind in ("dtree", "rforest", "gbt"):
        defaults = {
            "dtree": trees.DECISION_TREE_CONFIG,
            "rforest": trees.RANDOM_FOREST_CONFIG,
            "gbt": trees.GRADIENT_BOOSTED_CONFIG,
        }[model_kind]
        tcfg = trees.TreeConfig(
            max_depth=defaults.max_depth if cfg["max_depth"] < 0 else (cfg["max_depth"] or None),
            min_samples_leaf=defaults.min_samples_leaf
            if cfg["min_samples_leaf"] < 0 else cfg["min_samples_leaf"],
            n_estimators=defaults.n_estimators
            if cfg["n_estimators"] < 0 else cfg["n_estimators"],
            learning_rate=cfg["learning_rate"] or defaults.learning_rate,
            features_per_split=None
            if cfg["features_per_split"] < 0 else cfg["features_per_split"],
            bootstrap=cfg["bootstrap"],
            seed=cfg["seed"],
        )
        Xt = hand_features.extract_matrix(train_d)
        Xv = hand_features.extract_matrix(valid_d)
        y = train_d.labels()
        if model_kind == "dtree":
            root = trees.fit_decision_tree(Xt, y, tcfg)
            model = trees.TreeEnsemble(kind="tree", trees=[root], n_features=Xt.shape[1])
        elif model_kind == "rforest":
            model = trees.fit_random_forest(Xt, y, tcfg)
        else:
            model = trees.fit_gradient_boosted(Xt, y, tcfg)
        _save_tree(model_path, model, model_kind)
        train_m = metrics.score(model.predict(Xt), y)
        valid_m = metrics.score(model.predict(Xv), valid_d.labels())
    else:  # neural kinds
        table = None
        if cfg["embeddings"]:
            table = _load_table(cfg["embeddings"], cfg["embedding_dim"])
        nncfg = neural.NeuralConfig(
            hidden_dim=cfg["hidden_dim"], embedding_dim=cfg["embedding_dim"],
            dropout_rate=cfg["dropout"], l2_beta=cfg["l2_beta"],
            step_size=cfg["step_size"], epochs=cfg["epochs"],
            batch_size=cfg["batch_size"], seed=cfg["seed"],
        )
        model, _history = neural.train(model_kind, train_d, valid_d, nncfg,
                                       table=table, log_path=log_path)
        model.save(model_path)
        train_m = metrics.score(model.predict_dataset(train_d), train_d.labels())
        valid_m = metrics.score(model.predict_dataset(valid_d), valid_d.labels())

    with open(log_path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps({**_final_metrics_entry("train", train_m),
                             **_final_metrics_entry("valid", valid_m)}) + "\n")
    print(f"model written to {model_path}")
    print(f"train accuracy {train_m.accuracy:.2f}  F {train_m.f_score:.2f}")
    print(f"valid accuracy {valid_m.accuracy:.2f}  F {valid_m.f_score:.2f}")
    return 0


def cmd_eval(cfg: RunConfig) -> int:
    loaded = LoadedModel(cfg.require("model"), cfg["space"], cfg["embeddings"])
    d = _load_dataset(cfg.require("data"))
    name = cfg["name"] or loaded.name
    rows = metrics.compare([(name, lambda: loaded.predict(d))], d.labels(),
                           split_name=cfg["split_name"])
    print(metrics.format_report(rows))
    if cfg["out"]:
        metrics.write_report(cfg["out"], rows)
        print(f"report written to {cfg['out']}")
    return 0


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _sgd_eval_rows(settings, make_cfg, Xt, yt, Xv, yv):
    def train_fn(setting):
        return linear.train_sgd(Xt, yt, make_cfg(setting))

    def eval_fn(model):
        m = metrics.score(linear.predict_labels(model, Xv), yv)
        return m.accuracy, m.f_score

    return linear.hyperparameter_sweep(settings, train_fn, eval_fn)


def cmd_sweep(cfg: RunConfig) -> int:
    kind = cfg.require("kind")
    if kind not in ("preproc", "alpha", "iters", "svm_c", "ablation"):
        raise UsageError(f"unknown sweep kind {kind!r}")
    train_d = _load_dataset(cfg.require("train"))
    valid_d = _load_dataset(cfg.require("valid"))
    yt, yv = train_d.labels(), valid_d.labels()
    out = cfg["out"]

    if kind == "ablation":
        Xt = hand_features.extract_matrix(train_d)
        Xv = hand_features.extract_matrix(valid_d)
        rows = trees.feature_ablation(
            [g for g in cfg["groups"]], Xt, yt, Xv, yv,
            column_indices=hand_features.group_column_indices,
        )
        table = []
        prev_acc = prev_f = None
        for r in rows:
            label = ",".join(r.groups) if r.groups else "majority"
            d_acc = "" if prev_acc is None else f"{r.accuracy - prev_acc:.1f}"
            d_f = "" if prev_f is None or not r.groups else f"{r.f_score - prev_f:.1f}"
            table.append([label, r.n_features, f"{r.accuracy:.1f}", d_acc,
                          f"{r.f_score:.1f}", d_f])
            prev_acc, prev_f = r.accuracy, r.f_score
        _write_csv(out, ["groups", "n_features", "accuracy", "delta_accuracy",
                         "f_score", "delta_f_score"], table)
    elif kind == "preproc":
        order = cfg["ngram_order"] or 1
        n_iter = cfg["n_iter"] or 50
        table = []
        for spec in cfg["pipelines"]:
            steps = () if spec == "none" else tuple(spec.split("+"))
            ncfg = ngrams.NGramConfig(max_n=order, pipeline=PreprocessPipeline(steps))
            space = ngrams.fit_feature_space(train_d, ncfg)
            Xt = ngrams.vectorize_dataset(train_d, space, ncfg)
            Xv = ngrams.vectorize_dataset(valid_d, space, ncfg)
            accs = []
            for rep in range(cfg["repeats"]):
                scfg = linear.SGDConfig(loss="hinge", alpha=cfg["alpha"],
                                        n_iter=n_iter, seed=cfg["seed"] + rep)
                model = linear.train_sgd(Xt, yt, scfg)
                accs.append(metrics.score(linear.predict_labels(model, Xv), yv).accuracy)
            vocab_size = sum(1 for k in space.column_of if k.count("\x1f") == 1)
            table.append([spec, vocab_size, f"{np.mean(accs):.2f}"]
                         + [f"{a:.2f}" for a in accs])
        _write_csv(out, ["pipeline", "unigram_columns", "mean_accuracy"]
                   + [f"run{r + 1}" for r in range(cfg["repeats"])], table)
    else:
        order = cfg["ngram_order"] or 3
        ncfg = ngrams.NGramConfig(max_n=order)
        space = ngrams.fit_feature_space(train_d, ncfg)
        Xt = ngrams.vectorize_dataset(train_d, space, ncfg)
        Xv = ngrams.vectorize_dataset(valid_d, space, ncfg)
        if kind == "alpha":
            n_iter = cfg["n_iter"] or 20
            rows = _sgd_eval_rows(
                [{"alpha": a} for a in cfg["alphas"]],
                lambda s: linear.SGDConfig(alpha=s["alpha"], n_iter=n_iter,
                                           seed=cfg["seed"]),
                Xt, yt, Xv, yv,
            )
            table = [[r.setting["alpha"], f"{r.accuracy:.2f}", f"{r.f_score:.2f}", r.error]
                     for r in rows]
            _write_csv(out, ["alpha", "accuracy", "f_score", "error"], table)
        elif kind == "iters":
            rows = _sgd_eval_rows(
                [{"n_iter": n} for n in cfg["iters"]],
                lambda s: linear.SGDConfig(alpha=cfg["alpha"] if cfg.was_set("alpha")
                                           else 1e-5, n_iter=s["n_iter"], seed=cfg["seed"]),
                Xt, yt, Xv, yv,
            )
            table = [[r.setting["n_iter"], f"{r.accuracy:.2f}", f"{r.f_score:.2f}", r.error]
                     for r in rows]
            _write_csv(out, ["n_iter", "accuracy", "f_score", "error"], table)
        else:  # svm_c: hinge SGD with alpha = 1/(n*C)
            n_iter = cfg["n_iter"] or 20
            n = max(Xt.n_rows, 1)
            rows = _sgd_eval_rows(
                [{"C": c, "alpha": 1.0 / (n * c)} for c in cfg["c_values"]],
                lambda s: linear.SGDConfig(loss="hinge", alpha=s["alpha"],
                                           n_iter=n_iter, seed=cfg["seed"]),
                Xt, yt, Xv, yv,
            )
            table = [[r.setting["C"], f"{r.setting['alpha']:.3g}", f"{r.accuracy:.2f}",
                      f"{r.f_score:.2f}", r.error] for r in rows]
            _write_csv(out, ["C", "alpha", "accuracy", "f_score", "error"], table)

    print(f"sweep written to {out}")
    return 0


def cmd_errors(cfg: RunConfig) -> int:
    loaded = LoadedModel(cfg.require("model"), cfg["space"], cfg["embeddings"])
    d = _load_dataset(cfg.require("data"))
    margins = loaded.margins(d)
    predictions = (margins > 0).astype(np.int64)
    gold = d.labels()
    wrong = np.flatnonzero(predictions != gold)
    ranked = wrong[np.argsort(-np.abs(margins[wrong]), kind="stable")]
    top = ranked[: max(cfg["n"], 0)]

    rows = []
    for i in top:
        p = d[int(i)]
        rows.append([p.pair_id, f"{margins[i]:+.6g}", int(predictions[i]), p.label,
                     p.question1, p.question2])
        print(f"score {margins[i]:+.4f}  predicted {int(predictions[i])}  "
              f"gold {p.label}\n  q1: {p.question1}\n  q2: {p.question2}")
    if not len(top):
        print("no misclassified pairs")
    if cfg["out"]:
        _write_csv(cfg["out"], ["pair_id", "score", "predicted", "gold",
                                "question1", "question2"], rows)
    return 0


COMMANDS = {
    "stats": cmd_stats,
    "split": cmd_split,
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "errors": cmd_errors,
}


def _parse_args(command: str, args: list[str]) -> RunConfig:
    cfg = RunConfig(SCHEMAS[command])
    # --config files load first (in order), then the remaining overrides.
    pairs: list[tuple[str, str]] = []
    i = 0
    while i < len(args):
        arg = args[i]
        if arg in ("-h", "--help"):
            print(f"dupq {command} options:")
            for opt in SCHEMAS[command]:
                text = f"  --{opt.name} <{opt.type}>  (default {opt.default!r})"
                if opt.help:
                    text += f"  {opt.help}"
                print(text)
            raise SystemExit(0)
        if not arg.startswith("--"):
            raise UsageError(f"expected --key value pairs, got {arg!r}")
        if i + 1 >= len(args):
            raise UsageError(f"option {arg} is missing a value")
        key, value = arg[2:], args[i + 1]
        if key == "config":
            cfg.load_file(value)
        else:
            pairs.append((key, value))
        i += 2
    for key, value in pairs:
        cfg.set(key, value)
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = list(sys.argv[1:] if argv is None else argv)
    if not args or args[0] in ("-h", "--help"):
        print(USAGE)
        return 0
    command, rest = args[0], args[1:]
    if command not in COMMANDS:
        print(f"unknown command {command!r}\n\n{USAGE}", file=sys.stderr)
        return 1
    try:
        cfg = _parse_args(command, rest)
        cfg.log_resolved(command)
        return COMMANDS[command](cfg)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
