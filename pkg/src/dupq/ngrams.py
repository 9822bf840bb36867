"""Per-question-namespaced n-gram count features in a sparse layout.

The two questions of a pair occupy separate feature namespaces ("slots"),
so the same n-gram seen in question 1 and question 2 maps to different
columns.  Storage is a self-contained compressed sparse row layout.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Dataset, QuestionPair
from .errors import DataError
from .text import PreprocessPipeline, tokenize

# Linear models strip non-ASCII characters before tokenization.
DEFAULT_PIPELINE = PreprocessPipeline(("remove_non_ascii",))

_SEP = "\x1f"  # joins n-gram tokens into a dict key; tokens never contain whitespace


@dataclass(frozen=True)
class NGramConfig:
    max_n: int = 1
    pipeline: PreprocessPipeline = DEFAULT_PIPELINE
    min_count: int = 1

    def __post_init__(self):
        if not 1 <= self.max_n <= 3:
            raise ValueError(f"max_n must be in 1..3, got {self.max_n}")
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")


def extract_ngrams(tokens: list[str], n: int) -> Counter:
    """Multiset of all contiguous length-n windows (tuples)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _question_tokens(text: str, cfg: NGramConfig) -> list[str]:
    return tokenize(cfg.pipeline(text))


def _keys_for_question(tokens: list[str], slot: int, max_n: int) -> Counter:
    keys: Counter[str] = Counter()
    prefix = f"{slot}{_SEP}"
    for n in range(1, max_n + 1):
        for i in range(len(tokens) - n + 1):
            keys[prefix + _SEP.join(tokens[i : i + n])] += 1
    return keys


@dataclass
class FeatureSpace:
    """Frozen map from (question slot, n-gram) to a dense column index."""

    column_of: dict[str, int]
    max_n: int
    pipeline_steps: tuple[str, ...]

    @property
    def n_columns(self) -> int:
        return len(self.column_of)

    def column(self, slot: int, ngram: tuple[str, ...]) -> int | None:
        return self.column_of.get(f"{slot}{_SEP}" + _SEP.join(ngram))

    def columns(self) -> list[tuple[int, tuple[str, ...]]]:
        """All columns in index order as (slot, n-gram tuple)."""
        out: list[tuple[int, tuple[str, ...]]] = [None] * len(self.column_of)
        for key, idx in self.column_of.items():
            parts = key.split(_SEP)
            out[idx] = (int(parts[0]), tuple(parts[1:]))
        return out

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("#dupq-feature-space v1\n")
            fh.write(f"#max_n\t{self.max_n}\n")
            fh.write("#pipeline\t" + ",".join(self.pipeline_steps) + "\n")
            fh.write(f"#columns\t{len(self.column_of)}\n")
            for slot, ngram in self.columns():
                fh.write(f"{slot}\t" + " ".join(ngram) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "FeatureSpace":
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            magic = fh.readline().rstrip("\n")
            if magic != "#dupq-feature-space v1":
                raise DataError(f"{path}: not a feature-space file")
            max_n = int(fh.readline().split("\t")[1])
            steps = fh.readline().rstrip("\n").split("\t")[1]
            n_cols = int(fh.readline().split("\t")[1])
            column_of: dict[str, int] = {}
            for idx, line in enumerate(fh):
                slot, _, rest = line.rstrip("\n").partition("\t")
                tokens = rest.split(" ") if rest else []
                column_of[f"{slot}{_SEP}" + _SEP.join(tokens)] = idx
        if len(column_of) != n_cols:
            raise DataError(f"{path}: expected {n_cols} columns, read {len(column_of)}")
        steps_tuple = tuple(s for s in steps.split(",") if s)
        return cls(column_of=column_of, max_n=max_n, pipeline_steps=steps_tuple)

    def content_hash(self) -> str:
        """Stable hash identifying the fitted space (order-sensitive)."""
        h = hashlib.sha256()
        h.update(f"{self.max_n}|{','.join(self.pipeline_steps)}".encode())
        for key in sorted(self.column_of, key=self.column_of.get):
            h.update(key.encode())
            h.update(b"\x00")
        return h.hexdigest()


def fit_feature_space(d: Dataset, cfg: NGramConfig) -> FeatureSpace:
    """One column per (slot, n-gram) observed in ``d``, deterministically ordered
    by slot, then n-gram order, then lexicographically."""
    counts: Counter[str] = Counter()
    for pair in d:
        for slot, text in ((1, pair.question1), (2, pair.question2)):
            counts.update(_keys_for_question(_question_tokens(text, cfg), slot, cfg.max_n))

    keys = [k for k, c in counts.items() if c >= cfg.min_count]
    # Key layout is slot<SEP>tok1<SEP>tok2...; sorting by (slot, n, tokens)
    # keeps unigram columns of a slot ahead of its bigrams, etc.
    keys.sort(key=lambda k: (k[0], k.count(_SEP), k))
    return FeatureSpace(
        column_of={k: i for i, k in enumerate(keys)},
        max_n=cfg.max_n,
        pipeline_steps=cfg.pipeline.steps,
    )


@dataclass
class SparseVector:
    """Sorted column indices with positive counts."""

    indices: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    def sum(self) -> float:
        return float(self.values.sum())


def vectorize_pair(pair: QuestionPair, space: FeatureSpace, cfg: NGramConfig) -> SparseVector:
    """Count in-space n-grams of both questions; out-of-space ones are dropped."""
    col_counts: dict[int, float] = {}
    column_of = space.column_of
    for slot, text in ((1, pair.question1), (2, pair.question2)):
        keys = _keys_for_question(_question_tokens(text, cfg), slot, cfg.max_n)
        for key, count in keys.items():
            col = column_of.get(key)
            if col is not None:
                col_counts[col] = col_counts.get(col, 0) + count
    if not col_counts:
        return SparseVector(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))
    indices = np.fromiter(sorted(col_counts), dtype=np.int64, count=len(col_counts))
    values = np.array([col_counts[i] for i in indices], dtype=np.float64)
    return SparseVector(indices, values)


@dataclass
class SparseMatrix:
    """Compressed sparse row matrix (row offsets, column indices, values)."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    n_columns: int

    @property
    def n_rows(self) -> int:
        return len(self.indptr) - 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_columns)

    def row(self, i: int) -> SparseVector:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return SparseVector(self.indices[lo:hi], self.data[lo:hi])

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for i in range(self.n_rows):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            out[i, self.indices[lo:hi]] += self.data[lo:hi]
        return out

    def dot(self, w: np.ndarray) -> np.ndarray:
        """Matrix-vector product against a dense weight vector."""
        if len(self.data) == 0:
            return np.zeros(self.n_rows)
        row_ids = np.repeat(np.arange(self.n_rows), np.diff(self.indptr))
        return np.bincount(row_ids, weights=self.data * w[self.indices], minlength=self.n_rows)

    def save(self, path: str | Path) -> None:
        np.savez(
            path,
            indptr=self.indptr,
            indices=self.indices,
            data=self.data,
            n_columns=np.int64(self.n_columns),
        )

    @classmethod
    def load(cls, path: str | Path) -> "SparseMatrix":
        with np.load(path) as z:
            return cls(
                indptr=z["indptr"],
                indices=z["indices"],
                data=z["data"],
                n_columns=int(z["n_columns"]),
            )

    @classmethod
    def from_vectors(cls, vectors: list[SparseVector], n_columns: int) -> "SparseMatrix":
        indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
        for i, v in enumerate(vectors):
            indptr[i + 1] = indptr[i] + len(v)
        nnz = int(indptr[-1])
        indices = np.empty(nnz, dtype=np.int64)
        data = np.empty(nnz, dtype=np.float64)
        for i, v in enumerate(vectors):
            indices[indptr[i] : indptr[i + 1]] = v.indices
            data[indptr[i] : indptr[i + 1]] = v.values
        return cls(indptr, indices, data, n_columns)


def vectorize_dataset(d: Dataset, space: FeatureSpace, cfg: NGramConfig) -> SparseMatrix:
    return SparseMatrix.from_vectors(
        [vectorize_pair(p, space, cfg) for p in d], space.n_columns
    )
