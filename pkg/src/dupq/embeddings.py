"""Pretrained word vectors, sum-of-words sentence embeddings, and the seven
vector distance features (Bray-Curtis, Canberra, Chebyshev, city block,
correlation, cosine, Euclidean).

Degenerate denominators (zero vectors, constant vectors, empty sentences)
all resolve to 0 so the features stay finite and symmetric.
"""

from __future__ import annotations

import hashlib
import json
import warnings
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

DISTANCE_NAMES = (
    "bray_curtis",
    "canberra",
    "chebyshev",
    "city_block",
    "correlation",
    "cosine",
    "euclidean",
)


@dataclass
class EmbeddingTable:
    word_to_row: dict[str, int]
    vectors: np.ndarray  # (V, d)
    dim: int

    def __len__(self) -> int:
        return len(self.word_to_row)

    def __contains__(self, word: str) -> bool:
        return word in self.word_to_row

    def vector(self, word: str) -> np.ndarray | None:
        i = self.word_to_row.get(word)
        return None if i is None else self.vectors[i]


def load_embeddings(path: str | Path, expected_dim: int) -> EmbeddingTable:
    """Parse a plain-text vector file (word then ``expected_dim`` decimals per
    line); lines of wrong arity are skipped with a warning."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such embedding file: {path}")
    words: dict[str, int] = {}
    rows: list[np.ndarray] = []
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != expected_dim + 1:
                skipped += 1
                if skipped <= 5:
                    warnings.warn(
                        f"{path}:{lineno}: expected {expected_dim + 1} fields, "
                        f"got {len(parts)}; line skipped"
                    )
                continue
            word = parts[0]
            if word in words:
                continue
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError:
                skipped += 1
                continue
            words[word] = len(rows)
            rows.append(vec)
    if skipped > 5:
        warnings.warn(f"{path}: {skipped} malformed lines skipped in total")
    if not rows:
        raise DataError(f"{path}: no valid embedding rows for dimension {expected_dim}")
    return EmbeddingTable(words, np.vstack(rows), expected_dim)


@dataclass(frozen=True)
class GaussianOOV:
    """Deterministic per-token Gaussian vectors for out-of-vocabulary words."""

    sigma: float = 0.1
    seed: int = 0

    def vector(self, token: str, dim: int) -> np.ndarray:
        token_seed = zlib.crc32(token.encode("utf-8"))
        rng = np.random.default_rng((self.seed, token_seed))
        return rng.normal(0.0, self.sigma, size=dim)


def embed_sentence(tokens, table: EmbeddingTable, oov="skip") -> np.ndarray:
    """Sum of word vectors; OOV handling is ``"skip"`` or a GaussianOOV."""
    total = np.zeros(table.dim)
    for token in tokens:
        vec = table.vector(token)
        if vec is not None:
            total += vec
        elif isinstance(oov, GaussianOOV):
            total += oov.vector(token, table.dim)
        elif oov != "skip":
            raise ValueError(f"unknown OOV policy: {oov!r}")
    return total


def pair_concat(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return np.concatenate([u, v])


def _check_dims(u: np.ndarray, v: np.ndarray) -> None:
    if u.shape != v.shape or u.ndim != 1 or len(u) < 1:
        raise ValueError(f"need equal 1-d vectors, got {u.shape} and {v.shape}")


def bray_curtis(u, v) -> float:
    num = np.abs(u - v).sum()
    den = np.abs(u + v).sum()
    return float(num / den) if den > 0 else 0.0


def canberra(u, v) -> float:
    num = np.abs(u - v)
    den = np.abs(u) + np.abs(v)
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(terms.sum())


def chebyshev(u, v) -> float:
    return float(np.abs(u - v).max())


def city_block(u, v) -> float:
    return float(np.abs(u - v).sum())


def correlation(u, v) -> float:
    uc = u - u.mean()
    vc = v - v.mean()
    nu, nv = np.linalg.norm(uc), np.linalg.norm(vc)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    # rounding can push the ratio a ulp past +-1; the contract is [0, 2]
    return float(min(max(1.0 - uc.dot(vc) / (nu * nv), 0.0), 2.0))


def cosine(u, v) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(min(max(1.0 - u.dot(v) / (nu * nv), 0.0), 2.0))


def euclidean(u, v) -> float:
    return float(np.linalg.norm(u - v))


def distance_features(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """The seven distances, in DISTANCE_NAMES order."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    _check_dims(u, v)
    return np.array(
        [
            bray_curtis(u, v),
            canberra(u, v),
            chebyshev(u, v),
            city_block(u, v),
            correlation(u, v),
            cosine(u, v),
            euclidean(u, v),
        ]
    )


def cache_manifest(path: str | Path, table: EmbeddingTable) -> dict:
    """Identify a vector file by content hash, for cache validation."""
    digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    return {"file": str(path), "sha256": digest, "dim": table.dim, "rows": len(table)}


def write_cache_manifest(manifest_path: str | Path, manifest: dict) -> None:
    Path(manifest_path).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
