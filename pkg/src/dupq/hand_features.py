"""The 25 dense, vocabulary-independent pair features used by tree models.

Groups, in fixed column order:

  L(4)    token counts l1, l2, their difference, and ratio l1/l2
  LC(2)   common lowercased words: count, count / max(l1, l2)
  LCXS(2) the same excluding stop-words
  LW(1)   same-last-word flag
  CAP(2)  common capitalized words: count, normalized
  PRE(8)  common word prefixes of length 3..6: count, normalized each
  M(6)    "not" in q1 / q2 / both, same-digit flag, common stemmed words:
          count, normalized

Questions are stripped of punctuation before tokenization; all
division-by-zero cases (empty questions) yield 0 so every feature stays
finite.
"""

from __future__ import annotations

import csv
import hashlib
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import Dataset, QuestionPair
from .stemmer import stem
from .text import PreprocessPipeline, tokenize

FEATURE_NAMES = (
    "len_q1",
    "len_q2",
    "len_diff",
    "len_ratio",
    "common_words",
    "common_words_norm",
    "common_words_nostop",
    "common_words_nostop_norm",
    "same_last_word",
    "common_capitalized",
    "common_capitalized_norm",
    "common_prefix_3",
    "common_prefix_3_norm",
    "common_prefix_4",
    "common_prefix_4_norm",
    "common_prefix_5",
    "common_prefix_5_norm",
    "common_prefix_6",
    "common_prefix_6_norm",
    "has_not_q1",
    "has_not_q2",
    "has_not_both",
    "same_digit",
    "common_stemmed",
    "common_stemmed_norm",
)

GROUP_ORDER = ("L", "LC", "LCXS", "LW", "CAP", "PRE", "M")
GROUP_COLUMNS = {
    "L": (0, 1, 2, 3),
    "LC": (4, 5),
    "LCXS": (6, 7),
    "LW": (8,),
    "CAP": (9, 10),
    "PRE": (11, 12, 13, 14, 15, 16, 17, 18),
    "M": (19, 20, 21, 22, 23, 24),
}

_PIPELINE = PreprocessPipeline(("remove_punc",))


def load_stop_words() -> frozenset[str]:
    """The bundled stop-word list (lowercase tokens, one per line)."""
    text = resources.files("dupq").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


def stop_words_hash() -> str:
    raw = resources.files("dupq").joinpath("data/stopwords.txt").read_bytes()
    return hashlib.sha256(raw).hexdigest()


def pair_tokens(p: QuestionPair) -> tuple[list[str], list[str]]:
    """Case-preserving tokens with punctuation removed."""
    return tokenize(_PIPELINE(p.question1)), tokenize(_PIPELINE(p.question2))


def _norm(count: float, l1: int, l2: int) -> float:
    longest = max(l1, l2)
    return count / longest if longest else 0.0


def _lengths(t1, t2) -> tuple[float, float, float, float]:
    l1, l2 = len(t1), len(t2)
    return (float(l1), float(l2), float(l1 - l2), l1 / l2 if l2 else 0.0)


def _common_words(t1, t2, stop=None) -> tuple[float, float]:
    s1 = {t.lower() for t in t1}
    s2 = {t.lower() for t in t2}
    if stop is not None:
        s1 -= stop
        s2 -= stop
    count = len(s1 & s2)
    return float(count), _norm(count, len(t1), len(t2))


def _last_word(t1, t2) -> float:
    return float(bool(t1) and bool(t2) and t1[-1].lower() == t2[-1].lower())


def _capitalized(t1, t2) -> tuple[float, float]:
    c1 = {t for t in t1 if t[0].isupper()}
    c2 = {t for t in t2 if t[0].isupper()}
    count = len(c1 & c2)
    return float(count), _norm(count, len(t1), len(t2))


def _prefixes(t1, t2) -> tuple[float, ...]:
    out: list[float] = []
    for k in (3, 4, 5, 6):
        p1 = {t[:k].lower() for t in t1 if len(t) >= k}
        p2 = {t[:k].lower() for t in t2 if len(t) >= k}
        count = len(p1 & p2)
        out.append(float(count))
        out.append(_norm(count, len(t1), len(t2)))
    return tuple(out)


def _misc(t1, t2) -> tuple[float, ...]:
    low1 = [t.lower() for t in t1]
    low2 = [t.lower() for t in t2]
    not1 = float("not" in low1)
    not2 = float("not" in low2)
    digits1 = {c for t in t1 for c in t if c.isdigit()}
    digits2 = {c for t in t2 for c in t if c.isdigit()}
    same_digit = float(bool(digits1 & digits2))
    stems1 = {stem(t) for t in low1}
    stems2 = {stem(t) for t in low2}
    common = len(stems1 & stems2)
    return (not1, not2, not1 * not2, same_digit, float(common), _norm(common, len(t1), len(t2)))


def length_features(p: QuestionPair) -> tuple[float, float, float, float]:
    return _lengths(*pair_tokens(p))


def common_word_features(p: QuestionPair, stop=None) -> tuple[float, float]:
    t1, t2 = pair_tokens(p)
    return _common_words(t1, t2, stop)


def last_word_feature(p: QuestionPair) -> float:
    return _last_word(*pair_tokens(p))


def capitalized_features(p: QuestionPair) -> tuple[float, float]:
    return _capitalized(*pair_tokens(p))


def prefix_features(p: QuestionPair) -> tuple[float, ...]:
    return _prefixes(*pair_tokens(p))


def misc_features(p: QuestionPair) -> tuple[float, ...]:
    return _misc(*pair_tokens(p))


def extract_all(p: QuestionPair, stop=None) -> np.ndarray:
    """All 25 features in fixed group order L, LC, LCXS, LW, CAP, PRE, M."""
    if stop is None:
        stop = load_stop_words()
    t1, t2 = pair_tokens(p)
    values = (
        _lengths(t1, t2)
        + _common_words(t1, t2)
        + _common_words(t1, t2, stop)
        + (_last_word(t1, t2),)
        + _capitalized(t1, t2)
        + _prefixes(t1, t2)
        + _misc(t1, t2)
    )
    return np.array(values, dtype=np.float64)


def extract_matrix(d: Dataset, stop=None) -> np.ndarray:
    if stop is None:
        stop = load_stop_words()
    out = np.empty((len(d), len(FEATURE_NAMES)), dtype=np.float64)
    for i, p in enumerate(d):
        out[i] = extract_all(p, stop)
    return out


def group_column_indices(groups) -> list[int]:
    """Column indices for a sequence of group names, in feature order."""
    cols: list[int] = []
    for g in groups:
        if g not in GROUP_COLUMNS:
            raise ValueError(f"unknown feature group {g!r}")
        cols.extend(GROUP_COLUMNS[g])
    return cols


def write_features_csv(path: str | Path, matrix: np.ndarray) -> None:
    """Headered CSV with the 25 canonical column names."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(FEATURE_NAMES)
        for row in matrix:
            writer.writerow([f"{v:.10g}" for v in row])
