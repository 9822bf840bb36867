"""Deterministic tokenization, text-cleaning steps, and vocabulary building.

The tokenizer is a fixed Treebank-style rule set (whitespace split, peel
leading/trailing punctuation, split contractions at the apostrophe, and
`?`, `,`, `.` always become standalone tokens).  Cleaning steps operate on
raw text before tokenization and compose left to right.
"""

from __future__ import annotations

import string
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

_ASCII_PUNCTUATION = frozenset(string.punctuation)


@lru_cache(maxsize=None)
def is_punctuation(c: str) -> bool:
    """Unicode general categories P* plus the ASCII symbol set."""
    return c in _ASCII_PUNCTUATION or unicodedata.category(c).startswith("P")

_APOSTROPHES = ("'", "’")
_ALWAYS_SPLIT = ("?", ",", ".")

# Common Unicode punctuation folded to ASCII; everything else passes through.
NON_ASCII_FIXES = {
    "‘": "'",
    "’": "'",
    "‚": ",",
    "‛": "'",
    "“": '"',
    "”": '"',
    "„": '"',
    "–": "-",
    "—": "-",
    "−": "-",
    "…": "...",
    "«": '"',
    "»": '"',
    "′": "'",
    "″": '"',
    " ": " ",
}


def _split_core(core: str) -> list[str]:
    # Contractions split at the apostrophe: "what's" -> "what", "'s".
    pieces: list[str] = []
    start = 0
    for i, c in enumerate(core):
        if c in _APOSTROPHES and i > start:
            pieces.append(core[start:i])
            start = i
    pieces.append(core[start:])

    out: list[str] = []
    for piece in pieces:
        cur = ""
        for c in piece:
            if c in _ALWAYS_SPLIT:
                if cur:
                    out.append(cur)
                    cur = ""
                out.append(c)
            else:
                cur += c
        if cur:
            out.append(cur)
    return out


def tokenize(text: str) -> list[str]:
    """Split text into tokens; case is preserved, empty text gives []."""
    tokens: list[str] = []
    for chunk in text.split():
        lead: list[str] = []
        i, j = 0, len(chunk)
        while i < j and is_punctuation(chunk[i]):
            lead.append(chunk[i])
            i += 1
        trail: list[str] = []
        while j > i and is_punctuation(chunk[j - 1]):
            trail.append(chunk[j - 1])
            j -= 1
        tokens.extend(lead)
        core = chunk[i:j]
        if core:
            tokens.extend(_split_core(core))
        tokens.extend(reversed(trail))
    return tokens


def replace_punc(text: str) -> str:
    return "".join(" " if is_punctuation(c) else c for c in text)


def remove_punc(text: str) -> str:
    return "".join(c for c in text if not is_punctuation(c))


def remove_digits(text: str) -> str:
    return "".join(c for c in text if unicodedata.category(c) != "Nd")


def fix_non_ascii(text: str) -> str:
    return "".join(NON_ASCII_FIXES.get(c, c) for c in text)


def remove_non_ascii(text: str) -> str:
    return "".join(c for c in text if ord(c) <= 127)


def lowercase(text: str) -> str:
    return text.lower()


STEPS = {
    "replace_punc": replace_punc,
    "remove_punc": remove_punc,
    "remove_digits": remove_digits,
    "fix_non_ascii": fix_non_ascii,
    "remove_non_ascii": remove_non_ascii,
    "lowercase": lowercase,
}


@dataclass(frozen=True)
class PreprocessPipeline:
    """An ordered sequence of cleaning steps applied before tokenization."""

    steps: tuple[str, ...] = ()

    def __post_init__(self):
        unknown = [s for s in self.steps if s not in STEPS]
        if unknown:
            raise ValueError(f"unknown preprocessing step(s): {', '.join(unknown)}")

    def __call__(self, text: str) -> str:
        for step in self.steps:
            text = STEPS[step](text)
        return text

    def name(self) -> str:
        return "+".join(self.steps) if self.steps else "none"


def apply_pipeline(pipeline: PreprocessPipeline, text: str) -> str:
    return pipeline(text)


@dataclass
class Vocabulary:
    """Token inventory with dense ids, ordered by descending count then token."""

    token_to_id: dict[str, int] = field(default_factory=dict)
    id_to_token: list[str] = field(default_factory=list)
    counts: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def count(self, token: str) -> int:
        i = self.token_to_id.get(token)
        return 0 if i is None else self.counts[i]

    def write_tsv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for token, count in zip(self.id_to_token, self.counts):
                fh.write(f"{token}\t{count}\n")


def build_vocabulary(corpus) -> Vocabulary:
    """Count every distinct token over an iterable of token sequences."""
    counter: Counter[str] = Counter()
    for tokens in corpus:
        counter.update(tokens)
    ordered = sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))
    vocab = Vocabulary()
    for i, (token, count) in enumerate(ordered):
        vocab.token_to_id[token] = i
        vocab.id_to_token.append(token)
        vocab.counts.append(count)
    return vocab
