"""Question-pair corpus handling: CSV ingestion, statistics, and splitting.

Two split flavours are provided.  The blind split stratifies by label and
lets the same question text land in several parts; the disjoint split
assigns whole connected components of the question-sharing graph to a
single part, so no question string ever crosses a part boundary.
"""

from __future__ import annotations

import csv
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

CSV_COLUMNS = ("id", "qid1", "qid2", "question1", "question2", "is_duplicate")


@dataclass(frozen=True, slots=True)
class QuestionPair:
    pair_id: int
    qid1: int
    qid2: int
    question1: str
    question2: str
    label: int


@dataclass
class Dataset:
    """An ordered sequence of question pairs (order = source-file order)."""

    pairs: list[QuestionPair] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]

    def labels(self) -> np.ndarray:
        return np.fromiter((p.label for p in self.pairs), dtype=np.int64, count=len(self.pairs))


@dataclass
class DatasetStats:
    n_pairs: int
    n_negative: int
    n_positive: int
    n_unique_questions: int
    n_multi_occurrence_questions: int
    max_question_occurrence: int
    occurrence_histogram: dict[int, int]
    n_nonascii_questions: int
    n_pairs_with_nonascii: int
    n_pairs_with_empty_question: int

    @property
    def positive_fraction(self) -> float:
        return self.n_positive / self.n_pairs if self.n_pairs else 0.0


@dataclass
class SplitResult:
    train: Dataset
    validation: Dataset
    test: Dataset
    split_kind: str  # "blind" or "disjoint"
    seed: int
    ratios: tuple[float, float, float]

    def parts(self) -> tuple[Dataset, Dataset, Dataset]:
        return self.train, self.validation, self.test


def load_pairs(path: str | Path, strict: bool = False) -> Dataset:
    """Load a question-pair CSV (RFC-4180 quoting, UTF-8, header row).

    Malformed rows are skipped with a warning, or abort with the row number
    when ``strict`` is set.  A missing column always aborts.  Empty question
    cells are kept as empty strings; the raw data contains such rows.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")

    pairs: list[QuestionPair] = []
    seen_ids: set[int] = set()
    # Large CSV fields (long questions with embedded newlines) are legal.
    csv.field_size_limit(max(csv.field_size_limit(), 10_000_000))
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row")
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise DataError(f"{path}: missing column(s) {', '.join(missing)}")
        col = {name: header.index(name) for name in CSV_COLUMNS}
        width = max(col.values()) + 1

        for rowno, row in enumerate(reader, start=2):
            try:
                if len(row) < width:
                    raise ValueError(f"expected {width} fields, got {len(row)}")
                pair_id = int(row[col["id"]])
                label = int(row[col["is_duplicate"]])
                if label not in (0, 1):
                    raise ValueError(f"label {label} not in {{0, 1}}")
                if pair_id in seen_ids:
                    raise ValueError(f"duplicate pair id {pair_id}")
                pair = QuestionPair(
                    pair_id=pair_id,
                    qid1=int(row[col["qid1"]]),
                    qid2=int(row[col["qid2"]]),
                    question1=row[col["question1"]],
                    question2=row[col["question2"]],
                    label=label,
                )
            except ValueError as exc:
                if strict:
                    raise DataError(f"{path}: malformed row {rowno}: {exc}") from exc
                warnings.warn(f"{path}: skipping malformed row {rowno}: {exc}")
                continue
            seen_ids.add(pair_id)
            pairs.append(pair)
    return Dataset(pairs)


def _is_ascii(text: str) -> bool:
    return all(ord(c) <= 127 for c in text)


def compute_stats(d: Dataset) -> DatasetStats:
    """Statistics over the raw question strings.

    A question's occurrence count is the number of pair slots it fills, so
    a pair whose two sides are the same string contributes 2.  Non-ASCII
    means any code point above 127.
    """
    occurrences: Counter[str] = Counter()
    n_pos = 0
    n_pairs_nonascii = 0
    n_pairs_empty = 0
    for p in d:
        occurrences[p.question1] += 1
        occurrences[p.question2] += 1
        n_pos += p.label
        if not _is_ascii(p.question1) or not _is_ascii(p.question2):
            n_pairs_nonascii += 1
        if p.question1 == "" or p.question2 == "":
            n_pairs_empty += 1

    histogram: dict[int, int] = {}
    n_multi = 0
    max_occ = 0
    n_nonascii_q = 0
    for q, n in occurrences.items():
        histogram[n] = histogram.get(n, 0) + 1
        if n > 1:
            n_multi += 1
        if n > max_occ:
            max_occ = n
        if not _is_ascii(q):
            n_nonascii_q += 1

    return DatasetStats(
        n_pairs=len(d),
        n_negative=len(d) - n_pos,
        n_positive=n_pos,
        n_unique_questions=len(occurrences),
        n_multi_occurrence_questions=n_multi,
        max_question_occurrence=max_occ,
        occurrence_histogram=dict(sorted(histogram.items())),
        n_nonascii_questions=n_nonascii_q,
        n_pairs_with_nonascii=n_pairs_nonascii,
        n_pairs_with_empty_question=n_pairs_empty,
    )


def _check_ratios(ratios) -> tuple[float, float, float]:
    if len(ratios) != 3:
        raise ValueError("ratios must be a (train, validation, test) triple")
    r = tuple(float(x) for x in ratios)
    if any(x < 0 for x in r):
        raise ValueError(f"ratios must be non-negative, got {r}")
    if abs(sum(r) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(r)!r}")
    return r


def _part_sizes(n: int, ratios: tuple[float, float, float]) -> tuple[int, int, int]:
    # Floor for validation and test, remainder to train: the partition is
    # then exact by construction.
    n_valid = int(n * ratios[1])
    n_test = int(n * ratios[2])
    return n - n_valid - n_test, n_valid, n_test


def _largest_remainder(total: int, weights: tuple[int, ...]) -> list[int]:
    """Apportion ``total`` items over bins proportionally to ``weights``."""
    wsum = sum(weights)
    if wsum == 0:
        return [0] * len(weights)
    quotas = [total * w / wsum for w in weights]
    out = [int(q) for q in quotas]
    leftovers = total - sum(out)
    order = sorted(range(len(weights)), key=lambda i: quotas[i] - out[i], reverse=True)
    for i in order[:leftovers]:
        out[i] += 1
    return out


def blind_split(d: Dataset, ratios=(0.7, 0.2, 0.1), seed: int = 0) -> SplitResult:
    """Label-stratified split; question texts may repeat across parts.

    Part sizes are fixed first (floor for validation/test, remainder to
    train), then each class is shuffled with a seeded PCG64 generator and
    apportioned over the parts by largest remainder, so every part's
    positive fraction tracks the whole to within one pair.
    """
    ratios = _check_ratios(ratios)
    sizes = _part_sizes(len(d), ratios)
    n_nonzero_parts = sum(1 for s in sizes if s > 0)

    by_class: dict[int, list[int]] = {0: [], 1: []}
    for i, p in enumerate(d):
        by_class[p.label].append(i)
    for label, name in ((1, "positive"), (0, "negative")):
        if 0 < len(by_class[label]) < n_nonzero_parts:
            raise ValueError(
                f"too few {name} pairs ({len(by_class[label])}) to fill "
                f"{n_nonzero_parts} non-empty parts"
            )

    rng = np.random.default_rng(seed)
    part_members: list[list[int]] = [[], [], []]
    for label in (0, 1):
        idx = np.array(by_class[label], dtype=np.int64)
        rng.shuffle(idx)
        counts = _largest_remainder(len(idx), sizes)
        start = 0
        for part, c in enumerate(counts):
            part_members[part].extend(idx[start : start + c].tolist())
            start += c

    parts = []
    for members in part_members:
        members.sort()  # keep source order inside each part
        parts.append(Dataset([d[i] for i in members]))
    return SplitResult(parts[0], parts[1], parts[2], "blind", seed, ratios)


class _UnionFind:
    def __init__(self):
        self.parent: dict[str, str] = {}

    def find(self, x: str) -> str:
        parent = self.parent
        if x not in parent:
            parent[x] = x
            return x
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:  # path compression
            parent[x], x = root, parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def disjoint_split(d: Dataset, ratios=(0.7, 0.2, 0.1), seed: int = 0) -> SplitResult:
    """Question-disjoint split: no question string appears in two parts.

    Pairs sharing a question string form connected components; whole
    components are assigned to parts by a seeded greedy packing (largest
    component first, into the part with the largest relative deficit,
    label balance breaking ties).  Disjointness is exact; sizes are
    best-effort against the ratios.
    """
    ratios = _check_ratios(ratios)
    uf = _UnionFind()
    for p in d:
        uf.union(p.question1, p.question2)

    comp_pairs: dict[str, list[int]] = {}
    comp_pos: dict[str, int] = {}
    for i, p in enumerate(d):
        root = uf.find(p.question1)
        comp_pairs.setdefault(root, []).append(i)
        comp_pos[root] = comp_pos.get(root, 0) + p.label

    components = list(comp_pairs.keys())
    rng = np.random.default_rng(seed)
    rng.shuffle(components)
    # Largest first; the shuffle above randomises order among equal sizes.
    components.sort(key=lambda r: len(comp_pairs[r]), reverse=True)

    n = len(d)
    n_pos_total = sum(p.label for p in d)
    pos_frac = n_pos_total / n if n else 0.0
    targets = [n * r for r in ratios]
    if components and max(len(comp_pairs[r]) for r in components) > targets[0] + 1e-9:
        warnings.warn(
            "a single connected component exceeds the train ratio; "
            "assignment is best-effort (disjointness preserved, ratios not)"
        )

    assigned = [0, 0, 0]
    assigned_pos = [0, 0, 0]
    part_members: list[list[int]] = [[], [], []]
    open_parts = [i for i in range(3) if targets[i] > 0]
    for root in components:
        size = len(comp_pairs[root])
        pos = comp_pos[root]
        best, best_key = None, None
        for i in open_parts:
            deficit = (targets[i] - assigned[i]) / targets[i]
            new_total = assigned[i] + size
            new_frac = (assigned_pos[i] + pos) / new_total
            key = (-deficit, abs(new_frac - pos_frac), i)
            if best_key is None or key < best_key:
                best, best_key = i, key
        part_members[best].extend(comp_pairs[root])
        assigned[best] += size
        assigned_pos[best] += pos

    parts = []
    for members in part_members:
        members.sort()
        parts.append(Dataset([d[i] for i in members]))
    return SplitResult(parts[0], parts[1], parts[2], "disjoint", seed, ratios)


def question_sets(result: SplitResult) -> list[set[str]]:
    """The set of question strings used by each part, for disjointness checks."""
    out = []
    for part in result.parts():
        s: set[str] = set()
        for p in part:
            s.add(p.question1)
            s.add(p.question2)
        out.append(s)
    return out


def check_disjoint(result: SplitResult) -> bool:
    a, b, c = question_sets(result)
    return not (a & b) and not (a & c) and not (b & c)


def write_pairs_csv(path: str | Path, d: Dataset) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for p in d:
            writer.writerow([p.pair_id, p.qid1, p.qid2, p.question1, p.question2, p.label])


def save_split(result: SplitResult, outdir: str | Path) -> dict[str, Path]:
    """Persist a split as train/validation/test CSVs plus a manifest."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, part in zip(("train", "validation", "test"), result.parts()):
        path = outdir / f"{name}.csv"
        write_pairs_csv(path, part)
        files[name] = path

    total = sum(len(p) for p in result.parts()) or 1
    lines = [
        f"kind = {result.split_kind}",
        f"seed = {result.seed}",
        "ratios = " + ",".join(f"{r:g}" for r in result.ratios),
    ]
    for name, part in zip(("train", "validation", "test"), result.parts()):
        lines.append(f"n_{name} = {len(part)}")
    for name, part in zip(("train", "validation", "test"), result.parts()):
        lines.append(f"achieved_{name} = {len(part) / total:.6f}")
    if result.split_kind == "disjoint":
        lines.append(f"disjoint_check = {'pass' if check_disjoint(result) else 'FAIL'}")
    manifest = outdir / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    files["manifest"] = manifest
    return files


def format_stats(stats: DatasetStats) -> str:
    pct_neg = 100.0 * stats.n_negative / stats.n_pairs if stats.n_pairs else 0.0
    pct_pos = 100.0 * stats.n_positive / stats.n_pairs if stats.n_pairs else 0.0
    return "\n".join(
        [
            f"pairs:                      {stats.n_pairs}",
            f"  negative (label 0):       {stats.n_negative} ({pct_neg:.2f}%)",
            f"  positive (label 1):       {stats.n_positive} ({pct_pos:.2f}%)",
            f"unique questions:           {stats.n_unique_questions}",
            f"  occurring more than once: {stats.n_multi_occurrence_questions}",
            f"  max occurrences:          {stats.max_question_occurrence}",
            f"questions with non-ASCII:   {stats.n_nonascii_questions}",
            f"pairs with non-ASCII:       {stats.n_pairs_with_nonascii}",
            f"pairs with empty question:  {stats.n_pairs_with_empty_question}",
        ]
    )


def write_histogram_csv(path: str | Path, stats: DatasetStats) -> None:
    """Occurrence histogram as CSV (occurrences, n_questions), for plotting."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["occurrences", "n_questions"])
        for occ, cnt in stats.occurrence_histogram.items():
            writer.writerow([occ, cnt])
