"""Accuracy / precision / recall / F-score on the percent scale, and
multi-model comparison reports."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass
class Metrics:
    tp: int
    fp: int
    fn: int
    tn: int
    accuracy: float
    precision: float
    recall: float
    f_score: float
    degenerate: bool = False  # precision or recall had a zero denominator

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def score(predictions, gold) -> Metrics:
    """Binary-classification metrics; duplicate (1) is the positive class.

    All rates are on the 0..100 scale.  A zero denominator makes the
    affected quantity (and the F-score) 0, with the degenerate flag set.
    """
    predictions = np.asarray(predictions)
    gold = np.asarray(gold)
    if predictions.shape != gold.shape:
        raise ValueError(
            f"length mismatch: {predictions.shape} predictions vs {gold.shape} gold labels"
        )
    p = predictions > 0
    g = gold > 0
    tp = int(np.sum(p & g))
    fp = int(np.sum(p & ~g))
    fn = int(np.sum(~p & g))
    tn = int(np.sum(~p & ~g))
    total = tp + fp + fn + tn

    accuracy = 100.0 * (tp + tn) / total if total else 0.0
    degenerate = False
    if tp + fp > 0:
        precision = 100.0 * tp / (tp + fp)
    else:
        precision, degenerate = 0.0, True
    if tp + fn > 0:
        recall = 100.0 * tp / (tp + fn)
    else:
        recall, degenerate = 0.0, True
    if precision + recall > 0:
        f_score = 2.0 * precision * recall / (precision + recall)
    else:
        f_score, degenerate = 0.0, True
    return Metrics(tp, fp, fn, tn, accuracy, precision, recall, f_score, degenerate)


@dataclass
class ReportRow:
    name: str
    split: str
    metrics: Metrics | None
    error: str = ""


REPORT_COLUMNS = ("model", "split", "accuracy", "f_score", "tp", "fp", "fn", "tn")


def compare(predictors, gold, split_name: str = "test") -> list[ReportRow]:
    """One row per (name, predict_fn) pair; predictor failures annotate the
    row so the rest of the table still renders."""
    gold = np.asarray(gold)
    rows: list[ReportRow] = []
    for name, predict_fn in predictors:
        try:
            rows.append(ReportRow(name, split_name, score(predict_fn(), gold)))
        except Exception as exc:
            rows.append(ReportRow(name, split_name, None, f"{type(exc).__name__}: {exc}"))
    return rows


def report_csv(rows: list[ReportRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(REPORT_COLUMNS)
    for r in rows:
        if r.metrics is None:
            writer.writerow([r.name, r.split, "", "", "", "", "", ""])
        else:
            m = r.metrics
            writer.writerow(
                [r.name, r.split, f"{m.accuracy:.2f}", f"{m.f_score:.2f}",
                 m.tp, m.fp, m.fn, m.tn]
            )
    return buf.getvalue()


def format_report(rows: list[ReportRow]) -> str:
    lines = [f"{'model':<24} {'split':<12} {'acc%':>7} {'F':>7}"]
    for r in rows:
        if r.metrics is None:
            lines.append(f"{r.name:<24} {r.split:<12} failed: {r.error}")
        else:
            lines.append(
                f"{r.name:<24} {r.split:<12} {r.metrics.accuracy:>7.2f} "
                f"{r.metrics.f_score:>7.2f}"
            )
    return "\n".join(lines)


def write_report(path: str | Path, rows: list[ReportRow]) -> None:
    Path(path).write_text(report_csv(rows), encoding="utf-8")
