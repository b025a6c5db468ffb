"""Line-level and reference-level quality metrics, micro-averaged."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import LABELS, Label
from .extraction import ReferenceString, decode, group
from .parallel import ordered_map

__all__ = [
    "Counts",
    "Metrics",
    "line_metrics",
    "reference_metrics",
    "document_metrics",
    "evaluate",
    "confusion_matrix",
    "pool",
    "format_table",
]


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


@dataclass
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


@dataclass
class Metrics:
    """Pooled counts; every ratio is derived, so sums are micro-averages."""

    labels: dict[Label, Counts] = field(default_factory=lambda: {lab: Counts() for lab in LABELS})
    n_lines: int = 0
    n_correct: int = 0
    references: Counts = field(default_factory=Counts)
    confusion: np.ndarray = field(default_factory=lambda: np.zeros((4, 4), dtype=np.int64))

    @property
    def accuracy(self) -> float:
        return _ratio(self.n_correct, self.n_lines)

    def __add__(self, other: "Metrics") -> "Metrics":
        return Metrics(
            labels={lab: self.labels[lab] + other.labels[lab] for lab in LABELS},
            n_lines=self.n_lines + other.n_lines,
            n_correct=self.n_correct + other.n_correct,
            references=self.references + other.references,
            confusion=self.confusion + other.confusion,
        )

    def to_dict(self) -> dict:
        """Flat JSON-ready mapping."""
        out: dict = {"averaging": "micro", "n_lines": self.n_lines, "line_accuracy": self.accuracy}
        for lab in LABELS:
            c = self.labels[lab]
            out.update({
                f"{lab.tag}_precision": c.precision,
                f"{lab.tag}_recall": c.recall,
                f"{lab.tag}_f1": c.f1,
                f"{lab.tag}_tp": c.tp,
                f"{lab.tag}_fp": c.fp,
                f"{lab.tag}_fn": c.fn,
            })
        r = self.references
        out.update({
            "ref_precision": r.precision,
            "ref_recall": r.recall,
            "ref_f1": r.f1,
            "ref_tp": r.tp,
            "ref_fp": r.fp,
            "ref_fn": r.fn,
        })
        return out


def pool(parts: Iterable[Metrics]) -> Metrics:
    total = Metrics()
    for part in parts:
        total = total + part
    return total


def confusion_matrix(gold: Sequence[Label], pred: Sequence[Label]) -> np.ndarray:
    """``[gold, predicted]`` counts."""
    m = np.zeros((4, 4), dtype=np.int64)
    np.add.at(m, (np.asarray(gold, dtype=np.int64), np.asarray(pred, dtype=np.int64)), 1)
    return m


def line_metrics(gold: Sequence[Label], pred: Sequence[Label]) -> Metrics:
    if len(gold) != len(pred):
        raise ValueError(f"length mismatch: {len(gold)} gold vs {len(pred)} predicted labels")
    cm = confusion_matrix(gold, pred)
    labels = {}
    for lab in LABELS:
        tp = int(cm[lab, lab])
        labels[lab] = Counts(tp=tp, fp=int(cm[:, lab].sum()) - tp, fn=int(cm[lab, :].sum()) - tp)
    return Metrics(labels=labels, n_lines=len(gold), n_correct=int(np.trace(cm)), confusion=cm)


def reference_metrics(gold: Sequence[ReferenceString], pred: Sequence[ReferenceString]) -> Metrics:
    """A prediction is correct iff its line-index set equals a gold reference's."""
    gold_sets = {frozenset(r.line_indices) for r in gold}
    pred_sets = {frozenset(r.line_indices) for r in pred}
    tp = len(gold_sets & pred_sets)
    return Metrics(references=Counts(tp=tp, fp=len(pred) - tp, fn=len(gold) - tp))


def format_table(metrics: Metrics) -> str:
    """Aligned plain-text rendering."""
    rows = [("label", "precision", "recall", "f1", "tp", "fp", "fn")]
    for lab in LABELS:
        c = metrics.labels[lab]
        rows.append((lab.tag, f"{c.precision:.4f}", f"{c.recall:.4f}", f"{c.f1:.4f}", str(c.tp), str(c.fp), str(c.fn)))
    r = metrics.references
    rows.append(("reference", f"{r.precision:.4f}", f"{r.recall:.4f}", f"{r.f1:.4f}", str(r.tp), str(r.fp), str(r.fn)))
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.rjust(w) if j else cell.ljust(w) for j, (cell, w) in enumerate(zip(row, widths)))
             for row in rows]
    lines.append(f"line accuracy {metrics.accuracy:.4f} over {metrics.n_lines} lines (micro-averaged)")
    return "\n".join(lines)


def document_metrics(gold: Sequence[Label], pred: Sequence[Label], lines) -> Metrics:
    return line_metrics(gold, pred) + reference_metrics(group(lines, gold), group(lines, pred))


def evaluate(model, documents, constraints: bool | None = None, jobs: int = 1) -> Metrics:
    """Decode each labeled document with ``model`` and pool the metrics."""
    preds = ordered_map(lambda doc: decode(doc, model, constraints), documents, jobs)
    return pool(document_metrics(doc.labels, pred, doc.lines) for doc, pred in zip(documents, preds))
