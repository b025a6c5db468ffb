"""Grouping labeled lines into reference strings."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .corpus import Document, Label, LabeledDocument, LineRecord
from .crf import CrfModel, viterbi
from .features import vectorize

__all__ = ["ReferenceString", "join_lines", "group", "decode", "extract"]


@dataclass(frozen=True)
class ReferenceString:
    text: str
    line_indices: tuple[int, ...]
    promoted: bool = False

    def to_json(self) -> dict:
        return {"text": self.text, "line_indices": list(self.line_indices), "promoted": self.promoted}


def _join(left: str, right: str) -> str:
    if not left:
        return right
    if not right:
        return left
    # a continuation opening with a digit or capital keeps its hyphen
    if left.endswith("-") and right[0].isalpha() and right[0].islower():
        return left[:-1] + right
    return f"{left} {right}"


def join_lines(texts: Sequence[str]) -> str:
    """Join line texts, undoing end-of-line hyphenation before lowercase continuations."""
    out = ""
    for text in texts:
        out = _join(out, text.strip())
    return out


def group(lines: Sequence[LineRecord | str], labels: Sequence[Label]) -> list[ReferenceString]:
    """Collect B-REF/I-REF lines into reference strings.

    O-REF lines are skipped without closing the open reference; O closes it.
    An I-REF run with nothing open starts a reference flagged ``promoted``.
    """
    if len(lines) != len(labels):
        raise ValueError(f"{len(labels)} labels for {len(lines)} lines")
    refs: list[ReferenceString] = []
    current: list[int] | None = None
    promoted = False

    def close():
        if current:
            texts = [_text(lines[i]) for i in current]
            refs.append(ReferenceString(join_lines(texts), tuple(current), promoted))

    for i, label in enumerate(labels):
        label = Label(label)
        if label is Label.B_REF:
            close()
            current, promoted = [i], False
        elif label is Label.I_REF:
            if current is None:
                current, promoted = [i], True
            else:
                current.append(i)
        elif label is Label.O:
            close()
            current = None
    close()
    return refs


def _text(line) -> str:
    return line if isinstance(line, str) else line.text


def decode(document: Document | LabeledDocument, model: CrfModel, constraints: bool | None = None) -> list[Label]:
    vectors = vectorize(document, model.config, model.space)
    return viterbi(model, vectors, constraints)[0]


def extract(document: Document | LabeledDocument, model: CrfModel,
            constraints: bool | None = None) -> list[ReferenceString]:
    """Decode ``document`` and group the predicted labels."""
    labels = decode(document, model, constraints)
    return group(document.document.lines, labels)
