"""Document data model and the JSONL / TSV corpus formats.

A document is an ordered sequence of :class:`LineRecord` objects. Training
data attaches one :class:`Label` per line. Two on-disk formats are read:

* JSONL, one document per line::

    {"doc_id": "d1", "lines": [{"text": "References", "label": "O"}, ...]}

* TSV, one line per row as ``text<TAB>label`` with a blank row between
  documents. Layout attributes cannot be expressed in TSV.
"""

from __future__ import annotations

import enum
import io
import json
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Sequence, Union

__all__ = [
    "Label",
    "LABELS",
    "LineRecord",
    "Document",
    "LabeledDocument",
    "CorpusError",
    "EmptyCorpusError",
    "read_jsonl",
    "read_tsv",
    "read_corpus",
    "write_jsonl",
    "write_tsv",
    "validate",
]

Source = Union[str, os.PathLike, IO[bytes], IO[str]]


class CorpusError(ValueError):
    """Raised for malformed corpus input."""


class EmptyCorpusError(CorpusError):
    pass


class Label(enum.IntEnum):
    """Line label. The integer value fixes the tie-breaking order."""

    B_REF = 0
    I_REF = 1
    O_REF = 2
    O = 3

    @property
    def tag(self) -> str:
        return _TAGS[self]

    @classmethod
    def parse(cls, tag: str) -> "Label":
        try:
            return _BY_TAG[tag]
        except (KeyError, TypeError):
            raise CorpusError(f"unknown label {tag!r}") from None

    def __str__(self) -> str:
        return self.tag


_TAGS = {Label.B_REF: "B-REF", Label.I_REF: "I-REF", Label.O_REF: "O-REF", Label.O: "O"}
_BY_TAG = {v: k for k, v in _TAGS.items()}
LABELS: tuple[Label, ...] = tuple(Label)


@dataclass(frozen=True)
class LineRecord:
    """One text line plus optional layout attributes.

    ``v_gap`` is the vertical distance to the previous line and ``indent``
    the left offset relative to the previous line, both in points.
    """

    text: str
    page: int = 0
    v_gap: float | None = None
    indent: float | None = None
    font_size: float | None = None
    bold: bool | None = None

    def __post_init__(self):
        if "\n" in self.text or "\r" in self.text:
            raise CorpusError("line text must not contain newline characters")
        if self.page < 0:
            raise CorpusError(f"negative page index {self.page}")
        if self.v_gap is not None and self.v_gap < 0:
            raise CorpusError(f"negative v_gap {self.v_gap}")
        if self.font_size is not None and self.font_size <= 0:
            raise CorpusError(f"non-positive font_size {self.font_size}")

    def to_json(self) -> dict:
        out: dict = {"text": self.text, "page": self.page}
        for name in ("v_gap", "indent", "font_size", "bold"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out


@dataclass(frozen=True)
class Document:
    doc_id: str
    lines: tuple[LineRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))
        if not self.lines:
            raise CorpusError(f"document {self.doc_id!r} has no lines")

    def __len__(self) -> int:
        return len(self.lines)

    @property
    def document(self) -> "Document":
        return self


@dataclass(frozen=True)
class LabeledDocument:
    document: Document
    labels: tuple[Label, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(Label(y) for y in self.labels))
        if len(self.labels) != len(self.document.lines):
            raise CorpusError(
                f"document {self.document.doc_id!r}: {len(self.labels)} labels "
                f"for {len(self.document.lines)} lines"
            )

    @property
    def doc_id(self) -> str:
        return self.document.doc_id

    @property
    def lines(self) -> tuple[LineRecord, ...]:
        return self.document.lines

    def __len__(self) -> int:
        return len(self.document.lines)


# ---------------------------------------------------------------------------
# reading


def _open_text(source: Source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, encoding="utf-8", newline=""), True
    if isinstance(source, io.TextIOBase):
        return source, False
    return io.TextIOWrapper(source, encoding="utf-8", newline=""), False


def _iter_rows(source: Source) -> Iterator[str]:
    handle, owned = _open_text(source)
    try:
        for row in handle:
            yield row.rstrip("\n").rstrip("\r")
    finally:
        if owned:
            handle.close()
        elif isinstance(handle, io.TextIOWrapper) and not isinstance(source, io.TextIOBase):
            handle.detach()


_LINE_KEYS = {"text", "page", "v_gap", "indent", "font_size", "bold", "label"}


def _line_from_json(obj: dict, where: str) -> LineRecord:
    if not isinstance(obj, dict):
        raise CorpusError(f"{where}: line entry is not an object")
    unknown = set(obj) - _LINE_KEYS
    if unknown:
        raise CorpusError(f"{where}: unknown line field(s) {sorted(unknown)}")
    if not isinstance(obj.get("text"), str):
        raise CorpusError(f"{where}: missing or non-string 'text'")

    def num(name):
        value = obj.get(name)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise CorpusError(f"{where}: field {name!r} must be a number")
        return float(value)

    bold = obj.get("bold")
    if bold is not None and not isinstance(bold, bool):
        raise CorpusError(f"{where}: field 'bold' must be a boolean")
    page = obj.get("page", 0)
    if isinstance(page, bool) or not isinstance(page, int):
        raise CorpusError(f"{where}: field 'page' must be an integer")
    try:
        return LineRecord(
            text=obj["text"],
            page=page,
            v_gap=num("v_gap"),
            indent=num("indent"),
            font_size=num("font_size"),
            bold=bold,
        )
    except CorpusError as exc:
        raise CorpusError(f"{where}: {exc}") from None


def _document_from_json(obj, lineno: int) -> Document | LabeledDocument:
    if not isinstance(obj, dict):
        raise CorpusError(f"line {lineno}: expected a JSON object")
    doc_id = obj.get("doc_id")
    if not isinstance(doc_id, str):
        raise CorpusError(f"line {lineno}: missing or non-string 'doc_id'")
    raw_lines = obj.get("lines")
    if not isinstance(raw_lines, list):
        raise CorpusError(f"line {lineno}: document {doc_id!r} has no 'lines' array")
    if not raw_lines:
        raise CorpusError(f"line {lineno}: document {doc_id!r} has an empty lines array")
    where = f"line {lineno}, document {doc_id!r}"
    records = [_line_from_json(entry, where) for entry in raw_lines]
    tags = [entry.get("label") for entry in raw_lines]
    n_labeled = sum(tag is not None for tag in tags)
    document = Document(doc_id, tuple(records))
    if n_labeled == 0:
        return document
    if n_labeled != len(tags):
        raise CorpusError(f"{where}: mixed labeled and unlabeled lines")
    try:
        labels = tuple(Label.parse(tag) for tag in tags)
    except CorpusError as exc:
        raise CorpusError(f"{where}: {exc}") from None
    return LabeledDocument(document, labels)


def read_jsonl(source: Source) -> list[Document | LabeledDocument]:
    """Read a JSONL corpus. Blank rows are skipped."""
    docs: list[Document | LabeledDocument] = []
    for lineno, row in enumerate(_iter_rows(source), start=1):
        if not row.strip():
            continue
        try:
            obj = json.loads(row)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {lineno}: malformed JSON ({exc.msg})") from None
        docs.append(_document_from_json(obj, lineno))
    return docs


def read_tsv(source: Source) -> list[LabeledDocument]:
    """Read ``text<TAB>label`` rows; a blank row ends a document."""
    docs: list[LabeledDocument] = []
    lines: list[LineRecord] = []
    labels: list[Label] = []

    def flush():
        if lines:
            doc = Document(str(len(docs)), tuple(lines))
            docs.append(LabeledDocument(doc, tuple(labels)))
            lines.clear()
            labels.clear()

    for lineno, row in enumerate(_iter_rows(source), start=1):
        if row == "":
            flush()
            continue
        fields = row.split("\t")
        if len(fields) != 2:
            raise CorpusError(f"line {lineno}: expected 2 tab-separated fields, got {len(fields)}")
        try:
            labels.append(Label.parse(fields[1]))
        except CorpusError as exc:
            raise CorpusError(f"line {lineno}: {exc}") from None
        lines.append(LineRecord(fields[0]))
    flush()
    if not docs:
        raise EmptyCorpusError("empty file")
    return docs


def read_corpus(path: str | os.PathLike, fmt: str | None = None) -> list[Document | LabeledDocument]:
    """Read a corpus, choosing the format by extension unless ``fmt`` is given."""
    if fmt is None:
        fmt = "tsv" if str(path).lower().endswith(".tsv") else "jsonl"
    if fmt == "tsv":
        return list(read_tsv(path))
    if fmt == "jsonl":
        return read_jsonl(path)
    raise CorpusError(f"unknown corpus format {fmt!r}")


# ---------------------------------------------------------------------------
# writing


def _sink(target) -> tuple[IO[str], bool]:
    if isinstance(target, (str, os.PathLike)):
        return open(target, "w", encoding="utf-8", newline="\n"), True
    return target, False


def document_to_json(doc: Document | LabeledDocument) -> dict:
    lines = [line.to_json() for line in doc.document.lines]
    if isinstance(doc, LabeledDocument):
        for entry, label in zip(lines, doc.labels):
            entry["label"] = label.tag
    return {"doc_id": doc.document.doc_id, "lines": lines}


def write_jsonl(docs: Iterable[Document | LabeledDocument], target) -> None:
    handle, owned = _sink(target)
    try:
        for doc in docs:
            handle.write(json.dumps(document_to_json(doc), ensure_ascii=False))
            handle.write("\n")
    finally:
        if owned:
            handle.close()


def _tsv_text(text: str) -> str:
    return text.replace("\t", " ")


def write_tsv(docs: Iterable[LabeledDocument], target) -> None:
    """Write labeled documents as TSV. Tabs inside line text become spaces."""
    handle, owned = _sink(target)
    try:
        for i, doc in enumerate(docs):
            if i:
                handle.write("\n")
            for line, label in zip(doc.lines, doc.labels):
                handle.write(f"{_tsv_text(line.text)}\t{label.tag}\n")
    finally:
        if owned:
            handle.close()


# ---------------------------------------------------------------------------
# validation


def validate(doc: Document | LabeledDocument) -> list[str]:
    """Return well-formedness warnings. Never raises."""
    warnings: list[str] = []
    lines = doc.document.lines
    for i in range(1, len(lines)):
        if lines[i].page < lines[i - 1].page:
            warnings.append(f"page indices decrease at line {i}")
    if isinstance(doc, LabeledDocument) and doc.labels:
        labels = doc.labels
        if labels[0] in (Label.I_REF, Label.O_REF):
            warnings.append("document starts with continuation label")
        for i in range(1, len(labels)):
            if labels[i] is Label.I_REF and labels[i - 1] is Label.O:
                warnings.append(f"I-REF directly after O at line {i}")
    return warnings


def gold_documents(docs: Sequence[Document | LabeledDocument]) -> list[LabeledDocument]:
    """Return ``docs`` as labeled documents or raise if any lacks labels."""
    out = []
    for doc in docs:
        if not isinstance(doc, LabeledDocument):
            raise CorpusError(f"document {doc.doc_id!r} carries no labels")
        out.append(doc)
    return out
