"""Line feature templates, the feature space, and vectorization.

Every feature is an indicator. Names follow the grammar::

    template(@offset)?(=bucket)?

e.g. ``has_year``, ``punct=ge6``, ``indented@-1`` or ``len@+2=20to50``.
Real-valued signals are bucketed; the bucket boundaries live in
:class:`FeatureConfig`.
"""

from __future__ import annotations

import re
import statistics
import string
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Document, LabeledDocument

__all__ = [
    "TEMPLATES",
    "DEFAULT_HEADINGS",
    "FeatureConfig",
    "FeatureSpace",
    "FeatureVector",
    "read_gazetteer",
    "extract_line_features",
    "document_features",
    "build_feature_space",
    "vectorize",
    "parse_feature_name",
    "format_feature_name",
]

TEMPLATES = (
    "bias",
    "starts_digit",
    "starts_bracket_marker",
    "ends_period",
    "ends_hyphen",
    "has_year",
    "has_page_range",
    "punct",
    "capratio",
    "len",
    "is_empty",
    "is_heading",
    "after_heading",
    "relpos",
    "name_hit",
    "vgap",
    "indented",
    "outdented",
    "fontsize_delta",
    "bold",
)

DEFAULT_HEADINGS = (
    "references",
    "bibliography",
    "references and notes",
    "literature",
    "literatur",
    "literaturverzeichnis",
)

INDENT_THRESHOLD = 2.0
FONT_DEAD_ZONE = 0.5
MAX_WINDOW = 3

_BRACKET_MARKER = re.compile(r"^\s*[\[\(]?\d{1,3}[\]\)\.]")
_YEAR = re.compile(r"\(?(?:1[5-9]\d\d|20\d\d)\)?")
_PAGE_RANGE = re.compile(r"\d+\s*[-–—]\s*\d+")
_HEADING_NUMBER = re.compile(r"^(?:\d+(?:\.\d+)*\.?|[IVXLC]+\.)\s+")
_PUNCT = frozenset(string.punctuation + "–—“”‘’")
_NAME = re.compile(r"^([^@=]+)(?:@([+-]\d+))?(?:=(.+))?$")


def read_gazetteer(path: str | Path) -> tuple[str, ...]:
    """One entry per line, UTF-8; ``#`` starts a comment."""
    entries = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        entry = raw.split("#", 1)[0].strip()
        if entry:
            entries.append(entry.lower())
    return tuple(entries)


@dataclass(frozen=True)
class FeatureConfig:
    templates: frozenset[str] = frozenset(TEMPLATES)
    window: int = 2
    heading_gazetteer: tuple[str, ...] = DEFAULT_HEADINGS
    name_gazetteer: tuple[str, ...] | None = None
    # v_gap boundaries are multiples of the document's median line gap
    vgap_bounds: tuple[float, ...] = (1.2, 2.0)
    punct_bounds: tuple[float, ...] = (1, 3, 6)
    capratio_bounds: tuple[float, ...] = (0.25, 0.5, 0.75)
    len_bounds: tuple[float, ...] = (20, 50, 80)

    def __post_init__(self):
        object.__setattr__(self, "templates", frozenset(self.templates))
        unknown = self.templates - set(TEMPLATES)
        if unknown:
            raise ValueError(f"unknown feature template(s): {sorted(unknown)}")
        if not 0 <= self.window <= MAX_WINDOW:
            raise ValueError(f"window must be in [0, {MAX_WINDOW}], got {self.window}")
        for name in ("vgap_bounds", "punct_bounds", "capratio_bounds", "len_bounds"):
            bounds = tuple(float(b) for b in getattr(self, name))
            if not bounds or any(a >= b for a, b in zip(bounds, bounds[1:])):
                raise ValueError(f"{name} must be non-empty and strictly increasing")
            object.__setattr__(self, name, bounds)
        object.__setattr__(
            self, "heading_gazetteer", tuple(h.strip().lower() for h in self.heading_gazetteer)
        )
        if self.name_gazetteer is not None:
            object.__setattr__(
                self, "name_gazetteer", tuple(n.strip().lower() for n in self.name_gazetteer)
            )

    @property
    def headings(self) -> frozenset[str]:
        return frozenset(self.heading_gazetteer)

    @property
    def names(self) -> frozenset[str]:
        return frozenset(self.name_gazetteer or ())

    def to_json(self) -> dict:
        return {
            "templates": sorted(self.templates),
            "window": self.window,
            "heading_gazetteer": list(self.heading_gazetteer),
            "name_gazetteer": None if self.name_gazetteer is None else list(self.name_gazetteer),
            "vgap_bounds": list(self.vgap_bounds),
            "punct_bounds": list(self.punct_bounds),
            "capratio_bounds": list(self.capratio_bounds),
            "len_bounds": list(self.len_bounds),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureConfig":
        obj = dict(obj)
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown feature config key(s): {sorted(unknown)}")
        for key in ("heading_gazetteer", "vgap_bounds", "punct_bounds", "capratio_bounds", "len_bounds"):
            if key in obj:
                obj[key] = tuple(obj[key])
        if obj.get("name_gazetteer") is not None:
            obj["name_gazetteer"] = tuple(obj["name_gazetteer"])
        if "templates" in obj:
            obj["templates"] = frozenset(obj["templates"])
        return cls(**obj)

    def with_(self, **changes) -> "FeatureConfig":
        return replace(self, **changes)


# ---------------------------------------------------------------------------
# names


def _fmt_num(x: float) -> str:
    return f"{x:g}"


def bucket_name(value: float, bounds: Sequence[float]) -> str:
    if value < bounds[0]:
        return f"lt{_fmt_num(bounds[0])}"
    for lo, hi in zip(bounds, bounds[1:]):
        if value < hi:
            return f"{_fmt_num(lo)}to{_fmt_num(hi)}"
    return f"ge{_fmt_num(bounds[-1])}"


def format_feature_name(template: str, offset: int | None = None, bucket: str | None = None) -> str:
    name = template
    if offset is not None:
        name += f"@{offset:+d}"
    if bucket is not None:
        name += f"={bucket}"
    return name


def parse_feature_name(name: str) -> tuple[str, int | None, str | None]:
    """Split a feature name into ``(template, offset, bucket)``."""
    m = _NAME.match(name)
    if m is None:
        raise ValueError(f"malformed feature name {name!r}")
    template, offset, bucket = m.groups()
    return template, None if offset is None else int(offset), bucket


def _with_offset(name: str, offset: int) -> str:
    template, _, bucket = parse_feature_name(name)
    return format_feature_name(template, offset, bucket)


# ---------------------------------------------------------------------------
# extraction


def _is_heading(text: str, headings: frozenset[str]) -> bool:
    t = _HEADING_NUMBER.sub("", text.strip()).strip().rstrip(":.").strip().lower()
    return bool(t) and t in headings


def _capratio(tokens: list[str]) -> float | None:
    alpha = cap = 0
    for tok in tokens:
        first = next((c for c in tok if c.isalpha()), None)
        if first is None:
            continue
        alpha += 1
        cap += first.isupper()
    return None if alpha == 0 else cap / alpha


def _has_year(tokens: list[str]) -> bool:
    return any(_YEAR.fullmatch(tok.rstrip(".,;:")) for tok in tokens)


def _median_gap(lines) -> float | None:
    gaps = [ln.v_gap for ln in lines if ln.v_gap is not None and ln.v_gap > 0]
    return statistics.median(gaps) if gaps else None


def _text_features(text: str, config: FeatureConfig) -> list[str]:
    on = config.templates
    out = []
    stripped = text.strip()
    if not stripped:
        if "is_empty" in on:
            out.append("is_empty")
        return out
    tokens = stripped.split()
    if "starts_digit" in on and stripped[0].isdigit():
        out.append("starts_digit")
    if "starts_bracket_marker" in on and _BRACKET_MARKER.match(text):
        out.append("starts_bracket_marker")
    if "ends_period" in on and stripped.endswith("."):
        out.append("ends_period")
    if "ends_hyphen" in on and stripped.endswith("-"):
        out.append("ends_hyphen")
    if "has_year" in on and _has_year(tokens):
        out.append("has_year")
    if "has_page_range" in on and _PAGE_RANGE.search(stripped):
        out.append("has_page_range")
    if "punct" in on:
        count = sum(c in _PUNCT for c in stripped)
        out.append(format_feature_name("punct", bucket=bucket_name(count, config.punct_bounds)))
    if "capratio" in on:
        ratio = _capratio(tokens)
        if ratio is not None:
            out.append(format_feature_name("capratio", bucket=bucket_name(ratio, config.capratio_bounds)))
    if "len" in on:
        out.append(format_feature_name("len", bucket=bucket_name(len(stripped), config.len_bounds)))
    if "is_heading" in on and _is_heading(stripped, config.headings):
        out.append("is_heading")
    if "name_hit" in on and config.name_gazetteer:
        names = config.names
        if any(tok.strip(string.punctuation).lower() in names for tok in tokens):
            out.append("name_hit")
    return out


def _layout_features(lines, i: int, median_gap: float | None, config: FeatureConfig) -> list[str]:
    on = config.templates
    line = lines[i]
    prev = lines[i - 1] if i > 0 else None
    out = []
    if "vgap" in on and line.v_gap is not None:
        if median_gap:
            ratio = line.v_gap / median_gap
        else:
            ratio = 0.0 if line.v_gap == 0 else float("inf")
        out.append(format_feature_name("vgap", bucket=bucket_name(ratio, config.vgap_bounds)))
    if line.indent is not None:
        if "indented" in on and line.indent > INDENT_THRESHOLD:
            out.append("indented")
        if "outdented" in on and line.indent < -INDENT_THRESHOLD:
            out.append("outdented")
    if (
        "fontsize_delta" in on
        and prev is not None
        and line.font_size is not None
        and prev.font_size is not None
    ):
        delta = line.font_size - prev.font_size
        sign = "+" if delta > FONT_DEAD_ZONE else "-" if delta < -FONT_DEAD_ZONE else "0"
        out.append(format_feature_name("fontsize_delta", bucket=sign))
    if "bold" in on and line.bold:
        out.append("bold")
    return out


def _base_features(lines, i: int, after_heading: bool, median_gap, config: FeatureConfig) -> list[str]:
    on = config.templates
    out = ["bias"] if "bias" in on else []
    out += _text_features(lines[i].text, config)
    if "after_heading" in on and after_heading:
        out.append("after_heading")
    if "relpos" in on:
        decile = min(9, (10 * i) // len(lines))
        out.append(format_feature_name("relpos", bucket=str(decile)))
    out += _layout_features(lines, i, median_gap, config)
    return out


def _lines_of(document) -> tuple:
    if isinstance(document, LabeledDocument):
        document = document.document
    return document.lines


def _heading_flags(lines, config: FeatureConfig) -> list[bool]:
    if "is_heading" not in config.templates and "after_heading" not in config.templates:
        return [False] * len(lines)
    headings = config.headings
    return [_is_heading(ln.text, headings) for ln in lines]


def _combine(base: list[list[str]], i: int, window: int) -> set[str]:
    fired = set(base[i])
    for offset in range(-window, window + 1):
        j = i + offset
        if offset == 0 or not 0 <= j < len(base):
            continue
        fired.update(_with_offset(name, offset) for name in base[j])
    return fired


def extract_line_features(document: Document | LabeledDocument, line_index: int,
                          config: FeatureConfig | None = None) -> set[str]:
    """Fired feature names for one line, in its document context."""
    config = config or FeatureConfig()
    lines = _lines_of(document)
    if not 0 <= line_index < len(lines):
        raise IndexError(f"line index {line_index} out of range for {len(lines)} lines")
    median_gap = _median_gap(lines)
    lo = max(0, line_index - config.window)
    hi = min(len(lines), line_index + config.window + 1)
    flags = _heading_flags(lines[:hi], config)
    base: list[list[str]] = [[] for _ in range(hi)]
    for j in range(lo, hi):
        base[j] = _base_features(lines, j, any(flags[:j]), median_gap, config)
    return _combine(base, line_index, config.window)


def document_features(document: Document | LabeledDocument,
                      config: FeatureConfig | None = None) -> list[set[str]]:
    """Fired feature names for every line; equivalent to calling
    :func:`extract_line_features` per line, in linear time."""
    config = config or FeatureConfig()
    lines = _lines_of(document)
    median_gap = _median_gap(lines)
    flags = _heading_flags(lines, config)
    base = []
    seen_heading = False
    for j in range(len(lines)):
        base.append(_base_features(lines, j, seen_heading, median_gap, config))
        seen_heading = seen_heading or flags[j]
    return [_combine(base, i, config.window) for i in range(len(lines))]


# ---------------------------------------------------------------------------
# feature space


class FeatureSpace:
    """Bijection between feature names and contiguous indices."""

    def __init__(self, names: Iterable[str] = (), frozen: bool = False):
        self._names: list[str] = []
        self._index: dict[str, int] = {}
        self.frozen = False
        for name in names:
            self.intern(name)
        self.frozen = frozen

    def intern(self, name: str) -> int | None:
        idx = self._index.get(name)
        if idx is None and not self.frozen:
            idx = len(self._names)
            self._names.append(name)
            self._index[name] = idx
        return idx

    def index(self, name: str) -> int | None:
        return self._index.get(name)

    def freeze(self) -> "FeatureSpace":
        self.frozen = True
        return self

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._names)

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, name) -> bool:
        return name in self._index

    def __iter__(self):
        return iter(self._names)

    def __eq__(self, other) -> bool:
        return isinstance(other, FeatureSpace) and self._names == other._names

    def __repr__(self) -> str:
        return f"FeatureSpace({len(self)} names, frozen={self.frozen})"


@dataclass(frozen=True)
class FeatureVector:
    active: tuple[int, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.active)


def build_feature_space(documents: Sequence[Document | LabeledDocument],
                        config: FeatureConfig | None = None) -> FeatureSpace:
    """Intern every observation feature fired in ``documents``.

    Names are sorted before indices are assigned, so the result does not
    depend on document order. Label-pair and transition parameters are
    derived from this space by the model (see :mod:`reflines.crf`).
    """
    if not documents:
        raise ValueError("empty training set")
    config = config or FeatureConfig()
    names: set[str] = set()
    for doc in documents:
        for fired in document_features(doc, config):
            names.update(fired)
    return FeatureSpace(sorted(names), frozen=True)


def vectorize(document: Document | LabeledDocument, config: FeatureConfig,
              space: FeatureSpace) -> list[FeatureVector]:
    """Map each line to the indices of its known features; unknown names are dropped."""
    if not space.frozen:
        raise ValueError("feature space must be frozen before vectorizing")
    out = []
    for fired in document_features(document, config):
        idx = (space.index(name) for name in fired)
        out.append(FeatureVector(tuple(sorted(i for i in idx if i is not None))))
    return out


def to_csr(vectors: Sequence[FeatureVector], n_features: int):
    """Stack feature vectors into a binary ``scipy.sparse.csr_matrix``."""
    from scipy import sparse

    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    np.cumsum([len(v.active) for v in vectors], out=indptr[1:])
    indices = np.fromiter((i for v in vectors for i in v.active), dtype=np.int32, count=int(indptr[-1]))
    data = np.ones(len(indices), dtype=np.float64)
    return sparse.csr_matrix((data, indices, indptr), shape=(len(vectors), n_features))
