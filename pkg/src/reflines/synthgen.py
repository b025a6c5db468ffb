"""Deterministic synthetic labeled documents.

Two layouts are produced:

``end_section``
    body text, a "References" heading and a bibliography at the end. Page
    breaks falling inside a reference insert a page number (and, for
    documents with running headers, a header line) labeled O-REF.
``footnotes``
    no bibliography; every page ends with footnotes, most of which are
    references. No reference heading appears anywhere.

Layout attributes are filled in the way a PDF line extractor would report
them: ``v_gap`` grows at block boundaries, reference continuation lines
are indented, footnotes use a smaller font.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from .corpus import Document, Label, LabeledDocument, LineRecord

__all__ = ["GenConfig", "SyntheticDocument", "generate", "generate_documents", "STYLES", "MODES"]

STYLES = ("numbered", "author-year")
MODES = ("end_section", "footnotes")

SURNAMES = (
    "Smith", "Miller", "Garcia", "Tkaczyk", "Lafferty", "Pereira", "Novak", "Schmidt", "Okafor",
    "Larsen", "Ivanova", "Chen", "Kowalski", "Moreau", "Rossi", "Tanaka", "Haddad", "Becker",
    "Silva", "Nguyen", "Fischer", "Kaur", "Jansen", "Dubois", "Horvat", "Lindqvist", "Osei",
    "Romero", "Weber", "Yamamoto",
)
WORDS = (
    "analysis", "model", "extraction", "network", "learning", "structured", "probabilistic",
    "method", "approach", "evaluation", "document", "citation", "metadata", "sequence",
    "classification", "inference", "training", "corpus", "semantic", "layout", "random",
    "conditional", "fields", "graphical", "efficient", "robust", "scalable", "information",
    "retrieval", "language", "automatic", "segmentation", "detection", "recognition", "data",
    "large", "scale", "study", "framework", "results", "experiments", "statistical", "feature",
    "selection", "towards", "improved", "multiple", "hierarchical", "representation", "text",
)
VENUES = (
    "Journal of Machine Learning Research", "Information Processing and Management",
    "International Journal on Document Analysis and Recognition", "Pattern Recognition Letters",
    "Proceedings of the Conference on Digital Libraries", "Scientometrics",
    "Computational Linguistics", "Data and Knowledge Engineering", "Information Systems",
    "ACM Transactions on Information Systems",
)
SECTIONS = (
    "Introduction", "Related Work", "Background", "Method", "Data Set", "Experiments",
    "Results", "Discussion", "Limitations", "Conclusion",
)
FILLER = (
    "we", "the", "of", "in", "and", "a", "to", "is", "that", "for", "this", "with", "are",
    "as", "on", "by", "which", "our", "it", "be",
)

BODY_FONT, REF_FONT, NOTE_FONT, HEAD_FONT, TITLE_FONT = 10.0, 9.0, 8.0, 12.0, 14.0


def _check_range(name, rng, minimum=0):
    lo, hi = rng
    if not (minimum <= lo <= hi):
        raise ValueError(f"{name} must satisfy {minimum} <= lo <= hi, got {rng}")


@dataclass(frozen=True)
class GenConfig:
    """Generator parameters.

    ``body_lines`` counts body text lines per document in ``end_section``
    mode and per page in ``footnotes`` mode.
    """

    seed: int = 0
    n_documents: int = 20
    body_lines: tuple[int, int] = (10, 30)
    references: tuple[int, int] = (5, 20)
    styles: tuple[str, ...] = STYLES
    mode: str = "end_section"
    page_height: int = 45
    hyphenation: float = 0.15
    footnote_noise: float = 0.2
    line_width: tuple[int, int] = (60, 90)

    def __post_init__(self):
        object.__setattr__(self, "body_lines", tuple(self.body_lines))
        object.__setattr__(self, "references", tuple(self.references))
        object.__setattr__(self, "line_width", tuple(self.line_width))
        if isinstance(self.styles, str):
            object.__setattr__(self, "styles", (self.styles,))
        if self.n_documents < 0:
            raise ValueError("n_documents must be non-negative")
        _check_range("body_lines", self.body_lines, 1)
        _check_range("references", self.references, 0)
        _check_range("line_width", self.line_width, 30)
        if not self.styles or set(self.styles) - set(STYLES):
            raise ValueError(f"styles must be a non-empty subset of {STYLES}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.page_height < 12:
            raise ValueError("page_height must be at least 12 lines")
        for name in ("hyphenation", "footnote_noise"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be a probability, got {p}")


@dataclass(frozen=True)
class SyntheticDocument:
    document: LabeledDocument
    references: tuple[str, ...] = field(default=())
    style: str = "numbered"


# ---------------------------------------------------------------------------
# text


def _initials(rng) -> str:
    letters = "ABCDEFGHJKLMNPRSTW"
    return ". ".join(rng.choice(list(letters), size=rng.integers(1, 3))) + "."


def _reference_parts(rng) -> dict:
    n_auth = int(rng.integers(1, 5))
    words = [str(w) for w in rng.choice(WORDS, size=10)]
    if rng.random() < 0.3:
        words.insert(int(rng.integers(1, 4)), str(rng.choice(["of", "for", "with", "in"])))
    year = int(rng.integers(1975, 2024))
    first = int(rng.integers(1, 900))
    return {
        "authors": [(str(rng.choice(SURNAMES)), _initials(rng)) for _ in range(n_auth)],
        "title": words,
        "year": year,
        "venue": str(rng.choice(VENUES)),
        "volume": int(rng.integers(1, 60)),
        "issue": int(rng.integers(1, 12)),
        "pages": (first, first + int(rng.integers(5, 40))),
        "et_al": bool(rng.random() < 0.15),
    }


def _format_reference(p: dict, style: str, n_title_words: int) -> str:
    title = " ".join(p["title"][:n_title_words])
    title = title[0].upper() + title[1:]
    first, last = p["pages"]
    lead_sur, lead_ini = p["authors"][0]
    if style == "numbered":
        names = ", ".join(f"{ini} {sur}" for sur, ini in p["authors"])
        if p["et_al"]:
            names = f"{lead_ini} {lead_sur} et al."
        return f"{names}: {title}. {p['venue']} {p['volume']}({p['issue']}), {first}–{last} ({p['year']})"
    names = ", ".join(f"{sur}, {ini}" for sur, ini in p["authors"])
    if p["et_al"]:
        names = f"{lead_sur}, {lead_ini}, et al."
    return f"{names} ({p['year']}) {title}. {p['venue']} {p['volume']}({p['issue']}), {first}-{last}."


def _sentence(rng, cite_style: str | None) -> str:
    n = int(rng.integers(6, 16))
    pool = WORDS + FILLER * 2
    words = [str(w) for w in rng.choice(pool, size=n)]
    if cite_style is not None and rng.random() < 0.25:
        if cite_style == "numbered":
            words.append(f"[{int(rng.integers(1, 30))}]")
        else:
            words.append(f"({rng.choice(SURNAMES)} {int(rng.integers(1975, 2024))})")
    if rng.random() < 0.1:
        words.insert(int(rng.integers(0, len(words))), str(int(rng.integers(2, 500))))
    text = " ".join(words)
    return text[0].upper() + text[1:] + "."


def _hyphenatable(word: str) -> bool:
    return len(word) >= 7 and word.isalpha() and word[3:].islower()


def _wrap(text: str, width: int, rng, p_hyphen: float) -> list[str]:
    """Greedy word wrap that occasionally hyphenates a long word at the margin.

    Continuations of hyphenated words start lowercase, so merging them back
    reproduces ``text``.
    """
    lines: list[str] = []
    current = ""
    for word in text.split(" "):
        candidate = f"{current} {word}" if current else word
        if len(candidate) <= width or not current:
            current = candidate
            continue
        room = width - len(current) - 2
        if _hyphenatable(word) and room >= 3 and rng.random() < p_hyphen:
            cut = min(room, len(word) - 3)
            if cut >= 3:
                lines.append(f"{current} {word[:cut]}-")
                current = word[cut:]
                continue
        lines.append(current)
        current = word
    if current:
        lines.append(current)
    return lines


# ---------------------------------------------------------------------------
# layout


class _Page:
    """Accumulates lines with page breaks, labels and layout attributes."""

    def __init__(self, rng, page_height: int, running_header: str | None):
        self.rng = rng
        self.page_height = page_height
        self.running_header = running_header
        self.page = 0
        self.row = 0
        self.prev_x = 0.0
        self.records: list[LineRecord] = []
        self.labels: list[Label] = []

    def _jitter(self, value: float) -> float:
        return max(0.0, round(value + float(self.rng.uniform(-0.3, 0.3)), 2))

    def _put(self, text, label, x, font, gap, bold=False):
        indent = 0.0 if not self.records else round(x - self.prev_x, 2)
        v_gap = 0.0 if not self.records else self._jitter(gap)
        self.records.append(LineRecord(text, self.page, v_gap, indent, font, bold))
        self.labels.append(label)
        self.prev_x = x
        self.row += 1

    def break_page(self, inside_reference: bool = False):
        label = Label.O_REF if inside_reference else Label.O
        self._put(str(self.page + 1), label, 220.0, NOTE_FONT, 30.0)
        self.page += 1
        self.row = 0
        if self.running_header is not None:
            self._put(self.running_header, label, 120.0, NOTE_FONT, 0.0)

    def emit(self, text, label, x, font, gap, bold=False, room: int = 1):
        if self.row + room > self.page_height:
            self.break_page(inside_reference=label is Label.I_REF)
            gap = 20.0
        self._put(text, label, x, font, gap, bold)


# ---------------------------------------------------------------------------
# documents


def _body_block(page: _Page, rng, cfg: GenConfig, n_lines: int, width: int, cite_style, heading: str | None):
    if heading is not None:
        page.emit(heading, Label.O, 0.0, HEAD_FONT, 24.0, bold=True, room=3)
    emitted = 0
    while emitted < n_lines:
        n_sent = int(rng.integers(2, 5))
        text = " ".join(_sentence(rng, cite_style) for _ in range(n_sent))
        wrapped = _wrap(text, width, rng, cfg.hyphenation)[: n_lines - emitted]
        for k, line in enumerate(wrapped):
            x = 15.0 if k == 0 else 0.0
            page.emit(line, Label.O, x, BODY_FONT, 18.0 if k == 0 else 12.0)
        emitted += len(wrapped)


def _reference_lines(rng, style: str, width: int, p_hyphen: float, prefix: str = "") -> tuple[str, list[str]]:
    """Reference text and its wrapping into 1 to 4 lines; long titles are cut."""
    parts = _reference_parts(rng)
    n_start = int(rng.integers(3, 11))
    for attempt in range(2):
        for n_words in range(n_start, 0, -1):
            text = prefix + _format_reference(parts, style, n_words)
            lines = _wrap(text, width, rng, p_hyphen)
            if len(lines) <= 4:
                return text, lines
        parts = dict(parts, authors=parts["authors"][:1], et_al=False)
    raise ValueError(f"line width {width} too narrow for a reference")


def _end_section(rng, cfg: GenConfig, style: str, width: int, running_header) -> tuple[_Page, list[str]]:
    page = _Page(rng, cfg.page_height, running_header)
    page.emit(_sentence(rng, None)[:-1].title()[:width], Label.O, 40.0, TITLE_FONT, 0.0, bold=True)
    authors = ", ".join(f"{_initials(rng)} {rng.choice(SURNAMES)}" for _ in range(int(rng.integers(1, 4))))
    page.emit(authors, Label.O, 60.0, BODY_FONT, 20.0)
    n_body = int(rng.integers(cfg.body_lines[0], cfg.body_lines[1] + 1))
    n_sections = max(1, min(len(SECTIONS), n_body // 12))
    sections = rng.choice(SECTIONS, size=n_sections, replace=False)
    sizes = np.diff(np.linspace(0, n_body, n_sections + 1).astype(int))
    for k, (name, size) in enumerate(zip(sections, sizes)):
        if size:
            _body_block(page, rng, cfg, int(size), width, style, f"{k + 1} {name}")
    if rng.random() < 0.5:
        _body_block(page, rng, cfg, int(rng.integers(1, 4)), width, None, "Acknowledgments")
    page.emit("References", Label.O, 0.0, HEAD_FONT, 24.0, bold=True, room=2)
    truths = []
    hang = 15.0 if style == "numbered" else 10.0
    n_refs = int(rng.integers(cfg.references[0], cfg.references[1] + 1))
    for k in range(n_refs):
        prefix = f"[{k + 1}] " if style == "numbered" else ""
        text, lines = _reference_lines(rng, style, width, cfg.hyphenation, prefix)
        truths.append(text)
        for j, line in enumerate(lines):
            if j == 0:
                page.emit(line, Label.B_REF, 0.0, REF_FONT, 15.0)
            else:
                page.emit(line, Label.I_REF, hang, REF_FONT, 11.0)
    return page, truths


def _footnotes(rng, cfg: GenConfig, style: str, width: int, running_header) -> tuple[_Page, list[str]]:
    page = _Page(rng, cfg.page_height, running_header)
    page.emit(_sentence(rng, None)[:-1].title()[:width], Label.O, 40.0, TITLE_FONT, 0.0, bold=True)
    truths: list[str] = []
    n_refs = int(rng.integers(cfg.references[0], cfg.references[1] + 1))
    note = 0
    k = 0
    while len(truths) < n_refs or k == 0:
        notes = []
        for _ in range(int(rng.integers(1, 4))):
            note += 1
            if rng.random() < cfg.footnote_noise:
                text = f"{note} " + _sentence(rng, None)
                notes.append((None, _wrap(text, width, rng, cfg.hyphenation)[:3]))
            elif len(truths) + sum(t is not None for t, _ in notes) < n_refs:
                notes.append(_reference_lines(rng, style, width, cfg.hyphenation, f"{note} "))
        note_lines = sum(len(lines) for _, lines in notes)
        room = cfg.page_height - page.row - note_lines - 2
        n_body = int(rng.integers(cfg.body_lines[0], cfg.body_lines[1] + 1))
        n_body = max(1, min(n_body, room))
        heading = f"{k + 1} {SECTIONS[k % len(SECTIONS)]}" if rng.random() < 0.4 and room > 4 else None
        _body_block(page, rng, cfg, n_body, width, "footnote", heading)
        for j, (truth, lines) in enumerate(notes):
            if truth is not None:
                truths.append(truth)
            for i, line in enumerate(lines):
                gap = 20.0 if (i == 0 and j == 0) else 10.0
                if truth is None:
                    page.emit(line, Label.O, 0.0 if i == 0 else 5.0, NOTE_FONT, gap, room=len(lines) - i)
                else:
                    label = Label.B_REF if i == 0 else Label.I_REF
                    page.emit(line, label, 0.0 if i == 0 else 5.0, NOTE_FONT, gap, room=len(lines) - i)
        page.break_page()
        k += 1
    return page, truths


def generate_documents(cfg: GenConfig) -> list[SyntheticDocument]:
    """Generate ``cfg.n_documents`` documents together with their true reference strings."""
    root = np.random.SeedSequence(cfg.seed)
    out = []
    for i, child in enumerate(root.spawn(cfg.n_documents)):
        rng = np.random.default_rng(child)
        style = str(cfg.styles[int(rng.integers(0, len(cfg.styles)))])
        width = int(rng.integers(cfg.line_width[0], cfg.line_width[1] + 1))
        header = None
        if rng.random() < 0.5:
            header = f"{rng.choice(SURNAMES)} et al." if rng.random() < 0.5 else str(rng.choice(VENUES))
        build = _end_section if cfg.mode == "end_section" else _footnotes
        page, truths = build(rng, cfg, style, width, header)
        doc = LabeledDocument(Document(f"synth-{cfg.seed}-{i}", tuple(page.records)), tuple(page.labels))
        out.append(SyntheticDocument(doc, tuple(truths), style))
    return out


def generate(cfg: GenConfig) -> list[LabeledDocument]:
    """Generate labeled documents; the same config always yields the same corpus."""
    return [s.document for s in generate_documents(cfg)]
