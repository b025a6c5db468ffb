import numpy as np
import pytest

from reflines.corpus import Document, Label, LabeledDocument, LineRecord
from reflines.synthgen import GenConfig, generate

SAMPLE_TEXT = [
    "grant numbers MA 3964/8-1 and STA 572/14-1.",
    "References",
    "Tkaczyk, D., et al. (2015) Cermine: automatic extraction of",
    "structured metadata from scientific literature. Interna-",
    "1252",
    "tional Journal on Document Analysis and Recognition (IJDAR) 18(4) ",
    "Lafferty, J., McCallum, A., Pereira, F. (2001) Conditional random ",
]
SAMPLE_TAGS = ["O", "O", "B-REF", "I-REF", "O-REF", "I-REF", "B-REF"]
SAMPLE_LABELS = [Label.parse(t) for t in SAMPLE_TAGS]
SAMPLE_REFS = [
    "Tkaczyk, D., et al. (2015) Cermine: automatic extraction of structured metadata from "
    "scientific literature. International Journal on Document Analysis and Recognition (IJDAR) 18(4)",
    "Lafferty, J., McCallum, A., Pereira, F. (2001) Conditional random",
]


@pytest.fixture
def sample() -> LabeledDocument:
    doc = Document("sample", tuple(LineRecord(t) for t in SAMPLE_TEXT))
    return LabeledDocument(doc, tuple(SAMPLE_LABELS))


@pytest.fixture(scope="session")
def small_corpus():
    return generate(GenConfig(seed=7, n_documents=12, references=(2, 6), body_lines=(5, 15)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
