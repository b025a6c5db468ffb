import json

import numpy as np
import pytest

from reflines.crf import CrfModel, sequence_score, viterbi
from reflines.features import FeatureConfig, FeatureSpace, vectorize
from reflines.model_io import ModelFormatError, dumps, load, loads, save
from reflines.synthgen import GenConfig, generate
from reflines.training import TrainConfig, train


@pytest.fixture(scope="module")
def trained():
    docs = generate(GenConfig(seed=21, n_documents=70, references=(3, 8), body_lines=(5, 12)))
    model, _ = train(docs[:20], order=2, train_config=TrainConfig(max_iterations=60))
    return model, docs[20:]


def test_save_twice_identical(trained, tmp_path):
    model, _ = trained
    save(model, tmp_path / "a.json")
    save(model, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_save_load_save_identical(trained, tmp_path):
    model, _ = trained
    save(model, tmp_path / "a.json")
    save(load(tmp_path / "a.json"), tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_round_trip_decoding(trained, tmp_path):
    model, docs = trained
    save(model, tmp_path / "m.json")
    back = load(tmp_path / "m.json")
    assert back.weights.tobytes() == model.weights.tobytes()
    assert back.space == model.space and back.config == model.config and back.order == model.order
    assert len(docs) == 50
    for doc in docs:
        va = vectorize(doc, model.config, model.space)
        vb = vectorize(doc, back.config, back.space)
        la, sa = viterbi(model, va)
        lb, sb = viterbi(back, vb)
        assert la == lb
        assert abs(sa - sb) <= 1e-12
        assert abs(sequence_score(model, va, doc.labels) - sequence_score(back, vb, doc.labels)) <= 1e-12


def test_canonical_form(trained):
    text = dumps(trained[0])
    obj = json.loads(text)
    assert list(obj) == sorted(obj)
    assert list(obj["weights"]) == sorted(obj["weights"])
    assert "\r" not in text and text.endswith("}\n")
    assert obj["format_version"] == 1 and obj["labels"] == ["B-REF", "I-REF", "O-REF", "O"]
    assert obj["n_weights"] == len(obj["weights"])


def test_toy_model_keys():
    space = FeatureSpace(["bias", "starts_digit"], frozen=True)
    w = np.arange(8 + 16, dtype=float) / 7.0
    model = CrfModel(1, space, w, FeatureConfig(window=0))
    obj = json.loads(dumps(model))
    tags = ["B-REF", "I-REF", "O-REF", "O"]
    expected = sorted([f"{f}~{t}" for f in ("bias", "starts_digit") for t in tags] +
                      [f"T:{a}>{b}" for a in tags for b in tags])
    assert list(obj["weights"]) == expected
    assert obj["weights"]["starts_digit~I-REF"] == 5 / 7.0
    assert loads(dumps(model)).weights.tobytes() == w.tobytes()


def test_no_date_in_file(trained):
    assert "trained_at" not in json.loads(dumps(trained[0]))["metadata"]


def _mutate(model, fn):
    obj = json.loads(dumps(model))
    fn(obj)
    return json.dumps(obj)


def test_unknown_version(trained):
    with pytest.raises(ModelFormatError, match="unknown version"):
        loads(_mutate(trained[0], lambda o: o.update(format_version=99)))


def test_missing_field(trained):
    with pytest.raises(ModelFormatError, match="missing field.*order"):
        loads(_mutate(trained[0], lambda o: o.pop("order")))


def test_deleted_weight_named(trained):
    with pytest.raises(ModelFormatError, match=r"weight count mismatch.*'bias~O'"):
        loads(_mutate(trained[0], lambda o: o["weights"].pop("bias~O")))


def test_bad_json():
    with pytest.raises(ModelFormatError):
        loads("{nope")
