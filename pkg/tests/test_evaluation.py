import numpy as np
import pytest

from reflines.corpus import Label
from reflines.evaluation import Counts, Metrics, format_table, line_metrics, pool, reference_metrics
from reflines.extraction import ReferenceString, group
from reflines.synthgen import GenConfig, generate

import oracles

B, I, OR, O = Label.B_REF, Label.I_REF, Label.O_REF, Label.O


def test_identity():
    gold = [O, B, I, OR, I, B]
    m = line_metrics(gold, gold)
    assert m.accuracy == 1.0
    assert all(m.labels[y].f1 == 1.0 for y in set(gold))


def test_absent_label_scores_zero():
    m = line_metrics([O, B], [O, B])
    assert m.labels[I].f1 == 0.0 and m.labels[I].precision == 0.0


def test_hand_counted():
    m = line_metrics([B, I, O], [O, O, O])
    assert m.accuracy == pytest.approx(1 / 3)
    assert m.labels[O].precision == pytest.approx(1 / 3)
    assert m.labels[O].recall == 1.0
    assert m.labels[B].recall == 0.0 and m.labels[B].fn == 1


def test_length_mismatch():
    with pytest.raises(ValueError):
        line_metrics([B], [B, O])


def test_against_naive_counter(rng):
    gold = [Label(int(x)) for x in rng.integers(0, 4, 1000)]
    pred = [Label(int(x)) for x in rng.integers(0, 4, 1000)]
    counts, correct = oracles.naive_line_counts(gold, pred)
    m = line_metrics(gold, pred)
    assert m.n_correct == correct
    for lab, (tp, fp, fn) in counts.items():
        assert (m.labels[lab].tp, m.labels[lab].fp, m.labels[lab].fn) == (tp, fp, fn)
    assert m.confusion.sum() == 1000


def test_f1_is_harmonic_mean():
    c = Counts(tp=3, fp=1, fn=5)
    assert c.f1 == pytest.approx(2 * c.precision * c.recall / (c.precision + c.recall))
    assert Counts().f1 == 0.0


def _refs(*index_sets):
    return [ReferenceString("", tuple(s), False) for s in index_sets]


def test_split_reference():
    gold = _refs((0, 1), (3,))
    pred = _refs((0,), (1,), (3,))
    r = reference_metrics(gold, pred).references
    assert (r.tp, r.fp, r.fn) == (1, 2, 1)
    assert r.precision == pytest.approx(1 / 3) and r.recall == pytest.approx(1 / 2)


def test_sample_self(sample):
    refs = group(sample.lines, sample.labels)
    r = reference_metrics(refs, refs).references
    assert (r.tp, r.precision, r.recall, r.f1) == (2, 1.0, 1.0, 1.0)


def test_random_perturbations_against_set_oracle():
    rng = np.random.default_rng(77)
    docs = generate(GenConfig(seed=5, n_documents=20))
    for trial in range(200):
        doc = docs[trial % len(docs)]
        pred = list(doc.labels)
        for t in rng.choice(len(pred), size=int(rng.integers(1, 6)), replace=False):
            pred[int(t)] = Label(int(rng.integers(0, 4)))
        gold_refs, pred_refs = group(doc.lines, doc.labels), group(doc.lines, pred)
        gold_sets = [set(r.line_indices) for r in gold_refs]
        tp = sum(any(set(p.line_indices) == g for g in gold_sets) for p in pred_refs)
        r = reference_metrics(gold_refs, pred_refs).references
        assert (r.tp, r.fp, r.fn) == (tp, len(pred_refs) - tp, len(gold_refs) - tp)


def test_symmetry_and_fp_monotonicity():
    a = _refs((0,), (2, 3), (5,))
    r = reference_metrics(a, a).references
    assert r.precision == r.recall == 1.0
    with_fp = reference_metrics(a, a + _refs((7,))).references
    assert with_fp.precision <= r.precision


def test_pooling_is_micro():
    m1 = line_metrics([B, O], [B, B])
    m2 = line_metrics([O] * 8, [O] * 8)
    total = pool([m1, m2])
    assert total.accuracy == pytest.approx(9 / 10)
    assert total.to_dict()["averaging"] == "micro"
    assert total.labels[B].precision == pytest.approx(1 / 2)


def test_to_dict_flat_and_bounded():
    d = line_metrics([B, I, O], [B, O, O]).to_dict()
    assert all(not isinstance(v, (dict, list)) for v in d.values())
    assert all(0.0 <= v <= 1.0 for k, v in d.items() if k.endswith(("precision", "recall", "f1", "accuracy")))


def test_format_table():
    text = format_table(Metrics())
    assert "reference" in text and "micro" in text
