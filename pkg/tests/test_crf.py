import math

import numpy as np
import pytest

from reflines.corpus import LABELS, Label
from reflines.crf import (
    CrfModel,
    InfeasibleError,
    StateSpace,
    bio_allowed,
    log_partition,
    marginals,
    n_parameters,
    sequence_log_prob,
    sequence_score,
    viterbi,
)
from reflines.features import FeatureConfig, FeatureSpace, FeatureVector, build_feature_space, vectorize

import oracles
from conftest import SAMPLE_LABELS
from helpers import random_instance

B, I, OR, O = Label.B_REF, Label.I_REF, Label.O_REF, Label.O


def zero_model(order=1, names=("bias",)):
    return CrfModel.zeros(order, FeatureSpace(names, frozen=True))


def blank(T):
    return [FeatureVector((0,)) for _ in range(T)]


# -- state space --------------------------------------------------------------


@pytest.mark.parametrize("order", [1, 2, 3])
def test_state_space_shape(order):
    st = StateSpace(order)
    assert st.size == 4**order
    # every state has exactly 4 successors, each overlap-consistent
    for s in range(st.size):
        for y in LABELS:
            t = st.succ[s, int(y)]
            a, b = st.states[s], st.states[t]
            assert a[1:] == b[:-1] and b[-1] == y


def test_parameter_count_and_names():
    model = zero_model(2, ("a", "b"))
    assert model.weights.size == n_parameters(2, 2) == 4 * 2 + 16 * 4
    names = model.parameter_names
    assert len(set(names)) == len(names)
    assert names[:4] == ("a~B-REF", "a~I-REF", "a~O-REF", "a~O")
    assert "T:O,O>O,B-REF" in names
    assert sum(n.startswith("T:") for n in names) == 64


def test_weights_are_read_only():
    model = zero_model()
    with pytest.raises(ValueError):
        model.weights[0] = 1.0


def test_bio_allowed_table():
    allowed, start = bio_allowed(True)
    assert not allowed[O, I] and not allowed[O, OR]
    assert allowed[OR, I] and allowed[OR, OR] and allowed[B, OR]
    assert list(start) == [True, False, False, True]
    allowed, start = bio_allowed(False)
    assert allowed.all() and start.all()


# -- hand-checkable cases ------------------------------------------------------


def test_zero_weights_log_partition():
    model = zero_model()
    assert log_partition(model, blank(1)) == pytest.approx(math.log(4), abs=1e-12)
    assert log_partition(model, blank(3)) == pytest.approx(3 * math.log(4), abs=1e-12)


def test_zero_weights_marginals_uniform():
    P = marginals(zero_model(2), blank(5))
    np.testing.assert_allclose(P, 0.25, atol=1e-12)


def test_zero_weights_viterbi_tie_break():
    labels, score = viterbi(zero_model(), blank(2), constraints=True)
    assert labels == [B, B] and score == 0.0
    labels, _ = viterbi(zero_model(2), blank(4), constraints=False)
    assert labels == [B] * 4


@pytest.mark.parametrize("y", [[B, B], [O, I], [OR, O]])
def test_zero_weights_sequence_log_prob(y):
    assert sequence_log_prob(zero_model(), blank(2), y) == pytest.approx(math.log(1 / 16), abs=1e-12)


def test_empty_sequence_rejected():
    model = zero_model()
    for fn in (log_partition, marginals, viterbi):
        with pytest.raises(ValueError):
            fn(model, [])


def test_length_mismatch_rejected():
    with pytest.raises(ValueError):
        sequence_log_prob(zero_model(), blank(2), [B])


def test_constraint_violation_is_minus_inf():
    assert sequence_log_prob(zero_model(), blank(2), [O, I], constraints=True) == -math.inf
    assert sequence_log_prob(zero_model(), blank(1), [OR], constraints=True) == -math.inf
    assert math.isfinite(sequence_log_prob(zero_model(), blank(3), [B, OR, I], constraints=True))


def test_infeasible_constraints_reported():
    # forbid everything except I-REF by a huge emission, then mask all of it
    E = np.full((2, 4), -np.inf)
    E[:, I] = 0.0
    with pytest.raises(InfeasibleError, match="infeasible constraints"):
        marginals(zero_model(), E, constraints=True)
    with pytest.raises(InfeasibleError):
        viterbi(zero_model(), E, constraints=True)


# -- enumeration oracles -------------------------------------------------------


def _instances(n, orders=(1, 2), max_T=6, seed=0):
    rng = np.random.default_rng(seed)
    for i in range(n):
        order = orders[i % len(orders)]
        T = int(rng.integers(1, max_T + 1))
        yield random_instance(rng, order, T)


@pytest.mark.parametrize("constraints", [False, True])
def test_log_partition_matches_enumeration(constraints):
    for model, vectors, fired in _instances(60, seed=1 + constraints):
        scores = oracles.enumerate_scores(model, fired, constraints)
        assert log_partition(model, vectors, constraints) == pytest.approx(
            oracles.brute_log_partition(scores), abs=1e-9)


@pytest.mark.parametrize("constraints", [False, True])
def test_marginals_match_enumeration(constraints):
    for model, vectors, fired in _instances(60, seed=3 + constraints):
        scores = oracles.enumerate_scores(model, fired, constraints)
        P = marginals(model, vectors, constraints)
        np.testing.assert_allclose(P, oracles.brute_marginals(scores, len(vectors)), atol=1e-9)
        np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-9)


@pytest.mark.parametrize("constraints", [False, True])
def test_viterbi_matches_enumeration(constraints):
    for model, vectors, fired in _instances(60, seed=5 + constraints):
        scores = oracles.enumerate_scores(model, fired, constraints)
        best, argmax = oracles.brute_argmax(scores)
        labels, score = viterbi(model, vectors, constraints)
        assert tuple(labels) == argmax
        assert score == pytest.approx(best, abs=1e-9)
        assert oracles.brute_score(model, fired, labels) == pytest.approx(best, abs=1e-9)


def test_order_three_matches_enumeration():
    for model, vectors, fired in _instances(10, orders=(3,), max_T=5, seed=9):
        scores = oracles.enumerate_scores(model, fired)
        assert log_partition(model, vectors) == pytest.approx(oracles.brute_log_partition(scores), abs=1e-9)
        assert tuple(viterbi(model, vectors, False)[0]) == oracles.brute_argmax(scores)[1]


def test_sequence_score_matches_named_weights():
    for model, vectors, fired in _instances(30, seed=11):
        for seq in list(oracles.enumerate_scores(model, fired))[:20]:
            assert sequence_score(model, vectors, seq) == pytest.approx(
                oracles.brute_score(model, fired, seq), abs=1e-12)


def test_normalization():
    for model, vectors, fired in _instances(20, max_T=5, seed=13):
        seqs = oracles.enumerate_scores(model, fired)
        total = sum(math.exp(sequence_log_prob(model, vectors, s)) for s in seqs)
        assert total == pytest.approx(1.0, abs=1e-9)


def test_ties_resolved_to_smallest_sequence():
    # identical emissions for B-REF and O on every line -> many exact ties
    E = np.array([[1.0, -5.0, -5.0, 1.0]] * 3)
    labels, _ = viterbi(zero_model(2), E, constraints=False)
    assert labels == [B, B, B]


def test_monotone_constraint_effect():
    for model, vectors, _ in _instances(40, seed=17):
        assert log_partition(model, vectors, True) <= log_partition(model, vectors, False) + 1e-12


def test_order_reduction():
    rng = np.random.default_rng(19)
    for _ in range(20):
        T = int(rng.integers(1, 7))
        m1, vectors, _ = random_instance(rng, 1, T)
        n = len(m1.space)
        # order-2 transition (a,b)>(b,c) depends only on b>c
        trans1 = m1.transition_weights
        st2 = StateSpace(2)
        trans2 = np.array([[trans1[int(st2.states[s][-1]), y] for y in range(4)] for s in range(st2.size)])
        m2 = CrfModel(2, m1.space, np.concatenate([m1.weights[: 4 * n], trans2.ravel()]))
        for c in (False, True):
            assert log_partition(m2, vectors, c) == pytest.approx(log_partition(m1, vectors, c), abs=1e-9)
            np.testing.assert_allclose(marginals(m2, vectors, c), marginals(m1, vectors, c), atol=1e-9)


def test_determinism():
    rng = np.random.default_rng(23)
    model, vectors, _ = random_instance(rng, 2, 6)
    a = (log_partition(model, vectors), marginals(model, vectors), viterbi(model, vectors))
    b = (log_partition(model, vectors), marginals(model, vectors), viterbi(model, vectors))
    assert a[0] == b[0] and np.array_equal(a[1], b[1]) and a[2] == b[2]


# -- sample page -------------------------------------------------------------------


def _gold_forcing(doc, order=2):
    cfg = FeatureConfig(window=0)
    space = build_feature_space([doc], cfg)
    model = CrfModel.zeros(order, space, cfg)
    # +5 on the gold pairing of every line
    E = np.zeros((len(doc), 4))
    for t, y in enumerate(doc.labels):
        E[t, int(y)] = 5.0
    return model, E, vectorize(doc, cfg, space)


def test_sample_gold_forcing_decode(sample):
    model, E, _ = _gold_forcing(sample)
    labels, score = viterbi(model, E, constraints=True)
    assert labels == SAMPLE_LABELS
    assert score == pytest.approx(35.0)


def test_sample_gold_is_feasible(sample):
    model, _, vectors = _gold_forcing(sample)
    assert math.isfinite(sequence_log_prob(model, vectors, sample.labels, constraints=True))


def test_heading_weight_dominates():
    # three lines, the middle one is "References"
    from reflines.corpus import Document, LabeledDocument, LineRecord

    lines = [LineRecord(t) for t in ("Some body text here.", "References", "Smith, J. (2001) A title.")]
    doc = LabeledDocument(Document("h", tuple(lines)), (O, O, B))
    cfg = FeatureConfig(window=0)
    space = build_feature_space([doc], cfg)
    model = CrfModel.zeros(1, space, cfg)
    w = model.weights.copy()
    w[model.parameter_names.index("is_heading~O")] = 10.0
    model = model.with_weights(w)
    vectors = vectorize(doc, cfg, space)
    fired = [{space.names[k] for k in v.active} for v in vectors]
    exact = oracles.brute_marginals(oracles.enumerate_scores(model, fired), 3)
    P = marginals(model, vectors)
    np.testing.assert_allclose(P, exact, atol=1e-12)
    assert P[1, O] > 0.99
    assert P[1, O] == pytest.approx(math.exp(10) / (math.exp(10) + 3), abs=1e-12)
