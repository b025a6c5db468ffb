"""Brute-force reference computations used as test oracles.

Scores are assembled from parameter *names* (``feature~label`` and
``T:state>state``) rather than from the index arithmetic the library uses,
so agreement checks the layout as well as the dynamic programs.
"""

import itertools
import math

import numpy as np

from reflines.corpus import LABELS, Label
from reflines.crf import CrfModel

O = Label.O


def _state(history, order):
    padded = [O] * max(0, order - len(history)) + list(history)
    return ",".join(lab.tag for lab in padded[-order:])


def named_weights(model: CrfModel) -> dict:
    return dict(zip(model.parameter_names, model.weights.tolist()))


def brute_score(model: CrfModel, fired_names, labels) -> float:
    """``S(y)`` from named weights; ``fired_names[t]`` is a set of feature names."""
    w = named_weights(model)
    total = 0.0
    for t, lab in enumerate(labels):
        for name in fired_names[t]:
            total += w.get(f"{name}~{lab.tag}", 0.0)
        if t > 0:
            prev = _state(labels[:t], model.order)
            cur = _state(labels[: t + 1], model.order)
            total += w[f"T:{prev}>{cur}"]
    return total


def feasible(labels, constraints: bool) -> bool:
    if not constraints:
        return True
    prev = O
    for lab in labels:
        if prev is O and lab in (Label.I_REF, Label.O_REF):
            return False
        prev = lab
    return True


def enumerate_scores(model, fired_names, constraints=False):
    T = len(fired_names)
    out = {}
    for seq in itertools.product(LABELS, repeat=T):
        if feasible(seq, constraints):
            out[seq] = brute_score(model, fired_names, seq)
    return out


def brute_log_partition(scores: dict) -> float:
    vals = np.array(list(scores.values()))
    if len(vals) == 0:
        return -math.inf
    m = vals.max()
    return float(m + np.log(np.exp(vals - m).sum()))


def brute_marginals(scores: dict, T: int) -> np.ndarray:
    log_z = brute_log_partition(scores)
    P = np.zeros((T, 4))
    for seq, s in scores.items():
        p = math.exp(s - log_z)
        for t, lab in enumerate(seq):
            P[t, int(lab)] += p
    return P


def brute_argmax(scores: dict, tol: float = 1e-9):
    """Best score and the lexicographically smallest sequence attaining it."""
    best = max(scores.values())
    ties = [seq for seq, s in scores.items() if s >= best - tol * max(1.0, abs(best))]
    return best, min(ties, key=lambda seq: [int(x) for x in seq])


def naive_line_counts(gold, pred):
    """Second, loop-based implementation of per-label TP/FP/FN counting."""
    counts = {}
    for lab in LABELS:
        tp = fp = fn = 0
        for g, p in zip(gold, pred):
            if g == lab and p == lab:
                tp += 1
            elif p == lab:
                fp += 1
            elif g == lab:
                fn += 1
        counts[lab] = (tp, fp, fn)
    correct = sum(g == p for g, p in zip(gold, pred))
    return counts, correct
