"""Linear-chain CRF over line labels, with Markov order ``m`` realized by
expanding label states into m-tuples.

Parameter layout
----------------
For a feature space of ``n`` observation features and ``S = 4**m`` states the
weight vector has ``4n + 4S`` entries:

* ``weights[:4n].reshape(n, 4)[k, y]`` is the emission weight named
  ``<feature>~<label>``;
* ``weights[4n:].reshape(S, 4)[s, y]`` is the transition weight named
  ``T:<s>><s'>`` where ``s' = succ(s, y)``.

Lines before the start of a document are treated as ``O``: the state at the
first line is ``(O, ..., O, y)``. Every label sequence therefore maps to
exactly one state path.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from . import _kernels
from .corpus import LABELS, Label
from .features import FeatureConfig, FeatureSpace, FeatureVector

__all__ = [
    "MAX_ORDER",
    "InfeasibleError",
    "StateSpace",
    "CrfModel",
    "bio_allowed",
    "emission_scores",
    "log_partition",
    "marginals",
    "viterbi",
    "sequence_score",
    "sequence_log_prob",
]

MAX_ORDER = 3
TIE_TOLERANCE = 1e-9


class InfeasibleError(ValueError):
    """No label sequence has finite score under the active constraints."""

    def __init__(self, msg="infeasible constraints"):
        super().__init__(msg)


def bio_allowed(constraints: bool) -> tuple[np.ndarray, np.ndarray]:
    """``(allowed[prev, next], allowed_start[label])`` boolean tables.

    With constraints on, I-REF and O-REF may not follow O nor open a
    document. I-REF after O-REF and O-REF after O-REF stay legal.
    """
    allowed = np.ones((4, 4), dtype=np.bool_)
    if constraints:
        allowed[Label.O, Label.I_REF] = False
        allowed[Label.O, Label.O_REF] = False
    return allowed, allowed[Label.O].copy()


class StateSpace:
    """All m-tuples of labels, indexed lexicographically in label order."""

    def __init__(self, order: int):
        if not 1 <= order <= MAX_ORDER:
            raise ValueError(f"Markov order must be in 1..{MAX_ORDER}, got {order}")
        self.order = order
        self.size = 4**order
        s = np.arange(self.size)
        y = np.arange(4)
        self.succ = (s[:, None] * 4 + y[None, :]) % self.size
        self.last = s % 4
        self.pred = y[None, :] * (self.size // 4) + (s // 4)[:, None]
        self.start = self.size - 4 + y
        self.states = tuple(itertools.product(LABELS, repeat=order))

    def state_of(self, history: Sequence[Label]) -> int:
        """Index of the state whose labels are the last ``m`` of ``history``,
        left-padded with O."""
        pad = [Label.O] * max(0, self.order - len(history))
        idx = 0
        for lab in (pad + list(history))[-self.order:]:
            idx = idx * 4 + int(lab)
        return idx

    def state_name(self, s: int) -> str:
        return ",".join(lab.tag for lab in self.states[s])

    def transition_names(self) -> list[str]:
        return [
            f"T:{self.state_name(s)}>{self.state_name(int(self.succ[s, y]))}"
            for s in range(self.size)
            for y in range(4)
        ]

    def path(self, labels: Sequence[Label]) -> np.ndarray:
        out = np.empty(len(labels), dtype=np.int64)
        s = self.start[int(labels[0])] if len(labels) else 0
        for t, lab in enumerate(labels):
            s = self.start[int(lab)] if t == 0 else self.succ[s, int(lab)]
            out[t] = s
        return out


@lru_cache(maxsize=None)
def state_space(order: int) -> StateSpace:
    return StateSpace(order)


def n_parameters(n_features: int, order: int) -> int:
    return 4 * n_features + 4 * 4**order


@dataclass(frozen=True, eq=False)
class CrfModel:
    order: int
    space: FeatureSpace
    weights: np.ndarray
    config: FeatureConfig = field(default_factory=FeatureConfig)
    constraints_default: bool = True
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        states = state_space(self.order)
        w = np.array(self.weights, dtype=np.float64)
        expected = n_parameters(len(self.space), self.order)
        if w.shape != (expected,):
            raise ValueError(f"expected {expected} weights, got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "_states", states)

    @classmethod
    def zeros(cls, order: int, space: FeatureSpace, config: FeatureConfig | None = None, **kw) -> "CrfModel":
        return cls(order, space, np.zeros(n_parameters(len(space), order)), config or FeatureConfig(), **kw)

    @property
    def states(self) -> StateSpace:
        return self._states

    @property
    def emission_weights(self) -> np.ndarray:
        n = len(self.space)
        return self.weights[: 4 * n].reshape(n, 4)

    @property
    def transition_weights(self) -> np.ndarray:
        n = len(self.space)
        return self.weights[4 * n:].reshape(self.states.size, 4)

    @cached_property
    def parameter_names(self) -> tuple[str, ...]:
        pairs = [f"{name}~{lab.tag}" for name in self.space.names for lab in LABELS]
        return tuple(pairs + self.states.transition_names())

    def with_weights(self, weights) -> "CrfModel":
        return CrfModel(self.order, self.space, weights, self.config, self.constraints_default, dict(self.metadata))


# ---------------------------------------------------------------------------
# inference


def emission_scores(model: CrfModel, vectors: Sequence[FeatureVector]) -> np.ndarray:
    W = model.emission_weights
    E = np.zeros((len(vectors), 4))
    for t, vec in enumerate(vectors):
        if vec.active:
            E[t] = W[list(vec.active)].sum(axis=0)
    return E


def _emissions(model: CrfModel, vectors) -> np.ndarray:
    if len(vectors) == 0:
        raise ValueError("empty sequence (T == 0)")
    if isinstance(vectors, np.ndarray):
        return np.ascontiguousarray(vectors, dtype=np.float64)
    return emission_scores(model, vectors)


def _tables(model: CrfModel, constraints: bool):
    st = model.states
    allowed, allowed_start = bio_allowed(constraints)
    trans = np.ascontiguousarray(model.transition_weights)
    return st, trans, allowed, allowed_start


def forward_backward(E, trans, st: StateSpace, allowed, allowed_start):
    """Return ``(log_z, label_marginals, expected_transitions)``."""
    alpha = _kernels.forward(E, trans, st.pred, st.last, st.start, allowed, allowed_start)
    log_z = _kernels.log_partition(alpha)
    if log_z == -np.inf:
        raise InfeasibleError()
    beta = _kernels.backward(E, trans, st.succ, st.last, allowed)
    marg, texp = _kernels.posteriors(E, trans, st.succ, st.last, allowed, alpha, beta, log_z)
    return log_z, marg, texp


def log_partition(model: CrfModel, vectors, constraints: bool = False) -> float:
    """``log Z(x)`` by the forward recursion; ``-inf`` when infeasible.

    ``vectors`` is a sequence of :class:`FeatureVector` or a precomputed
    ``(T, 4)`` emission-score array.
    """
    E = _emissions(model, vectors)
    st, trans, allowed, allowed_start = _tables(model, constraints)
    alpha = _kernels.forward(E, trans, st.pred, st.last, st.start, allowed, allowed_start)
    return float(_kernels.log_partition(alpha))


def marginals(model: CrfModel, vectors, constraints: bool = False) -> np.ndarray:
    """``(T, 4)`` array of per-line label posteriors."""
    E = _emissions(model, vectors)
    st, trans, allowed, allowed_start = _tables(model, constraints)
    return forward_backward(E, trans, st, allowed, allowed_start)[1]


def viterbi(model: CrfModel, vectors, constraints: bool | None = None) -> tuple[list[Label], float]:
    """Highest-scoring label sequence and its score.

    Among equal-scoring sequences the lexicographically smallest one under
    B-REF < I-REF < O-REF < O is returned.
    """
    if constraints is None:
        constraints = model.constraints_default
    E = _emissions(model, vectors)
    st, trans, allowed, allowed_start = _tables(model, constraints)
    bm = _kernels.backward_max(E, trans, st.succ, st.last, allowed)
    path, best = _kernels.greedy_decode(
        E, trans, st.succ, st.start, st.last, allowed, allowed_start, bm, TIE_TOLERANCE
    )
    if not np.isfinite(best):
        raise InfeasibleError()
    labels = [Label(int(y)) for y in path]
    return labels, _score(E, trans, st, labels)


def _score(E, trans, st: StateSpace, labels: Sequence[Label]) -> float:
    y = np.fromiter((int(lab) for lab in labels), dtype=np.int64, count=len(labels))
    total = float(E[np.arange(len(y)), y].sum())
    if len(y) > 1:
        path = st.path(labels)
        total += float(trans[path[:-1], y[1:]].sum())
    return total


def _feasible(labels: Sequence[Label], constraints: bool) -> bool:
    allowed, allowed_start = bio_allowed(constraints)
    if not allowed_start[int(labels[0])]:
        return False
    return all(allowed[int(a), int(b)] for a, b in zip(labels, labels[1:]))


def sequence_score(model: CrfModel, vectors, labels: Sequence[Label]) -> float:
    """Unnormalized score ``S(y)`` (constraints ignored)."""
    E = _emissions(model, vectors)
    if len(labels) != E.shape[0]:
        raise ValueError(f"{len(labels)} labels for {E.shape[0]} lines")
    return _score(E, np.asarray(model.transition_weights), model.states, [Label(y) for y in labels])


def sequence_log_prob(model: CrfModel, vectors, labels: Sequence[Label], constraints: bool = False) -> float:
    """``log p(y | x)``; ``-inf`` if ``y`` violates active constraints."""
    E = _emissions(model, vectors)
    if len(labels) != E.shape[0]:
        raise ValueError(f"{len(labels)} labels for {E.shape[0]} lines")
    labels = [Label(y) for y in labels]
    if not _feasible(labels, constraints):
        return -np.inf
    log_z = log_partition(model, E, constraints)
    return _score(E, np.asarray(model.transition_weights), model.states, labels) - log_z
