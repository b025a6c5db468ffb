"""Maximum-likelihood training with an L2 (Gaussian) prior.

The objective maximized is::

    L(w) = sum_d log p(y_d | x_d; w) - ||w||^2 / (2 sigma^2)

with BIO constraints switched off so that noisy gold sequences stay finite.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .corpus import LabeledDocument, document_to_json, gold_documents
from .crf import CrfModel, StateSpace, bio_allowed, forward_backward, n_parameters, state_space
from .evaluation import Metrics, evaluate
from .features import FeatureConfig, FeatureSpace, build_feature_space, to_csr, vectorize

__all__ = [
    "TrainConfig",
    "TrainReport",
    "TrainingData",
    "TrainingError",
    "prepare",
    "objective_and_gradient",
    "train",
    "kfold_splits",
    "kfold_evaluate",
    "corpus_hash",
]

log = logging.getLogger(__name__)

OPTIMIZERS = ("lbfgs", "sgd")
# SGD step size halves after this many epochs: eta_k = lr / (1 + k / SGD_DECAY_EPOCHS)
SGD_DECAY_EPOCHS = 10


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    l2_sigma: float = 10.0
    max_iterations: int = 200
    convergence_tol: float = 1e-6
    optimizer: str = "lbfgs"
    seed: int = 0
    learning_rate: float = 0.1

    def __post_init__(self):
        if self.l2_sigma <= 0:
            raise ValueError("l2_sigma must be positive")
        if self.max_iterations <= 0:
            raise ValueError("max_iterations must be positive")
        if not 0 < self.convergence_tol < 1:
            raise ValueError("convergence_tol must be in (0, 1)")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class TrainReport:
    iterations: int = 0
    initial_objective: float = float("nan")
    final_objective: float = float("nan")
    objective_trace: list[float] = field(default_factory=list)
    grad_norm_trace: list[float] = field(default_factory=list)
    wall_time: float = 0.0
    converged: bool = False
    optimizer: str = "lbfgs"
    message: str = ""

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class TrainingData:
    """A labeled corpus vectorized once for repeated objective evaluations."""

    order: int
    n_features: int
    doc_ids: list[str]
    X: object  # scipy.sparse.csr_matrix, lines x features
    gold: np.ndarray
    offsets: np.ndarray
    empirical_emission: np.ndarray
    empirical_transition: np.ndarray

    @property
    def states(self) -> StateSpace:
        return state_space(self.order)

    @property
    def n_parameters(self) -> int:
        return n_parameters(self.n_features, self.order)

    def doc_slices(self):
        return [slice(int(a), int(b)) for a, b in zip(self.offsets[:-1], self.offsets[1:])]


def prepare(documents: Sequence[LabeledDocument], space: FeatureSpace, config: FeatureConfig,
            order: int) -> TrainingData:
    documents = gold_documents(documents)
    if not documents:
        raise ValueError("empty corpus")
    st = state_space(order)
    vectors, gold, offsets = [], [], [0]
    trans_counts = np.zeros((st.size, 4))
    for doc in documents:
        vectors.extend(vectorize(doc, config, space))
        labels = np.array([int(y) for y in doc.labels], dtype=np.int64)
        gold.append(labels)
        offsets.append(offsets[-1] + len(labels))
        if len(labels) > 1:
            path = st.path(doc.labels)
            np.add.at(trans_counts, (path[:-1], labels[1:]), 1.0)
    X = to_csr(vectors, len(space))
    gold_arr = np.concatenate(gold)
    Y = np.zeros((len(gold_arr), 4))
    Y[np.arange(len(gold_arr)), gold_arr] = 1.0
    return TrainingData(
        order=order,
        n_features=len(space),
        doc_ids=[doc.doc_id for doc in documents],
        X=X,
        gold=gold_arr,
        offsets=np.array(offsets, dtype=np.int64),
        empirical_emission=np.asarray(X.T @ Y),
        empirical_transition=trans_counts,
    )


def _split(weights: np.ndarray, data: TrainingData):
    n = data.n_features
    return weights[: 4 * n].reshape(n, 4), weights[4 * n:].reshape(data.states.size, 4)


def objective_and_gradient(weights: np.ndarray, data: TrainingData, l2_sigma: float) -> tuple[float, np.ndarray]:
    """Regularized conditional log-likelihood and its gradient.

    The gradient is empirical minus expected feature counts, minus
    ``w / sigma^2``. Expected counts come from forward-backward marginals.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (data.n_parameters,):
        raise ValueError(f"expected {data.n_parameters} weights, got {weights.shape}")
    W_e, W_t = _split(weights, data)
    W_t = np.ascontiguousarray(W_t)
    st = data.states
    allowed, allowed_start = bio_allowed(False)
    E = np.asarray(data.X @ W_e)
    P = np.empty_like(E)
    expected_t = np.zeros_like(W_t)
    log_z_total = 0.0
    for doc_id, sl in zip(data.doc_ids, data.doc_slices()):
        log_z, marg, texp = forward_backward(np.ascontiguousarray(E[sl]), W_t, st, allowed, allowed_start)
        if not np.isfinite(log_z):
            raise TrainingError(f"non-finite log-partition for document {doc_id!r}")
        log_z_total += log_z
        P[sl] = marg
        expected_t += texp
    gold_score = float(E[np.arange(len(data.gold)), data.gold].sum()) + float((W_t * data.empirical_transition).sum())
    inv_var = 1.0 / (l2_sigma * l2_sigma)
    objective = gold_score - log_z_total - 0.5 * inv_var * float(weights @ weights)
    if not np.isfinite(objective):
        raise TrainingError("non-finite objective")
    grad_e = data.empirical_emission - np.asarray(data.X.T @ P) - inv_var * W_e
    grad_t = data.empirical_transition - expected_t - inv_var * W_t
    return objective, np.concatenate([grad_e.ravel(), grad_t.ravel()])


def _doc_objective_and_gradient(weights, data: TrainingData, sl: slice, X_doc, Y_doc):
    W_e, W_t = _split(weights, data)
    W_t = np.ascontiguousarray(W_t)
    st = data.states
    allowed, allowed_start = bio_allowed(False)
    E = np.ascontiguousarray(X_doc @ W_e)
    log_z, marg, texp = forward_backward(E, W_t, st, allowed, allowed_start)
    gold = data.gold[sl]
    counts = np.zeros_like(W_t)
    if len(gold) > 1:
        np.add.at(counts, (st.path(gold)[:-1], gold[1:]), 1.0)
    score = float(E[np.arange(len(gold)), gold].sum()) + float((W_t * counts).sum())
    grad_e = np.asarray(X_doc.T @ (Y_doc - marg))
    return score - log_z, np.concatenate([grad_e.ravel(), (counts - texp).ravel()])


def corpus_hash(documents: Sequence[LabeledDocument]) -> str:
    h = hashlib.sha256()
    for doc in documents:
        h.update(json.dumps(document_to_json(doc), sort_keys=True, ensure_ascii=False).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def _lbfgs(data: TrainingData, cfg: TrainConfig, report: TrainReport) -> np.ndarray:
    cache: dict[bytes, tuple[float, np.ndarray]] = {}

    def fun(w):
        key = w.tobytes()
        if key not in cache:
            obj, grad = objective_and_gradient(w, data, cfg.l2_sigma)
            if len(cache) > 8:
                cache.clear()
            cache[key] = (obj, grad)
        obj, grad = cache[key]
        return -obj, -grad

    def callback(intermediate_result):
        w = intermediate_result.x
        obj, grad = cache.get(w.tobytes()) or objective_and_gradient(w, data, cfg.l2_sigma)
        report.objective_trace.append(float(obj))
        report.grad_norm_trace.append(float(np.linalg.norm(grad)))

    w0 = np.zeros(data.n_parameters)
    report.initial_objective = -fun(w0)[0]
    result = optimize.minimize(
        fun,
        w0,
        jac=True,
        method="L-BFGS-B",
        callback=callback,
        options={
            "maxiter": cfg.max_iterations,
            "maxfun": 20 * cfg.max_iterations,
            "ftol": cfg.convergence_tol,
            "gtol": 1e-6,
        },
    )
    report.iterations = len(report.objective_trace)
    report.converged = result.status != 1
    report.message = str(result.message)
    if result.status == 2:
        log.warning("L-BFGS stopped early: %s", result.message)
    return result.x


def _sgd(data: TrainingData, cfg: TrainConfig, report: TrainReport) -> np.ndarray:
    rng = np.random.default_rng(cfg.seed)
    w = np.zeros(data.n_parameters)
    slices = data.doc_slices()
    n_docs = len(slices)
    X_docs = [data.X[sl] for sl in slices]
    Y_docs = []
    for sl in slices:
        Y = np.zeros((sl.stop - sl.start, 4))
        Y[np.arange(sl.stop - sl.start), data.gold[sl]] = 1.0
        Y_docs.append(Y)
    inv_var = 1.0 / (cfg.l2_sigma * cfg.l2_sigma)
    previous = report.initial_objective = objective_and_gradient(w, data, cfg.l2_sigma)[0]
    step = 0
    for epoch in range(cfg.max_iterations):
        for d in rng.permutation(n_docs):
            eta = cfg.learning_rate / (1.0 + step / (n_docs * SGD_DECAY_EPOCHS))
            _, grad = _doc_objective_and_gradient(w, data, slices[d], X_docs[d], Y_docs[d])
            w = w + eta * (grad - inv_var * w / n_docs)
            step += 1
        obj, grad = objective_and_gradient(w, data, cfg.l2_sigma)
        report.objective_trace.append(obj)
        report.grad_norm_trace.append(float(np.linalg.norm(grad)))
        if abs(obj - previous) <= cfg.convergence_tol * max(abs(obj), abs(previous), 1.0):
            report.converged = True
            break
        previous = obj
    report.iterations = len(report.objective_trace)
    report.message = "converged" if report.converged else "maximum number of epochs reached"
    return w


def train(documents: Sequence[LabeledDocument], feature_config: FeatureConfig | None = None, order: int = 2,
          train_config: TrainConfig | None = None, constraints_default: bool = True) -> tuple[CrfModel, TrainReport]:
    """Fit a model on ``documents``; weights start at zero."""
    feature_config = feature_config or FeatureConfig()
    cfg = train_config or TrainConfig()
    documents = gold_documents(documents)
    if not documents:
        raise ValueError("empty corpus")
    started = time.perf_counter()
    space = build_feature_space(documents, feature_config)
    data = prepare(documents, space, feature_config, order)
    report = TrainReport(optimizer=cfg.optimizer)
    if cfg.optimizer == "lbfgs":
        weights = _lbfgs(data, cfg, report)
    else:
        weights = _sgd(data, cfg, report)
    if not np.all(np.isfinite(weights)):
        raise TrainingError("training diverged: non-finite weights")
    report.final_objective = report.objective_trace[-1] if report.objective_trace else report.initial_objective
    report.wall_time = time.perf_counter() - started
    metadata = {
        "corpus_hash": corpus_hash(documents),
        "n_documents": len(documents),
        "objective": report.final_objective,
        "iterations": report.iterations,
        "optimizer": cfg.optimizer,
        "l2_sigma": cfg.l2_sigma,
    }
    model = CrfModel(order, space, weights, feature_config, constraints_default, metadata)
    return model, report


def kfold_splits(n: int, k: int, seed: int = 0) -> list[np.ndarray]:
    """Deterministic document-index folds."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if n < k:
        raise ValueError(f"corpus of {n} documents is smaller than k={k}")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(fold) for fold in np.array_split(perm, k)]


def kfold_evaluate(documents: Sequence[LabeledDocument], k: int, feature_config: FeatureConfig | None = None,
                   order: int = 2, train_config: TrainConfig | None = None, constraints: bool | None = None,
                   jobs: int = 1) -> list[Metrics]:
    """Train on k-1 folds and evaluate on the held-out fold, for every fold."""
    documents = gold_documents(documents)
    cfg = train_config or TrainConfig()
    results = []
    for held_out in kfold_splits(len(documents), k, cfg.seed):
        held = set(held_out.tolist())
        train_docs = [d for i, d in enumerate(documents) if i not in held]
        test_docs = [documents[i] for i in held_out]
        model, _ = train(train_docs, feature_config, order, cfg)
        results.append(evaluate(model, test_docs, constraints, jobs))
    return results
