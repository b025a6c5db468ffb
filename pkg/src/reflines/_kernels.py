"""Compiled log-domain dynamic programs over expanded label states.

Conventions shared by all kernels (``S`` expanded states, 4 labels):

* ``E[t, y]``      emission score of label ``y`` at line ``t``
* ``trans[s, y]``  score of moving from state ``s`` to ``succ[s, y]``
* ``pred[s, j]``   the 4 predecessor states of ``s``
* ``last[s]``      label carried by state ``s``
* ``start[y]``     state occupied at ``t = 0`` when the first label is ``y``
* ``allowed[a, b]`` whether label ``b`` may follow label ``a``;
  ``allowed_start[y]`` whether ``y`` may open a document
"""

import numpy as np
from numba import njit

NEG_INF = -np.inf


@njit(cache=True, nogil=True)
def _lse(values, n):
    m = NEG_INF
    for k in range(n):
        if values[k] > m:
            m = values[k]
    if m == NEG_INF:
        return NEG_INF
    total = 0.0
    for k in range(n):
        total += np.exp(values[k] - m)
    return m + np.log(total)


@njit(cache=True, nogil=True)
def forward(E, trans, pred, last, start, allowed, allowed_start):
    T = E.shape[0]
    S = trans.shape[0]
    alpha = np.full((T, S), NEG_INF)
    for y in range(4):
        if allowed_start[y]:
            alpha[0, start[y]] = E[0, y]
    buf = np.empty(4)
    for t in range(1, T):
        for s in range(S):
            y = last[s]
            for j in range(4):
                p = pred[s, j]
                a = alpha[t - 1, p]
                if a == NEG_INF or not allowed[last[p], y]:
                    buf[j] = NEG_INF
                else:
                    buf[j] = a + trans[p, y]
            v = _lse(buf, 4)
            if v != NEG_INF:
                alpha[t, s] = E[t, y] + v
    return alpha


@njit(cache=True, nogil=True)
def backward(E, trans, succ, last, allowed):
    T = E.shape[0]
    S = trans.shape[0]
    beta = np.full((T, S), NEG_INF)
    beta[T - 1, :] = 0.0
    buf = np.empty(4)
    for t in range(T - 2, -1, -1):
        for s in range(S):
            for y in range(4):
                b = beta[t + 1, succ[s, y]]
                if b == NEG_INF or not allowed[last[s], y]:
                    buf[y] = NEG_INF
                else:
                    buf[y] = trans[s, y] + E[t + 1, y] + b
            beta[t, s] = _lse(buf, 4)
    return beta


@njit(cache=True, nogil=True)
def log_partition(alpha):
    T, S = alpha.shape
    return _lse(alpha[T - 1], S)


@njit(cache=True, nogil=True)
def posteriors(E, trans, succ, last, allowed, alpha, beta, log_z):
    """Per-line label marginals and expected transition counts."""
    T = E.shape[0]
    S = trans.shape[0]
    label_marg = np.zeros((T, 4))
    trans_exp = np.zeros((S, 4))
    for t in range(T):
        for s in range(S):
            a = alpha[t, s]
            if a == NEG_INF:
                continue
            label_marg[t, last[s]] += np.exp(a + beta[t, s] - log_z)
            if t + 1 < T:
                for y in range(4):
                    if not allowed[last[s], y]:
                        continue
                    b = beta[t + 1, succ[s, y]]
                    if b == NEG_INF:
                        continue
                    trans_exp[s, y] += np.exp(a + trans[s, y] + E[t + 1, y] + b - log_z)
    return label_marg, trans_exp


@njit(cache=True, nogil=True)
def backward_max(E, trans, succ, last, allowed):
    """Best achievable score of the remaining lines from each state."""
    T = E.shape[0]
    S = trans.shape[0]
    bm = np.full((T, S), NEG_INF)
    bm[T - 1, :] = 0.0
    for t in range(T - 2, -1, -1):
        for s in range(S):
            best = NEG_INF
            for y in range(4):
                if not allowed[last[s], y]:
                    continue
                b = bm[t + 1, succ[s, y]]
                if b == NEG_INF:
                    continue
                v = trans[s, y] + E[t + 1, y] + b
                if v > best:
                    best = v
            bm[t, s] = best
    return bm


@njit(cache=True, nogil=True)
def greedy_decode(E, trans, succ, start, last, allowed, allowed_start, bm, rel_tol):
    """Lexicographically smallest label path attaining the optimum in ``bm``.

    Walks forward choosing, at each line, the smallest label whose best
    completion reaches the global optimum (within ``rel_tol``).
    """
    T = E.shape[0]
    path = np.empty(T, dtype=np.int64)
    best = NEG_INF
    for y in range(4):
        if allowed_start[y]:
            v = E[0, y] + bm[0, start[y]]
            if v > best:
                best = v
    if best == NEG_INF:
        return path, best
    tol = rel_tol * max(1.0, abs(best))
    prefix = 0.0
    s = -1
    for t in range(T):
        chosen = -1
        top = -1
        top_v = NEG_INF
        for y in range(4):
            if t == 0:
                if not allowed_start[y]:
                    continue
                nxt = start[y]
                v = E[0, y] + bm[0, nxt]
            else:
                if not allowed[last[s], y]:
                    continue
                nxt = succ[s, y]
                v = prefix + trans[s, y] + E[t, y] + bm[t, nxt]
            if v > top_v:
                top = y
                top_v = v
            if chosen < 0 and v >= best - tol:
                chosen = y
        if chosen < 0:
            chosen = top
        y = chosen
        if t == 0:
            prefix = E[0, y]
            s = start[y]
        else:
            prefix += trans[s, y] + E[t, y]
            s = succ[s, y]
        path[t] = y
    return path, prefix
