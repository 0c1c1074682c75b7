"""Rényi fidelity, divergence and mutual information for finite alphabets.

Values are reported in bits. Internally everything is computed from natural
logarithms and converted once; zero masses are carried as ``-inf`` logs so the
same kernel serves single-letter vectors and type-aggregated n-letter sums.

Conventions for a zero in the second argument at a point where the first is
positive: for α ≥ 1 the divergence is +∞; for α < 1 the term contributes
nothing to the α-sum, and the divergence is +∞ only if every term vanishes.
+∞ is returned as ``math.inf``.
"""

from __future__ import annotations

import math
from typing import Optional, Tuple

import numpy as np

from .distributions import LN2, log_sum_exp, Channel, JointDistribution, OrderLike, as_order

__all__ = [
    "renyi_fidelity",
    "renyi_divergence",
    "relative_entropy",
    "divergence_from_logs",
    "renyi_mutual_information",
    "mutual_information_from_input",
    "optimal_reference_output",
    "channel_divergence",
]


def _log(a: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(a)


def divergence_from_logs(
    log_p: np.ndarray,
    log_q: np.ndarray,
    alpha: OrderLike,
    log_mult: Optional[np.ndarray] = None,
) -> float:
    """D_α in bits from natural-log masses, optionally with log multiplicities.

    ``log_mult[i]`` is the log of how many atoms share the masses
    ``(exp(log_p[i]), exp(log_q[i]))``; this is how type classes are summed
    without enumerating words.
    """
    order = as_order(alpha)
    log_p = np.asarray(log_p, dtype=float)
    log_q = np.asarray(log_q, dtype=float)
    if log_p.shape != log_q.shape:
        raise ValueError(f"alphabet mismatch: {log_p.shape} vs {log_q.shape}")
    if log_mult is None:
        log_mult = np.zeros_like(log_p)
    else:
        log_mult = np.broadcast_to(np.asarray(log_mult, dtype=float), log_p.shape)

    on = np.isfinite(log_p) & np.isfinite(log_mult)
    lp, lq, lm = log_p[on], log_q[on], log_mult[on]
    if lp.size == 0:
        raise ValueError("first argument has empty support")
    q_zero = ~np.isfinite(lq)

    if order.is_zero:
        if np.all(q_zero):
            return math.inf
        return -float(log_sum_exp(lm[~q_zero] + lq[~q_zero])) / LN2

    if order.is_one:
        if np.any(q_zero):
            return math.inf
        w = np.exp(lm + lp)
        return float(np.sum(w * (lp - lq))) / LN2

    if order.is_inf:
        if np.any(q_zero):
            return math.inf
        return float(np.max(lp - lq)) / LN2

    a = order.value
    if a > 1:
        if np.any(q_zero):
            return math.inf
        terms = lm + a * lp + (1 - a) * lq
    else:
        keep = ~q_zero
        if not np.any(keep):
            return math.inf
        terms = lm[keep] + a * lp[keep] + (1 - a) * lq[keep]
    return float(log_sum_exp(terms)) / ((a - 1) * LN2)


def _pair(p, q) -> Tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    if p.shape != q.shape:
        raise ValueError(f"alphabet mismatch: {p.size} vs {q.size}")
    if np.any(q < 0) or np.any(p < 0):
        raise ValueError("arguments must be nonnegative")
    return p, q


def renyi_divergence(p, q, alpha: OrderLike) -> float:
    """D_α(p‖q) in bits; ``q`` may be any nonnegative vector."""
    p, q = _pair(p, q)
    return divergence_from_logs(_log(p), _log(q), alpha)


def relative_entropy(p, q) -> float:
    return renyi_divergence(p, q, 1)


def renyi_fidelity(p, q, alpha: OrderLike) -> float:
    """F_α(p, q) = 2^{-D_α(p‖q)}."""
    d = renyi_divergence(p, q, alpha)
    return 0.0 if d == math.inf else 2.0 ** (-d)


def _joint_parts(pxy) -> Tuple[np.ndarray, np.ndarray]:
    if not isinstance(pxy, JointDistribution):
        pxy = JointDistribution(pxy)
    return pxy.probs.sum(axis=1), pxy.conditional()


def mutual_information_from_input(px, w, alpha: OrderLike) -> float:
    """I_α(X:Y) of P_X · W via the closed forms (Sibson's form for finite α)."""
    order = as_order(alpha)
    px = np.asarray(px, dtype=float)
    rows = w.rows if isinstance(w, Channel) else np.asarray(w, dtype=float)
    on = px > 0
    px, rows = px[on], rows[on]

    if order.is_zero:
        reach = (rows > 0).astype(float)
        return -math.log2(float(np.max(px @ reach)))
    if order.is_inf:
        return math.log2(float(np.sum(rows.max(axis=0))))
    if order.is_one:
        qy = px @ rows
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(rows > 0, rows / qy[None, :], 1.0)
        return float(np.sum(px[:, None] * rows * np.log2(ratio)))
    a = order.value
    inner = log_sum_exp(_log(px)[:, None] + a * _log(rows), axis=0)
    return a / (a - 1) * float(log_sum_exp(inner / a)) / LN2


def renyi_mutual_information(pxy, alpha: OrderLike) -> float:
    """I_α(X:Y) = min_Q D_α(P_XY ‖ P_X × Q) via the closed forms."""
    px, cond = _joint_parts(pxy)
    return mutual_information_from_input(px, cond, alpha)


def optimal_reference_output(px, w, alpha: OrderLike) -> np.ndarray:
    """The Q_Y attaining min_Q D_α(P_X·W ‖ P_X × Q)."""
    order = as_order(alpha)
    px = np.asarray(px, dtype=float)
    rows = w.rows if isinstance(w, Channel) else np.asarray(w, dtype=float)
    on = px > 0
    px, rows = px[on], rows[on]
    if order.is_one:
        q = px @ rows
    elif order.is_inf:
        q = rows.max(axis=0)
    elif order.is_zero:
        # all mass on one most-reachable output
        reach = px @ (rows > 0).astype(float)
        q = np.zeros(rows.shape[1])
        q[int(np.argmax(reach))] = 1.0
    else:
        a = order.value
        inner = log_sum_exp(_log(px)[:, None] + a * _log(rows), axis=0)
        q = np.exp(inner / a - np.max(inner / a))
    return q / q.sum()


def channel_divergence(w: Channel, n: Channel, alpha: OrderLike) -> Tuple[float, int]:
    """max_x D_α(W(·|x) ‖ N(·|x)) and the maximizing input."""
    if w.shape != n.shape:
        raise ValueError(f"alphabet mismatch: {w.shape} vs {n.shape}")
    vals = [renyi_divergence(w.rows[x], n.rows[x], alpha) for x in range(w.input_size)]
    best = int(np.argmax(vals))
    return vals[best], best
