"""Rényi capacity with a certified duality gap, and the right derivative R̂(t).

The primal side maximizes I_α(P, W) over input laws with an exponentiated
gradient step: for Sibson's closed form the partial derivative in P(x) is an
increasing function of D_α(W_x‖Q_P), where Q_P is the optimal reference
output for P. Every iterate therefore also yields a dual certificate
``max_x D_α(W_x‖Q_P)``, and the loop stops when the two agree within ``tol``.
At α = 1 with unit step this is Blahut–Arimoto.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, root

from .distributions import LN2, log_sum_exp, Channel, Distribution, OrderLike, RenyiOrder, as_order

__all__ = [
    "CapacityResult",
    "CapacityConvergenceError",
    "renyi_capacity",
    "capacity_value",
    "RightDerivative",
    "right_derivative_report",
    "capacity_right_derivative",
]

DEFAULT_TOL = 1e-6
MAX_ITER = 100_000


@dataclass(frozen=True)
class CapacityResult:
    value: float
    optimal_input: Distribution
    optimal_output: Distribution
    duality_gap: float
    order: RenyiOrder
    primal: float
    dual: float
    iterations: int = 0


class CapacityConvergenceError(RuntimeError):
    """Raised when the gap is still above tolerance at the iteration cap."""

    def __init__(self, best_gap: float, partial: CapacityResult):
        super().__init__(f"capacity solve stopped with duality gap {best_gap:.3e}")
        self.best_gap = best_gap
        self.partial = partial


def _logs(a: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(a)


class _Sibson:
    """Primal value and per-row divergences (nats) for a fixed channel and order."""

    def __init__(self, rows: np.ndarray, alpha: float):
        self.alpha = alpha
        self.pos = rows > 0
        self.log_w = _logs(rows)
        self.rows = rows

    def output(self, log_p: np.ndarray):
        a = self.alpha
        if a == 1:
            q = np.exp(log_p) @ self.rows
            return _logs(q), None
        log_a = log_sum_exp(log_p[:, None] + a * self.log_w, axis=0)
        log_s = log_sum_exp(log_a / a)
        return log_a / a - log_s, log_s

    def evaluate(self, log_p: np.ndarray):
        a = self.alpha
        log_q, log_s = self.output(log_p)
        with np.errstate(invalid="ignore"):
            if a == 1:
                diff = np.where(self.pos, self.log_w - log_q[None, :], 0.0)
                d = np.sum(self.rows * diff, axis=1)
                # rows with mass where Q vanishes
                d[np.any(self.pos & ~np.isfinite(log_q)[None, :], axis=1)] = math.inf
                p = np.exp(log_p)
                on = p > 0
                primal = float(np.sum(p[on] * d[on]))
            elif abs(a - 1) < 0.5:
                # log1p/expm1 forms avoid the 1/(α−1) blow-up of rounding error near α = 1
                log_ratio = np.where(self.pos, self.log_w - log_q[None, :], 0.0)
                inner = np.where(self.pos, self.rows * np.expm1((a - 1) * log_ratio), 0.0)
                d = np.log1p(np.maximum(inner.sum(axis=1), -1.0)) / (a - 1)
                on = np.isfinite(log_p)
                d_top = float(np.max(d[on]))
                p = np.exp(log_p[on])
                spread = float(np.sum(p * np.expm1((a - 1) * (d[on] - d_top))))
                primal = d_top + math.log1p(max(spread, -1.0)) / (a - 1)
            else:
                terms = np.where(self.pos, a * self.log_w + (1 - a) * log_q[None, :], -np.inf)
                d = log_sum_exp(terms, axis=1) / (a - 1)
                primal = a / (a - 1) * float(log_s)
        return primal, d, log_q


def _polish(solver: _Sibson, log_p: np.ndarray, d: np.ndarray):
    """Newton solve of D_x = const over a few guesses of the optimal support.

    Returns the candidate with the smallest gap, or None.
    """
    best = None
    seen = set()
    for cut in (1e-9, 1e-4, 1e-2):
        on = np.flatnonzero(log_p > math.log(cut))
        if tuple(on) in seen:
            continue
        seen.add(tuple(on))
        cand = _polish_on(solver, log_p, on)
        if cand is not None and (best is None or cand[0] - np.max(cand[1]) > best[0] - np.max(best[1])):
            best = cand
    return best


def _polish_on(solver: _Sibson, log_p: np.ndarray, on: np.ndarray):
    if on.size < 2:
        return None

    def unpack(z):
        full = np.full(log_p.shape, -np.inf)
        zz = np.concatenate([[0.0], z])
        full[on] = zz - log_sum_exp(zz)
        return full

    def resid(z):
        _, dd, _ = solver.evaluate(unpack(z))
        return dd[on[1:]] - dd[on[0]]

    z0 = log_p[on[1:]] - log_p[on[0]]
    with np.errstate(all="ignore"):
        sol = root(resid, z0, method="hybr")
    if not np.all(np.isfinite(sol.x)):
        return None
    cand = unpack(sol.x)
    primal, dd, log_q = solver.evaluate(cand)
    if not np.isfinite(primal):
        return None
    return primal, dd, log_q, cand


def _finite_order(w: Channel, alpha: float, tol: float, max_iter: int) -> CapacityResult:
    order = RenyiOrder(alpha)
    nx = w.input_size
    solver = _Sibson(w.rows, alpha)
    tol_nats = tol * LN2

    log_p = np.full(nx, -math.log(nx))
    primal, d, log_q = solver.evaluate(log_p)
    best_primal, best_p = primal, log_p
    best_dual, best_q = float(np.max(d)), log_q
    eta = 1.0
    it = 0
    while best_dual - best_primal > tol_nats and it < max_iter:
        it += 1
        if it in (5, 12) or it % 25 == 0:
            polished = _polish(solver, log_p, d)
            if polished is not None:
                p_primal, p_d, p_q, p_log = polished
                if float(np.max(p_d)) < best_dual:
                    best_dual, best_q = float(np.max(p_d)), p_q
                if p_primal > best_primal:
                    best_primal, best_p = p_primal, p_log
                # restart from it only if no dropped input has a larger divergence
                on = np.isfinite(p_log)
                kkt = np.all(p_d[~on] <= np.max(p_d[on]) + tol_nats)
                if p_primal > primal and kkt:
                    log_p, primal, d = p_log, p_primal, p_d
                if best_dual - best_primal <= tol_nats:
                    break
        dmax = float(np.max(d[np.isfinite(d)])) if np.any(np.isfinite(d)) else 0.0
        step = np.minimum(d, dmax + 50.0) - dmax
        # keep every coordinate alive so mass can return to inputs a polish dropped
        cand = np.maximum(log_p, -700.0) + eta * step
        cand -= log_sum_exp(cand)
        c_primal, c_d, c_q = solver.evaluate(cand)
        c_dual = float(np.max(c_d))
        if c_dual < best_dual:
            best_dual, best_q = c_dual, c_q
        if c_primal >= primal - 1e-15:
            log_p, primal, d = cand, c_primal, c_d
            if primal > best_primal:
                best_primal, best_p = primal, log_p
            eta = min(eta * 1.5, 1e8)
        else:
            eta *= 0.5
            if eta < 1e-12:
                break

    gap = max(best_dual - best_primal, 0.0) / LN2
    result = CapacityResult(
        value=best_dual / LN2,
        optimal_input=Distribution(np.exp(best_p)),
        optimal_output=Distribution(np.exp(best_q)),
        duality_gap=gap,
        order=order,
        primal=best_primal / LN2,
        dual=best_dual / LN2,
        iterations=it,
    )
    if gap > tol:
        raise CapacityConvergenceError(gap, result)
    return result


def _infinite_order(w: Channel) -> CapacityResult:
    colmax = w.rows.max(axis=0)
    total = float(colmax.sum())
    q = colmax / total
    primal = math.log2(total)
    with np.errstate(divide="ignore"):
        dual = float(np.max(np.log2(np.where(w.rows > 0, w.rows / q[None, :], 0.0)).max(axis=1)))
    nx = w.input_size
    return CapacityResult(
        value=dual,
        optimal_input=Distribution.uniform(nx),
        optimal_output=Distribution(q),
        duality_gap=max(dual - primal, 0.0),
        order=RenyiOrder(math.inf),
        primal=primal,
        dual=dual,
    )


def _zero_order(w: Channel) -> CapacityResult:
    # primal: min_P max_y P(A_y), A_y = {x : W(y|x) > 0}
    # dual:   max_Q min_x Q(B_x), B_x = supp W_x
    inc = (w.rows > 0).astype(float)  # inc[x, y]
    nx, ny = inc.shape

    c = np.zeros(nx + 1)
    c[-1] = 1.0
    a_ub = np.hstack([inc.T, -np.ones((ny, 1))])
    a_eq = np.hstack([np.ones((1, nx)), np.zeros((1, 1))])
    bounds = [(0, None)] * nx + [(None, None)]
    prim = linprog(c, A_ub=a_ub, b_ub=np.zeros(ny), A_eq=a_eq, b_eq=[1.0], bounds=bounds, method="highs")

    c2 = np.zeros(ny + 1)
    c2[-1] = -1.0
    a_ub2 = np.hstack([-inc, np.ones((nx, 1))])
    a_eq2 = np.hstack([np.ones((1, ny)), np.zeros((1, 1))])
    bounds2 = [(0, None)] * ny + [(None, None)]
    dual = linprog(c2, A_ub=a_ub2, b_ub=np.zeros(nx), A_eq=a_eq2, b_eq=[1.0], bounds=bounds2, method="highs")
    if prim.status != 0 or dual.status != 0:
        raise RuntimeError(f"linear program failed: {prim.message} / {dual.message}")

    p = np.clip(prim.x[:nx], 0, None)
    q = np.clip(dual.x[:ny], 0, None)
    p, q = p / p.sum(), q / q.sum()
    primal_val = -math.log2(float(np.max(p @ inc)))
    dual_val = -math.log2(float(np.min(inc @ q)))
    return CapacityResult(
        value=dual_val,
        optimal_input=Distribution(p),
        optimal_output=Distribution(q),
        duality_gap=max(dual_val - primal_val, 0.0),
        order=RenyiOrder(0.0),
        primal=primal_val,
        dual=dual_val,
    )


@functools.lru_cache(maxsize=4096)
def _solve(w: Channel, alpha: float, tol: float, max_iter: int) -> CapacityResult:
    if alpha == 0:
        return _zero_order(w)
    if math.isinf(alpha):
        return _infinite_order(w)
    return _finite_order(w, alpha, tol, max_iter)


def renyi_capacity(
    w: Channel, order: OrderLike, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER
) -> CapacityResult:
    """I_α(W) = max_P I_α(X:Y) = min_Q max_x D_α(W_x‖Q), in bits.

    The returned ``value`` is the dual (upper) certificate. Results are
    memoized per (channel, order, tol).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    return _solve(w, float(as_order(order)), float(tol), int(max_iter))


def capacity_value(w: Channel, order: OrderLike, tol: float = DEFAULT_TOL) -> float:
    return renyi_capacity(w, order, tol).value


@dataclass(frozen=True)
class RightDerivative:
    value: float
    left: float
    right: float
    kink: bool


def _g(w: Channel, t: float, tol: float) -> float:
    return t * capacity_value(w, 1.0 + t, tol) if t > 0 else 0.0


def _richardson(f0: float, fs, h0: float) -> float:
    # fs[k] = f(t ± h0 / 2^k); one-sided differences have O(h) leading error
    d = [(fk - f0) / (h0 / 2**k) for k, fk in enumerate(fs)]
    d1 = [2 * d[k + 1] - d[k] for k in range(2)]
    return (4 * d1[1] - d1[0]) / 3


def right_derivative_report(
    w: Channel, t: float, h0: float = 1e-3, tol: float = 1e-6, solver_tol: float = 1e-11
) -> RightDerivative:
    """R̂(t), the right derivative of t ↦ t·I_{1+t}(W), with a kink diagnostic.

    Left and right derivatives are both Richardson-extrapolated one-sided
    differences; a kink is flagged when they differ by more than ``10·tol``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    g0 = _g(w, t, solver_tol)
    right = _richardson(g0, [_g(w, t + h0 / 2**k, solver_tol) for k in range(3)], h0)
    if t >= h0:
        left = _richardson(g0, [_g(w, t - h0 / 2**k, solver_tol) for k in range(3)], -h0)
    else:
        left = right
    return RightDerivative(value=right, left=left, right=right, kink=abs(right - left) > 10 * tol)


def capacity_right_derivative(w: Channel, t: float, h0: float = 1e-3) -> float:
    return right_derivative_report(w, t, h0).value
