"""Simulation rate, reliability function and strong converse exponent.

All 1-D searches rely on concavity (t ↦ t(r − I_{1+t}) is concave because
t ↦ t·I_{1+t} is convex) and use golden-section search with bracket growth.
Values are in bits per channel use; +∞ is ``math.inf``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .capacity import capacity_value, renyi_capacity
from .distributions import LN2, log_sum_exp, Channel, Distribution, OrderLike, RenyiOrder, as_order
from .measures import mutual_information_from_input

__all__ = [
    "ExponentKind",
    "ExponentOptimizer",
    "ExponentReport",
    "maximize_concave",
    "sup_t_objective",
    "reliability_function",
    "strong_converse_exponent",
    "beta_form_value",
    "variational_sc_exponent",
    "tilted_channel",
    "renyi_simulation_rate",
    "T_MAX",
]

T_MAX = 64.0
INNER_TOL = 1e-10
_GOLDEN = (math.sqrt(5) - 1) / 2
# |r - I_0| below this is treated as the α = 0 boundary
BOUNDARY_TOL = 1e-9


class ExponentKind(enum.Enum):
    RELIABILITY = "reliability_function"
    STRONG_CONVERSE = "strong_converse"
    SIMULATION_RATE = "simulation_rate"


@dataclass(frozen=True)
class ExponentOptimizer:
    t: Optional[float] = None
    beta: Optional[float] = None
    input_dist: Optional[Distribution] = None
    output_dist: Optional[Distribution] = None
    channel: Optional[Channel] = None


@dataclass(frozen=True)
class ExponentReport:
    kind: ExponentKind
    order: RenyiOrder
    rate_r: float
    value: float
    optimizer: ExponentOptimizer = field(default_factory=ExponentOptimizer)
    # set for α = 0 at r = I_0, where the exponent is left undefined
    boundary: bool = False


def _golden_max(f: Callable[[float], float], a: float, b: float, xtol: float) -> Tuple[float, float]:
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def maximize_concave(
    f: Callable[[float], float],
    lo: float,
    hi: float = T_MAX,
    step: float = 0.25,
    xtol: float = 1e-7,
) -> Tuple[float, float, bool]:
    """Maximize a concave f on [lo, hi] with geometric bracket growth.

    Returns ``(x_star, f(x_star), hit_upper)`` where ``hit_upper`` reports
    that f was still increasing at ``hi``.
    """
    f_lo = f(lo)
    prev_x, prev_f = lo, f_lo
    x, h = lo, step
    best_x, best_f = lo, f_lo
    while True:
        nx = min(x + h, hi)
        nf = f(nx)
        if nf < prev_f or nx >= hi:
            left = max(lo, prev_x - h / 2) if nf < prev_f else prev_x
            a, b = (left, nx) if nf < prev_f else (prev_x, hi)
            break
        prev_x, prev_f = nx, nf
        if nf > best_f:
            best_x, best_f = nx, nf
        x, h = nx, h * 2

    hit_upper = nx >= hi and nf >= prev_f
    gx, gf = _golden_max(f, a, b, xtol)
    cands = [(gx, gf), (best_x, best_f), (lo, f_lo), (nx, nf)]
    x_star, f_star = max(cands, key=lambda c: c[1])

    # three-point unimodality check; fall back to a dense grid if violated
    probe = [f(xx) for xx in np.linspace(a, b, 7)]
    if max(probe) > f_star + 1e-9 * max(1.0, abs(f_star)):
        grid = np.linspace(a, b, 401)
        vals = [f(xx) for xx in grid]
        k = int(np.argmax(vals))
        lo_k, hi_k = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
        x_star, f_star = _golden_max(f, lo_k, hi_k, xtol)
    return x_star, f_star, hit_upper


def _i_inf(w: Channel) -> float:
    return capacity_value(w, math.inf)


def _i(w: Channel, alpha: float) -> float:
    return capacity_value(w, alpha, INNER_TOL)


def sup_t_objective(
    w: Channel,
    r: float,
    t_lo: float = 0.0,
    capacity: Optional[Callable[[float], float]] = None,
    i_inf: Optional[float] = None,
    tol: float = 1e-9,
) -> Tuple[float, float]:
    """sup_{t ≥ t_lo} t·(r − I_{1+t}); returns ``(t_star, value)``.

    ``capacity`` maps an order to I_order; by default the channel's Rényi
    capacity. Supplying a fixed-joint mutual information reuses the same
    search for type-class computations.
    """
    if r < 0:
        raise ValueError("rate must be nonnegative")
    cap = capacity if capacity is not None else (lambda a: _i(w, a))
    top = i_inf if i_inf is not None else _i_inf(w)
    if r >= top:
        return math.inf, math.inf

    def obj(t: float) -> float:
        return 0.0 if t == 0 else t * (r - cap(1.0 + t))

    t_star, val, hit = maximize_concave(obj, t_lo, T_MAX)
    if hit:
        half = obj(T_MAX / 2)
        if val - half > tol and r >= top - tol:
            return math.inf, math.inf
    return t_star, val


def _capacity_optimizer(w: Channel, t: float) -> ExponentOptimizer:
    if not math.isfinite(t):
        res = renyi_capacity(w, math.inf)
    else:
        res = renyi_capacity(w, 1.0 + t, INNER_TOL)
    return ExponentOptimizer(t=t, input_dist=res.optimal_input, output_dist=res.optimal_output)


def reliability_function(w: Channel, r: float, order: OrderLike) -> ExponentReport:
    """E_rf^{(α)}(W, r)."""
    order = as_order(order)
    kind = ExponentKind.RELIABILITY
    if r < 0:
        raise ValueError("rate must be nonnegative")
    i_inf = _i_inf(w)
    if r >= i_inf:
        return ExponentReport(kind, order, r, math.inf, ExponentOptimizer(t=math.inf))

    if order.is_zero:
        i0 = capacity_value(w, 0)
        if abs(r - i0) <= BOUNDARY_TOL:
            return ExponentReport(kind, order, r, math.nan, boundary=True)
        return ExponentReport(kind, order, r, math.inf if r > i0 else 0.0)
    if order.is_inf:
        # t·(r − I_{1+t}) → −∞ for r < I_∞
        return ExponentReport(kind, order, r, 0.0, ExponentOptimizer(t=math.inf))

    t_lo = 0.0 if order.value <= 1 else order.value - 1
    t_star, val = sup_t_objective(w, r, t_lo, i_inf=i_inf)
    val = max(val, 0.0)
    opt = _capacity_optimizer(w, t_star) if math.isfinite(val) else ExponentOptimizer(t=t_star)
    return ExponentReport(kind, order, r, val, opt)


def beta_form_value(w: Channel, r: float, alpha: float, beta: float) -> float:
    """α(1−β)/(β(1−α))·(I_β(W) − r), the strong-converse objective."""
    if beta >= 1:
        return 0.0
    return alpha * (1 - beta) / (beta * (1 - alpha)) * (_i(w, beta) - r)


def strong_converse_exponent(w: Channel, r: float, order: OrderLike) -> ExponentReport:
    """E_sc^{(α)}(W, r)."""
    order = as_order(order)
    kind = ExponentKind.STRONG_CONVERSE
    if r < 0:
        raise ValueError("rate must be nonnegative")
    if order.is_zero or order.value >= 1:
        cap = renyi_capacity(w, order, INNER_TOL)
        return ExponentReport(
            kind,
            order,
            r,
            max(cap.value - r, 0.0),
            ExponentOptimizer(input_dist=cap.optimal_input, output_dist=cap.optimal_output),
        )

    alpha = order.value

    def obj(beta: float) -> float:
        return beta_form_value(w, r, alpha, beta)

    grid = np.linspace(alpha, 1.0, 33)
    vals = [obj(b) for b in grid]
    k = int(np.argmax(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    b_star, v_star = _golden_max(obj, lo, hi, 1e-8)
    if vals[k] > v_star:
        b_star, v_star = grid[k], vals[k]
    v_star = max(v_star, 0.0)
    if b_star >= 1:
        opt = ExponentOptimizer(beta=1.0)
    else:
        cap = renyi_capacity(w, b_star, INNER_TOL)
        opt = ExponentOptimizer(beta=b_star, input_dist=cap.optimal_input, output_dist=cap.optimal_output)
    return ExponentReport(kind, order, r, v_star, opt)


def renyi_simulation_rate(w: Channel, order: OrderLike) -> float:
    """Minimum rate for vanishing D_α: I(W) for α ≤ 1, else I_α(W); I_0 at α = 0."""
    order = as_order(order)
    if order.is_zero or order.value > 1:
        return capacity_value(w, order, INNER_TOL)
    return capacity_value(w, 1, INNER_TOL)


# variational form


def _logs(a):
    with np.errstate(divide="ignore"):
        return np.log(a)


def _mi_nats(px: np.ndarray, v: np.ndarray) -> float:
    return mutual_information_from_input(px, v, 1) * LN2


def _kl_rows_nats(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(v > 0, v * (_logs(v) - _logs(w)), 0.0)
    return terms.sum(axis=1)


def _tilt(px: np.ndarray, w: np.ndarray, a: float, lam: float, iters: int = 20000, tol: float = 1e-14):
    """argmin_V  a·Σ P D(V_x‖W_x) + λ·I(P, V) by alternating over (V, Q)."""
    if lam == 0:
        return w.copy()
    g = a / (a + lam)
    log_w = _logs(w)
    q = px @ w
    v = w
    for _ in range(iters):
        with np.errstate(divide="ignore", invalid="ignore"):
            logv = g * log_w + (1 - g) * _logs(q)[None, :]
        logv -= log_sum_exp(logv, axis=1, keepdims=True)
        v = np.exp(logv)
        q_new = px @ v
        if np.max(np.abs(q_new - q)) < tol:
            q = q_new
            break
        q = q_new
    # rows off the input support are irrelevant; keep them equal to W
    v = np.where((px > 0)[:, None], v, w)
    return v


def tilted_channel(
    w: Channel, px, r: float, alpha: float
) -> Tuple[float, Channel]:
    """min over Ŵ of (α/(1−α))·D(P·Ŵ‖P·W) + |I(P,Ŵ) − r|⁺, in bits, and its minimizer."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    px = np.asarray(px, dtype=float)
    rows = w.rows
    a = alpha / (1 - alpha)
    r_n = r * LN2
    if _mi_nats(px, rows) <= r_n:
        return 0.0, w

    def theta(v: np.ndarray) -> float:
        d = float(px @ _kl_rows_nats(v, rows))
        return (a * d + max(_mi_nats(px, v) - r_n, 0.0)) / LN2

    v1 = _tilt(px, rows, a, 1.0)
    if _mi_nats(px, v1) >= r_n:
        v = v1
    else:
        lam = brentq(lambda l: _mi_nats(px, _tilt(px, rows, a, l)) - r_n, 0.0, 1.0, xtol=1e-13)
        v = _tilt(px, rows, a, lam)
    return theta(v), Channel(v)


def variational_sc_exponent(
    w: Channel, r: float, alpha: float, starts: int = 5, seed: int = 0
) -> Tuple[float, Distribution, Channel]:
    """max_P min_Ŵ (α/(1−α))D(P·Ŵ‖P·W) + |I(P·Ŵ) − r|⁺, with its (P*, Ŵ*).

    Requires |X|·|Y| ≤ 16.
    """
    nx, ny = w.shape
    if nx * ny > 16:
        raise ValueError(f"alphabet budget exceeded: |X|·|Y| = {nx * ny} > 16")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")

    def value(px: np.ndarray) -> float:
        return tilted_channel(w, px, r, alpha)[0]

    if nx == 1:
        px = np.ones(1)
    elif nx == 2:
        grid = np.linspace(0.0, 1.0, 21)
        vals = [value(np.array([p, 1 - p])) for p in grid]
        k = int(np.argmax(vals))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
        res = minimize_scalar(
            lambda p: -value(np.array([p, 1 - p])), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-7},
        )
        p0 = res.x if -res.fun >= vals[k] else grid[k]
        px = np.array([p0, 1 - p0])
    else:
        rng = np.random.default_rng(seed)
        inits = [np.zeros(nx)] + [rng.normal(size=nx) for _ in range(starts)]
        best = None
        for z0 in inits:
            res = minimize(
                lambda z: -value(np.exp(z - log_sum_exp(z))), z0, method="Nelder-Mead",
                options={"xatol": 1e-7, "fatol": 1e-10, "maxiter": 4000},
            )
            if best is None or res.fun < best.fun:
                best = res
        px = np.exp(best.x - log_sum_exp(best.x))
    val, v = tilted_channel(w, px, r, alpha)
    return val, Distribution(px), v
