"""Channel-simulation codes and their exact induced channels.

A scheme is described by its parameters, never by materialized encoder tables.
Induced rows are computed from the rejection-sampling output law. For a
memoryless target, the ratio W^n/Q^n depends on (x^n, y^n) only through the
joint type. The row can therefore be summed over conditional types V of y^n
given x^n, each weighted by Π_x multinomial(m_x; V_x).

Shared randomness is modelled as the pre-shared proposal samples themselves.
Message index 0 (abort) decodes to the sample with index 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from .capacity import capacity_value, renyi_capacity
from .distributions import Channel, Distribution, OrderLike, as_order
from .exponents import strong_converse_exponent, tilted_channel
from .measures import divergence_from_logs, mutual_information_from_input, renyi_divergence
from .sampling import abort_probability
from .typeclasses import composition_array, log_multinomial, type_count

__all__ = [
    "SchemeKind",
    "RateAboveParams",
    "TypePlan",
    "StrongConverseParams",
    "ProductSplitParams",
    "SimulationScheme",
    "InducedRow",
    "build_rf_scheme",
    "build_sc_scheme",
    "build_product_split",
    "build_uniform_fallback",
    "induced_row",
    "induced_channel",
    "simulation_performance",
    "ubound_reference",
    "converse_bound",
    "rf_case1_bound",
    "DEFAULT_DELTA",
    "MATERIALIZE_CAP",
]

DEFAULT_DELTA = 0.05
MATERIALIZE_CAP = 2**20
# word-level enumeration is allowed up to |Y|^n = 2^24
WORD_BITS_CAP = 24


class SchemeKind(enum.Enum):
    RATE_ABOVE = "rate_above"
    STRONG_CONVERSE = "strong_converse"
    UNIFORM_FALLBACK = "uniform_fallback"
    PRODUCT_SPLIT = "product_split"


@dataclass(frozen=True)
class RateAboveParams:
    s: float
    r: float
    n_budget: int
    iteration_cap: int


@dataclass(frozen=True, eq=False)
class TypePlan:
    """Per-input-type data of the strong-converse scheme."""

    tilted: Channel
    proposal: np.ndarray
    n_budget: int
    theta: float


@dataclass(frozen=True, eq=False)
class StrongConverseParams:
    alpha: float
    r: float
    delta: float
    iteration_cap: int
    plans: Dict[Tuple[int, ...], TypePlan] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class ProductSplitParams:
    alpha: float
    r: float
    r_prime: float
    n_prime: int
    proposal: np.ndarray
    inner: Optional["SimulationScheme"]


@dataclass(frozen=True, eq=False)
class SimulationScheme:
    n: int
    input_size: int
    output_size: int
    message_budget: int
    kind: SchemeKind
    params: object = None
    proposal_ref: Optional[Distribution] = None

    @property
    def communication_bits(self) -> float:
        return math.log2(self.message_budget)

    def to_document(self) -> dict:
        """Plain-data description (kind, parameters, proposals, budgets) for replay."""
        doc = {
            "kind": self.kind.value,
            "n": self.n,
            "input_size": self.input_size,
            "output_size": self.output_size,
            "message_budget": self.message_budget,
            "communication_bits": self.communication_bits,
            "proposal_ref": None if self.proposal_ref is None else self.proposal_ref.probs.tolist(),
        }
        p = self.params
        if isinstance(p, RateAboveParams):
            doc["params"] = {"s": p.s, "r": p.r, "n_budget": p.n_budget, "iteration_cap": p.iteration_cap}
        elif isinstance(p, StrongConverseParams):
            doc["params"] = {
                "alpha": p.alpha,
                "r": p.r,
                "delta": p.delta,
                "iteration_cap": p.iteration_cap,
                "plans": [
                    {
                        "type": list(t),
                        "tilted": plan.tilted.rows.tolist(),
                        "proposal": plan.proposal.tolist(),
                        "n_budget": plan.n_budget,
                        "theta": plan.theta,
                    }
                    for t, plan in sorted(p.plans.items())
                ],
            }
        elif isinstance(p, ProductSplitParams):
            doc["params"] = {
                "alpha": p.alpha,
                "r": p.r,
                "r_prime": p.r_prime,
                "n_prime": p.n_prime,
                "proposal": p.proposal.tolist(),
                "inner": None if p.inner is None else p.inner.to_document(),
            }
        else:
            doc["params"] = {}
        return doc

    @classmethod
    def from_document(cls, doc: dict) -> "SimulationScheme":
        kind = SchemeKind(doc["kind"])
        raw = doc.get("params") or {}
        if kind is SchemeKind.RATE_ABOVE:
            params = RateAboveParams(float(raw["s"]), float(raw["r"]), int(raw["n_budget"]), int(raw["iteration_cap"]))
        elif kind is SchemeKind.STRONG_CONVERSE:
            plans = {
                tuple(e["type"]): TypePlan(
                    Channel(e["tilted"]), np.asarray(e["proposal"], dtype=float), int(e["n_budget"]), float(e["theta"])
                )
                for e in raw["plans"]
            }
            params = StrongConverseParams(
                float(raw["alpha"]), float(raw["r"]), float(raw["delta"]), int(raw["iteration_cap"]), plans
            )
        elif kind is SchemeKind.PRODUCT_SPLIT:
            inner = None if raw["inner"] is None else cls.from_document(raw["inner"])
            params = ProductSplitParams(
                float(raw["alpha"]), float(raw["r"]), float(raw["r_prime"]), int(raw["n_prime"]),
                np.asarray(raw["proposal"], dtype=float), inner,
            )
        else:
            params = None
        ref = doc.get("proposal_ref")
        return cls(
            n=int(doc["n"]),
            input_size=int(doc["input_size"]),
            output_size=int(doc["output_size"]),
            message_budget=int(doc["message_budget"]),
            kind=kind,
            params=params,
            proposal_ref=None if ref is None else Distribution(ref),
        )


# builders


def _round_budget(log2_value: float) -> int:
    return max(1, int(round(2.0**log2_value)))


def build_rf_scheme(w: Channel, n: int, r: float, s: float) -> SimulationScheme:
    """One-pass rejection-sampling scheme with N = 2^{nr}, Ñ = ⌈ln2·N·n·log n⌉."""
    if n < 1 or r < 0 or not s > 0:
        raise ValueError("need n ≥ 1, r ≥ 0, s > 0")
    order = math.inf if math.isinf(s) else 1.0 + s
    cap = renyi_capacity(w, order)
    n_budget = _round_budget(n * r)
    iteration_cap = max(1, math.ceil(math.log(2) * n_budget * n * math.log2(n))) if n > 1 else 1
    return SimulationScheme(
        n=n,
        input_size=w.input_size,
        output_size=w.output_size,
        message_budget=iteration_cap + 1,
        kind=SchemeKind.RATE_ABOVE,
        params=RateAboveParams(float(s), float(r), n_budget, iteration_cap),
        proposal_ref=cap.optimal_output,
    )


def build_sc_scheme(w: Channel, n: int, r: float, alpha: float, delta: float = DEFAULT_DELTA) -> SimulationScheme:
    """Type-announcing scheme driven by the tilted channel of each input type."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if n < 1 or r < 0 or delta <= 0:
        raise ValueError("need n ≥ 1, r ≥ 0, delta > 0")
    iteration_cap = max(1, math.ceil(2.0 ** (n * r + 1)))
    plans = {}
    for counts in composition_array(n, w.input_size):
        t = tuple(int(c) for c in counts)
        px = np.asarray(t, dtype=float) / n
        try:
            theta, tilted = tilted_channel(w, px, r, alpha)
        except Exception as exc:  # noqa: BLE001 - re-raised with the type attached
            raise RuntimeError(f"tilted-channel solve failed for input type {t}: {exc}") from exc
        q = px @ tilted.rows
        info = mutual_information_from_input(px, tilted, 1)
        plans[t] = TypePlan(tilted, q, _round_budget(n * (info + delta)), theta)
    budget = type_count(w.input_size, n) * (iteration_cap + 1)
    return SimulationScheme(
        n=n,
        input_size=w.input_size,
        output_size=w.output_size,
        message_budget=budget,
        kind=SchemeKind.STRONG_CONVERSE,
        params=StrongConverseParams(float(alpha), float(r), float(delta), iteration_cap, plans),
    )


def build_uniform_fallback(w: Channel, n: int) -> SimulationScheme:
    """No communication; the decoder emits a uniform word."""
    ny = w.output_size
    return SimulationScheme(
        n=n,
        input_size=w.input_size,
        output_size=ny,
        message_budget=1,
        kind=SchemeKind.UNIFORM_FALLBACK,
        proposal_ref=Distribution.uniform(ny),
    )


def _order_one_rate_split(w: Channel, delta: float) -> float:
    # largest s ≤ 1 with I_{1+s} ≤ I_1 + δ/2, so the inner rate I_1 + δ exceeds I_{1+s}
    target = capacity_value(w, 1, 1e-10) + delta / 2
    if capacity_value(w, 2, 1e-10) <= target:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(40):
        mid = (lo + hi) / 2
        if capacity_value(w, 1 + mid, 1e-10) <= target:
            lo = mid
        else:
            hi = mid
    return max(lo, 1e-6)


def build_product_split(
    w: Channel, n: int, r: float, alpha: float, delta: float = DEFAULT_DELTA
) -> SimulationScheme:
    """Simulate the first n′ = ⌊nr/r′⌋ uses at rate r′ = I_α + δ; emit Q_Y on the rest."""
    order = as_order(alpha)
    if order.value < 1:
        raise ValueError("product split is the α ≥ 1 construction")
    i_alpha = capacity_value(w, order, 1e-10)
    r_prime = i_alpha + delta
    n_prime = min(n, int(math.floor(n * r / r_prime)))
    if order.is_inf:
        s = math.inf
    elif order.is_one:
        s = _order_one_rate_split(w, delta)
    else:
        s = order.value - 1
    inner = build_rf_scheme(w, n_prime, r_prime, s) if n_prime >= 1 else None
    q = renyi_capacity(w, order).optimal_output.probs
    return SimulationScheme(
        n=n,
        input_size=w.input_size,
        output_size=w.output_size,
        message_budget=1 if inner is None else inner.message_budget,
        kind=SchemeKind.PRODUCT_SPLIT,
        params=ProductSplitParams(float(order), float(r), r_prime, n_prime, q, inner),
        proposal_ref=Distribution(q),
    )


# induced rows


def _logs(a):
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(a, dtype=float))


class _Atoms:
    """Output atoms for one input word: conditional types or explicit words."""

    def __init__(self, word: Sequence[int], nx: int, ny: int, aggregated: bool):
        self.word = np.asarray(word, dtype=np.int64)
        self.nx, self.ny = nx, ny
        self.aggregated = aggregated
        n = self.word.size
        if aggregated:
            m = np.bincount(self.word, minlength=nx)
            cond = np.zeros((1, nx, ny), dtype=np.int64)
            lm = np.zeros(1)
            for x in range(nx):
                comps = composition_array(int(m[x]), ny)
                k = comps.shape[0]
                nxt = np.repeat(cond, k, axis=0)
                nxt[:, x, :] = np.tile(comps, (cond.shape[0], 1))
                lm = (lm[:, None] + log_multinomial(comps)[None, :]).ravel()
                cond = nxt
            self.cond = cond
            self.log_mult = lm
        else:
            if n * math.log2(max(ny, 2)) > WORD_BITS_CAP:
                raise ValueError(f"|Y|^n = {ny}^{n} words is beyond exact enumeration")
            self.words = np.indices((ny,) * n).reshape(n, -1).T if n else np.zeros((1, 0), np.int64)
            self.log_mult = np.zeros(self.words.shape[0])

    def log_channel(self, rows: np.ndarray) -> np.ndarray:
        log_w = _logs(rows)
        if self.aggregated:
            with np.errstate(invalid="ignore"):
                terms = np.where(self.cond > 0, self.cond * log_w[None, :, :], 0.0)
            return terms.sum(axis=(1, 2))
        return log_w[self.word[None, :], self.words].sum(axis=1)

    def log_product(self, q: np.ndarray) -> np.ndarray:
        log_q = _logs(q)
        if self.aggregated:
            cols = self.cond.sum(axis=1)
            with np.errstate(invalid="ignore"):
                return np.where(cols > 0, cols * log_q[None, :], 0.0).sum(axis=1)
        return log_q[self.words].sum(axis=1)


@dataclass(frozen=True, eq=False)
class InducedRow:
    """One row 𝒩(·|x^n) in log form, alongside the true W^n(·|x^n) on the same atoms."""

    input_word: Tuple[int, ...]
    log_row: np.ndarray
    log_target: np.ndarray
    log_mult: np.ndarray
    aggregated: bool
    abort_prob: float = 0.0

    def total_mass(self) -> float:
        return float(np.exp(logsumexp(self.log_mult + self.log_row)))

    def divergence(self, order: OrderLike) -> float:
        """D_α(W^n(·|x^n) ‖ 𝒩(·|x^n)) in bits."""
        return divergence_from_logs(self.log_target, self.log_row, order, self.log_mult)

    def clipped_mass(self, n_budget: int, log_q: np.ndarray) -> float:
        return float(np.exp(logsumexp(self.log_mult + np.minimum(self.log_target, math.log(n_budget) + log_q))))


def _rejection_log_row(log_tsamp, log_q, log_mult, n_budget: int, iteration_cap: int):
    log_n = math.log(n_budget)
    log_wbar = np.minimum(log_tsamp, log_n + log_q)
    log_mass = float(logsumexp(log_mult + log_wbar))
    p, log_p = abort_probability(math.exp(log_mass), n_budget, iteration_cap)
    with np.errstate(divide="ignore"):
        log_keep = math.log(-math.expm1(log_p)) if log_p < 0 else -math.inf
    with np.errstate(invalid="ignore"):
        log_row = np.logaddexp(log_keep + log_wbar - log_mass, log_p + log_q)
    return log_row, p


def _combine(a: InducedRow, b: InducedRow) -> InducedRow:
    def outer(u, v):
        return (u[:, None] + v[None, :]).ravel()

    return InducedRow(
        input_word=a.input_word + b.input_word,
        log_row=outer(a.log_row, b.log_row),
        log_target=outer(a.log_target, b.log_target),
        log_mult=outer(a.log_mult, b.log_mult),
        aggregated=a.aggregated,
        abort_prob=a.abort_prob,
    )


def _product_row(w: Channel, word, q: np.ndarray, aggregated: bool) -> InducedRow:
    at = _Atoms(word, w.input_size, w.output_size, aggregated)
    return InducedRow(tuple(int(x) for x in word), at.log_product(q), at.log_channel(w.rows), at.log_mult, aggregated)


def induced_row(scheme: SimulationScheme, w: Channel, input_word, aggregated: bool = True) -> InducedRow:
    """𝒩^{(n)}(·|x^n) summed over conditional types (default) or over explicit words."""
    word = tuple(int(x) for x in input_word)
    if len(word) != scheme.n:
        raise ValueError(f"input word has length {len(word)}, scheme blocklength is {scheme.n}")
    kind = scheme.kind

    if kind is SchemeKind.PRODUCT_SPLIT:
        p: ProductSplitParams = scheme.params
        tail = _product_row(w, word[p.n_prime:], p.proposal, aggregated)
        if p.inner is None:
            return tail
        head = induced_row(p.inner, w, word[: p.n_prime], aggregated)
        return _combine(head, tail) if p.n_prime < scheme.n else head

    at = _Atoms(word, w.input_size, w.output_size, aggregated)
    log_target = at.log_channel(w.rows)
    if kind is SchemeKind.UNIFORM_FALLBACK:
        log_row = np.full(log_target.shape, -scheme.n * math.log(w.output_size))
        return InducedRow(word, log_row, log_target, at.log_mult, aggregated)

    if kind is SchemeKind.RATE_ABOVE:
        p = scheme.params
        log_q = at.log_product(scheme.proposal_ref.probs)
        log_row, abort = _rejection_log_row(log_target, log_q, at.log_mult, p.n_budget, p.iteration_cap)
        return InducedRow(word, log_row, log_target, at.log_mult, aggregated, abort)

    if kind is SchemeKind.STRONG_CONVERSE:
        p = scheme.params
        t = tuple(int(c) for c in np.bincount(np.asarray(word), minlength=w.input_size))
        plan = p.plans[t]
        log_q = at.log_product(plan.proposal)
        log_tilted = at.log_channel(plan.tilted.rows)
        log_row, abort = _rejection_log_row(log_tilted, log_q, at.log_mult, plan.n_budget, p.iteration_cap)
        return InducedRow(word, log_row, log_target, at.log_mult, aggregated, abort)

    raise ValueError(f"unknown scheme kind {kind}")


def _all_words(k: int, n: int) -> np.ndarray:
    return np.indices((k,) * n).reshape(n, -1).T


def induced_channel(scheme: SimulationScheme, w: Channel, cap: int = MATERIALIZE_CAP) -> Channel:
    """Materialize 𝒩^{(n)} as an |X|^n × |Y|^n matrix (words in lexicographic order)."""
    n = scheme.n
    size = w.input_size**n * w.output_size**n
    if size > cap:
        raise ValueError(f"induced channel has {size} entries > cap {cap}; use induced_row instead")
    rows = [np.exp(induced_row(scheme, w, word, aggregated=False).log_row) for word in _all_words(w.input_size, n)]
    return Channel(np.array(rows))


def _type_representatives(nx: int, n: int):
    for counts in composition_array(n, nx):
        yield tuple(x for x, c in enumerate(counts) for _ in range(int(c)))


def simulation_performance(w: Channel, scheme: SimulationScheme, order: OrderLike, return_word: bool = False):
    """max over input words of D_α(W^n(·|x^n) ‖ 𝒩(·|x^n)), one representative per type."""
    order = as_order(order)
    if scheme.kind is SchemeKind.PRODUCT_SPLIT:
        p: ProductSplitParams = scheme.params
        tail = max(renyi_divergence(w.rows[x], p.proposal, order) for x in range(w.input_size))
        head, head_word = 0.0, ()
        if p.inner is not None:
            head, head_word = simulation_performance(w, p.inner, order, return_word=True)
        tail_x = max(range(w.input_size), key=lambda x: renyi_divergence(w.rows[x], p.proposal, order))
        value = head + (scheme.n - p.n_prime) * tail
        word = tuple(head_word) + (tail_x,) * (scheme.n - p.n_prime)
        return (value, word) if return_word else value

    best, best_word = -math.inf, None
    for word in _type_representatives(w.input_size, scheme.n):
        d = induced_row(scheme, w, word).divergence(order)
        if d > best:
            best, best_word = d, word
    return (best, best_word) if return_word else best


def ubound_reference(scheme: SimulationScheme, cap: int = MATERIALIZE_CAP) -> Distribution:
    """Average decoder output over messages and shared randomness, as a law on Y^n."""
    ny, n = scheme.output_size, scheme.n
    if ny**n > cap:
        raise ValueError(f"|Y|^n = {ny**n} exceeds cap {cap}")

    def power(q: np.ndarray, k: int) -> np.ndarray:
        out = np.ones(1)
        for _ in range(k):
            out = np.kron(out, q)
        return out

    kind = scheme.kind
    if kind is SchemeKind.UNIFORM_FALLBACK:
        return Distribution(np.full(ny**n, 1.0 / ny**n))
    if kind is SchemeKind.RATE_ABOVE:
        return Distribution(power(scheme.proposal_ref.probs, n))
    if kind is SchemeKind.STRONG_CONVERSE:
        plans = scheme.params.plans
        mix = sum(power(plan.proposal, n) for plan in plans.values()) / len(plans)
        return Distribution(mix)
    if kind is SchemeKind.PRODUCT_SPLIT:
        p: ProductSplitParams = scheme.params
        tail = power(p.proposal, n - p.n_prime)
        if p.inner is None:
            return Distribution(tail)
        return Distribution(np.kron(ubound_reference(p.inner, cap).probs, tail))
    raise ValueError(f"unknown scheme kind {kind}")


def converse_bound(w: Channel, n: int, c_bits: float, order: OrderLike) -> float:
    """One-shot converse for W^n at cost c, via additivity: n·E_sc^{(α)}(W, c/n).

    α ∈ (0,1): max_{β∈[α,1]} α(1−β)/(β(1−α))·(n·I_β − c); α ≥ 1: |n·I_α − c|⁺.
    At α = 0 the α↓0 limit |n·I_0 − c|⁺ is used.
    """
    return n * strong_converse_exponent(w, c_bits / n, order).value


def rf_case1_bound(w: Channel, scheme: SimulationScheme, row_abort: Optional[float] = None) -> float:
    """(1/(s ln2))·2^{−s(log N − n·I_{1+s})} + p/((1−p)·ln2), maximized over input types.

    Uses the actual integer N; ``row_abort`` overrides the per-row abort probability.
    """
    if scheme.kind is not SchemeKind.RATE_ABOVE:
        raise ValueError("the Case-1 bound applies to the rate-above scheme")
    p: RateAboveParams = scheme.params
    s = p.s
    i_1s = capacity_value(w, 1 + s, 1e-10)
    head = 2.0 ** (-s * (math.log2(p.n_budget) - scheme.n * i_1s)) / (s * math.log(2))
    if row_abort is not None:
        aborts = [row_abort]
    else:
        aborts = [induced_row(scheme, w, word).abort_prob for word in _type_representatives(w.input_size, scheme.n)]
    worst = max(aborts)
    return head + (math.inf if worst >= 1 else worst / ((1 - worst) * math.log(2)))
