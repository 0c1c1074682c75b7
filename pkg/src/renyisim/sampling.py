"""Rejection sampling: the clipped one-pass procedure and the two-phase scheme.

Every procedure has an exact mode, which returns the output law in closed form,
and a stochastic mode that executes the procedure with a seeded Philox stream.
The stochastic mode is a faithful simulation (one proposal draw and one coin per
iteration); it does not reuse the closed forms, so it can validate them.

Index conventions. One-pass: 0 is abort, 1..Ñ are iterations. Two-phase: 0 is
abort, 1..N is the variant phase, and repeat k ∈ {1..K} uses kN+1..(k+1)N. On
abort the decoder outputs the pre-shared sample with index 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .distributions import Distribution
from .measures import renyi_divergence

__all__ = [
    "RejectionPlan",
    "TwoPhasePlan",
    "ScheduleMode",
    "RejectionSchedule",
    "SamplingOutcome",
    "clipped_subdistribution",
    "abort_probability",
    "rejection_output_distribution",
    "abort_probability_bound",
    "run_rejection",
    "simulate_rejection",
    "build_schedule",
    "two_phase_output_distribution",
    "run_two_phase",
    "simulate_two_phase",
    "residual_mass_bound",
    "make_stream",
    "spawn_streams",
]


def make_stream(seed) -> np.random.Generator:
    """Counter-based generator; ``seed`` may be an int or a SeedSequence."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


def spawn_streams(seed, k: int) -> List[np.random.Generator]:
    """k independent streams derived from one seed, for parallel batches."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [make_stream(child) for child in ss.spawn(k)]


def _as_dist(d) -> Distribution:
    return d if isinstance(d, Distribution) else Distribution(d)


def _check_support(p: np.ndarray, q: np.ndarray) -> None:
    if p.shape != q.shape:
        raise ValueError(f"alphabet mismatch: {p.size} vs {q.size}")
    if np.any((p > 0) & (q <= 0)):
        raise ValueError("target support must lie inside proposal support")


@dataclass(frozen=True)
class RejectionPlan:
    target: Distribution
    proposal: Distribution
    n_budget: int
    iteration_cap: int

    def __post_init__(self):
        object.__setattr__(self, "target", _as_dist(self.target))
        object.__setattr__(self, "proposal", _as_dist(self.proposal))
        _check_support(self.target.probs, self.proposal.probs)
        if self.n_budget < 1 or self.iteration_cap < 1:
            raise ValueError("N and Ñ must be positive")

    @property
    def communication_bits(self) -> float:
        return math.log2(self.iteration_cap + 1)


@dataclass(frozen=True)
class TwoPhasePlan:
    target: Distribution
    proposal: Distribution
    n_budget: int
    repeats: int

    def __post_init__(self):
        object.__setattr__(self, "target", _as_dist(self.target))
        object.__setattr__(self, "proposal", _as_dist(self.proposal))
        _check_support(self.target.probs, self.proposal.probs)
        if self.n_budget < 1 or self.repeats < 1:
            raise ValueError("N and K must be positive")

    @property
    def message_count(self) -> int:
        return (self.repeats + 1) * self.n_budget + 1

    @property
    def communication_bits(self) -> int:
        return math.ceil(math.log2(self.message_count))


@dataclass(frozen=True)
class SamplingOutcome:
    index: int
    accepted_symbol: Optional[int]
    # the symbol the decoder emits: the accepted one, or the index-0 sample on abort
    output_symbol: int

    @property
    def aborted(self) -> bool:
        return self.index == 0


def clipped_subdistribution(p, q, n_budget: int) -> np.ndarray:
    """P̄(x) = min{P(x), N·Q(x)}."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return np.minimum(p, n_budget * q)


def abort_probability(mass: float, n_budget: float, iteration_cap: float) -> Tuple[float, float]:
    """p = (1 − mass/N)^Ñ and its natural log, computed via log1p."""
    frac = mass / n_budget
    if frac >= 1:
        return 0.0, -math.inf
    log_p = iteration_cap * math.log1p(-frac)
    return math.exp(log_p), log_p


def rejection_output_distribution(plan: RejectionPlan) -> Tuple[Distribution, float]:
    """S = (1−p)·P̄/ΣP̄ + p·Q with p = (1 − ΣP̄/N)^Ñ."""
    q = plan.proposal.probs
    pbar = clipped_subdistribution(plan.target.probs, q, plan.n_budget)
    mass = float(pbar.sum())
    p_abort, _ = abort_probability(mass, plan.n_budget, plan.iteration_cap)
    s = (1 - p_abort) * pbar / mass + p_abort * q
    return Distribution(s), p_abort


def abort_probability_bound(p, q, n_budget: int, iteration_cap: int, s: float) -> float:
    """(1 − (1 − 2^{−s(log N − D_{1+s}(P‖Q))})/N)^Ñ, valid for every s > 0."""
    d = renyi_divergence(p, q, 1 + s)
    tail = 2.0 ** (-s * (math.log2(n_budget) - d))
    mass_lb = max(1 - tail, 0.0)
    return abort_probability(mass_lb, n_budget, iteration_cap)[0] if mass_lb > 0 else 1.0


def _accept_ratio(plan: RejectionPlan) -> np.ndarray:
    q = plan.proposal.probs
    pbar = clipped_subdistribution(plan.target.probs, q, plan.n_budget)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(q > 0, pbar / (plan.n_budget * q), 0.0)
    return np.clip(ratio, 0.0, 1.0)


def run_rejection(plan: RejectionPlan, rng: np.random.Generator) -> SamplingOutcome:
    """One execution of the one-pass procedure."""
    q = plan.proposal.probs
    ratio = _accept_ratio(plan)
    x0 = int(rng.choice(q.size, p=q))
    for j in range(1, plan.iteration_cap + 1):
        x = int(rng.choice(q.size, p=q))
        if rng.random() < ratio[x]:
            return SamplingOutcome(j, x, x)
    return SamplingOutcome(0, None, x0)


def simulate_rejection(
    plan: RejectionPlan, rng: np.random.Generator, runs: int, chunk: int = 64
) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized executions; returns (indices, output symbols)."""
    q = plan.proposal.probs
    ratio = _accept_ratio(plan)
    index = np.zeros(runs, dtype=np.int64)
    symbol = rng.choice(q.size, p=q, size=runs)  # index-0 samples
    live = np.ones(runs, dtype=bool)
    done = 0
    while done < plan.iteration_cap and live.any():
        width = min(chunk, plan.iteration_cap - done)
        ids = np.flatnonzero(live)
        xs = rng.choice(q.size, p=q, size=(ids.size, width))
        acc = rng.random((ids.size, width)) < ratio[xs]
        hit = acc.any(axis=1)
        first = np.argmax(acc, axis=1)
        rows = ids[hit]
        index[rows] = done + first[hit] + 1
        symbol[rows] = xs[hit, first[hit]]
        live[rows] = False
        done += width
    return index, symbol


class ScheduleMode(enum.Enum):
    STANDARD = "standard"
    VARIANT = "variant"


@dataclass(frozen=True)
class RejectionSchedule:
    """Per-iteration quantities; row j of each array is iteration j (row 0 unused for a)."""

    accept_probs: np.ndarray  # (N+1, |X|), row 0 is zero
    residuals: np.ndarray  # (N+1, |X|), p_j
    residual_mass: np.ndarray  # (N+1,), s_j
    beta: np.ndarray  # (N+1,), β_j with β_0 = 0
    mode: ScheduleMode
    lam: float
    proposal: np.ndarray

    @property
    def n_budget(self) -> int:
        return self.residual_mass.size - 1

    def abort_probability(self) -> float:
        s_n = float(self.residual_mass[-1])
        return s_n if self.mode is ScheduleMode.STANDARD else 1 - self.lam + s_n

    def halted_mass(self) -> np.ndarray:
        """Sub-distribution of accepted symbols: target − p_N."""
        return self.residuals[0] - self.residuals[-1]

    def output_distribution(self) -> np.ndarray:
        """Law of the emitted symbol when aborts fall back to a Q-sample."""
        return self.halted_mass() + self.abort_probability() * self.proposal


def build_schedule(target, proposal, n_budget: int, mode: ScheduleMode = ScheduleMode.STANDARD) -> RejectionSchedule:
    """Run the standard or variant recursion exactly."""
    p = np.asarray(target, dtype=float)
    q = np.asarray(proposal.probs if isinstance(proposal, Distribution) else proposal, dtype=float)
    _check_support(p, q)
    if n_budget < 1:
        raise ValueError("N must be positive")
    lam = float(p.sum())
    if mode is ScheduleMode.STANDARD:
        if abs(lam - 1) > 1e-9:
            raise ValueError("standard mode needs a full distribution")
        lam = 1.0
    elif not 0 < lam < 1:
        raise ValueError(f"variant mode needs target mass in (0, 1), got {lam}")

    k = p.size
    a = np.zeros((n_budget + 1, k))
    res = np.zeros((n_budget + 1, k))
    mass = np.zeros(n_budget + 1)
    beta = np.zeros(n_budget + 1)
    res[0], mass[0] = p, lam
    for j in range(1, n_budget + 1):
        scale = mass[j - 1] if mode is ScheduleMode.STANDARD else 1 - lam + mass[j - 1]
        denom = scale * q
        with np.errstate(divide="ignore", invalid="ignore"):
            aj = np.where(denom > 0, np.minimum(1.0, res[j - 1] / denom), 0.0)
        # a < 1 means the residual is used up exactly
        res[j] = np.where(aj < 1, 0.0, res[j - 1] - denom)
        a[j] = aj
        mass[j] = res[j].sum()
        beta[j] = beta[j - 1] + scale
    return RejectionSchedule(a, res, mass, beta, mode, lam, q)


def two_phase_output_distribution(plan: TwoPhasePlan) -> Tuple[Distribution, bool, float]:
    """Exact output law S, the S ≥ (1 − s_N^K)·min{P, NQ} check, and s_N."""
    p, q = plan.target.probs, plan.proposal.probs
    n, k = plan.n_budget, plan.repeats
    std = build_schedule(p, q, n, ScheduleMode.STANDARD)
    s_n = float(std.residual_mass[-1])
    p0 = np.minimum(p, std.beta[-1] * q)
    # U = (1 + s_N + ... + s_N^{K-1})·P0 + s_N^K·Q
    geo = sum(s_n**i for i in range(k))
    u = geo * p0 + s_n**k * q

    p_hat = np.clip(p - p0, 0.0, None)
    lam = float(p_hat.sum())
    if lam <= 0:
        s = u
    else:
        var = build_schedule(p_hat, q, n, ScheduleMode.VARIANT)
        s = var.halted_mass() + var.abort_probability() * u
    floor = (1 - s_n**k) * np.minimum(p, n * q)
    ok = bool(np.all(s >= floor - 1e-15))
    return Distribution(s), ok, s_n


def residual_mass_bound(p, q, n_budget: int, t: float) -> float:
    """exp{−t/(1+t)·(log N − D_{1+t}(P‖Q))}, an upper bound on s_N."""
    d = renyi_divergence(p, q, 1 + t)
    return 2.0 ** (-t / (1 + t) * (math.log2(n_budget) - d))


def _two_phase_tables(plan: TwoPhasePlan):
    p, q = plan.target.probs, plan.proposal.probs
    std = build_schedule(p, q, plan.n_budget, ScheduleMode.STANDARD)
    p0 = np.minimum(p, std.beta[-1] * q)
    p_hat = np.clip(p - p0, 0.0, None)
    if p_hat.sum() > 0:
        var = build_schedule(p_hat, q, plan.n_budget, ScheduleMode.VARIANT)
        var_a = var.accept_probs
    else:
        var_a = np.zeros_like(std.accept_probs)
    return var_a, std.accept_probs


def run_two_phase(plan: TwoPhasePlan, rng: np.random.Generator) -> SamplingOutcome:
    """One execution: variant phase, then up to K standard passes."""
    q = plan.proposal.probs
    n = plan.n_budget
    var_a, std_a = _two_phase_tables(plan)
    x0 = int(rng.choice(q.size, p=q))
    for phase in range(plan.repeats + 1):
        table = var_a if phase == 0 else std_a
        for j in range(1, n + 1):
            x = int(rng.choice(q.size, p=q))
            if rng.random() < table[j, x]:
                idx = phase * n + j
                return SamplingOutcome(idx, x, x)
    return SamplingOutcome(0, None, x0)


def simulate_two_phase(
    plan: TwoPhasePlan, rng: np.random.Generator, runs: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized executions; returns (indices, output symbols)."""
    q = plan.proposal.probs
    n = plan.n_budget
    var_a, std_a = _two_phase_tables(plan)
    total = (plan.repeats + 1) * n
    # acceptance table per global iteration 1..total
    table = np.vstack([var_a[1:]] + [std_a[1:]] * plan.repeats)
    symbol = rng.choice(q.size, p=q, size=runs)
    xs = rng.choice(q.size, p=q, size=(runs, total))
    acc = rng.random((runs, total)) < table[np.arange(total)[None, :], xs]
    hit = acc.any(axis=1)
    first = np.argmax(acc, axis=1)
    index = np.where(hit, first + 1, 0)
    symbol = np.where(hit, xs[np.arange(runs), first], symbol)
    return index, symbol
