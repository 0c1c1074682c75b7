"""Method of types: enumeration, class sizes, the symmetric law Φ, and p_n.

Φ_{Y^n} puts equal total weight on every type class of Y^n and spreads it
uniformly inside the class. It dominates every permutation-invariant law on
Y^n up to the factor (n+1)^{|Y|}.

Everything that depends on a word only through its (joint) type is summed over
types with log-multinomial multiplicities instead of over words.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, List, Optional, Tuple

import numpy as np
from scipy.special import gammaln, logsumexp

from .distributions import LN2, Distribution, JointDistribution, OrderLike
from .exponents import T_MAX, maximize_concave, sup_t_objective
from .measures import divergence_from_logs, renyi_mutual_information

__all__ = [
    "TypeVector",
    "SymmetricTypeMixture",
    "compositions",
    "composition_array",
    "type_count",
    "enumerate_types",
    "log_multinomial",
    "phi_log_mass",
    "pn_probability",
    "pn_exponent",
    "pn_exponent_prediction",
    "pn_lower_bound_chain",
    "symmetric_reference_divergence",
    "ENUMERATION_CAP",
]

ENUMERATION_CAP = 2_000_000
# decisions within this relative distance of a tie count as satisfied
TIE_RTOL = 1e-9


def compositions(n: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """All ordered ways to write n as a sum of ``parts`` nonnegative integers, lexicographically."""
    if parts == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in compositions(n - first, parts - 1):
            yield (first,) + rest


def type_count(alphabet_size: int, n: int) -> int:
    """|P_n| = C(n + a − 1, a − 1)."""
    return math.comb(n + alphabet_size - 1, alphabet_size - 1)


@lru_cache(maxsize=256)
def _composition_array(n: int, parts: int) -> np.ndarray:
    if parts == 1:
        return np.array([[n]], dtype=np.int64)
    blocks = []
    for first in range(n + 1):
        rest = _composition_array(n - first, parts - 1)
        blocks.append(np.hstack([np.full((rest.shape[0], 1), first, dtype=np.int64), rest]))
    out = np.vstack(blocks)
    out.setflags(write=False)
    return out


def composition_array(n: int, parts: int, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Same order as :func:`compositions`, as an (count, parts) integer array."""
    total = type_count(parts, n)
    if total > cap:
        raise ValueError(f"{total} types exceed the enumeration cap {cap}")
    return _composition_array(n, parts)


def log_multinomial(counts) -> np.ndarray:
    """Natural log of n!/Π c_i!, row-wise for 2-D input."""
    c = np.asarray(counts, dtype=float)
    n = c.sum(axis=-1)
    return gammaln(n + 1) - gammaln(c + 1).sum(axis=-1)


@dataclass(frozen=True)
class TypeVector:
    counts: Tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if not counts or any(c < 0 for c in counts) or sum(counts) == 0:
            raise ValueError("type counts must be nonnegative with positive total")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def alphabet_size(self) -> int:
        return len(self.counts)

    def as_distribution(self) -> Distribution:
        return Distribution(np.array(self.counts, dtype=float) / self.n)

    def class_size(self) -> int:
        """Exact multinomial coefficient |T|."""
        out = math.factorial(self.n)
        for c in self.counts:
            out //= math.factorial(c)
        return out

    def log_class_size(self) -> float:
        """log2 |T| via log-gamma."""
        return float(log_multinomial(self.counts)) / LN2

    def representative(self) -> Tuple[int, ...]:
        """The lexicographically smallest word of this type."""
        return tuple(x for x, c in enumerate(self.counts) for _ in range(c))


def enumerate_types(alphabet_size: int, n: int, cap: int = ENUMERATION_CAP) -> List[TypeVector]:
    return [TypeVector(tuple(row)) for row in composition_array(n, alphabet_size, cap)]


def _log_phi_nats(y_counts: np.ndarray) -> np.ndarray:
    y_counts = np.asarray(y_counts)
    n = int(y_counts.sum(axis=-1).flat[0])
    a = y_counts.shape[-1]
    return -math.log(type_count(a, n)) - log_multinomial(y_counts)


def phi_log_mass(y_type: TypeVector) -> float:
    """log2 Φ(y^n) for any word y^n of the given type."""
    return float(_log_phi_nats(np.array(y_type.counts))) / LN2


@dataclass(frozen=True)
class SymmetricTypeMixture:
    """Φ_{Y^n}: uniform over types, uniform within each type class."""

    n: int
    alphabet_size: int

    def log_mass(self, word) -> float:
        counts = np.bincount(np.asarray(word, dtype=np.int64), minlength=self.alphabet_size)
        if counts.sum() != self.n:
            raise ValueError("word length differs from n")
        return phi_log_mass(TypeVector(tuple(counts)))

    def total_mass(self) -> float:
        types = composition_array(self.n, self.alphabet_size)
        return float(np.exp(logsumexp(log_multinomial(types) + _log_phi_nats(types))))

    def dense(self) -> np.ndarray:
        """Φ over all |Y|^n words in row-major (lexicographic) order."""
        words = np.indices((self.alphabet_size,) * self.n).reshape(self.n, -1).T
        counts = np.stack([np.sum(words == y, axis=1) for y in range(self.alphabet_size)], axis=1)
        return np.exp(_log_phi_nats(counts))


def _as_joint(pxy) -> JointDistribution:
    return pxy if isinstance(pxy, JointDistribution) else JointDistribution(pxy)


class _JointTypes:
    """Joint types of (x^n, y^n) restricted to the support cells of P_XY."""

    def __init__(self, pxy: JointDistribution, n: int):
        probs = pxy.probs
        nx, ny = probs.shape
        cells = np.flatnonzero(probs.ravel() > 0)
        self.n = n
        self.counts = composition_array(n, cells.size)
        full = np.zeros((self.counts.shape[0], nx * ny), dtype=np.int64)
        full[:, cells] = self.counts
        self.full = full.reshape(-1, nx, ny)
        log_p = np.log(probs.ravel()[cells])
        self.log_mult = log_multinomial(self.counts)
        self.log_pn = self.counts @ log_p  # log P^n of one word
        px = probs.sum(axis=1)
        with np.errstate(divide="ignore"):
            log_px = np.log(px)
        x_counts = self.full.sum(axis=2)
        self.log_pxn = np.where(x_counts > 0, x_counts * log_px[None, :], 0.0).sum(axis=1)
        self.y_counts = self.full.sum(axis=1)
        self.log_phi = _log_phi_nats(self.y_counts)
        self.log_qn = self.log_pxn + self.log_phi


def pn_probability(pxy, n: int, r: float, g_exponent_poly: Optional[int] = None) -> float:
    """p_n = P^n(P^n ≥ g(n)·2^{nr}·P_X^n × Φ), with g(n) = (n+1)^k, k = |Y|+1 by default."""
    pxy = _as_joint(pxy)
    k = pxy.probs.shape[1] + 1 if g_exponent_poly is None else g_exponent_poly
    jt = _JointTypes(pxy, n)
    rhs = k * math.log(n + 1) + n * r * LN2 + jt.log_qn
    lhs = jt.log_pn
    keep = lhs >= rhs - TIE_RTOL * np.maximum(1.0, np.abs(rhs))
    if not np.any(keep):
        return 0.0
    return float(min(1.0, np.exp(logsumexp(jt.log_mult[keep] + jt.log_pn[keep]))))


def pn_exponent(pxy, n: int, r: float, g_exponent_poly: Optional[int] = None) -> float:
    """−(1/n)·log2 p_n; +∞ when p_n = 0."""
    p = pn_probability(pxy, n, r, g_exponent_poly)
    return math.inf if p == 0 else -math.log2(p) / n


def symmetric_reference_divergence(pxy, n: int, order: OrderLike) -> float:
    """(1/n)·D_α(P_XY^n ‖ P_X^n × Φ_{Y^n}) in bits, summed over joint types."""
    jt = _JointTypes(_as_joint(pxy), n)
    return divergence_from_logs(jt.log_pn, jt.log_qn, order, jt.log_mult) / n


def pn_exponent_prediction(pxy, r: float) -> Tuple[float, float]:
    """sup_{t≥0} t·(r − I_{1+t}(X:Y)) for the fixed joint law; returns (value, t*)."""
    pxy = _as_joint(pxy)
    i_inf = renyi_mutual_information(pxy, math.inf)
    t_star, val = sup_t_objective(
        None, r, 0.0, capacity=lambda a: renyi_mutual_information(pxy, a), i_inf=i_inf
    )
    return val, t_star


def pn_lower_bound_chain(pxy, n: int, r: float, g_exponent_poly: Optional[int] = None) -> Tuple[float, float]:
    """sup_t [t·r − (t/n)·D_{1+t}(P_n‖Q_n) + t·log g(n)/n] at finite n; returns (value, t*).

    Each t gives a Chernoff bound on −(1/n)·log p_n, so the sup is a
    rigorous finite-n lower bound.
    """
    pxy = _as_joint(pxy)
    k = pxy.probs.shape[1] + 1 if g_exponent_poly is None else g_exponent_poly
    jt = _JointTypes(pxy, n)
    log_g = k * math.log2(n + 1)

    def obj(t: float) -> float:
        if t == 0:
            return 0.0
        d = divergence_from_logs(jt.log_pn, jt.log_qn, 1.0 + t, jt.log_mult)
        return t * r - t * d / n + t * log_g / n

    t_star, val, _ = maximize_concave(obj, 0.0, T_MAX)
    return val, t_star
