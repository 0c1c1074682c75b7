"""Finite distributions, channels, and Rényi orders.

All objects are immutable after construction: the underlying numpy arrays are
marked read-only so they can be shared between workers without copying.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

SUM_TOL = 1e-12
# inputs further than this from unit mass are rejected rather than renormalized
ACCEPT_TOL = 1e-6

LN2 = math.log(2.0)


def log_sum_exp(a, axis=None, keepdims=False):
    """log Σ exp(a) along ``axis``; a lean stand-in for scipy's version in hot loops."""
    a = np.asarray(a, dtype=float)
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    if not keepdims:
        out = np.squeeze(out, axis=axis) if axis is not None else out.reshape(())
    return out if out.ndim else float(out)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class RenyiOrder:
    """Order α in [0, ∞], tagged as zero, one, infinity, or finite.

    Instances compare equal to the float they wrap, so ``RenyiOrder(2) == 2``.
    """

    __slots__ = ("value",)

    def __init__(self, value: Union[float, "RenyiOrder"]):
        if isinstance(value, RenyiOrder):
            value = value.value
        value = float(value)
        if math.isnan(value) or value < 0:
            raise ValueError(f"Rényi order must lie in [0, inf], got {value}")
        object.__setattr__(self, "value", value)

    def __setattr__(self, name, val):
        raise AttributeError("RenyiOrder is immutable")

    @property
    def kind(self) -> str:
        if self.value == 0:
            return "zero"
        if self.value == 1:
            return "one"
        if math.isinf(self.value):
            return "infinity"
        return "finite"

    @property
    def is_zero(self) -> bool:
        return self.value == 0

    @property
    def is_one(self) -> bool:
        return self.value == 1

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.value)

    def __float__(self) -> float:
        return self.value

    def __eq__(self, other) -> bool:
        try:
            return self.value == float(other)
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self) -> int:
        return hash(self.value)

    def __repr__(self) -> str:
        return f"RenyiOrder({self.value!r})"


OrderLike = Union[float, int, RenyiOrder]


def as_order(alpha: OrderLike) -> RenyiOrder:
    return alpha if isinstance(alpha, RenyiOrder) else RenyiOrder(alpha)


def _check_prob_vector(p: np.ndarray, what: str) -> np.ndarray:
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{what} must be a non-empty 1-D vector")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValueError(f"{what} must have finite nonnegative entries")
    total = p.sum()
    if abs(total - 1.0) > ACCEPT_TOL:
        raise ValueError(f"{what} sums to {total}, not 1")
    return p / total


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector over ``{0, ..., alphabet_size - 1}``."""

    probs: np.ndarray

    def __post_init__(self):
        p = _check_prob_vector(np.asarray(self.probs, dtype=float), "distribution")
        object.__setattr__(self, "probs", _frozen(p))

    @property
    def alphabet_size(self) -> int:
        return self.probs.size

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)

    @classmethod
    def uniform(cls, k: int) -> "Distribution":
        return cls(np.full(k, 1.0 / k))

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def __len__(self) -> int:
        return self.probs.size


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Joint law on X × Y stored as an |X| × |Y| matrix."""

    probs: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.probs, dtype=float)
        if m.ndim != 2:
            raise ValueError("joint distribution must be a matrix")
        flat = _check_prob_vector(m.ravel(), "joint distribution")
        object.__setattr__(self, "probs", _frozen(flat.reshape(m.shape)))

    def marginal_x(self) -> Distribution:
        return Distribution(self.probs.sum(axis=1))

    def marginal_y(self) -> Distribution:
        return Distribution(self.probs.sum(axis=0))

    def conditional(self) -> np.ndarray:
        """W(y|x) on the support of the X-marginal; rows off-support are zero."""
        px = self.probs.sum(axis=1)
        out = np.zeros_like(self.probs)
        on = px > 0
        out[on] = self.probs[on] / px[on, None]
        return out

    @classmethod
    def from_channel(cls, px, w: "Channel") -> "JointDistribution":
        px = np.asarray(px, dtype=float)
        return cls(px[:, None] * w.rows)


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic matrix ``rows[x, y] = W(y|x)``."""

    rows: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.rows, dtype=float)
        if m.ndim != 2 or m.size == 0:
            raise ValueError("channel must be a non-empty matrix")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ValueError("channel entries must be finite and nonnegative")
        sums = m.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > ACCEPT_TOL):
            raise ValueError(f"channel rows must sum to 1, got {sums}")
        object.__setattr__(self, "rows", _frozen(m / sums[:, None]))

    @property
    def input_size(self) -> int:
        return self.rows.shape[0]

    @property
    def output_size(self) -> int:
        return self.rows.shape[1]

    @property
    def shape(self) -> tuple:
        return self.rows.shape

    def row(self, x: int) -> np.ndarray:
        return self.rows[x]

    def output(self, px) -> np.ndarray:
        """Output distribution W(P) = Σ_x P(x) W(·|x)."""
        return np.asarray(px, dtype=float) @ self.rows

    def key(self) -> bytes:
        """Hashable content key, used for memoizing capacity solves."""
        return self.rows.shape[0].to_bytes(4, "little") + self.rows.tobytes()

    def product(self, other: "Channel") -> "Channel":
        """Parallel composition W × W′ on (X × X′) → (Y × Y′)."""
        return Channel(np.kron(self.rows, other.rows))

    def power(self, n: int) -> "Channel":
        out = self
        for _ in range(n - 1):
            out = out.product(self)
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, Channel) and self.rows.shape == other.rows.shape and bool(
            np.array_equal(self.rows, other.rows)
        )

    def __hash__(self) -> int:
        return hash(self.key())


def bsc(p: float) -> Channel:
    return Channel([[1 - p, p], [p, 1 - p]])


def identity_channel(k: int) -> Channel:
    return Channel(np.eye(k))


def constant_channel(q: Iterable[float], inputs: int = 2) -> Channel:
    """Channel whose every row equals ``q`` (zero capacity)."""
    q = np.asarray(list(q), dtype=float)
    return Channel(np.tile(q, (inputs, 1)))


def random_channel(rng: np.random.Generator, nx: int, ny: int, concentration: float = 1.0) -> Channel:
    return Channel(rng.dirichlet(np.full(ny, concentration), size=nx))


def random_distribution(rng: np.random.Generator, k: int, concentration: float = 1.0) -> Distribution:
    return Distribution(rng.dirichlet(np.full(k, concentration)))


def parse_channel_spec(spec: str) -> Channel:
    """Parse preset names such as ``bsc:0.1``, ``identity:3``, ``bec:0.2``, ``z:0.3``."""
    name, _, arg = spec.partition(":")
    name = name.strip().lower()
    try:
        if name == "bsc":
            return bsc(float(arg))
        if name in ("identity", "noiseless"):
            return identity_channel(int(arg or 2))
        if name == "bec":
            e = float(arg)
            return Channel([[1 - e, e, 0.0], [0.0, e, 1 - e]])
        if name == "z":
            p = float(arg)
            return Channel([[1.0, 0.0], [p, 1 - p]])
        if name == "useless":
            return constant_channel([0.5, 0.5])
    except ValueError as exc:
        raise ValueError(f"bad channel spec {spec!r}: {exc}") from None
    raise ValueError(f"unknown channel preset {spec!r}")


def read_channel_file(path) -> Channel:
    """Whitespace-separated rows, one line per input symbol; '#' starts a comment."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                rows.append([float(tok) for tok in line.split()])
    if not rows:
        raise ValueError(f"{path}: no channel rows found")
    return Channel(rows)
