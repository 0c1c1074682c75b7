"""Experiment runner: per-n sweeps, slope fits, converse audits, report files."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .capacity import capacity_value
from .distributions import Channel, as_order, parse_channel_spec, read_channel_file
from .exponents import reliability_function, strong_converse_exponent
from .protocol import (
    DEFAULT_DELTA,
    SimulationScheme,
    build_product_split,
    build_rf_scheme,
    build_sc_scheme,
    build_uniform_fallback,
    converse_bound,
    rf_case1_bound,
    simulation_performance,
)
from .typeclasses import type_count

__all__ = [
    "ExperimentConfig",
    "ReportRecord",
    "ExperimentReport",
    "InfeasibleSizeError",
    "GATE_CONVERSE",
    "GATE_TREND",
    "CSV_COLUMNS",
    "build_scheme",
    "scheme_is_feasible",
    "fit_slope",
    "run_rf_experiment",
    "run_sc_audit",
    "export_report",
    "read_report",
    "format_number",
    "worker_count",
    "rounded",
]

CSV_COLUMNS = (
    "n",
    "c_bits",
    "rate",
    "alpha",
    "D_value_bits",
    "bound_lower",
    "bound_upper",
    "theory_exponent",
    "slope",
    "verdict",
)
GATE_CONVERSE = "converse"
GATE_TREND = "trend"
WORKERS_ENV = "RENYISIM_WORKERS"
# conditional-type atoms summed per input type, times number of input types
WORK_CAP = 5_000_000
GATE_TOL = 1e-9
EXACT_FLOOR = 1e-12
SCHEME_KINDS = ("rf", "sc", "split", "uniform")


class InfeasibleSizeError(ValueError):
    """No n in the requested range admits an exact computation."""


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    channel: Channel
    alpha: float
    rate: float
    n_values: Tuple[int, ...]
    scheme: str = "rf"
    s: Optional[float] = None
    delta: float = DEFAULT_DELTA
    seed: int = 0
    tol: float = 1e-6
    output: Optional[str] = None
    fmt: str = "csv"

    def __post_init__(self):
        if not self.n_values:
            raise ValueError("n-range is empty")
        if any(n < 1 for n in self.n_values):
            raise ValueError("blocklengths must be positive")
        if self.rate < 0:
            raise ValueError("rate must be nonnegative")
        if self.scheme not in SCHEME_KINDS:
            raise ValueError(f"scheme must be one of {SCHEME_KINDS}")
        if self.fmt not in ("csv", "jsonl"):
            raise ValueError("format must be csv or jsonl")
        object.__setattr__(self, "n_values", tuple(sorted(set(int(n) for n in self.n_values))))
        object.__setattr__(self, "alpha", float(as_order(self.alpha)))

    @property
    def s_value(self) -> float:
        if self.s is not None:
            return float(self.s)
        if math.isinf(self.alpha):
            return math.inf
        return self.alpha - 1 if self.alpha > 1 else 1.0

    @classmethod
    def from_mapping(cls, data: dict, base_dir: str = ".") -> "ExperimentConfig":
        """Build from a config dict (keys as in the CLI, dashes or underscores)."""
        data = {k.replace("-", "_"): v for k, v in data.items() if v is not None}
        known = {"channel", "channel_file", "alpha", "rate", "n_min", "n_max", "n_values", "scheme", "s",
                 "delta", "seed", "tol", "output", "format"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "channel_file" in data:
            channel = read_channel_file(os.path.join(base_dir, data["channel_file"]))
        elif isinstance(data.get("channel"), list):
            channel = Channel(data["channel"])
        elif "channel" in data:
            channel = parse_channel_spec(str(data["channel"]))
        else:
            raise ValueError("config needs 'channel' or 'channel_file'")
        if "n_values" in data:
            n_values = tuple(int(n) for n in data["n_values"])
        else:
            lo = int(data.get("n_min", 1))
            n_values = tuple(range(lo, int(data.get("n_max", lo)) + 1))
        return cls(
            channel=channel,
            alpha=_parse_float(data.get("alpha", 2.0)),
            rate=float(data.get("rate", 0.0)),
            n_values=n_values,
            scheme=str(data.get("scheme", "rf")),
            s=None if "s" not in data else _parse_float(data["s"]),
            delta=float(data.get("delta", DEFAULT_DELTA)),
            seed=int(data.get("seed", 0)),
            tol=float(data.get("tol", 1e-6)),
            output=data.get("output"),
            fmt=str(data.get("format", "csv")),
        )


def _parse_float(v) -> float:
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity", "∞"):
        return math.inf
    return float(v)


@dataclass(frozen=True)
class ReportRecord:
    n: int
    c_bits: float
    rate: float
    alpha: float
    D_value_bits: float
    bound_lower: float
    bound_upper: float
    theory_exponent: float
    slope: float
    verdict: str


@dataclass
class ExperimentReport:
    records: List[ReportRecord]
    slope: float = math.nan
    slope_stderr: float = math.nan
    fit_residual: float = math.nan
    theory_exponent: float = math.nan
    verdicts: Dict[str, str] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    @property
    def gate_violated(self) -> bool:
        return self.verdicts.get(GATE_CONVERSE) == "fail"


# schemes and feasibility


def scheme_is_feasible(w: Channel, n: int, cap: int = WORK_CAP) -> bool:
    """Input types × conditional-type atoms of the largest row must stay under ``cap``."""
    nx, ny = w.input_size, w.output_size
    # a row splits n among the inputs; the atom count is largest when it is spread out
    share, extra = divmod(n, nx)
    worst_atoms = 1
    for x in range(nx):
        worst_atoms *= type_count(ny, share + (1 if x < extra else 0))
    return type_count(nx, n) * worst_atoms <= cap


def build_scheme(config: ExperimentConfig, n: int) -> SimulationScheme:
    w = config.channel
    if config.scheme == "rf":
        return build_rf_scheme(w, n, config.rate, config.s_value)
    if config.scheme == "sc":
        return build_sc_scheme(w, n, config.rate, config.alpha, config.delta)
    if config.scheme == "split":
        return build_product_split(w, n, config.rate, config.alpha, config.delta)
    return build_uniform_fallback(w, n)


def fit_slope(ns: Sequence[int], ys: Sequence[float]) -> Tuple[float, float, float]:
    """Least squares on the last ⌈half⌉ of the points; returns (slope, stderr, rms residual)."""
    ns = np.asarray(ns, dtype=float)
    ys = np.asarray(ys, dtype=float)
    k = math.ceil(ns.size / 2)
    x, y = ns[-k:], ys[-k:]
    ok = np.isfinite(y)
    x, y = x[ok], y[ok]
    if x.size < 2:
        return math.nan, math.nan, math.nan
    fit = stats.linregress(x, y)
    resid = y - (fit.intercept + fit.slope * x)
    stderr = float(fit.stderr) if x.size > 2 else math.nan
    return float(fit.slope), stderr, float(np.sqrt(np.mean(resid**2)))


def _feasible_range(config: ExperimentConfig, report_warnings: List[str]) -> List[int]:
    ok = [n for n in config.n_values if scheme_is_feasible(config.channel, n)]
    dropped = [n for n in config.n_values if n not in ok]
    if dropped:
        report_warnings.append(f"blocklengths {dropped} exceed the exact-computation budget and were skipped")
    if not ok:
        raise InfeasibleSizeError(f"no feasible blocklength in {list(config.n_values)}")
    return ok


def _map(fn, items):
    workers = worker_count()
    if workers == 1 or len(items) == 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _rf_point(args):
    config, n = args
    scheme = build_scheme(config, n)
    order = config.alpha
    d = simulation_performance(config.channel, scheme, order)
    lower = converse_bound(config.channel, n, scheme.communication_bits, order)
    upper = math.nan
    if config.scheme == "rf" and math.isfinite(config.s_value) and math.isclose(order, 1 + config.s_value):
        upper = rf_case1_bound(config.channel, scheme)
    return n, scheme.communication_bits, d, lower, upper


def _sc_point(args):
    config, n = args
    scheme = build_scheme(config, n)
    d = simulation_performance(config.channel, scheme, config.alpha)
    lower = converse_bound(config.channel, n, scheme.communication_bits, config.alpha)
    return n, scheme.communication_bits, d, lower


def _gate(d: float, lower: float) -> bool:
    return d >= lower - GATE_TOL * max(1.0, abs(lower))


def run_rf_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Exact D_α of rate-above schemes per n, with the decay slope of −log D."""
    warnings: List[str] = []
    ns = _feasible_range(config, warnings)
    points = _map(_rf_point, [(config, n) for n in ns])
    w, r = config.channel, config.rate
    s = config.s_value
    e_rf = reliability_function(w, r, config.alpha).value
    achievable = s * (r - capacity_value(w, 1 + s)) if math.isfinite(s) else math.nan
    theory = max(v for v in (e_rf, achievable) if not math.isnan(v)) if not (
        math.isnan(e_rf) and math.isnan(achievable)) else math.nan

    ds = np.array([p[2] for p in points])
    with np.errstate(divide="ignore"):
        neg_log = -np.log2(ds)
    slope, stderr, resid = fit_slope(ns, neg_log)
    if np.all(ds <= EXACT_FLOOR) or (math.isinf(theory) and np.all(np.diff(ds) <= 0)):
        # above I_∞ nothing is clipped; only the abort branch remains and it decays
        # faster than any exponential
        trend = "exact-regime"
    elif not math.isfinite(slope) or slope <= 0 or (math.isfinite(stderr) and slope - 2 * stderr <= 0):
        trend = "no-decay"
    elif math.isfinite(theory) and 0.5 * theory <= slope <= 1.5 * theory:
        trend = "consistent"
    else:
        trend = "off-trend"
    return _assemble(config, points, slope, stderr, resid, theory, trend, warnings)


def run_sc_audit(config: ExperimentConfig) -> ExperimentReport:
    """One-shot converse gate on every n plus the growth rate of D_α against E_sc."""
    warnings: List[str] = []
    ns = _feasible_range(config, warnings)
    points = _map(_sc_point, [(config, n) for n in ns])
    w = config.channel
    theory = strong_converse_exponent(w, config.rate, config.alpha).value
    envelope = [
        n * (theory + config.delta) + (w.input_size + w.output_size) * math.log2(n + 1) for n in ns
    ]
    points = [p + (env,) for p, env in zip(points, envelope)]
    slope, stderr, resid = fit_slope(ns, [p[2] for p in points])
    within = all(p[2] <= p[4] + GATE_TOL for p in points)
    trend = "consistent" if within else "above-envelope"
    return _assemble(config, points, slope, stderr, resid, theory, trend, warnings)


def _assemble(config, points, slope, stderr, resid, theory, trend, warnings) -> ExperimentReport:
    records = []
    gate_ok = True
    for n, bits, d, lower, upper in points:
        ok = _gate(d, lower)
        gate_ok &= ok
        records.append(
            ReportRecord(
                n=n,
                c_bits=bits,
                rate=config.rate,
                alpha=config.alpha,
                D_value_bits=d,
                bound_lower=lower,
                bound_upper=upper,
                theory_exponent=theory,
                slope=slope,
                verdict=trend if ok else "gate-violation",
            )
        )
    return ExperimentReport(
        records=records,
        slope=slope,
        slope_stderr=stderr,
        fit_residual=resid,
        theory_exponent=theory,
        verdicts={GATE_CONVERSE: "pass" if gate_ok else "fail", GATE_TREND: trend},
        warnings=warnings,
    )


# report files


def format_number(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v == 0:
        return "0"  # no negative zero, so CSV and JSON agree
    return "%.12g" % v


def _parse_value(name: str, token):
    if name == "verdict":
        return str(token)
    if name == "n":
        return int(token)
    return float(token)


def _row_tokens(rec: ReportRecord) -> List[str]:
    return [rec.verdict if name == "verdict" else format_number(getattr(rec, name)) for name in CSV_COLUMNS]


def export_report(report: ExperimentReport, path: str, fmt: str = "csv") -> None:
    """CSV or JSON-lines, UTF-8 with LF newlines and 12 significant digits."""
    buf = io.StringIO()
    if fmt == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in report.records:
            writer.writerow(_row_tokens(rec))
    elif fmt == "jsonl":
        for rec in report.records:
            obj = {}
            for name, tok in zip(CSV_COLUMNS, _row_tokens(rec)):
                if name == "verdict" or tok in ("nan", "inf", "-inf"):
                    obj[name] = tok
                else:
                    obj[name] = json.loads(tok)
            buf.write(json.dumps(obj, ensure_ascii=False) + "\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def read_report(path: str, fmt: str = "csv") -> List[ReportRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        if fmt == "csv":
            rows = list(csv.reader(fh))
            if not rows or tuple(rows[0]) != CSV_COLUMNS:
                raise ValueError(f"{path}: unexpected CSV header")
            dicts = [dict(zip(CSV_COLUMNS, row)) for row in rows[1:]]
        else:
            dicts = [json.loads(line) for line in fh if line.strip()]
    return [ReportRecord(**{k: _parse_value(k, d[k]) for k in CSV_COLUMNS}) for d in dicts]


def rounded(rec: ReportRecord) -> ReportRecord:
    """The record as it reads back from a file."""
    return ReportRecord(**{k: _parse_value(k, tok) for k, tok in zip(CSV_COLUMNS, _row_tokens(rec))})
