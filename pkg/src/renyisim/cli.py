"""Command-line entry point: ``renyisim {capacity,exponent,simulate,audit,sweep}``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import List, Optional

import numpy as np

from .capacity import CapacityConvergenceError, renyi_capacity
from .exponents import reliability_function, renyi_simulation_rate, strong_converse_exponent
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    InfeasibleSizeError,
    build_scheme,
    export_report,
    format_number,
    run_rf_experiment,
    run_sc_audit,
    scheme_is_feasible,
)
from .protocol import converse_bound, simulation_performance
from .sampling import RejectionPlan, make_stream, simulate_rejection

EXIT_OK = 0
EXIT_GATE = 2
EXIT_INFEASIBLE = 3
EXIT_NONCONVERGENCE = 4
# dense sampling over Y^n is limited to this many output words
SAMPLE_CAP = 2**16


def _number(v) -> object:
    if isinstance(v, float) and not math.isfinite(v):
        return format_number(v)
    return v


def _emit(obj: dict) -> None:
    print(json.dumps({k: _number(v) for k, v in obj.items()}, ensure_ascii=False))


def _load_config(args) -> dict:
    data = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"{args.config}: config must be a JSON object")
        if "channel_file" in data:
            data["channel_file"] = os.path.join(os.path.dirname(os.path.abspath(args.config)), data["channel_file"])
    overrides = {
        "channel": args.channel,
        "channel_file": args.channel_file,
        "alpha": args.alpha,
        "rate": getattr(args, "rate", None),
        "n_min": getattr(args, "n_min", None),
        "n_max": getattr(args, "n_max", None),
        "scheme": getattr(args, "scheme", None),
        "s": getattr(args, "s", None),
        "delta": getattr(args, "delta", None),
        "seed": getattr(args, "seed", None),
        "tol": getattr(args, "tol", None),
        "output": getattr(args, "output", None),
        "format": getattr(args, "format", None),
    }
    for key, val in overrides.items():
        if val is not None:
            data[key] = val
    if "channel" in data and "channel_file" in data:
        if args.channel is not None:
            data.pop("channel_file")
        else:
            data.pop("channel")
    if getattr(args, "n", None) is not None:
        data["n_values"] = [args.n]
    return data


def _config(args, defaults: dict) -> ExperimentConfig:
    data = dict(defaults)
    data.update(_load_config(args))
    return ExperimentConfig.from_mapping(data)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--channel", help="preset such as bsc:0.1, bec:0.2, z:0.3, identity:3")
    p.add_argument("--channel-file", help="matrix file, whitespace-separated rows, one line per input")
    p.add_argument("--alpha", help="Rényi order (number or 'inf')")


def _add_range(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rate", type=float)
    p.add_argument("--n-min", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--scheme", choices=["rf", "sc", "split", "uniform"])
    p.add_argument("--s", help="rejection parameter s for rf schemes (number or 'inf')")
    p.add_argument("--delta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", help="report path; stdout when omitted")
    p.add_argument("--format", choices=["csv", "jsonl"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="renyisim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="Rényi capacity with duality gap")
    _add_common(p)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("exponent", help="reliability or strong-converse exponent")
    _add_common(p)
    p.add_argument("--rate", type=float)
    p.add_argument("--kind", choices=["rf", "sc", "rate"], default="rf")
    p.set_defaults(func=cmd_exponent)

    p = sub.add_parser("simulate", help="build one scheme and evaluate it exactly")
    _add_common(p)
    _add_range(p)
    p.add_argument("--n", type=int)
    p.add_argument("--input-word", help="comma-separated input symbols to sample for")
    p.add_argument("--samples", type=int, default=0, help="Monte Carlo draws for --input-word")
    p.add_argument("--dump-scheme", action="store_true", help="print the scheme description")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("audit", help="converse gate and strong-converse trend over n")
    _add_common(p)
    _add_range(p)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("sweep", help="decay of rate-above schemes over n")
    _add_common(p)
    _add_range(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def cmd_capacity(args) -> int:
    data = _load_config(args)
    cfg = ExperimentConfig.from_mapping({**data, "n_values": [1]})
    res = renyi_capacity(cfg.channel, cfg.alpha, cfg.tol)
    _emit(
        {
            "alpha": cfg.alpha,
            "capacity_bits": res.value,
            "duality_gap": res.duality_gap,
            "optimal_input": res.optimal_input.probs.tolist(),
            "optimal_output": res.optimal_output.probs.tolist(),
        }
    )
    return EXIT_OK


def cmd_exponent(args) -> int:
    data = _load_config(args)
    cfg = ExperimentConfig.from_mapping({**data, "n_values": [1]})
    if args.kind == "rate":
        _emit({"alpha": cfg.alpha, "simulation_rate": renyi_simulation_rate(cfg.channel, cfg.alpha)})
        return EXIT_OK
    fn = reliability_function if args.kind == "rf" else strong_converse_exponent
    rep = fn(cfg.channel, cfg.rate, cfg.alpha)
    out = {"kind": rep.kind.value, "alpha": cfg.alpha, "rate": cfg.rate, "value": rep.value, "boundary": rep.boundary}
    if rep.optimizer is not None:
        out["t"] = rep.optimizer.t
        out["beta"] = rep.optimizer.beta
    _emit(out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args, {"n_values": [4]})
    n = cfg.n_values[0]
    w = cfg.channel
    if not scheme_is_feasible(w, n):
        print(f"renyisim: n = {n} is beyond the exact-computation budget", file=sys.stderr)
        return EXIT_INFEASIBLE
    scheme = build_scheme(cfg, n)
    d, word = simulation_performance(w, scheme, cfg.alpha, return_word=True)
    lower = converse_bound(w, n, scheme.communication_bits, cfg.alpha)
    out = {
        "n": n,
        "scheme": scheme.kind.value,
        "c_bits": scheme.communication_bits,
        "alpha": cfg.alpha,
        "D_value_bits": d,
        "worst_input": list(word),
        "bound_lower": lower,
    }
    if args.dump_scheme:
        out["scheme_document"] = scheme.to_document()
    if args.input_word and args.samples > 0:
        out.update(_sample(cfg, scheme, args))
    _emit(out)
    return EXIT_OK if d >= lower - 1e-9 * max(1.0, abs(lower)) else EXIT_GATE


def _sample(cfg: ExperimentConfig, scheme, args) -> dict:
    from .protocol import SchemeKind

    word = tuple(int(t) for t in args.input_word.split(","))
    w = cfg.channel
    n = len(word)
    if scheme.kind is not SchemeKind.RATE_ABOVE:
        raise ValueError("Monte Carlo sampling is available for rf schemes")
    if w.output_size**n > SAMPLE_CAP:
        raise InfeasibleSizeError(f"|Y|^n = {w.output_size**n} is above the sampling cap {SAMPLE_CAP}")
    target = np.ones(1)
    proposal = np.ones(1)
    for x in word:
        target = np.kron(target, w.rows[x])
        proposal = np.kron(proposal, scheme.proposal_ref.probs)
    plan = RejectionPlan(target, proposal, scheme.params.n_budget, scheme.params.iteration_cap)
    indices, symbols = simulate_rejection(plan, make_stream(cfg.seed), args.samples)
    counts = np.bincount(symbols, minlength=target.size)
    return {
        "samples": int(args.samples),
        "abort_fraction": float(np.mean(indices == 0)),
        "empirical_output": (counts / args.samples).tolist(),
    }


def _write(report: ExperimentReport, cfg: ExperimentConfig) -> None:
    for msg in report.warnings:
        print(f"renyisim: warning: {msg}", file=sys.stderr)
    if cfg.output:
        export_report(report, cfg.output, cfg.fmt)
    else:
        import tempfile

        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "report")
            export_report(report, path, cfg.fmt)
            with open(path, encoding="utf-8") as fh:
                sys.stdout.write(fh.read())
    summary = {
        "slope": report.slope,
        "slope_stderr": report.slope_stderr,
        "fit_residual": report.fit_residual,
        "theory_exponent": report.theory_exponent,
        **{f"verdict_{k}": v for k, v in report.verdicts.items()},
    }
    print(json.dumps({k: _number(v) for k, v in summary.items()}), file=sys.stderr)


def cmd_audit(args) -> int:
    cfg = _config(args, {"scheme": "sc", "n_min": 4, "n_max": 8})
    report = run_sc_audit(cfg)
    _write(report, cfg)
    return EXIT_GATE if report.gate_violated else EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args, {"scheme": "rf", "n_min": 4, "n_max": 10})
    report = run_rf_experiment(cfg)
    _write(report, cfg)
    return EXIT_GATE if report.gate_violated else EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleSizeError as exc:
        print(f"renyisim: infeasible size: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except CapacityConvergenceError as exc:
        print(f"renyisim: solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (ValueError, OSError) as exc:
        print(f"renyisim: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
