"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the "acceptance criteria" section of the pytest
terminal summary.
"""

import itertools
import math
import time

import numpy as np

from instances import one_pass_instances, random_pair, two_phase_instances
from oracles import (
    bsc_capacity,
    enumerate_outcomes,
    grid_minimax_binary,
    run_algorithm1,
    run_two_phase_procedure,
)
from renyisim.capacity import capacity_value, renyi_capacity
from renyisim.distributions import Channel, JointDistribution, bsc, random_channel
from renyisim.exponents import (
    reliability_function,
    renyi_simulation_rate,
    strong_converse_exponent,
    variational_sc_exponent,
)
from renyisim.harness import ExperimentConfig, run_rf_experiment
from renyisim.measures import renyi_divergence, renyi_mutual_information
from renyisim.protocol import (
    build_product_split,
    build_rf_scheme,
    build_sc_scheme,
    build_uniform_fallback,
    converse_bound,
    induced_row,
    simulation_performance,
    ubound_reference,
)
from renyisim.sampling import (
    RejectionPlan,
    ScheduleMode,
    TwoPhasePlan,
    build_schedule,
    make_stream,
    rejection_output_distribution,
    residual_mass_bound,
    simulate_rejection,
    simulate_two_phase,
    two_phase_output_distribution,
)
from renyisim.typeclasses import (
    pn_exponent,
    pn_exponent_prediction,
    pn_lower_bound_chain,
    symmetric_reference_divergence,
)

BSC = bsc(0.1)
BSC_JOINT = JointDistribution.from_channel([0.5, 0.5], BSC)
SKEW_JOINT = JointDistribution(np.array([[0.3, 0.1, 0.05], [0.05, 0.2, 0.3]]))
RUNS = 100_000


def law_vector(law, size):
    v = np.zeros(size)
    for k, m in law.items():
        v[k] += m
    return v


def tv(a, b):
    return 0.5 * float(np.abs(np.asarray(a) - np.asarray(b)).sum())


def gate_channels():
    rng = np.random.default_rng(2718)
    return [random_channel(rng, int(rng.integers(2, 4)), int(rng.integers(2, 4))) for _ in range(10)]


def check(verdict, number, failures, detail):
    ok = not failures
    verdict(number, ok, detail if ok else f"{detail}; first failure: {failures[0]}")
    assert ok, failures[:5]


def test_capacity_correctness(verdict):
    failures, slowest = [], 0.0
    for p, alpha in itertools.product((0.05, 0.1, 0.2), (0.5, 1, 2, 4, math.inf)):
        closed = bsc_capacity(p, alpha)
        grid = grid_minimax_binary(bsc(p).rows, alpha)
        if abs(grid - closed) > 1e-6:
            failures.append(f"oracle disagreement at p={p}, α={alpha}")
        start = time.perf_counter()
        value = renyi_capacity(bsc(p), alpha).value
        elapsed = time.perf_counter() - start
        slowest = max(slowest, elapsed)
        if abs(value - closed) > 1e-6 or elapsed >= 1.0:
            failures.append(f"p={p}, α={alpha}: {value} vs {closed} in {elapsed:.3f}s")
    rng = np.random.default_rng(99)
    worst_gap = 0.0
    for _ in range(20):
        w = random_channel(rng, int(rng.integers(2, 5)), int(rng.integers(2, 5)))
        for alpha in (0.5, 1, 2, 4):
            gap = renyi_capacity(w, alpha).duality_gap
            worst_gap = max(worst_gap, gap)
            if gap > 1e-6:
                failures.append(f"gap {gap:.2e} at α={alpha}")
    check(verdict, "1", failures, f"15 BSC solves, slowest {slowest:.3f}s; worst duality gap {worst_gap:.1e}")


def test_measure_properties(verdict):
    rng = np.random.default_rng(123)
    orders = [0.0, 0.3, 0.5, 1.0, 1.5, 2.0, 4.0, math.inf]

    def pair(size):
        p, q = rng.dirichlet(np.ones(size)), rng.dirichlet(np.ones(size))
        if rng.random() < 0.3:
            p[rng.integers(size)] = 0.0
            p /= p.sum()
        return p, q

    failures = []
    for i in range(200):
        p, q = pair(int(rng.integers(2, 6)))
        a, b = sorted(rng.choice(orders, 2, replace=False))
        if renyi_divergence(p, q, a) > renyi_divergence(p, q, b) + 1e-10:
            failures.append(f"monotonicity #{i}")
    for i in range(200):
        (p, q), (p2, q2) = pair(int(rng.integers(2, 5))), pair(int(rng.integers(2, 4)))
        alpha = float(rng.choice(orders))
        joint = renyi_divergence(np.kron(p, p2), np.kron(q, q2), alpha)
        split = renyi_divergence(p, q, alpha) + renyi_divergence(p2, q2, alpha)
        if not abs(joint - split) <= 1e-10 * max(1.0, abs(split)):
            failures.append(f"additivity #{i}")
    for i in range(200):
        size = int(rng.integers(2, 6))
        p, q = pair(size)
        t = rng.dirichlet(np.ones(int(rng.integers(2, 5))), size=size)
        alpha = float(rng.choice(orders))
        if renyi_divergence(p @ t, q @ t, alpha) > renyi_divergence(p, q, alpha) + 1e-10:
            failures.append(f"data processing #{i}")
    check(verdict, "2", failures, "600 randomized instances (200 per property)")


def test_rejection_exactness(verdict):
    failures = []
    for p, q, n_budget, cap in one_pass_instances():
        s, _ = rejection_output_distribution(RejectionPlan(p, q, n_budget, cap))
        law = law_vector(enumerate_outcomes(run_algorithm1, p, q, n_budget, cap), q.size)
        if np.max(np.abs(s.probs - law)) >= 1e-12:
            failures.append(f"one-pass tree mismatch N={n_budget}, Ñ={cap}")
    for p, q, n_budget, k in two_phase_instances():
        s, _, _ = two_phase_output_distribution(TwoPhasePlan(p, q, n_budget, k))
        law = law_vector(enumerate_outcomes(run_two_phase_procedure, p, q, n_budget, k), q.size)
        if np.max(np.abs(s.probs - law)) >= 1e-12:
            failures.append(f"two-phase tree mismatch N={n_budget}, K={k}")
    for i, (p, q, n_budget, cap) in enumerate(one_pass_instances()):
        plan = RejectionPlan(p, q, n_budget, cap)
        _, symbol = simulate_rejection(plan, make_stream(1000 + i), RUNS)
        emp = np.bincount(symbol, minlength=q.size) / RUNS
        if tv(emp, rejection_output_distribution(plan)[0].probs) >= 3 * math.sqrt(q.size / RUNS):
            failures.append(f"one-pass Monte Carlo #{i}")
    for i, (p, q, n_budget, k) in enumerate(two_phase_instances()):
        plan = TwoPhasePlan(p, q, n_budget, k)
        _, symbol = simulate_two_phase(plan, make_stream(2000 + i), RUNS)
        emp = np.bincount(symbol, minlength=q.size) / RUNS
        if tv(emp, two_phase_output_distribution(plan)[0].probs) >= 3 * math.sqrt(q.size / RUNS):
            failures.append(f"two-phase Monte Carlo #{i}")
    check(verdict, "3", failures, "20 one-pass + 20 two-phase instances, trees to 1e-12, 1e5-run Monte Carlo")


def test_schedule_closed_forms(verdict):
    rng = np.random.default_rng(321)
    failures = []
    for i in range(50):
        p, q = random_pair(rng, int(rng.integers(2, 5)))
        n_budget = int(rng.integers(1, 10))
        std = build_schedule(p, q, n_budget)
        for j in range(n_budget + 1):
            if np.max(np.abs(std.residuals[j] - np.maximum(p - std.beta[j] * q, 0))) > 1e-12:
                failures.append(f"standard closed form #{i}, j={j}")
        lam = rng.uniform(0.05, 0.95)
        var = build_schedule(lam * p, q, n_budget, ScheduleMode.VARIANT)
        for j in range(n_budget + 1):
            beta_hat = (1 - lam) * j + var.residual_mass[:j].sum()
            if abs(var.beta[j] - beta_hat) > 1e-12:
                failures.append(f"variant β #{i}, j={j}")
            if np.max(np.abs(var.residuals[j] - np.maximum(lam * p - beta_hat * q, 0))) > 1e-12:
                failures.append(f"variant closed form #{i}, j={j}")
        s_n = std.residual_mass[-1]
        if std.beta[-1] < s_n * n_budget - 1e-12:
            failures.append(f"β_N < s_N·N #{i}")
        for t in (0.5, 1, 2):
            if s_n > residual_mass_bound(p, q, n_budget, t) + 1e-12:
                failures.append(f"s_N bound #{i}, t={t}")
    check(verdict, "4", failures, "50 standard + 50 variant schedules")


def test_pn_exponent_at_desk_scale(verdict):
    r = (renyi_mutual_information(BSC_JOINT, 1) + renyi_mutual_information(BSC_JOINT, math.inf)) / 2
    start = time.perf_counter()
    exponents = {}
    chain_failures = []
    for n in range(1, 41):
        exponents[n] = pn_exponent(BSC_JOINT, n, r)
        bound, _ = pn_lower_bound_chain(BSC_JOINT, n, r)
        if exponents[n] < bound - 1e-9:
            chain_failures.append(f"n={n}: {exponents[n]} < {bound}")
    elapsed = time.perf_counter() - start
    predicted, _ = pn_exponent_prediction(BSC_JOINT, r)
    final = exponents[40]
    within = math.isfinite(final) and abs(final - predicted) <= 0.15 * predicted
    ok_a = not chain_failures and elapsed < 60
    verdict("5(a)", ok_a, f"chain bound at n = 1..40 in {elapsed:.2f}s"
            + ("" if ok_a else f"; {chain_failures[:1]}"))
    verdict("5(b)", within, f"-(1/40)log p_40 = {final} vs prediction {predicted:.6f} (15% band)")
    assert ok_a, chain_failures[:5]
    assert within, f"n=40 exponent {final} not within 15% of {predicted}"


def test_reliability_trend(verdict):
    r = bsc_capacity(0.1, 2) + 0.1
    config = ExperimentConfig(channel=BSC, alpha=2, rate=r, n_values=tuple(range(4, 13)), scheme="rf", s=1.0)
    report = run_rf_experiment(config)
    ds = np.array([rec.D_value_bits for rec in report.records])
    bounds = np.array([rec.bound_upper for rec in report.records])
    target = r - bsc_capacity(0.1, 2)
    problems = []
    if len(ds) != 9:
        problems.append(f"only {len(ds)} blocklengths computed")
    if not np.all(ds > 0):
        problems.append("D not positive")
    rises = int(np.sum(np.diff(ds) > 0))
    if rises > 1:
        problems.append(f"{rises} increasing steps")
    if np.any(ds > bounds):
        problems.append("D above the Case-1 bound")
    if not 0.5 * target <= report.slope <= 1.5 * target:
        problems.append(f"slope {report.slope:.4f} outside [{0.5 * target:.3f}, {1.5 * target:.3f}]")
    detail = f"D_2 from {ds[0]:.3g} (n=4) to {ds[-1]:.3g} (n=12), slope {report.slope:.4f} vs {target:.3f}"
    check(verdict, "6", problems, detail)


def test_converse_gate(verdict):
    failures, count = [], 0
    for w in gate_channels():
        i_one = capacity_value(w, 1)
        for alpha in (0.5, 1, 2, math.inf):
            rate = renyi_simulation_rate(w, alpha)
            schemes = [
                build_rf_scheme(w, 3, rate + 0.1, 1.0),
                build_rf_scheme(w, 2, 0.5 * i_one, math.inf),
                build_uniform_fallback(w, 3),
            ]
            if alpha < 1:
                schemes.append(build_sc_scheme(w, 3, 0.5 * rate, alpha))
            else:
                schemes.append(build_product_split(w, 3, 0.5 * rate, alpha))
            for scheme in schemes:
                count += 1
                value = simulation_performance(w, scheme, alpha)
                lower = converse_bound(w, scheme.n, scheme.communication_bits, alpha)
                if value < lower - 1e-9 * max(1.0, abs(lower)):
                    failures.append(f"{scheme.kind.value} α={alpha}: {value} < {lower}")
    check(verdict, "7", failures, f"{count} schemes on 10 random channels, zero violations required")


def test_strong_converse_consistency(verdict):
    rng = np.random.default_rng(55)
    failures, worst = [], 0.0
    channels = [Channel(rng.dirichlet(np.ones(2), size=2)) for _ in range(10)]
    for w in channels:
        for alpha in (0.3, 0.5, 0.7):
            r = 0.5 * capacity_value(w, alpha)
            beta_form = strong_converse_exponent(w, r, alpha).value
            variational = variational_sc_exponent(w, r, alpha)[0]
            worst = max(worst, abs(beta_form - variational))
            if abs(beta_form - variational) > 1e-3:
                failures.append(f"α={alpha}: {beta_form} vs {variational}")
    cyclic = Channel([[0.7, 0.3, 0], [0, 0.7, 0.3], [0.3, 0, 0.7]])
    for w in [cyclic] + channels:
        i0 = capacity_value(w, 0)
        for r in (0.2, 0.65):
            target = max(i0 - r, 0.0)
            gaps = [abs(strong_converse_exponent(w, r, a).value - target) for a in (0.1, 0.03, 0.01)]
            if not (gaps[0] >= gaps[1] >= gaps[2]):
                failures.append(f"α↓0 gaps not monotone at r={r}: {gaps}")
    check(verdict, "8", failures, f"worst β-form vs variational gap {worst:.1e} on 30 cases; α↓0 gaps monotone")


def test_simulation_rate_thresholds(verdict):
    failures = []
    for alpha in (0.5, 1, 2, math.inf):
        rate = renyi_simulation_rate(BSC, alpha)
        if not reliability_function(BSC, rate + 0.02, alpha).value > 0:
            failures.append(f"E_rf at α={alpha}")
        if not strong_converse_exponent(BSC, rate - 0.02, alpha).value > 0:
            failures.append(f"E_sc at α={alpha}")
    check(verdict, "9", failures, "sign test at rate ± 0.02 for α ∈ {0.5, 1, 2, ∞}")


def reference_schemes():
    w3 = gate_channels()[0]
    return [
        (BSC, build_rf_scheme(BSC, 4, bsc_capacity(0.1, 2) + 0.1, 1.0)),
        (BSC, build_rf_scheme(BSC, 3, 0.3, math.inf)),
        (BSC, build_sc_scheme(BSC, 4, 0.1, 0.5)),
        (BSC, build_uniform_fallback(BSC, 3)),
        (BSC, build_product_split(BSC, 4, 0.6, 2)),
        (BSC, build_product_split(BSC, 3, 0.0, 2)),
        (w3, build_rf_scheme(w3, 2, 0.4, 1.0)),
        (w3, build_sc_scheme(w3, 2, 0.1, 0.5)),
    ]


def test_reference_domination(verdict):
    rng = np.random.default_rng(77)
    failures, worst = [], math.inf
    schemes = reference_schemes()
    for w, scheme in schemes:
        ref = ubound_reference(scheme).probs
        budget = 2.0**scheme.communication_bits
        words = itertools.product(range(w.input_size), repeat=scheme.n)
        rows = np.array([np.exp(induced_row(scheme, w, x, aggregated=False).log_row) for x in words])
        for _ in range(10):
            px_n = rng.dirichlet(np.ones(rows.shape[0]))
            slack = (budget * px_n[:, None] * ref[None, :] - px_n[:, None] * rows).min()
            worst = min(worst, slack)
            if slack < -1e-12:
                failures.append(f"{scheme.kind.value} n={scheme.n}: slack {slack:.2e}")
    check(verdict, "10", failures, f"{len(schemes)} schemes × 10 input laws, min slack {worst:.1e}")


def test_symmetric_reference_sandwich(verdict):
    failures = []
    for pxy in (BSC_JOINT, SKEW_JOINT):
        ny = pxy.probs.shape[1]
        for alpha in (0.5, 1, 2):
            i_alpha = renyi_mutual_information(pxy, alpha)
            for n in range(1, 31):
                gap = symmetric_reference_divergence(pxy, n, alpha) - i_alpha
                if not -1e-9 <= gap <= ny * math.log2(n + 1) / n:
                    failures.append(f"|Y|={ny}, α={alpha}, n={n}: gap {gap}")
    check(verdict, "11", failures, "two joint laws, α ∈ {0.5, 1, 2}, n = 1..30")
