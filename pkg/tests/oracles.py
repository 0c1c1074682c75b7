"""Independent reference computations used by the tests.

Nothing here imports the package's numerical code; each oracle is a direct
evaluation, a grid search, or an exhaustive enumeration.
"""

import itertools
import math
from collections import defaultdict

import numpy as np


def plain_divergence(p, q, alpha):
    """D_α(p‖q) in bits by the textbook formula (finite α ∉ {0, 1}, or 1, or ∞)."""
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    on = p > 0
    if alpha == 1:
        if np.any(q[on] == 0):
            return math.inf
        return float(np.sum(p[on] * np.log2(p[on] / q[on])))
    if math.isinf(alpha):
        if np.any(q[on] == 0):
            return math.inf
        return float(np.log2(np.max(p[on] / q[on])))
    keep = on & (q > 0)
    if alpha > 1 and np.any(on & (q == 0)):
        return math.inf
    total = float(np.sum(p[keep] ** alpha * q[keep] ** (1 - alpha)))
    if total == 0:
        return math.inf
    return math.log2(total) / (alpha - 1)


def binary_renyi_entropy(p, alpha):
    if alpha == 1:
        return -(p * math.log2(p) + (1 - p) * math.log2(1 - p))
    if math.isinf(alpha):
        return -math.log2(max(p, 1 - p))
    return math.log2(p**alpha + (1 - p) ** alpha) / (1 - alpha)


def bsc_capacity(p, alpha):
    """1 − H_α(p); uniform input is optimal by symmetry."""
    return 1 - binary_renyi_entropy(p, alpha)


def bsc_rows(p):
    return np.array([[1 - p, p], [p, 1 - p]])


def grid_minimax_binary(rows, alpha, step=1e-4):
    """min over Q = (q, 1−q) on a grid, then golden refine, of max_x D_α(W_x‖Q)."""
    def worst(q):
        return max(plain_divergence(r, [q, 1 - q], alpha) for r in rows)

    grid = np.arange(step, 1.0, step)
    vals = np.array([worst(q) for q in grid])
    k = int(np.argmin(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    g = (math.sqrt(5) - 1) / 2
    for _ in range(80):
        c, d = b - g * (b - a), a + g * (b - a)
        if worst(c) < worst(d):
            b = d
        else:
            a = c
    return min(worst((a + b) / 2), float(vals[k]))


def grid_sup_t(cap_fn, r, t_lo=0.0, t_hi=64.0, step=1e-3):
    """Dense scan of t·(r − I_{1+t}) over [t_lo, t_hi] plus a local golden refine."""
    grid = np.arange(t_lo, t_hi + step / 2, step)
    vals = np.array([t * (r - cap_fn(1 + t)) if t > 0 else 0.0 for t in grid])
    k = int(np.argmax(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    g = (math.sqrt(5) - 1) / 2
    f = lambda t: t * (r - cap_fn(1 + t)) if t > 0 else 0.0
    for _ in range(80):
        c, d = b - g * (b - a), a + g * (b - a)
        if f(c) > f(d):
            b = d
        else:
            a = c
    return max(float(vals[k]), f((a + b) / 2))


def grid_beta_form(cap_fn, r, alpha, step=1e-4):
    betas = np.arange(alpha, 1.0, step)
    vals = alpha * (1 - betas) / (betas * (1 - alpha)) * (np.array([cap_fn(b) for b in betas]) - r)
    return max(float(vals.max()), 0.0)


def binary_theta_grid(px, rows, r, alpha, step=2e-3):
    """min over binary Ŵ of (α/(1−α))·D(P·Ŵ‖P·W) + |I(P·Ŵ) − r|⁺ on a 2-parameter grid."""
    a = alpha / (1 - alpha)
    u = np.arange(step / 2, 1, step)
    e0, e1 = np.meshgrid(u, u, indexing="ij")  # Ŵ = [[1−e0, e0], [e1, 1−e1]]
    v = np.stack([np.stack([1 - e0, e0], -1), np.stack([e1, 1 - e1], -1)], -2)  # (.., 2, 2)
    w = np.asarray(rows, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        kl = np.where(v > 0, v * np.log2(v / w), 0.0).sum(-1)  # (.., 2)
        d = kl @ px
        q = np.einsum("x,...xy->...y", px, v)
        mi = (px[:, None] * np.where(v > 0, v * np.log2(v / q[..., None, :]), 0.0)).sum((-1, -2))
    obj = a * d + np.maximum(mi - r, 0.0)
    return float(obj.min())


def run_algorithm1(p, q, n_budget, iteration_cap, draw):
    """One execution driven by ``draw(probs) -> index``; returns the emitted symbol."""
    pbar = np.minimum(p, n_budget * q)
    x0 = draw(q)
    for _ in range(iteration_cap):
        x = draw(q)
        acc = pbar[x] / (n_budget * q[x])
        if draw(np.array([1 - acc, acc])) == 1:
            return x
    return x0


def recursion_schedule(target, q, n_budget, variant):
    """Per-iteration acceptance probabilities straight from the stated recursions."""
    p = [float(v) for v in target]
    lam = sum(p)
    s = lam
    rows = []
    for _ in range(n_budget):
        scale = (1 - lam + s) if variant else s
        a = [min(1.0, p[x] / (scale * q[x])) if q[x] > 0 else 0.0 for x in range(len(p))]
        p = [p[x] - scale * q[x] * a[x] for x in range(len(p))]
        s = sum(p)
        rows.append(a)
    return rows


def run_two_phase_procedure(p, q, n_budget, repeats, draw):
    std = recursion_schedule(p, q, n_budget, variant=False)
    # β_N = Σ_{i<N} s_i with s_0 = 1
    s_vals = [1.0]
    res = list(p)
    for a in std:
        res = [res[x] - s_vals[-1] * q[x] * a[x] for x in range(len(p))]
        s_vals.append(sum(res))
    beta = sum(s_vals[:-1])
    p0 = np.minimum(p, beta * q)
    p_hat = p - p0
    var = recursion_schedule(p_hat, q, n_budget, variant=True) if p_hat.sum() > 0 else [[0.0] * len(p)] * n_budget
    x0 = draw(q)
    for table in [var] + [std] * repeats:
        for a in table:
            x = draw(q)
            if draw(np.array([1 - a[x], a[x]])) == 1:
                return x
    return x0


def enumerate_outcomes(procedure, *args):
    """Exact output law by exhausting every sequence of random choices.

    ``procedure(*args, draw)`` is re-run once per leaf of the outcome tree,
    replaying a forced prefix of choices; zero-probability branches are pruned.
    """
    law = defaultdict(float)
    stack = [()]
    while stack:
        prefix = stack.pop()
        pos = [0]
        weight = [1.0]
        branch = [None]

        def draw(probs):
            i = pos[0]
            pos[0] += 1
            if i < len(prefix):
                weight[0] *= probs[prefix[i]]
                return prefix[i]
            branch[0] = probs
            raise _Branch

        try:
            out = procedure(*args, draw)
        except _Branch:
            probs = branch[0]
            for k, pk in enumerate(probs):
                if pk > 0:
                    stack.append(prefix + (k,))
            continue
        law[out] += weight[0]
    return law


class _Branch(Exception):
    pass


def pn_word_bruteforce(pxy, n, r, k_poly):
    """p_n by summing over every (x^n, y^n) word pair."""
    pxy = np.asarray(pxy, float)
    nx, ny = pxy.shape
    px = pxy.sum(1)
    n_types = math.comb(n + ny - 1, ny - 1)
    total = 0.0
    log_g = k_poly * math.log2(n + 1)
    for xs in itertools.product(range(nx), repeat=n):
        for ys in itertools.product(range(ny), repeat=n):
            pw = math.prod(pxy[x, y] for x, y in zip(xs, ys))
            if pw == 0:
                continue
            counts = [ys.count(b) for b in range(ny)]
            cls = math.factorial(n) // math.prod(math.factorial(c) for c in counts)
            phi = 1.0 / (n_types * cls)
            rhs = log_g + n * r + sum(math.log2(px[x]) for x in xs) + math.log2(phi)
            if math.log2(pw) >= rhs - 1e-9 * max(1.0, abs(rhs)):
                total += pw
    return total


def rf_row_bruteforce(rows, q, word, n_budget, iteration_cap):
    """(1−p)·W̄/ΣW̄ + p·Q^n over all |Y|^n words, straight from the formula."""
    rows = np.asarray(rows, float)
    ny = rows.shape[1]
    n = len(word)
    out_words = list(itertools.product(range(ny), repeat=n))
    target = np.array([math.prod(rows[x, y] for x, y in zip(word, ys)) for ys in out_words])
    qn = np.array([math.prod(q[y] for y in ys) for ys in out_words])
    wbar = np.minimum(target, n_budget * qn)
    mass = wbar.sum()
    p = (1 - mass / n_budget) ** iteration_cap
    return (1 - p) * wbar / mass + p * qn, target, p
