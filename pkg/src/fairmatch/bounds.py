"""Competitive-ratio bound machinery and the adversarial families behind it.

Two bounds are computed here.  For plain boosted sampling run on an equalized
LP solution with per-agent mass tau, the per-agent match probability is at
least

    (1 - exp(-(1/tau) * sum_{x in S(tau)} ln(1 + x (e^tau - 1)))) / tau * tau,

where S(tau) is the worst-case split of tau into neighbor masses: greedy
prefix pieces 1 - e^-1, e^-1 - e^-2, ... followed by the residual.  The ratio
evaluates to about 0.7254 at tau = 1 and increases toward 1 as tau -> 0.

For attenuated boosting, an agent with LP mass x whose attenuation stops
being active at time kappa (on the [0, 1] fluid scale) is matched with
probability at least F(x, kappa) built from f(p, x) = x / (x + (1 - x) p):

    F = sum_{x_u in S3(x)} int_0^kappa e^-z f(e^-z, x_u) dz
        + e^-kappa (1 - prod_u exp(-int_kappa^1 f(e^-z, x_u) dz)),

with S3 the three-piece worst-case split.  min over (x, kappa) of F(x, kappa)/x
is about 0.7195, attained at x = 1 - e^-1, kappa = 1.

Both integrals have elementary antiderivatives; the scalar evaluator uses
adaptive Simpson quadrature and the grid minimizer uses the vectorized closed
forms, with tests pinning the two against each other.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from math import exp, expm1, log, log1p

import numpy as np

from .instance import Instance
from .lp import GFM, IFM, VOM, make_solution

PIECE_TOL = 1e-12
C1 = -expm1(-1.0)            # 1 - e^-1
C2 = -expm1(-2.0)            # 1 - e^-2
SIMPSON_TOL = 1e-10
ORACLE_SEQUENCE_LIMIT = 10 ** 6


@dataclass(frozen=True)
class BoundEvaluation:
    """A bound value together with the inputs and worst-case split behind it."""

    kind: str
    tau: float = None
    x_star: float = None
    kappa: float = None
    pieces: tuple = ()
    value: float = None
    minimizer: tuple = None


def minimizer_set(tau: float) -> tuple:
    """Worst-case split of mass tau: full prefix pieces e^-(k-1) - e^-k while
    1 - e^-k <= tau, then the residual.  Pieces below 1e-12 are dropped, which
    truncates the infinite split at tau = 1 after 28 terms."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    pieces = []
    k = 0
    while True:
        if -expm1(-(k + 1)) <= tau:
            pieces.append(exp(-k) - exp(-(k + 1)))
            k += 1
            if tau - (-expm1(-k)) < PIECE_TOL:
                break
        else:
            resid = tau - (-expm1(-k))
            if resid > PIECE_TOL:
                pieces.append(resid)
            break
    return tuple(pieces)


def minimizer_set_three_piece(x_star: float) -> tuple:
    """Capped three-piece variant of the worst-case split used by F."""
    if not 0.0 < x_star <= 1.0:
        raise ValueError(f"x_star must lie in (0, 1], got {x_star}")
    if x_star <= C1:
        return (x_star,)
    if x_star <= C2:
        return (C1, x_star - C1)
    return (C1, exp(-1.0) - exp(-2.0), x_star - C2)


def sampb_bound(tau: float) -> float:
    """Lower bound on E[matched] / tau for boosted sampling at equal mass tau."""
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    s = sum(log1p(x * expm1(tau)) for x in minimizer_set(tau))
    return -expm1(-s / tau) / tau


def minimize_sampb_bound(taus=None) -> BoundEvaluation:
    """Scan the bound ratio over a tau grid (default 0.05 .. 1.0 step 0.05)."""
    if taus is None:
        taus = [round(0.05 * k, 2) for k in range(1, 21)]
    vals = [sampb_bound(t) for t in taus]
    k = int(np.argmin(vals))
    return BoundEvaluation(kind="samp-b-min", tau=float(taus[k]),
                           pieces=minimizer_set(taus[k]), value=float(vals[k]),
                           minimizer=(float(taus[k]),))


def _f(p, x):
    """Boosted selection rate for an agent of mass x against pool share p."""
    return x / (x + (1.0 - x) * p)


def _adaptive_simpson(fun, a, b, tol=SIMPSON_TOL):
    """Plain recursive adaptive Simpson with Richardson acceptance."""
    def simpson(lo, hi, flo, fmid, fhi):
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    def recurse(lo, hi, flo, fmid, fhi, whole, tol):
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = fun(lm), fun(rm)
        left = simpson(lo, mid, flo, flm, fmid)
        right = simpson(mid, hi, fmid, frm, fhi)
        if abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return (recurse(lo, mid, flo, flm, fmid, left, tol / 2.0)
                + recurse(mid, hi, fmid, frm, fhi, right, tol / 2.0))

    if a == b:
        return 0.0
    fa, fb = fun(a), fun(b)
    m = 0.5 * (a + b)
    fm = fun(m)
    return recurse(a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol)


def sampab_bound(x_star: float, kappa: float) -> float:
    """F(x_star, kappa): guaranteed match probability under attenuated boosting
    for an agent of LP mass x_star whose attenuation phase ends at kappa."""
    if not 0.0 <= kappa <= 1.0:
        raise ValueError(f"kappa must lie in [0, 1], got {kappa}")
    pieces = minimizer_set_three_piece(x_star)
    first = 0.0
    prod = 1.0
    for x in pieces:
        first += _adaptive_simpson(lambda z: exp(-z) * _f(exp(-z), x), 0.0, kappa)
        prod *= exp(-_adaptive_simpson(lambda z: _f(exp(-z), x), kappa, 1.0))
    return first + exp(-kappa) * (1.0 - prod)


def _first_integral_closed(x, kappa):
    """int_0^kappa e^-z f(e^-z, x) dz, elementwise on arrays."""
    x = np.asarray(x, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    inner = x + (1.0 - x) * np.exp(-kappa)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x >= 1.0, -np.expm1(-kappa),
                       -x / np.where(x >= 1.0, 1.0, 1.0 - x) * np.log(inner))
    return np.where(x <= 0.0, 0.0, out)


def _second_integral_closed(x, kappa):
    """int_kappa^1 f(e^-z, x) dz, elementwise on arrays."""
    x = np.asarray(x, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    out = ((1.0 - kappa) - np.log(x + (1.0 - x) * np.exp(-kappa))
           + np.log(x + (1.0 - x) * exp(-1.0)))
    out = np.where(x >= 1.0, 1.0 - kappa, out)
    return np.where(x <= 0.0, 0.0, out)


def sampab_bound_closed(x_star, kappa):
    """Vectorized F via the antiderivatives; same function as sampab_bound."""
    x_star = np.asarray(x_star, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    p1 = np.minimum(x_star, C1)
    p2 = np.clip(x_star - C1, 0.0, exp(-1.0) - exp(-2.0))
    p3 = np.maximum(x_star - C2, 0.0)
    first = np.zeros(np.broadcast(x_star, kappa).shape)
    expo = np.zeros_like(first)
    for p in (p1, p2, p3):
        first += _first_integral_closed(p, kappa)
        expo += _second_integral_closed(p, kappa)
    return first + np.exp(-kappa) * (1.0 - np.exp(-expo))


def minimize_sampab_bound(grid=400, refine_rounds=2, refine_points=41
                          ) -> BoundEvaluation:
    """Grid-minimize F(x, kappa) / x over (0, 1] x [0, 1] with local refinement.

    The coarse scan uses the closed forms vectorized over the full grid; each
    refinement round re-grids a shrinking neighborhood of the incumbent.
    """
    xs = np.linspace(1.0 / grid, 1.0, grid)
    ks = np.linspace(0.0, 1.0, grid)
    xx, kk = np.meshgrid(xs, ks, indexing="ij")
    ratio = sampab_bound_closed(xx, kk) / xx
    flat = int(np.argmin(ratio))
    bi, bj = divmod(flat, grid)
    bx, bk, bv = xs[bi], ks[bj], float(ratio[bi, bj])
    dx, dk = xs[1] - xs[0], ks[1] - ks[0]
    for _ in range(refine_rounds):
        xs = np.linspace(max(1e-9, bx - dx), min(1.0, bx + dx), refine_points)
        ks = np.linspace(max(0.0, bk - dk), min(1.0, bk + dk), refine_points)
        xx, kk = np.meshgrid(xs, ks, indexing="ij")
        ratio = sampab_bound_closed(xx, kk) / xx
        flat = int(np.argmin(ratio))
        bi, bj = divmod(flat, refine_points)
        if ratio[bi, bj] < bv:
            bx, bk, bv = float(xs[bi]), float(ks[bj]), float(ratio[bi, bj])
        dx, dk = xs[1] - xs[0], ks[1] - ks[0]
    return BoundEvaluation(kind="samp-ab-min", x_star=bx, kappa=bk,
                           pieces=minimizer_set_three_piece(bx), value=bv,
                           minimizer=(bx, bk))


def make_example1(n: int) -> Instance:
    """Adversarial weighted instance where boosting overshoots.

    One heavy agent (the last id) neighbors all n online types; every online
    type also has n - 1 private light agents of weight (1/n)^3.  The benchmark
    LP puts mass eps = 1/n on every edge, worth 1 + eps^2 - eps^3, but plain
    boosted sampling can match the heavy agent with probability at most about
    1 - e^-1 because its per-round share stays near 1/T once light agents
    disappear."""
    if n < 2:
        raise ValueError("n must be >= 2")
    n_light = n * (n - 1)
    star = n_light                       # heavy agent id
    edges = []
    for j in range(n):
        base = j * (n - 1)
        edges.extend((base + t, j) for t in range(n - 1))
        edges.append((star, j))
    eps = 1.0 / n
    weights = (eps ** 3,) * n_light + (1.0,)
    return Instance(n_offline=n_light + 1, n_online=n, edges=tuple(edges),
                    weights=weights, arrival_rates=(1.0,) * n, horizon=n)


def make_example1_solution(instance: Instance):
    """The pinned optimal benchmark solution x_ij = 1/n for every edge."""
    n = instance.n_online
    eps = 1.0 / n
    x = {e: eps for e in instance.edges}
    value = 1.0 + eps ** 2 - eps ** 3
    return make_solution(instance, VOM, x, value, 0, "pinned")


def make_example_worst(n: int) -> Instance:
    """Instance where availability-greedy and ranking lose agent 0 entirely.

    Online type 0 neighbors every offline agent; every other online type j
    has the single private neighbor i = j.  Agent 0 can only be matched
    through type 0, but a greedy or ranking rule spends type-0 arrivals on
    whichever agents are still around, so agent 0's match rate collapses as n
    grows while the benchmark keeps it at 1 - e^-1."""
    if n < 2:
        raise ValueError("n must be >= 2")
    edges = [(i, 0) for i in range(n)]
    edges.extend((j, j) for j in range(1, n))
    return Instance(n_offline=n, n_online=n, edges=tuple(edges),
                    weights=(1.0,) * n, arrival_rates=(1.0,) * n, horizon=n)


def clairvoyant_oracle(instance: Instance, objective_kind: str) -> float:
    """Exact expected objective of a clairvoyant matcher on a tiny instance.

    Enumerates every arrival sequence with its probability and, per sequence,
    every reachable set of matched agents, taking the best objective value.
    Guarded to at most 10^6 sequences."""
    n_seq = instance.n_online ** instance.horizon
    if n_seq > ORACLE_SEQUENCE_LIMIT:
        raise ValueError(f"{n_seq} sequences exceed the oracle limit "
                         f"{ORACLE_SEQUENCE_LIMIT}")
    if objective_kind == GFM and not instance.groups:
        raise ValueError("group objective requires groups")
    nbrs = instance.neighbors_of_online
    rates = instance.arrival_rates
    T = instance.horizon
    n = instance.n_offline
    weights = instance.weights
    groups = instance.groups

    def best_value(frontier):
        best = -math.inf
        for m in frontier:
            if objective_kind == IFM:
                v = 1.0 if m == (1 << n) - 1 else 0.0
            elif objective_kind == VOM:
                v = sum(weights[i] for i in range(n) if (m >> i) & 1)
            else:
                v = min(sum((m >> i) & 1 for i in g) / len(g) for g in groups)
            best = max(best, v)
        return best

    total = 0.0
    for seq in itertools.product(range(instance.n_online), repeat=T):
        p = 1.0
        for j in seq:
            p *= rates[j] / T
        if p == 0.0:
            continue
        frontier = {0}
        for j in seq:
            nxt = set(frontier)
            for m in frontier:
                for i in nbrs[j]:
                    if not (m >> i) & 1:
                        nxt.add(m | (1 << i))
            frontier = nxt
        total += p * best_value(frontier)
    return total
