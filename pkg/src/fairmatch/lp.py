"""Benchmark LP for the clairvoyant upper bound, solved by lazy cut generation.

Variables are one x_ij per edge (plus an auxiliary lambda for the min-style
objectives).  Base constraints: every online type has unit expected capacity
(sum over its edges <= 1) and every offline agent unit capacity.  On top of
those, subset caps are generated lazily: for any offline agent i and any
subset S of its neighborhood with |S| <= K,

    sum_{j in S} x_ij <= 1 - (1 - |S|/T)^T,

the probability that at least one arrival lands in S over the T rounds.  No
algorithm, online or clairvoyant, can match i through S more often than S
arrives, so the LP optimum upper-bounds the clairvoyant optimum at every
horizon; as T grows the cap tends to the familiar 1 - exp(-|S|).  Since the
left side is maximized by the |S| largest values, exact separation only needs
the sorted prefixes of each agent's row.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

IFM = "ifm"   # maximize the minimum per-agent match probability
GFM = "gfm"   # maximize the minimum per-group mean match probability
VOM = "vom"   # maximize total weighted match probability
OBJECTIVES = (IFM, GFM, VOM)

SEPARATION_TOL = 1e-9
DEFAULT_MAX_CUT_ROUNDS = 1000


def subset_cap(size: int, horizon: int) -> float:
    """Probability that >= 1 of ``size`` unit-rate types arrives in T rounds."""
    if size >= horizon:
        return 1.0
    return -math.expm1(horizon * math.log1p(-size / horizon))


def default_k_cap(instance) -> int:
    """Default subset-size cap: min(20, largest offline degree).

    The size-20 cap is within 2.1e-9 of 1, so deeper prefixes can never be
    separated at the 1e-9 tolerance anyway.
    """
    return max(1, min(20, instance.max_offline_degree))


@dataclass
class _Row:
    cols: np.ndarray
    coefs: np.ndarray
    rhs: float
    name: str


@dataclass
class LpModel:
    """LP under construction: base rows plus the subset cuts installed so far."""

    objective_kind: str
    k_cap: int
    drop_isolated: bool
    edges: tuple
    col_of_edge: dict
    n_offline: int
    n_online: int
    horizon: int
    obj: np.ndarray            # minimization coefficients
    rows: list = field(default_factory=list)
    cut_keys: set = field(default_factory=set)
    cut_count: int = 0

    @property
    def has_lambda(self) -> bool:
        return self.objective_kind in (IFM, GFM)

    @property
    def n_vars(self) -> int:
        return len(self.edges) + (1 if self.has_lambda else 0)

    def add_cut(self, agent, subset) -> bool:
        """Install one subset cap row; returns False if already present."""
        key = (agent, frozenset(subset))
        if key in self.cut_keys:
            return False
        cols = np.array([self.col_of_edge[(agent, j)] for j in subset], dtype=int)
        rhs = subset_cap(len(subset), self.horizon)
        self.rows.append(_Row(cols, np.ones(len(cols)), rhs,
                              f"cut_i{agent}_s{len(subset)}"))
        self.cut_keys.add(key)
        self.cut_count += 1
        return True


@dataclass(frozen=True)
class LpSolution:
    """Solved edge values plus bookkeeping.

    ``x`` maps (i, j) edges to values; ``masses`` is the per-agent row sum
    x_i.  ``objective_value`` is the optimum of the chosen objective (tau for
    the min-style ones).
    """

    objective_kind: str
    x: dict
    objective_value: float
    cut_count: int
    status: str
    masses: tuple

    def per_agent_mass(self, i) -> float:
        return self.masses[i]


def make_solution(instance, objective_kind, x, objective_value, cut_count,
                  status) -> LpSolution:
    masses = [0.0] * instance.n_offline
    for (i, _j), v in x.items():
        masses[i] += v
    return LpSolution(objective_kind=objective_kind, x=dict(x),
                      objective_value=float(objective_value),
                      cut_count=int(cut_count), status=status,
                      masses=tuple(masses))


def build_lp(instance, objective_kind, *, k_cap=None, drop_isolated=True) -> LpModel:
    """Assemble the base model (capacity rows and objective links), no cuts yet.

    For the min-agent objective, agents without edges would pin lambda to 0;
    with drop_isolated (the default) their link rows are skipped and a warning
    is the instance validator's business.  The min-group objective keeps every
    group member in the denominator regardless of isolation.
    """
    if objective_kind not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective_kind!r}")
    if objective_kind == GFM and not instance.groups:
        raise ValueError("group-fairness objective requires a nonempty group list")
    edges = instance.edges
    col_of_edge = {e: c for c, e in enumerate(edges)}
    k = default_k_cap(instance) if k_cap is None else int(k_cap)
    if k < 1:
        raise ValueError(f"k_cap must be >= 1, got {k_cap}")
    model = LpModel(objective_kind=objective_kind, k_cap=k,
                    drop_isolated=drop_isolated, edges=edges,
                    col_of_edge=col_of_edge, n_offline=instance.n_offline,
                    n_online=instance.n_online, horizon=instance.horizon,
                    obj=np.zeros(len(edges) + (1 if objective_kind != VOM else 0)))
    lam_col = len(edges) if model.has_lambda else None
    if objective_kind == VOM:
        for c, (i, _j) in enumerate(edges):
            model.obj[c] = -instance.weights[i]
    else:
        model.obj[lam_col] = -1.0

    by_online = [[] for _ in range(instance.n_online)]
    by_offline = [[] for _ in range(instance.n_offline)]
    for c, (i, j) in enumerate(edges):
        by_online[j].append(c)
        by_offline[i].append(c)
    for j, cols in enumerate(by_online):
        if cols:
            model.rows.append(_Row(np.array(cols), np.ones(len(cols)), 1.0,
                                   f"cap_j{j}"))
    for i, cols in enumerate(by_offline):
        if cols:
            model.rows.append(_Row(np.array(cols), np.ones(len(cols)), 1.0,
                                   f"cap_i{i}"))
    if objective_kind == IFM:
        for i, cols in enumerate(by_offline):
            if not cols:
                if not drop_isolated:
                    # lambda <= 0: the honest but degenerate reading.
                    model.rows.append(_Row(np.array([lam_col]), np.ones(1), 0.0,
                                           f"link_i{i}"))
                continue
            cc = np.array(cols + [lam_col])
            coefs = np.concatenate([-np.ones(len(cols)), [1.0]])
            model.rows.append(_Row(cc, coefs, 0.0, f"link_i{i}"))
    elif objective_kind == GFM:
        for gi, grp in enumerate(instance.groups):
            cols = [c for i in grp for c in by_offline[i]]
            cc = np.array(cols + [lam_col], dtype=int)
            coefs = np.concatenate([-np.ones(len(cols)), [float(len(grp))]])
            model.rows.append(_Row(cc, coefs, 0.0, f"link_g{gi}"))
    return model


def separate(solution, instance, k_cap) -> list:
    """Exact separation for the subset caps.

    For each offline agent, sort its edge values descending; the size-s subset
    with the largest sum is the first s entries.  Every violated prefix up to
    k_cap yields a cut (agent, subset).  Ties are broken by online id so the
    emitted subsets are deterministic.
    """
    cuts = []
    for i in range(instance.n_offline):
        nbrs = instance.neighbors_of_offline[i]
        if not nbrs:
            continue
        vals = np.array([solution.x.get((i, j), 0.0) for j in nbrs])
        order = np.lexsort((nbrs, -vals))
        sorted_vals = vals[order]
        prefix = np.cumsum(sorted_vals)
        smax = min(int(k_cap), len(nbrs))
        for s in range(1, smax + 1):
            if prefix[s - 1] > subset_cap(s, instance.horizon) + SEPARATION_TOL:
                cuts.append((i, tuple(nbrs[t] for t in order[:s])))
    return cuts


def check_feasibility(solution, instance, k_cap=None) -> dict:
    """Maximum violation per constraint family (0.0 when satisfied)."""
    k = default_k_cap(instance) if k_cap is None else int(k_cap)
    online_tot = [0.0] * instance.n_online
    offline_tot = [0.0] * instance.n_offline
    for (i, j), v in solution.x.items():
        online_tot[j] += v
        offline_tot[i] += v
    v_online = max((t - 1.0 for t in online_tot), default=0.0)
    v_offline = max((t - 1.0 for t in offline_tot), default=0.0)
    v_subset = 0.0
    for i in range(instance.n_offline):
        nbrs = instance.neighbors_of_offline[i]
        if not nbrs:
            continue
        vals = sorted((solution.x.get((i, j), 0.0) for j in nbrs), reverse=True)
        prefix = 0.0
        for s in range(1, min(k, len(nbrs)) + 1):
            prefix += vals[s - 1]
            v_subset = max(v_subset, prefix - subset_cap(s, instance.horizon))
    return {"online_capacity": max(0.0, v_online),
            "offline_capacity": max(0.0, v_offline),
            "subset_caps": max(0.0, v_subset)}


class ScipyLinprogBackend:
    """Relaxation solver on top of scipy's HiGHS interface.

    Deterministic for a fixed model: HiGHS is seedless and single threaded
    here, and rows are assembled in a reproducible order.  Feasibility
    tolerance is pushed to 1e-10 so installed cuts are honored more tightly
    than the 1e-9 separation tolerance.
    """

    name = "scipy-highs"

    def __init__(self, **options):
        self.options = {"primal_feasibility_tolerance": 1e-10,
                        "dual_feasibility_tolerance": 1e-9}
        self.options.update(options)

    def solve_relaxation(self, c, a_ub, b_ub, n_vars):
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=[(0.0, 1.0)] * n_vars,
                      method="highs", options=dict(self.options))
        if res.status != 0:
            raise RuntimeError(f"relaxation solve failed: {res.message}")
        return np.asarray(res.x)


BACKENDS = {"scipy-highs": ScipyLinprogBackend}


@dataclass
class SolverConfig:
    backend: str = "scipy-highs"
    max_cut_rounds: int = DEFAULT_MAX_CUT_ROUNDS
    backend_options: dict = field(default_factory=dict)

    def make_backend(self):
        try:
            cls = BACKENDS[self.backend]
        except KeyError:
            raise ValueError(f"unknown LP backend {self.backend!r}") from None
        return cls(**self.backend_options)


def _assemble(model):
    data, ri, ci, rhs = [], [], [], []
    for r, row in enumerate(model.rows):
        data.extend(row.coefs)
        ri.extend([r] * len(row.cols))
        ci.extend(row.cols)
        rhs.append(row.rhs)
    a = sp.csr_matrix((data, (ri, ci)), shape=(len(model.rows), model.n_vars))
    return a, np.array(rhs)


def solve(model: LpModel, instance, config: SolverConfig = None) -> LpSolution:
    """Cutting-plane loop: solve the relaxation, separate, repeat.

    Terminates because each round installs at least one new cut and there are
    finitely many (agent, prefix size) pairs; a round cap guards regressions.
    """
    config = config or SolverConfig()
    backend = config.make_backend()
    for _ in range(config.max_cut_rounds):
        a, b = _assemble(model)
        raw = backend.solve_relaxation(model.obj, a, b, model.n_vars)
        x = {e: float(raw[c]) for c, e in enumerate(model.edges)}
        if model.objective_kind == VOM:
            value = -float(model.obj @ raw)
        else:
            value = float(raw[len(model.edges)])
        solution = make_solution(instance, model.objective_kind, x, value,
                                 model.cut_count, "optimal")
        added = 0
        for agent, subset in separate(solution, instance, model.k_cap):
            if model.add_cut(agent, subset):
                added += 1
        if added == 0:
            return solution
    raise RuntimeError(f"cut generation did not converge within "
                       f"{config.max_cut_rounds} rounds")


def solve_benchmark(instance, objective_kind, *, k_cap=None, drop_isolated=True,
                    config: SolverConfig = None) -> LpSolution:
    """build_lp followed by solve, the common case."""
    model = build_lp(instance, objective_kind, k_cap=k_cap,
                     drop_isolated=drop_isolated)
    return solve(model, instance, config)


def normalize_ifm(solution: LpSolution, instance) -> LpSolution:
    """Scale each agent's row down to exactly the optimal tau.

    Dividing a row by a constant >= 1 preserves every <=-constraint, so the
    result stays feasible while giving all non-isolated agents equal mass,
    which is what the boosted sampling analysis assumes.
    """
    if solution.objective_kind != IFM:
        raise ValueError("normalization is defined for the min-agent objective only")
    tau = solution.objective_value
    new_x = {}
    for (i, j), v in solution.x.items():
        m = solution.masses[i]
        new_x[(i, j)] = v * (tau / m) if m > tau else v
    return make_solution(instance, IFM, new_x, tau, solution.cut_count,
                         solution.status)


def to_lp_text(model: LpModel) -> str:
    """Serialize the current model (cuts included) in LP text format."""
    def var(c):
        if model.has_lambda and c == len(model.edges):
            return "lam"
        i, j = model.edges[c]
        return f"x_{i}_{j}"

    lines = ["Maximize"]
    terms = []
    for c, coef in enumerate(model.obj):
        if coef != 0.0:
            terms.append(f"{-coef:+.17g} {var(c)}")
    lines.append(" obj: " + " ".join(terms) if terms else " obj: 0")
    lines.append("Subject To")
    for row in model.rows:
        body = " ".join(f"{coef:+.17g} {var(c)}"
                        for c, coef in zip(row.cols, row.coefs))
        lines.append(f" {row.name}: {body} <= {row.rhs:.17g}")
    lines.append("Bounds")
    for c in range(model.n_vars):
        lines.append(f" 0 <= {var(c)} <= 1")
    lines.append("End")
    return "\n".join(lines) + "\n"
