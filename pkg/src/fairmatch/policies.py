"""Online matching policies.

All policies share the same trial shape: T rounds, one arriving online type
per round, at most one irreversible match per round.  A policy object is
immutable across trials (it precomputes adjacency and LP-value arrays once);
per-trial mutable data lives in a MatchState.

Randomness contract: the arrival sequence comes from its own stream so every
policy in an experiment sees identical arrivals for trial k.  All remaining
coins come from a single per-trial policy stream consumed in a fixed order
each round: attenuation coins for active agents in ascending id (drawn only
where the survival probability is below 1), then the match/tie-break draw.
With an all-ones attenuation table no attenuation coin is ever drawn, which
makes the attenuated policy trace-identical to plain boosted sampling.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .instance import Instance, sample_arrivals
from .lp import IFM, GFM, VOM, LpSolution


@dataclass
class MatchState:
    """Per-trial mutable state.

    active: eligible to be matched right now (matched and muted agents are
    inactive).  matched: has been matched at some round.  record: one entry
    (round t, online type j, matched agent or None) per elapsed round.
    """

    active: np.ndarray
    matched: np.ndarray
    record: list
    round: int = 0
    scratch: dict = field(default_factory=dict)


def per_online_arrays(instance: Instance, solution: LpSolution):
    """Per-online-type neighbor ids and aligned LP edge values as arrays."""
    nbrs, vals = [], []
    for j in range(instance.n_online):
        row = instance.neighbors_of_online[j]
        nbrs.append(np.array(row, dtype=np.intp))
        vals.append(np.array([solution.x.get((i, j), 0.0) for i in row]))
    return nbrs, vals


def _weighted_pick(weights, rng):
    """Index drawn proportionally to nonnegative weights (sum must be > 0)."""
    c = np.cumsum(weights)
    k = int(np.searchsorted(c, rng.random() * c[-1], side="right"))
    return min(k, len(weights) - 1)


@dataclass
class PolicyConfig:
    """What a policy needs besides the instance.

    lp_solution is required by the sampling policies; attenuation is required
    by the attenuated one; objective steers the greedy tie rule.
    """

    policy: str
    objective: str = IFM
    lp_solution: LpSolution = None
    attenuation: object = None
    pair_sampler: object = None
    seed: int = 0


POLICIES = {}


def register_policy(name):
    def deco(cls):
        POLICIES[name] = cls
        cls.name = name
        return cls
    return deco


def make_policy(instance: Instance, config: PolicyConfig):
    try:
        cls = POLICIES[config.policy]
    except KeyError:
        raise ValueError(f"unknown policy {config.policy!r}; "
                         f"registered: {sorted(POLICIES)}") from None
    return cls(instance, config)


class _Base:
    def __init__(self, instance: Instance, config: PolicyConfig):
        self.instance = instance
        self.config = config

    def init_state(self, rng) -> MatchState:
        n = self.instance.n_offline
        return MatchState(active=np.ones(n, dtype=bool),
                          matched=np.zeros(n, dtype=bool), record=[])

    def _require_solution(self):
        sol = self.config.lp_solution
        if sol is None:
            raise ValueError(f"policy {self.name!r} requires an LP solution")
        return sol

    def _finish(self, state, j, i):
        if i is not None:
            state.active[i] = False
            state.matched[i] = True
        state.round += 1
        state.record.append((state.round, int(j), i))
        return i


@register_policy("samp-b")
class BoostedSamplingPolicy(_Base):
    """Sample among the arriving type's still-active neighbors proportionally
    to their LP edge values (the renormalization is the boost)."""

    def __init__(self, instance, config):
        super().__init__(instance, config)
        self._nbrs, self._x = per_online_arrays(instance, self._require_solution())

    def _boosted_pick(self, state, j, rng):
        nbrs = self._nbrs[j]
        if len(nbrs) == 0:
            return None
        mask = state.active[nbrs]
        if not mask.any():
            return None
        w = self._x[j][mask]
        if w.sum() <= 0.0:
            return None
        return int(nbrs[mask][_weighted_pick(w, rng)])

    def step(self, state, j, rng):
        return self._finish(state, j, self._boosted_pick(state, j, rng))


@register_policy("samp-ab")
class AttenuatedBoostingPolicy(BoostedSamplingPolicy):
    """Boosted sampling preceded, each round, by independent muting coins.

    At round t every still-active agent i stays active with probability
    beta[i, t-1], drawn independently; a muted agent is inactive for the rest
    of the trial without being matched.  Coins are drawn in ascending agent id
    and only where beta < 1 (keeping an agent with probability 1 needs no
    randomness), then the boosted sampling match draw follows.
    """

    def __init__(self, instance, config):
        super().__init__(instance, config)
        table = config.attenuation
        if table is None:
            raise ValueError("policy 'samp-ab' requires an attenuation table")
        beta = np.asarray(table.beta, dtype=float)
        if beta.shape != (instance.n_offline, instance.horizon):
            raise ValueError(f"attenuation table shape {beta.shape} does not "
                             f"match (n_offline, horizon)="
                             f"({instance.n_offline}, {instance.horizon})")
        self._beta = beta

    def step(self, state, j, rng):
        attenuate(state.active, self._beta[:, state.round], rng)
        return self._finish(state, j, self._boosted_pick(state, j, rng))


def attenuate(active, beta_col, rng):
    """Apply one round of muting coins in place (ascending agent id)."""
    idx = np.flatnonzero(active & (beta_col < 1.0))
    if idx.size:
        coins = rng.random(idx.size)
        active[idx[coins >= beta_col[idx]]] = False


@register_policy("greedy")
class GreedyPolicy(_Base):
    """Match every arrival to an available neighbor, never rejecting when one
    exists.  The choice among available neighbors depends on the objective:
    uniform for min-agent, least-covered group for min-group, highest weight
    for weighted matching; ties break uniformly."""

    def __init__(self, instance, config):
        super().__init__(instance, config)
        self._nbrs = [np.array(instance.neighbors_of_online[j], dtype=np.intp)
                      for j in range(instance.n_online)]
        if config.objective == GFM:
            if not instance.groups:
                raise ValueError("greedy under the group objective needs groups")
            self._group_size = np.array([len(g) for g in instance.groups], float)
            member = [[] for _ in range(instance.n_offline)]
            for gi, g in enumerate(instance.groups):
                for i in g:
                    member[i].append(gi)
            self._groups_of = [np.array(m, dtype=np.intp) for m in member]
        elif config.objective == VOM:
            self._w = np.asarray(instance.weights, dtype=float)

    def init_state(self, rng):
        state = super().init_state(rng)
        if self.config.objective == GFM:
            state.scratch["group_matched"] = np.zeros(len(self.instance.groups))
        return state

    def _keys(self, state, avail):
        obj = self.config.objective
        if obj == VOM:
            return self._w[avail]            # maximize
        if obj == GFM:
            counts = state.scratch["group_matched"]
            keys = np.empty(len(avail))
            for t, i in enumerate(avail):
                gs = self._groups_of[i]
                keys[t] = (counts[gs] / self._group_size[gs]).min() if len(gs) \
                    else np.inf
            return -keys                     # minimize the fraction
        return np.zeros(len(avail))          # min-agent: everyone ties

    def step(self, state, j, rng):
        nbrs = self._nbrs[j]
        avail = nbrs[state.active[nbrs]] if len(nbrs) else nbrs
        if len(avail) == 0:
            return self._finish(state, j, None)
        keys = self._keys(state, avail)
        best = np.flatnonzero(keys == keys.max())
        i = int(avail[best[int(rng.integers(len(best)))]])
        if self.config.objective == GFM:
            state.scratch["group_matched"][self._groups_of[i]] += 1
        return self._finish(state, j, i)


@register_policy("ranking")
class RankingPolicy(_Base):
    """Fix a uniform random permutation of the offline agents per trial and
    always match the available neighbor of lowest rank."""

    def __init__(self, instance, config):
        super().__init__(instance, config)
        self._nbrs = [np.array(instance.neighbors_of_online[j], dtype=np.intp)
                      for j in range(instance.n_online)]

    def init_state(self, rng):
        state = super().init_state(rng)
        perm = rng.permutation(self.instance.n_offline)
        rank = np.empty(self.instance.n_offline, dtype=np.intp)
        rank[perm] = np.arange(self.instance.n_offline)
        state.scratch["rank"] = rank
        return state

    def step(self, state, j, rng):
        nbrs = self._nbrs[j]
        avail = nbrs[state.active[nbrs]] if len(nbrs) else nbrs
        if len(avail) == 0:
            return self._finish(state, j, None)
        rank = state.scratch["rank"]
        return self._finish(state, j, int(avail[int(np.argmin(rank[avail]))]))


class IndependentPairSampler:
    """Default candidate generator: two independent draws from the arriving
    type's LP row, where the residual mass 1 - sum_i x_ij yields no candidate."""

    def __init__(self, instance, solution):
        self._nbrs, self._x = per_online_arrays(instance, solution)

    def draw(self, j, rng):
        nbrs, x = self._nbrs[j], self._x[j]
        out = []
        for _ in range(2):
            if len(nbrs) == 0:
                out.append(None)
                continue
            r = rng.random()
            c = np.cumsum(x)
            k = int(np.searchsorted(c, r, side="right"))
            out.append(int(nbrs[k]) if k < len(nbrs) else None)
        return out[0], out[1]


@register_policy("mgs-lite")
class MgsLitePolicy(_Base):
    """Two-candidate simulation baseline: draw a candidate pair from the LP
    row (non-adaptively) and match the first candidate still available."""

    def __init__(self, instance, config):
        super().__init__(instance, config)
        self._pairs = config.pair_sampler or IndependentPairSampler(
            instance, self._require_solution())

    def step(self, state, j, rng):
        c1, c2 = self._pairs.draw(j, rng)
        pick = None
        for c in (c1, c2):
            if c is not None and state.active[c]:
                pick = c
                break
        return self._finish(state, j, pick)


def step(policy, state, j, rng):
    """Advance one round: apply the policy to arrival j, mutate and return state."""
    policy.step(state, j, rng)
    return state


def execute_trial(policy, arrivals, rng) -> MatchState:
    """Run all rounds of one trial against a fixed arrival sequence."""
    state = policy.init_state(rng)
    for j in arrivals.rounds:
        policy.step(state, j, rng)
    return state


def run_trial(instance: Instance, config: PolicyConfig, seed=None) -> MatchState:
    """Sample an arrival sequence from the seed and play the policy through it.

    The arrival draw and the policy coins use separate streams derived from
    the same seed, so two policies run under the same seed face identical
    arrivals.
    """
    seed = config.seed if seed is None else seed
    policy = make_policy(instance, config)
    arrivals = sample_arrivals(instance, seed)
    rng = _rng.stream(_rng.POLICY, seed)
    return execute_trial(policy, arrivals, rng)
