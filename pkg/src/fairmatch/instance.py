"""Bipartite instance model for online matching with known i.i.d. arrivals.

An instance has offline agents 0..n_offline-1 (each matchable at most once),
online types 0..n_online-1 with arrival rates summing to the horizon T, an
edge set describing which pairs may be matched, per-agent weights and an
optional collection of (possibly overlapping) agent groups.  Each of the T
rounds draws one online type j with probability r_j / T, independently.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import rng as _rng
from .errors import DataError

log = logging.getLogger(__name__)

RATE_TOL = 1e-9


@dataclass(frozen=True)
class Instance:
    """Immutable problem instance.

    ``edges`` is stored sorted and deduplicated; adjacency lists are derived
    lazily and cached.  Construction does not validate semantic invariants,
    that is what :func:`validate` is for, so tests can build broken instances
    on purpose.
    """

    n_offline: int
    n_online: int
    edges: tuple
    weights: tuple
    arrival_rates: tuple
    horizon: int
    groups: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "edges",
                           tuple(sorted({(int(i), int(j)) for i, j in self.edges})))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "arrival_rates",
                           tuple(float(r) for r in self.arrival_rates))
        object.__setattr__(self, "groups",
                           tuple(tuple(sorted({int(i) for i in g})) for g in self.groups))

    @property
    def offline_agents(self) -> range:
        return range(self.n_offline)

    @property
    def online_types(self) -> range:
        return range(self.n_online)

    @cached_property
    def neighbors_of_offline(self) -> tuple:
        """Tuple of sorted online-neighbor tuples, indexed by offline agent."""
        adj = [[] for _ in range(self.n_offline)]
        for i, j in self.edges:
            if 0 <= i < self.n_offline:
                adj[i].append(j)
        return tuple(tuple(a) for a in adj)

    @cached_property
    def neighbors_of_online(self) -> tuple:
        """Tuple of sorted offline-neighbor tuples, indexed by online type."""
        adj = [[] for _ in range(self.n_online)]
        for i, j in self.edges:
            if 0 <= j < self.n_online:
                adj[j].append(i)
        return tuple(tuple(a) for a in adj)

    @cached_property
    def max_offline_degree(self) -> int:
        return max((len(a) for a in self.neighbors_of_offline), default=0)


@dataclass(frozen=True)
class ArrivalSequence:
    """A realized arrival sequence: one online type per round, 1..T in order."""

    rounds: tuple
    rng_seed: int

    def __len__(self):
        return len(self.rounds)


def make_instance(n_offline, n_online, edges, *, weights=None, rates=None,
                  horizon=None, groups=()) -> Instance:
    """Convenience constructor with unit defaults for weights and rates."""
    if weights is None:
        weights = (1.0,) * n_offline
    if rates is None:
        rates = (1.0,) * n_online
    if horizon is None:
        horizon = int(round(sum(rates)))
    return Instance(n_offline=n_offline, n_online=n_online, edges=tuple(edges),
                    weights=tuple(weights), arrival_rates=tuple(rates),
                    horizon=int(horizon), groups=tuple(groups))


def isolated_offline_agents(instance: Instance) -> tuple:
    """Offline agents with no incident edge."""
    return tuple(i for i in instance.offline_agents
                 if not instance.neighbors_of_offline[i])


def validate(instance: Instance) -> list:
    """Return a list of human-readable invariant violations (empty if valid).

    Isolated offline agents are legal (they simply can never be matched) and
    only produce a log warning.
    """
    out = []
    if instance.n_offline < 0 or instance.n_online < 0:
        out.append("agent counts must be nonnegative")
    if instance.horizon < 1:
        out.append(f"horizon must be a positive integer, got {instance.horizon}")
    for i, j in instance.edges:
        if not 0 <= i < instance.n_offline:
            out.append(f"edge ({i},{j}): offline endpoint {i} out of range")
        if not 0 <= j < instance.n_online:
            out.append(f"edge ({i},{j}): online endpoint {j} out of range")
    if len(instance.weights) != instance.n_offline:
        out.append(f"expected {instance.n_offline} weights, got {len(instance.weights)}")
    for i, w in enumerate(instance.weights):
        if w < 0:
            out.append(f"weight of offline agent {i} is negative ({w})")
    if len(instance.arrival_rates) != instance.n_online:
        out.append(f"expected {instance.n_online} arrival rates, "
                   f"got {len(instance.arrival_rates)}")
    for j, r in enumerate(instance.arrival_rates):
        if r < 0:
            out.append(f"arrival rate of online type {j} is negative ({r})")
    total = sum(instance.arrival_rates)
    if abs(total - instance.horizon) > RATE_TOL:
        out.append(f"arrival rates sum to {total}, expected horizon "
                   f"{instance.horizon} (tolerance {RATE_TOL})")
    for gi, g in enumerate(instance.groups):
        if not g:
            out.append(f"group {gi} is empty")
        for i in g:
            if not 0 <= i < instance.n_offline:
                out.append(f"group {gi} member {i} outside offline range")
    if not out:
        iso = isolated_offline_agents(instance)
        if iso:
            log.warning("instance has %d isolated offline agent(s), e.g. %s; "
                        "they can never be matched", len(iso), iso[:5])
    return out


def is_canonical(instance: Instance) -> bool:
    """True when every arrival rate is exactly 1 and |J| equals the horizon."""
    return (instance.n_online == instance.horizon
            and all(r == 1.0 for r in instance.arrival_rates))


def canonicalize(instance: Instance) -> Instance:
    """Expand integral arrival rates into unit-rate copies so |J| == T.

    Each online type j with rate r becomes r copies sharing j's neighborhood.
    Copies are numbered consecutively in order of the original type.  Returns
    the same object when the instance is already canonical.
    """
    rates = np.asarray(instance.arrival_rates, dtype=float)
    rounded = np.rint(rates)
    for j, (r, rr) in enumerate(zip(rates, rounded)):
        if abs(r - rr) > RATE_TOL or rr < 1:
            raise DataError(f"arrival rate of online type {j} is {r}; "
                            "canonicalize requires positive integers")
    if is_canonical(instance):
        return instance
    counts = rounded.astype(int)
    new_edges = []
    offset = 0
    starts = []
    for j in range(instance.n_online):
        starts.append(offset)
        offset += counts[j]
    for i, j in instance.edges:
        for c in range(counts[j]):
            new_edges.append((i, starts[j] + c))
    total = int(counts.sum())
    return Instance(n_offline=instance.n_offline, n_online=total,
                    edges=tuple(new_edges), weights=instance.weights,
                    arrival_rates=(1.0,) * total, horizon=instance.horizon,
                    groups=instance.groups)


def sample_arrivals(instance: Instance, seed) -> ArrivalSequence:
    """Draw the T i.i.d. arrivals for one trial, deterministically from seed."""
    T = instance.horizon
    if T <= 0 or instance.n_online == 0:
        return ArrivalSequence(rounds=(), rng_seed=int(seed))
    g = _rng.stream(_rng.ARRIVALS, seed)
    p = np.asarray(instance.arrival_rates, dtype=float)
    p = p / p.sum()
    rounds = g.choice(instance.n_online, size=T, p=p)
    return ArrivalSequence(rounds=tuple(int(v) for v in rounds), rng_seed=int(seed))


def generate_synthetic(n_offline, horizon, degree, *, weight_mode="unit",
                       group_mode="singletons", n_groups=None, seed=0) -> Instance:
    """Random canonical instance: each offline agent gets ``degree`` distinct
    uniformly chosen online neighbors out of T unit-rate types.

    weight_mode: "unit" or "uniform" (i.i.d. Uniform[0,1)).
    group_mode: "singletons" or "partition" (uniformly random blocks of near
    equal size, requires n_groups).  Draw order from the seed stream is fixed:
    neighborhoods for i ascending, then weights, then the group permutation.
    """
    if n_offline < 1 or horizon < 1:
        raise ValueError("n_offline and horizon must be positive")
    if not 0 <= degree <= horizon:
        raise ValueError(f"degree must lie in [0, horizon], got {degree}")
    g = _rng.stream(_rng.GENERATE, seed)
    edges = []
    for i in range(n_offline):
        nbrs = g.choice(horizon, size=degree, replace=False)
        edges.extend((i, int(j)) for j in nbrs)
    if weight_mode == "unit":
        weights = (1.0,) * n_offline
    elif weight_mode == "uniform":
        weights = tuple(float(w) for w in g.uniform(size=n_offline))
    else:
        raise ValueError(f"unknown weight_mode {weight_mode!r}")
    if group_mode == "singletons":
        groups = tuple((i,) for i in range(n_offline))
    elif group_mode == "partition":
        if not n_groups or not 1 <= n_groups <= n_offline:
            raise ValueError("partition grouping requires 1 <= n_groups <= n_offline")
        perm = g.permutation(n_offline)
        groups = tuple(tuple(sorted(int(i) for i in block))
                       for block in np.array_split(perm, n_groups))
    else:
        raise ValueError(f"unknown group_mode {group_mode!r}")
    return Instance(n_offline=n_offline, n_online=horizon, edges=tuple(edges),
                    weights=weights, arrival_rates=(1.0,) * horizon,
                    horizon=horizon, groups=groups)
