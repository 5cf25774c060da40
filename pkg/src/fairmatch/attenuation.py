"""Offline attenuation planning for the attenuated boosting policy.

The table beta has one column per round.  Column 1 is all ones.  For each
later round t the planner Monte-Carlo-estimates alpha_hat[i, t], the
probability that agent i is still active at the start of round t (before that
round's coins) when the policy runs with the already-fixed columns 1..t-1,
and sets

    beta[i, t] = clip(target(t) / alpha_hat[i, t], 0, 1),
    target(t) = (1 - 1/T)^(t-1),

with beta = 1 where alpha_hat is 0 (a never-active agent needs no muting).
Muting agents that would otherwise survive too often pins everyone's activity
to the same target curve, which is what equalizes match rates across agents
with very different LP masses.

Each round's estimate uses fresh replicate simulations (streams keyed by
(seed, t, replicate)), independent of any evaluation trial.  The optional
stride recomputes beta only every stride-th round and holds the last column
in between, trading accuracy for planning time on long horizons.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .instance import Instance
from .lp import LpSolution
from .policies import attenuate, per_online_arrays, _weighted_pick


@dataclass(frozen=True)
class AttenuationTable:
    """Planned survival probabilities plus the activity estimates behind them."""

    beta: np.ndarray        # (n_offline, T), column t-1 applies to round t
    alpha_hat: np.ndarray   # same shape; column 0 is all ones
    sim_count: int
    seed: int

    def cache_key(self, instance_digest: str, solution_digest: str) -> str:
        return f"{instance_digest}:{solution_digest}:{self.sim_count}:{self.seed}"

    def to_dict(self) -> dict:
        return {"beta": [[float(v) for v in row] for row in self.beta],
                "alpha_hat": [[float(v) for v in row] for row in self.alpha_hat],
                "sim_count": int(self.sim_count), "seed": int(self.seed)}

    @classmethod
    def from_dict(cls, d: dict) -> "AttenuationTable":
        return cls(beta=np.array(d["beta"], dtype=float),
                   alpha_hat=np.array(d["alpha_hat"], dtype=float),
                   sim_count=int(d["sim_count"]), seed=int(d["seed"]))


def target_curve(horizon: int) -> np.ndarray:
    """The activity curve the planner steers to: (1 - 1/T)^(t-1) for t=1..T."""
    if horizon < 1:
        raise ValueError("horizon must be positive")
    t = np.arange(horizon)
    return (1.0 - 1.0 / horizon) ** t


def simulate_active(nbrs, xvals, beta_cols, arrivals, rng,
                    activity_out=None) -> np.ndarray:
    """Play attenuated boosted sampling for len(arrivals) rounds.

    Per round and in this order: muting coins (ascending id, only where
    beta < 1), then the boosted match draw for the arriving type.  Returns the
    active mask after the last round.  When activity_out is given, row t
    accumulates the post-coin active mask of round t+1 (for target-curve
    diagnostics).
    """
    n = beta_cols.shape[0]
    active = np.ones(n, dtype=bool)
    for t, j in enumerate(arrivals):
        attenuate(active, beta_cols[:, t], rng)
        if activity_out is not None:
            activity_out[t] += active
        nb = nbrs[j]
        if len(nb):
            mask = active[nb]
            if mask.any():
                w = xvals[j][mask]
                if w.sum() > 0.0:
                    active[nb[mask][_weighted_pick(w, rng)]] = False
    return active


def _draw_arrivals(instance, rounds, rng):
    p = np.asarray(instance.arrival_rates, dtype=float)
    return rng.choice(instance.n_online, size=rounds, p=p / p.sum())


def plan(instance: Instance, solution: LpSolution, *, sim_count=100, seed=0,
         stride=1) -> AttenuationTable:
    """Build the attenuation table column by column.

    Cost is O(sim_count * T^2) simulated rounds; the replicates for column t
    rerun rounds 1..t-1 from scratch so the estimate matches exactly what the
    online phase will execute.
    """
    if sim_count < 1:
        raise ValueError("sim_count must be >= 1")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    T = instance.horizon
    n = instance.n_offline
    nbrs, xvals = per_online_arrays(instance, solution)
    beta = np.ones((n, T))
    alpha = np.ones((n, T))
    targets = target_curve(T)
    for t in range(2, T + 1):
        if (t - 2) % stride != 0:
            beta[:, t - 1] = beta[:, t - 2]
            alpha[:, t - 1] = alpha[:, t - 2]
            continue
        counts = np.zeros(n)
        for rep in range(sim_count):
            g = _rng.stream(_rng.PLAN, seed, t, rep)
            arrivals = _draw_arrivals(instance, t - 1, g)
            counts += simulate_active(nbrs, xvals, beta[:, :t - 1], arrivals, g)
        a = counts / sim_count
        col = np.ones(n)
        pos = a > 0.0
        col[pos] = np.minimum(1.0, targets[t - 1] / a[pos])
        beta[:, t - 1] = np.clip(col, 0.0, 1.0)
        alpha[:, t - 1] = a
    return AttenuationTable(beta=beta, alpha_hat=alpha, sim_count=sim_count,
                            seed=seed)


def measure_activity(instance, solution, table, replicates, seed) -> np.ndarray:
    """Fresh-seed estimate of the post-coin activity curve, shape (T, n).

    Row t-1, column i estimates P(agent i active after round t's coins), the
    quantity the planner promises stays at or below target_curve(T)[t-1]
    (up to sampling error).
    """
    nbrs, xvals = per_online_arrays(instance, solution)
    T, n = instance.horizon, instance.n_offline
    activity = np.zeros((T, n))
    for rep in range(replicates):
        g = _rng.stream(_rng.PLAN, seed, 0, rep)
        arrivals = _draw_arrivals(instance, T, g)
        simulate_active(nbrs, xvals, table.beta, arrivals, g,
                        activity_out=activity)
    return activity / replicates


def write_table(table: AttenuationTable, path, instance_digest="",
                solution_digest="") -> None:
    doc = table.to_dict()
    doc["instance_digest"] = instance_digest
    doc["solution_digest"] = solution_digest
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def read_table(path) -> tuple:
    """Returns (table, instance_digest, solution_digest)."""
    with open(path) as fh:
        doc = json.load(fh)
    return (AttenuationTable.from_dict(doc), doc.get("instance_digest", ""),
            doc.get("solution_digest", ""))
