"""Experiment harness: repeated trials, metrics, and parameter sweeps.

Common random numbers: trial k of every policy replays the arrival sequence
derived from (master_seed, k), so policy comparisons are paired.  Reported
ratios divide by the benchmark LP optimum, a conservative stand-in for the
clairvoyant optimum (which the LP upper-bounds), so true competitive ratios
can only be better than what is printed.
"""
from __future__ import annotations

import csv
import hashlib
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .attenuation import AttenuationTable, plan
from .errors import DataError
from .ingest import (instance_digest, read_instance, solution_digest,
                     trips_to_instance)
from .instance import (Instance, generate_synthetic, is_canonical,
                       sample_arrivals, validate)
from .lp import GFM, IFM, OBJECTIVES, VOM, LpSolution, normalize_ifm, \
    solve_benchmark
from .policies import PolicyConfig, execute_trial, make_policy

Z_95 = 1.959963984540054


@dataclass
class TrialReport:
    """Aggregated outcome of one policy on one instance."""

    policy: str
    objective: str
    trials: int
    match_frequency: tuple        # per offline agent
    half_width: tuple             # 95 percent normal half-width per agent
    objective_estimate: float
    objective_half_width: float
    lp_value: float
    lp_masses: tuple
    cr1: float                    # min_i freq_i / mass_i, mass > 0 agents
    cr1_excluded: int             # agents skipped because mass_i == 0
    cr2: float                    # objective_estimate / lp_value
    master_seed: int
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        for key in ("match_frequency", "half_width", "lp_masses"):
            out[key] = list(out[key])
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "TrialReport":
        d = dict(d)
        for key in ("match_frequency", "half_width", "lp_masses"):
            d[key] = tuple(d[key])
        return cls(**d)


def _mass_positive(instance):
    return [i for i in instance.offline_agents
            if instance.neighbors_of_offline[i]]


def objective_from_frequencies(instance, objective, freq) -> float:
    """Plug estimated per-agent match probabilities into the objective.

    The min-agent objective skips isolated agents (they are excluded from the
    benchmark LP the same way, so ratios stay comparable).
    """
    if objective == IFM:
        eligible = _mass_positive(instance)
        return float(min((freq[i] for i in eligible), default=0.0))
    if objective == GFM:
        return float(min(sum(freq[i] for i in g) / len(g)
                         for g in instance.groups))
    return float(sum(w * f for w, f in zip(instance.weights, freq)))


def _objective_half_width(instance, objective, freq, trials) -> float:
    var = [f * (1.0 - f) / trials for f in freq]
    if objective == IFM:
        eligible = _mass_positive(instance)
        if not eligible:
            return 0.0
        i = min(eligible, key=lambda i: freq[i])
        return Z_95 * math.sqrt(var[i])
    if objective == GFM:
        g = min(instance.groups,
                key=lambda g: sum(freq[i] for i in g) / len(g))
        return Z_95 * math.sqrt(sum(var[i] for i in g)) / len(g)
    w = instance.weights
    return Z_95 * math.sqrt(sum(w[i] ** 2 * var[i]
                                for i in range(instance.n_offline)))


def _count_chunk(instance, configs, master_seed, start, stop):
    policies = {name: make_policy(instance, cfg)
                for name, cfg in configs.items()}
    counts = {name: np.zeros(instance.n_offline, dtype=np.int64)
              for name in configs}
    for k in range(start, stop):
        tseed = _rng.derive_seed(_rng.HARNESS, master_seed, k)
        arrivals = sample_arrivals(instance, tseed)
        for name, policy in policies.items():
            rng = _rng.stream(_rng.POLICY, tseed)
            state = execute_trial(policy, arrivals, rng)
            counts[name] += state.matched
    return counts


def run_experiment(instance: Instance, policies, objective, trials,
                   master_seed, *, parallelism=1, k_cap=None, sim_count=100,
                   lp_solution: LpSolution = None,
                   attenuation: AttenuationTable = None,
                   solver_config=None) -> dict:
    """Run every policy for ``trials`` paired trials and report metrics.

    The benchmark LP is solved once (normalized to equal masses under the
    min-agent objective); the attenuated policy plans its table once from a
    seed derived from master_seed unless a table is supplied.
    """
    if objective not in OBJECTIVES:
        raise DataError(f"unknown objective {objective!r}")
    if trials < 1:
        raise DataError("trials must be >= 1")
    problems = validate(instance)
    if problems:
        raise DataError("invalid instance: " + "; ".join(problems))
    if not is_canonical(instance):
        raise DataError("instance must be canonical (unit rates, |J| == T); "
                        "run canonicalize first")
    if objective == GFM and not instance.groups:
        raise DataError("group objective requires a grouped instance")

    if lp_solution is None:
        lp_solution = solve_benchmark(instance, objective, k_cap=k_cap,
                                      config=solver_config)
        if objective == IFM:
            lp_solution = normalize_ifm(lp_solution, instance)
    configs = {}
    for name in policies:
        cfg = PolicyConfig(policy=name, objective=objective,
                           lp_solution=lp_solution)
        if name == "samp-ab":
            table = attenuation
            if table is None:
                plan_seed = _rng.derive_seed(_rng.PLAN, master_seed)
                table = plan(instance, lp_solution, sim_count=sim_count,
                             seed=plan_seed)
            cfg.attenuation = table
        configs[name] = cfg
        make_policy(instance, cfg)   # fail fast on bad configs

    if parallelism > 1 and trials > 1:
        bounds = np.linspace(0, trials, parallelism + 1).astype(int)
        spans = [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if a < b]
        with ProcessPoolExecutor(max_workers=len(spans)) as pool:
            parts = list(pool.map(_count_chunk, *zip(*[
                (instance, configs, master_seed, a, b) for a, b in spans])))
        counts = {name: sum(p[name] for p in parts) for name in configs}
    else:
        counts = _count_chunk(instance, configs, master_seed, 0, trials)

    reports = {}
    echo = {"objective": objective, "trials": trials,
            "master_seed": master_seed, "sim_count": sim_count,
            "k_cap": k_cap, "lp_digest": solution_digest(lp_solution),
            "instance_digest": instance_digest(instance)}
    lp_value = lp_solution.objective_value
    for name in policies:
        freq = counts[name] / trials
        hw = Z_95 * np.sqrt(freq * (1.0 - freq) / trials)
        obj_est = objective_from_frequencies(instance, objective, freq)
        ratios = [freq[i] / lp_solution.masses[i]
                  for i in instance.offline_agents
                  if lp_solution.masses[i] > 0.0]
        excluded = instance.n_offline - len(ratios)
        cr1 = float(min(ratios)) if ratios else float("nan")
        cr2 = obj_est / lp_value if lp_value > 0 else float("nan")
        reports[name] = TrialReport(
            policy=name, objective=objective, trials=trials,
            match_frequency=tuple(float(f) for f in freq),
            half_width=tuple(float(h) for h in hw),
            objective_estimate=obj_est,
            objective_half_width=_objective_half_width(
                instance, objective, freq, trials),
            lp_value=lp_value, lp_masses=lp_solution.masses,
            cr1=cr1, cr1_excluded=excluded, cr2=float(cr2),
            master_seed=master_seed, config=dict(echo, policy=name))
    return reports


# ---------------------------------------------------------------------------
# Sweeps

SWEEP_COLUMNS = ("cell", "source", "T", "degree", "policy", "objective",
                 "n_instances", "trials", "mean_lp_value", "mean_cr1",
                 "mean_cr2", "mean_objective")


def _grid(params: dict):
    """Cartesian product over list-valued parameters, fixed key order."""
    keys = sorted(params)
    lists = [params[k] if isinstance(params[k], list) else [params[k]]
             for k in keys]
    for combo in itertools.product(*lists):
        yield dict(zip(keys, combo))


def _cell_instances(kind, per_cell, cell, cell_idx, master_seed):
    out = []
    for q in range(per_cell):
        gseed = _rng.derive_seed(_rng.GENERATE, master_seed, cell_idx, q)
        if kind == "synthetic":
            inst = generate_synthetic(
                n_offline=int(cell["n_offline"]), horizon=int(cell["T"]),
                degree=int(cell["degree"]),
                weight_mode=cell.get("weight_mode", "unit"),
                group_mode=cell.get("group_mode", "singletons"),
                n_groups=cell.get("n_groups"), seed=gseed)
        elif kind == "trips":
            from datetime import datetime
            window = (datetime.fromisoformat(cell["window_start"]),
                      datetime.fromisoformat(cell["window_end"]))
            inst = trips_to_instance(cell["csv"], window, int(cell["T"]),
                                     gseed)
        elif kind == "files":
            inst = read_instance(cell["path"])
        else:
            raise DataError(f"unknown generator kind {kind!r}")
        out.append(inst)
    return out


def sweep(config: dict, out_path) -> list:
    """Run a grid of cells and write one CSV row per (cell, policy).

    The CSV starts with a comment line embedding the config hash and master
    seed, so a result file pins exactly what produced it.  Reruns with the
    same config are byte-identical.
    """
    for key in ("generator", "policies", "objective", "trials", "master_seed"):
        if key not in config:
            raise DataError(f"sweep config is missing {key!r}")
    master_seed = int(config["master_seed"])
    objective = config["objective"]
    trials = int(config["trials"])
    gen = dict(config["generator"])
    kind = gen.pop("kind")
    cells = list(_grid(gen))
    cfg_hash = hashlib.sha256(
        json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()

    rows = []
    for cell_idx, cell in enumerate(cells):
        instances = _cell_instances(
            kind, int(config.get("instances_per_cell", 1)), cell, cell_idx,
            master_seed)
        acc = {p: {"cr1": [], "cr2": [], "obj": [], "lp": []}
               for p in config["policies"]}
        for q, inst in enumerate(instances):
            rseed = _rng.derive_seed(_rng.HARNESS, master_seed, cell_idx, q)
            reports = run_experiment(
                inst, config["policies"], objective, trials, rseed,
                sim_count=int(config.get("sim_count", 100)),
                k_cap=config.get("k_cap"),
                parallelism=int(config.get("parallelism", 1)))
            for p, rep in reports.items():
                acc[p]["cr1"].append(rep.cr1)
                acc[p]["cr2"].append(rep.cr2)
                acc[p]["obj"].append(rep.objective_estimate)
                acc[p]["lp"].append(rep.lp_value)
        for p in config["policies"]:
            rows.append({
                "cell": cell_idx,
                "source": cell.get("csv") or cell.get("path") or kind,
                "T": cell.get("T", ""),
                "degree": cell.get("degree", ""),
                "policy": p,
                "objective": objective,
                "n_instances": len(instances),
                "trials": trials,
                "mean_lp_value": repr(float(np.mean(acc[p]["lp"]))),
                "mean_cr1": repr(float(np.mean(acc[p]["cr1"]))),
                "mean_cr2": repr(float(np.mean(acc[p]["cr2"]))),
                "mean_objective": repr(float(np.mean(acc[p]["obj"]))),
            })
    with open(out_path, "w", newline="") as fh:
        fh.write(f"# fairmatch sweep schema=1 config_sha256={cfg_hash} "
                 f"master_seed={master_seed}\n")
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    return rows
