"""Data ingestion and instance serialization.

Three front doors: ride-hailing trip CSVs (drivers and riders paired by
starting area), undirected edge lists turned into bipartite instances by a
uniform node partition, and a versioned JSON format that round-trips
instances losslessly.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from . import rng as _rng
from .errors import DataError
from .instance import Instance

SCHEMA_VERSION = 1
MAX_SKIP_FRACTION = 0.10

DEFAULT_TRIP_COLUMNS = {
    "start_time": "Trip Start Timestamp",
    "pickup_area": "Pickup Community Area",
    "dropoff_area": "Dropoff Community Area",
}

TIME_FORMATS = (
    "%m/%d/%Y %I:%M:%S %p",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S",
)


@dataclass(frozen=True)
class TripRecord:
    pickup_area: int
    dropoff_area: int
    start_time: datetime


@dataclass(frozen=True)
class EdgeListGraph:
    """Simple undirected graph with 0-based contiguous node ids."""

    n_nodes: int
    edges: tuple


def _parse_time(text: str) -> datetime:
    for fmt in TIME_FORMATS:
        try:
            return datetime.strptime(text.strip(), fmt)
        except ValueError:
            continue
    raise ValueError(f"unparseable timestamp {text!r}")


def parse_trip_rows(source, columns=None):
    """Yield (records, skipped_count) from a CSV path or file object.

    Rows with missing or unparseable fields are skipped and counted; more
    than 10 percent skipped rows aborts with a DataError since the file is
    probably mismapped.
    """
    columns = dict(DEFAULT_TRIP_COLUMNS, **(columns or {}))
    close = False
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        fh = open(source, newline="")
        close = True
    else:
        fh = source
    try:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError("trip CSV is empty")
        for key, col in columns.items():
            if col not in reader.fieldnames:
                raise DataError(f"trip CSV is missing column {col!r} "
                                f"(mapped to {key})")
        records, skipped, total = [], 0, 0
        for row in reader:
            total += 1
            try:
                rec = TripRecord(
                    pickup_area=int(row[columns["pickup_area"]]),
                    dropoff_area=int(row[columns["dropoff_area"]]),
                    start_time=_parse_time(row[columns["start_time"]]))
                if rec.pickup_area < 1 or rec.dropoff_area < 1:
                    raise ValueError("area ids must be positive")
            except (ValueError, TypeError, KeyError):
                skipped += 1
                continue
            records.append(rec)
        if total and skipped > MAX_SKIP_FRACTION * total:
            raise DataError(f"{skipped} of {total} trip rows unparseable "
                            f"(more than {MAX_SKIP_FRACTION:.0%}); "
                            "check the column mapping")
        return records, skipped
    finally:
        if close:
            fh.close()


def trips_to_instance(source, window, horizon, seed, columns=None) -> Instance:
    """Build a matching instance from a trip file.

    Trips starting inside [window_start, window_end) are kept; ``horizon`` of
    them are subsampled uniformly (without replacement, order preserving).
    Each sampled trip contributes one driver (offline) and one rider (online,
    unit rate); a driver serves a rider exactly when both trips start in the
    same pickup area, and the groups are the per-area driver sets.
    """
    start, end = window
    records, _skipped = parse_trip_rows(source, columns)
    eligible = [r for r in records if start <= r.start_time < end]
    if len(eligible) < horizon:
        raise DataError(f"only {len(eligible)} trips inside the window, "
                        f"need horizon={horizon}")
    g = _rng.stream(_rng.TRIPS, seed)
    keep = np.sort(g.choice(len(eligible), size=horizon, replace=False))
    sampled = [eligible[k] for k in keep]
    by_area = {}
    for idx, rec in enumerate(sampled):
        by_area.setdefault(rec.pickup_area, []).append(idx)
    edges = []
    for members in by_area.values():
        for i in members:
            edges.extend((i, j) for j in members)
    groups = tuple(tuple(by_area[a]) for a in sorted(by_area))
    return Instance(n_offline=horizon, n_online=horizon, edges=tuple(edges),
                    weights=(1.0,) * horizon, arrival_rates=(1.0,) * horizon,
                    horizon=horizon, groups=groups)


def read_edge_list(source) -> EdgeListGraph:
    """Parse a whitespace-separated edge list.

    Lines starting with '%' or '#' are comments; the first two tokens of a
    data line are node ids (any integers, 1-based welcome).  Ids are compacted
    to 0..n-1 preserving numeric order; self loops and duplicate edges are
    dropped.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source) as fh:
            lines = fh.readlines()
    else:
        lines = list(source)
    raw = []
    for ln, line in enumerate(lines, 1):
        text = line.strip()
        if not text or text.startswith("%") or text.startswith("#"):
            continue
        toks = text.split()
        if len(toks) < 2:
            raise DataError(f"edge list line {ln}: expected two node ids, "
                            f"got {text!r}")
        try:
            u, v = int(toks[0]), int(toks[1])
        except ValueError:
            raise DataError(f"edge list line {ln}: non-integer node id "
                            f"in {text!r}") from None
        raw.append((u, v))
    ids = sorted({u for u, v in raw} | {v for u, v in raw})
    remap = {orig: k for k, orig in enumerate(ids)}
    edges = set()
    for u, v in raw:
        a, b = remap[u], remap[v]
        if a == b:
            continue
        edges.add((min(a, b), max(a, b)))
    return EdgeListGraph(n_nodes=len(ids), edges=tuple(sorted(edges)))


def balanced_partition(graph: EdgeListGraph, seed, weight_seed, *,
                       downsample_to=None) -> Instance:
    """Bipartize a general graph by a uniform node split.

    Optionally downsample to ``downsample_to`` nodes first (uniform, induced
    subgraph).  A uniformly random half of the surviving nodes (rounded down)
    becomes the offline side, the rest the online side; only edges across the
    split survive.  Offline weights are i.i.d. Uniform[0,1) from weight_seed.
    The horizon is the number of online nodes, all unit rate.
    """
    g = _rng.stream(_rng.PARTITION, seed)
    nodes = np.arange(graph.n_nodes)
    edges = graph.edges
    if downsample_to is not None and downsample_to < graph.n_nodes:
        keep = np.sort(g.choice(graph.n_nodes, size=downsample_to,
                                replace=False))
        keep_set = set(int(v) for v in keep)
        remap = {int(orig): k for k, orig in enumerate(keep)}
        edges = tuple((remap[u], remap[v]) for u, v in edges
                      if u in keep_set and v in keep_set)
        nodes = np.arange(downsample_to)
    n = len(nodes)
    if n < 2:
        raise DataError("graph needs at least two nodes after downsampling")
    perm = g.permutation(n)
    left = np.sort(perm[: n // 2])        # offline side
    right = np.sort(perm[n // 2:])        # online side
    li = {int(v): k for k, v in enumerate(left)}
    ri = {int(v): k for k, v in enumerate(right)}
    bip = []
    for u, v in edges:
        if u in li and v in ri:
            bip.append((li[u], ri[v]))
        elif v in li and u in ri:
            bip.append((li[v], ri[u]))
    wg = _rng.stream(_rng.WEIGHTS, weight_seed)
    weights = tuple(float(w) for w in wg.uniform(size=len(left)))
    horizon = len(right)
    return Instance(n_offline=len(left), n_online=horizon, edges=tuple(bip),
                    weights=weights, arrival_rates=(1.0,) * horizon,
                    horizon=horizon, groups=())


def instance_to_json(instance: Instance) -> str:
    """Canonical JSON text: sorted keys, fixed separators, sorted id lists."""
    doc = {
        "version": SCHEMA_VERSION,
        "horizon": instance.horizon,
        "offline": [{"id": i, "weight": instance.weights[i]}
                    for i in range(instance.n_offline)],
        "online": [{"id": j, "rate": instance.arrival_rates[j]}
                   for j in range(instance.n_online)],
        "edges": [[i, j] for i, j in instance.edges],
        "groups": [list(g) for g in instance.groups],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def instance_from_json(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid instance JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise DataError("instance JSON must be an object")
    allowed = {"version", "horizon", "offline", "online", "edges", "groups"}
    unknown = set(doc) - allowed
    if unknown:
        raise DataError(f"unknown instance field(s): {sorted(unknown)}")
    missing = allowed - set(doc)
    if missing:
        raise DataError(f"missing instance field(s): {sorted(missing)}")
    if doc["version"] != SCHEMA_VERSION:
        raise DataError(f"unsupported schema version {doc['version']!r}, "
                        f"expected {SCHEMA_VERSION}")

    def entries(name, key_field, val_field):
        seen = {}
        for entry in doc[name]:
            extra = set(entry) - {key_field, val_field}
            if extra:
                raise DataError(f"unknown field(s) {sorted(extra)} in "
                                f"{name} entry {entry}")
            if key_field not in entry or val_field not in entry:
                raise DataError(f"{name} entry {entry} needs "
                                f"{key_field} and {val_field}")
            seen[int(entry[key_field])] = float(entry[val_field])
        n = len(seen)
        if sorted(seen) != list(range(n)):
            raise DataError(f"{name} ids must cover 0..{n - 1} exactly")
        return tuple(seen[k] for k in range(n))

    weights = entries("offline", "id", "weight")
    rates = entries("online", "id", "rate")
    return Instance(n_offline=len(weights), n_online=len(rates),
                    edges=tuple((int(i), int(j)) for i, j in doc["edges"]),
                    weights=weights, arrival_rates=rates,
                    horizon=int(doc["horizon"]),
                    groups=tuple(tuple(int(i) for i in g)
                                 for g in doc["groups"]))


def write_instance(instance: Instance, path) -> None:
    with open(path, "w") as fh:
        fh.write(instance_to_json(instance))


def read_instance(path) -> Instance:
    try:
        with open(path) as fh:
            return instance_from_json(fh.read())
    except OSError as exc:
        raise DataError(f"cannot read instance file: {exc}") from None


def instance_digest(instance: Instance) -> str:
    """Stable content hash of the canonical JSON form."""
    return hashlib.sha256(instance_to_json(instance).encode()).hexdigest()


def solution_digest(solution) -> str:
    """Stable content hash of an LP solution's payload."""
    doc = {"objective_kind": solution.objective_kind,
           "objective_value": solution.objective_value,
           "x": sorted([i, j, v] for (i, j), v in solution.x.items())}
    return hashlib.sha256(json.dumps(doc, sort_keys=True,
                                     separators=(",", ":")).encode()).hexdigest()


def solution_to_json(solution) -> str:
    doc = {"objective_kind": solution.objective_kind,
           "objective_value": solution.objective_value,
           "cut_count": solution.cut_count,
           "status": solution.status,
           "x": sorted([i, j, v] for (i, j), v in solution.x.items())}
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def solution_from_json(text: str, instance: Instance = None):
    """Parse a solution document; pass the instance to size the mass vector."""
    from .lp import LpSolution, make_solution
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid solution JSON: {exc}") from None
    x = {(int(i), int(j)): float(v) for i, j, v in doc["x"]}
    if instance is not None:
        return make_solution(instance, doc["objective_kind"], x,
                             doc["objective_value"], doc["cut_count"],
                             doc["status"])
    masses = {}
    for (i, _j), v in x.items():
        masses[i] = masses.get(i, 0.0) + v
    n = max(masses, default=-1) + 1
    return LpSolution(objective_kind=doc["objective_kind"], x=x,
                      objective_value=float(doc["objective_value"]),
                      cut_count=int(doc["cut_count"]), status=doc["status"],
                      masses=tuple(masses.get(i, 0.0) for i in range(n)))
