"""Pedestrian network instances: data model, JSON format, validation and a
seeded synthetic generator."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import IO

import numpy as np


class InstanceError(ValueError):
    """Raised when an instance document cannot be parsed or fails validation."""

    def __init__(self, message: str, violations: list["Violation"] | None = None):
        super().__init__(message)
        self.violations = violations or []


@dataclass(frozen=True)
class Vertex:
    id: str
    cap: float
    traverse_time: float


@dataclass(frozen=True)
class Arc:
    tail: str
    head: str
    cap: float
    walk_time: float
    length: float | None = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.tail, self.head)


@dataclass(frozen=True)
class ODPair:
    id: str
    origin: str
    destination: str
    demand: float


@dataclass(frozen=True)
class Instance:
    vertices: tuple[Vertex, ...]
    arcs: tuple[Arc, ...]
    od_pairs: tuple[ODPair, ...]
    name: str = "instance"

    def __post_init__(self):
        # accept any iterable; store tuples so the instance is immutable
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "arcs", tuple(self.arcs))
        object.__setattr__(self, "od_pairs", tuple(self.od_pairs))

    @cached_property
    def vertex_by_id(self) -> dict[str, Vertex]:
        return {v.id: v for v in self.vertices}

    @cached_property
    def arc_by_key(self) -> dict[tuple[str, str], Arc]:
        return {a.key: a for a in self.arcs}

    @cached_property
    def od_by_id(self) -> dict[str, ODPair]:
        return {od.id: od for od in self.od_pairs}

    @cached_property
    def out_arcs(self) -> dict[str, list[Arc]]:
        out: dict[str, list[Arc]] = {v.id: [] for v in self.vertices}
        for a in self.arcs:
            out.setdefault(a.tail, []).append(a)
        for lst in out.values():
            lst.sort(key=lambda a: a.head)
        return out

    @cached_property
    def in_arcs(self) -> dict[str, list[Arc]]:
        inn: dict[str, list[Arc]] = {v.id: [] for v in self.vertices}
        for a in self.arcs:
            inn.setdefault(a.head, []).append(a)
        for lst in inn.values():
            lst.sort(key=lambda a: a.tail)
        return inn

    def replace(self, **changes) -> "Instance":
        fields = dict(vertices=self.vertices, arcs=self.arcs,
                      od_pairs=self.od_pairs, name=self.name)
        fields.update(changes)
        return Instance(**fields)


@dataclass(frozen=True)
class Violation:
    entity: str
    rule: str
    message: str

    def __str__(self) -> str:
        return self.message


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def validate(instance: Instance) -> list[Violation]:
    """Check every structural and numeric invariant; an empty list means valid."""
    out: list[Violation] = []

    ids = Counter(v.id for v in instance.vertices)
    for vid, n in ids.items():
        if n > 1:
            out.append(Violation(vid, "duplicate_vertex", f"duplicate vertex {vid}"))
    for v in instance.vertices:
        if not _finite(v.cap) or v.cap <= 0:
            out.append(Violation(v.id, "vertex_cap", f"vertex {v.id}: cap must be > 0"))
        if not _finite(v.traverse_time) or v.traverse_time < 0:
            out.append(Violation(v.id, "vertex_time",
                                 f"vertex {v.id}: traverse_time must be >= 0"))

    seen: set[tuple[str, str]] = set()
    for a in instance.arcs:
        name = f"({a.tail},{a.head})"
        for end in (a.tail, a.head):
            if end not in ids:
                out.append(Violation(name, "dangling_arc",
                                     f"arc {name} references missing vertex {end}"))
        if a.tail == a.head:
            out.append(Violation(name, "self_loop", f"arc {name}: tail equals head"))
        if not _finite(a.cap) or a.cap <= 0:
            out.append(Violation(name, "arc_cap", f"arc {name}: cap must be > 0"))
        if not _finite(a.walk_time) or a.walk_time <= 0:
            out.append(Violation(name, "arc_time", f"arc {name}: walk_time must be > 0"))
        if a.length is not None and (not _finite(a.length) or a.length <= 0):
            out.append(Violation(name, "arc_length", f"arc {name}: length must be > 0"))
        if a.key in seen:
            out.append(Violation(name, "duplicate_arc", f"duplicate arc {name}"))
        seen.add(a.key)

    od_ids = Counter(od.id for od in instance.od_pairs)
    for oid, n in od_ids.items():
        if n > 1:
            out.append(Violation(oid, "duplicate_od", f"duplicate OD pair {oid}"))
    for od in instance.od_pairs:
        for end in (od.origin, od.destination):
            if end not in ids:
                out.append(Violation(od.id, "dangling_od",
                                     f"OD pair {od.id} references missing vertex {end}"))
        if od.origin == od.destination:
            out.append(Violation(od.id, "od_loop",
                                 f"OD pair {od.id}: origin equals destination"))
        if not _finite(od.demand) or od.demand <= 0:
            out.append(Violation(od.id, "demand", f"OD pair {od.id}: demand must be > 0"))
    return out


# -- JSON format -------------------------------------------------------------

_TOP_KEYS = {"name", "vertices", "arcs", "od_pairs"}
_VERTEX_KEYS = {"id", "cap", "traverse_time"}
_ARC_KEYS = {"tail", "head", "cap", "walk_time", "length"}
_ARC_REQUIRED = _ARC_KEYS - {"length"}
_OD_KEYS = {"id", "origin", "destination", "demand"}


def _check_keys(obj, allowed: set, required: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise InstanceError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise InstanceError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise InstanceError(f"{where}: missing field(s) {sorted(missing)}")


def _num(obj: dict, key: str, where: str) -> float:
    val = obj[key]
    if not _finite(val):
        raise InstanceError(f"{where}: field {key!r} must be a finite number")
    return float(val)


def _str(obj: dict, key: str, where: str) -> str:
    val = obj[key]
    if not isinstance(val, str):
        raise InstanceError(f"{where}: field {key!r} must be a string")
    return val


def instance_from_dict(doc: dict) -> Instance:
    _check_keys(doc, _TOP_KEYS, _TOP_KEYS, "instance")
    for key in ("vertices", "arcs", "od_pairs"):
        if not isinstance(doc[key], list):
            raise InstanceError(f"instance: field {key!r} must be an array")
    vertices = []
    for i, v in enumerate(doc["vertices"]):
        where = f"vertices[{i}]"
        _check_keys(v, _VERTEX_KEYS, _VERTEX_KEYS, where)
        vertices.append(Vertex(_str(v, "id", where), _num(v, "cap", where),
                               _num(v, "traverse_time", where)))
    arcs = []
    for i, a in enumerate(doc["arcs"]):
        where = f"arcs[{i}]"
        _check_keys(a, _ARC_KEYS, _ARC_REQUIRED, where)
        length = _num(a, "length", where) if a.get("length") is not None else None
        arcs.append(Arc(_str(a, "tail", where), _str(a, "head", where),
                        _num(a, "cap", where), _num(a, "walk_time", where), length))
    ods = []
    for i, od in enumerate(doc["od_pairs"]):
        where = f"od_pairs[{i}]"
        _check_keys(od, _OD_KEYS, _OD_KEYS, where)
        ods.append(ODPair(_str(od, "id", where), _str(od, "origin", where),
                          _str(od, "destination", where), _num(od, "demand", where)))
    if not isinstance(doc["name"], str):
        raise InstanceError("instance: field 'name' must be a string")
    inst = Instance(tuple(vertices), tuple(arcs), tuple(ods), doc["name"])
    problems = validate(inst)
    if problems:
        raise InstanceError("; ".join(p.message for p in problems), problems)
    return inst


def instance_to_dict(instance: Instance) -> dict:
    arcs = []
    for a in instance.arcs:
        d = {"tail": a.tail, "head": a.head, "cap": a.cap, "walk_time": a.walk_time}
        if a.length is not None:
            d["length"] = a.length
        arcs.append(d)
    return {
        "name": instance.name,
        "vertices": [{"id": v.id, "cap": v.cap, "traverse_time": v.traverse_time}
                     for v in instance.vertices],
        "arcs": arcs,
        "od_pairs": [{"id": od.id, "origin": od.origin, "destination": od.destination,
                      "demand": od.demand} for od in instance.od_pairs],
    }


def load_instance(source: IO[bytes] | IO[str] | bytes | str) -> Instance:
    """Parse and validate a JSON instance document.

    ``source`` may be a binary/text stream or the raw document itself.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed instance document: {exc}") from exc
    return instance_from_dict(doc)


def save_instance(instance: Instance) -> bytes:
    # json renders floats with repr(), i.e. the shortest exact round-trip form
    return (json.dumps(instance_to_dict(instance), indent=1) + "\n").encode("utf-8")


def read_instance_file(path) -> Instance:
    with open(path, "rb") as fh:
        return load_instance(fh)


def write_instance_file(instance: Instance, path) -> None:
    with open(path, "wb") as fh:
        fh.write(save_instance(instance))


# -- synthetic generator -----------------------------------------------------

@dataclass(frozen=True)
class GeneratorConfig:
    n_vertices: int
    arc_density: float = 1.0
    n_od_pairs: int = 25
    safety_distance: float = 2.0
    walking_speed: float = 1.4
    node_cap_fraction: float = 0.5
    node_time_window: tuple[float, float] = (1.0, 10.0)
    demand_fraction: float = 0.3
    bbox: tuple[float, float, float, float] = (0.0, 0.0, 1000.0, 1000.0)
    seed: int = 0
    # road length / straight-line distance, drawn per arc; (1, 1) means Euclidean
    detour_range: tuple[float, float] = (1.0, 1.0)
    # "manhattan" approximates street-grid walking distances
    metric: str = "euclidean"
    name: str | None = None

    def problems(self) -> list[str]:
        out = []
        n = self.n_vertices
        if not isinstance(n, int) or n < 2:
            out.append("n_vertices must be an integer >= 2")
        if not 0 < self.arc_density <= 1:
            out.append("arc_density must be in (0, 1]")
        if not isinstance(self.n_od_pairs, int) or self.n_od_pairs < 1:
            out.append("n_od_pairs must be a positive integer")
        elif isinstance(n, int) and self.n_od_pairs > n * (n - 1):
            out.append(f"n_od_pairs={self.n_od_pairs} exceeds n(n-1)={n * (n - 1)}")
        if self.safety_distance <= 0 or self.walking_speed <= 0:
            out.append("safety_distance and walking_speed must be > 0")
        for name in ("node_cap_fraction", "demand_fraction"):
            if not 0 < getattr(self, name) <= 1:
                out.append(f"{name} must be in (0, 1]")
        lo, hi = self.node_time_window
        if not 0 <= lo <= hi:
            out.append("node_time_window must satisfy 0 <= low <= high")
        x0, y0, x1, y1 = self.bbox
        if not (x1 > x0 and y1 > y0):
            out.append("bbox must have positive width and height")
        dlo, dhi = self.detour_range
        if not 1 <= dlo <= dhi:
            out.append("detour_range must satisfy 1 <= low <= high")
        if self.metric not in ("euclidean", "manhattan"):
            out.append("metric must be 'euclidean' or 'manhattan'")
        if not 0 <= self.seed < 2**64:
            out.append("seed must be a 64-bit unsigned integer")
        return out


def generate_instance(config: GeneratorConfig) -> Instance:
    """Draw a random pedestrian network the way the benchmark instances are built.

    Capacities follow the safety-distance rule (arc cap = length / safety
    distance), vertex capacities are a fraction of the entering capacity and
    demands a fraction of the origin's exit capacity.
    """
    problems = config.problems()
    if problems:
        raise InstanceError("infeasible generator config: " + "; ".join(problems))
    rng = np.random.default_rng(config.seed)
    n = config.n_vertices
    width = len(str(n - 1))
    ids = [f"v{i:0{width}d}" for i in range(n)]

    x0, y0, x1, y1 = config.bbox
    xy = np.column_stack([rng.uniform(x0, x1, n), rng.uniform(y0, y1, n)])

    # Hamiltonian cycle keeps the digraph strongly connected
    perm = rng.permutation(n)
    chosen = {(int(perm[i]), int(perm[(i + 1) % n])) for i in range(n)}
    target = max(math.ceil(config.arc_density * n * (n - 1)), len(chosen))
    others = [(i, j) for i in range(n) for j in range(n) if i != j and (i, j) not in chosen]
    extra = target - len(chosen)
    if extra > 0:
        pick = rng.choice(len(others), size=extra, replace=False)
        chosen.update(others[k] for k in pick)
    pairs = sorted(chosen)

    lo_d, hi_d = config.detour_range
    detour = rng.uniform(lo_d, hi_d, len(pairs)) if hi_d > lo_d else np.full(len(pairs), lo_d)
    arcs = []
    in_cap = np.zeros(n)
    out_cap = np.zeros(n)
    for (i, j), f in zip(pairs, detour):
        dx, dy = np.abs(xy[i] - xy[j])
        dist = float(np.hypot(dx, dy) if config.metric == "euclidean" else dx + dy)
        length = max(dist, 1e-3) * float(f)
        cap = length / config.safety_distance
        arcs.append(Arc(ids[i], ids[j], cap, length / config.walking_speed, length))
        in_cap[j] += cap
        out_cap[i] += cap

    lo_t, hi_t = config.node_time_window
    times = rng.uniform(lo_t, hi_t, n)
    vertices = [Vertex(ids[i], float(config.node_cap_fraction * in_cap[i]), float(times[i]))
                for i in range(n)]

    od_width = len(str(config.n_od_pairs - 1))
    flat = rng.choice(n * (n - 1), size=config.n_od_pairs, replace=False)
    ods = []
    for k, code in enumerate(flat):
        o, r = divmod(int(code), n - 1)
        d = r if r < o else r + 1
        ods.append(ODPair(f"c{k:0{od_width}d}", ids[o], ids[d],
                          float(config.demand_fraction * out_cap[o])))
    name = config.name or f"gen-n{n}-s{config.seed}"
    return Instance(tuple(vertices), tuple(arcs), tuple(ods), name)


def reachable_from(instance: Instance, source: str) -> set[str]:
    seen = {source}
    stack = [source]
    out = instance.out_arcs
    while stack:
        u = stack.pop()
        for a in out.get(u, ()):
            if a.head not in seen:
                seen.add(a.head)
                stack.append(a.head)
    return seen


def scale50_config(seed: int, **overrides) -> GeneratorConfig:
    """50 vertices, ~2450 arcs, 25 OD pairs on street-grid-like distances.

    Small per-arc detours and sub-second crossing times leave many routes
    within 1% of each other, as with routed map walking times; demand and
    vertex capacity fractions are set so the user equilibrium overloads
    its arcs and crossings.
    """
    params = dict(n_vertices=50, arc_density=1.0, n_od_pairs=25, metric="manhattan",
                  detour_range=(1.0, 1.05), node_time_window=(0.1, 1.0),
                  node_cap_fraction=0.05, demand_fraction=0.02, seed=seed,
                  name=f"scale50-{seed}")
    params.update(overrides)
    return GeneratorConfig(**params)


def diamond() -> Instance:
    """The canonical four-vertex test network (two routes O->D, demand 15)."""
    verts = [Vertex(v, 100.0, 0.0) for v in ("O", "A", "B", "D")]
    arcs = [Arc("O", "A", 10.0, 1.0), Arc("A", "D", 10.0, 1.0),
            Arc("O", "B", 10.0, 1.1), Arc("B", "D", 10.0, 1.1)]
    return Instance(tuple(verts), tuple(arcs), (ODPair("c0", "O", "D", 15.0),), "diamond")
