"""Shortest paths and fairness-bounded eligible path sets.

A path's time is the walking time of its arcs plus the traversing time of
every vertex it enters (all vertices except the origin).  Times are
accumulated arc by arc as ``t += walk_time + head.traverse_time`` so that the
enumeration and :func:`path_time` produce bit-identical values.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

from .netmodel import Instance, ODPair

#: absolute slack on the fairness bound
BAND_TOL = 1e-9
DEFAULT_MAX_PATHS = 1000


class NoPathError(ValueError):
    pass


@dataclass(frozen=True)
class Path:
    vertices: tuple[str, ...]
    time: float

    @property
    def arcs(self) -> tuple[tuple[str, str], ...]:
        v = self.vertices
        return tuple(zip(v[:-1], v[1:]))

    def sort_key(self):
        return (self.time, self.vertices)


@dataclass(frozen=True)
class ODPathSet:
    od: ODPair
    phi: float
    shortest_time: float
    paths: tuple[Path, ...]
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.paths)


def path_time(instance: Instance, vertices: Sequence[str]) -> float:
    arcs = instance.arc_by_key
    verts = instance.vertex_by_id
    t = 0.0
    for u, w in zip(vertices[:-1], vertices[1:]):
        arc = arcs.get((u, w))
        if arc is None:
            raise ValueError(f"path uses nonexistent arc ({u},{w})")
        t += arc.walk_time + verts[w].traverse_time
    return t


def make_path(instance: Instance, vertices: Sequence[str]) -> Path:
    vertices = tuple(vertices)
    if len(set(vertices)) != len(vertices):
        raise ValueError(f"path {vertices} is not simple")
    return Path(vertices, path_time(instance, vertices))


class _Graph:
    """Integer-indexed adjacency with precomputed step costs."""

    def __init__(self, instance: Instance):
        self.ids = [v.id for v in instance.vertices]
        index = {vid: i for i, vid in enumerate(self.ids)}
        self.index = index
        trav = [v.traverse_time for v in instance.vertices]
        n = len(self.ids)
        self.out: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        self.inn: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for a in instance.arcs:
            i, j = index[a.tail], index[a.head]
            step = a.walk_time + trav[j]
            self.out[i].append((j, step))
            self.inn[j].append((i, step))
        for lst in self.out:
            lst.sort(key=lambda e: self.ids[e[0]])

    def distances_to(self, target: int) -> list[float]:
        """Dijkstra on reversed arcs: lower bound on remaining time to ``target``."""
        inf = float("inf")
        dist = [inf] * len(self.ids)
        dist[target] = 0.0
        heap = [(0.0, target)]
        while heap:
            d, v = heapq.heappop(heap)
            if d > dist[v]:
                continue
            for u, step in self.inn[v]:
                nd = d + step
                if nd < dist[u]:
                    dist[u] = nd
                    heapq.heappush(heap, (nd, u))
        return dist


def _graph(instance: Instance) -> _Graph:
    g = instance.__dict__.get("_pathgen_graph")
    if g is None:
        g = _Graph(instance)
        instance.__dict__["_pathgen_graph"] = g
    return g


def _bounded_paths(g: _Graph, origin: int, target: int, budget: float,
                   dist: list[float], max_paths: int | None):
    """All simple origin->target paths with time <= budget, as (time, ids) tuples.

    With ``max_paths`` the search keeps only the best ``max_paths`` by
    (time, vertex ids) and tightens the budget as it goes.  Returns the kept
    list (unsorted) and whether more than ``max_paths`` qualified.
    """
    ids = g.ids
    out = g.out
    found: list[tuple[float, tuple[str, ...]]] = []
    on_path = [False] * len(ids)
    stack = [origin]
    on_path[origin] = True
    state = {"bound": budget, "overflow": False}

    def trim():
        found.sort()
        del found[max_paths:]
        state["bound"] = found[-1][0]
        state["overflow"] = True

    def dfs(v: int, t: float):
        for w, step in out[v]:
            if on_path[w]:
                continue
            nt = t + step
            if nt + dist[w] > state["bound"]:
                continue
            if w == target:
                found.append((nt, tuple(ids[k] for k in stack) + (ids[w],)))
                if max_paths is not None and len(found) >= 2 * max_paths:
                    trim()
                continue
            on_path[w] = True
            stack.append(w)
            dfs(w, nt)
            stack.pop()
            on_path[w] = False

    dfs(origin, 0.0)
    if max_paths is not None and len(found) > max_paths:
        trim()
    return found, state["overflow"]


def _prepare(instance: Instance, od: ODPair):
    g = _graph(instance)
    if od.origin not in g.index or od.destination not in g.index:
        raise NoPathError(f"OD pair {od.id}: unknown endpoint")
    o, d = g.index[od.origin], g.index[od.destination]
    dist = g.distances_to(d)
    if dist[o] == float("inf"):
        raise NoPathError(f"no path for OD pair {od.id} ({od.origin} -> {od.destination})")
    return g, o, d, dist


def _shortest(g, o, d, dist) -> Path:
    # the reverse Dijkstra sums in a different order, so allow a hair of slack
    budget = dist[o] * (1 + 1e-12) + BAND_TOL
    found, _ = _bounded_paths(g, o, d, budget, dist, None)
    t, vs = min(found)
    return Path(vs, t)


def shortest_path(instance: Instance, od: ODPair) -> Path:
    """Minimum-time simple path; ties go to the lexicographically smallest id sequence."""
    return _shortest(*_prepare(instance, od))


def enumerate_eligible_paths(instance: Instance, od: ODPair, phi: float,
                             max_paths: int = DEFAULT_MAX_PATHS) -> ODPathSet:
    """Every simple path whose time is within ``(1 + phi)`` of the shortest.

    Depth-first search from the origin, cutting any partial path whose time
    plus the reverse shortest time to the destination exceeds the budget.
    If more than ``max_paths`` paths qualify, the ``max_paths`` smallest by
    (time, vertex ids) are kept and ``truncated`` is set.
    """
    if phi < 0:
        raise ValueError("phi must be >= 0")
    if max_paths < 1:
        raise ValueError("max_paths must be positive")
    g, o, d, dist = _prepare(instance, od)
    sp = _shortest(g, o, d, dist)
    if phi == 0:
        return ODPathSet(od, 0.0, sp.time, (sp,), False)
    budget = (1 + phi) * sp.time + BAND_TOL
    found, truncated = _bounded_paths(g, o, d, budget, dist, max_paths)
    found.sort()
    paths = tuple(Path(vs, t) for t, vs in found)
    return ODPathSet(od, float(phi), sp.time, paths, truncated)


def eligible_path_sets(instance: Instance, phi: float,
                       max_paths: int = DEFAULT_MAX_PATHS) -> tuple[ODPathSet, ...]:
    return tuple(enumerate_eligible_paths(instance, od, phi, max_paths)
                 for od in instance.od_pairs)


def path_set_record(ps: ODPathSet) -> dict:
    """JSON-lines debugging record for one OD path set."""
    return {"od": ps.od.id, "phi": ps.phi, "paths": [list(p.vertices) for p in ps.paths],
            "times": [p.time for p in ps.paths], "truncated": ps.truncated}
