"""Gathering-avoiding path assignment: LP assembly, solve and flow extraction.

Columns of the scalarized LP are ordered as path flows ``y`` (OD order, then
path index), arc excesses ``sigma`` (arc order) and vertex excesses ``delta``
(vertex order).  Arc and vertex flows are linear in ``y`` and are
substituted out; they are rebuilt from ``y`` after the solve.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import lpsolve
from .lpsolve import Constraint, LpProblem
from .netmodel import Instance
from .pathgen import DEFAULT_MAX_PATHS, ODPathSet, eligible_path_sets

#: excess below this (relative to capacity) is float noise and reported as zero
EXCESS_SNAP = 1e-9


class AssignmentError(RuntimeError):
    pass


class NoEligiblePathsError(AssignmentError):
    pass


@dataclass(frozen=True)
class ScenarioParams:
    phi: float
    alpha: float
    max_paths: int = DEFAULT_MAX_PATHS

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.phi < 0:
            raise ValueError(f"phi must be >= 0, got {self.phi}")
        if self.max_paths < 1:
            raise ValueError("max_paths must be positive")


@dataclass
class GacprLp:
    problem: LpProblem
    y_index: list[tuple[str, int]]
    sigma_arcs: list[tuple[str, str]]
    delta_vertices: list[str]

    @property
    def n_y(self) -> int:
        return len(self.y_index)

    def sigma_col(self, k: int) -> int:
        return self.n_y + k

    def delta_col(self, k: int) -> int:
        return self.n_y + len(self.sigma_arcs) + k


def build_gacpr_lp(instance: Instance, path_sets: Sequence[ODPathSet], alpha: float) -> GacprLp:
    """Assemble the weighted-sum LP for one (path sets, alpha) scenario.

    Rows: one demand equality per OD pair, then ``load - sigma <= cap`` per
    arc and ``inflow - delta <= cap`` per vertex.
    """
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must be in [0, 1]")
    by_od = {ps.od.id: ps for ps in path_sets}
    arcs = instance.arcs
    verts = instance.vertices
    arc_pos = {a.key: k for k, a in enumerate(arcs)}
    vert_pos = {v.id: k for k, v in enumerate(verts)}

    y_index: list[tuple[str, int]] = []
    names: list[str] = []
    objective: dict[int, float] = {}
    demand_rows: list[Constraint] = []
    arc_rows: list[dict[int, float]] = [dict() for _ in arcs]
    vert_rows: list[dict[int, float]] = [dict() for _ in verts]

    for od in instance.od_pairs:
        ps = by_od.get(od.id)
        if ps is None or not ps.paths:
            raise NoEligiblePathsError(f"no eligible paths for OD pair {od.id}")
        row = {}
        for k, path in enumerate(ps.paths):
            j = len(y_index)
            y_index.append((od.id, k))
            names.append(f"y_{od.id}_{k}")
            row[j] = 1.0
            coef = alpha * (path.time / ps.shortest_time)
            if coef != 0.0:
                objective[j] = coef
            for tail, head in path.arcs:
                arc_rows[arc_pos[(tail, head)]][j] = 1.0
                vert_rows[vert_pos[head]][j] = 1.0
        demand_rows.append(Constraint(row, "=", od.demand, f"demand_{od.id}"))

    n_y = len(y_index)
    w = 1.0 - alpha
    rows = list(demand_rows)
    for k, a in enumerate(arcs):
        col = n_y + k
        names.append(f"sigma_{a.tail}_{a.head}")
        coef = w * (a.walk_time / a.cap)
        if coef != 0.0:
            objective[col] = coef
        coeffs = arc_rows[k]
        coeffs[col] = -1.0
        rows.append(Constraint(coeffs, "<=", a.cap, f"arc_{a.tail}_{a.head}"))
    for k, v in enumerate(verts):
        col = n_y + len(arcs) + k
        names.append(f"delta_{v.id}")
        coef = w * (v.traverse_time / v.cap)
        if coef != 0.0:
            objective[col] = coef
        coeffs = vert_rows[k]
        coeffs[col] = -1.0
        rows.append(Constraint(coeffs, "<=", v.cap, f"vertex_{v.id}"))

    problem = LpProblem(n_y + len(arcs) + len(verts), objective, rows, names)
    return GacprLp(problem, y_index, [a.key for a in arcs], [v.id for v in verts])


@dataclass
class Assignment:
    params: ScenarioParams
    path_sets: tuple[ODPathSet, ...]
    path_flows: dict[tuple[str, int], float]
    arc_flows: dict[tuple[str, str], float]
    vertex_inflows: dict[str, float]
    arc_excess: dict[tuple[str, str], float]
    vertex_excess: dict[str, float]
    tau: float
    eta: float
    scalarized_objective: float
    lp_objective: float = float("nan")
    lp_iterations: int = 0

    @property
    def truncated(self) -> bool:
        return any(ps.truncated for ps in self.path_sets)

    def to_dict(self) -> dict:
        by_od = {ps.od.id: ps for ps in self.path_sets}
        return {
            "phi": self.params.phi,
            "alpha": self.params.alpha,
            "tau": self.tau,
            "eta": self.eta,
            "objective": self.scalarized_objective,
            "path_flows": [{"od": od, "path": list(by_od[od].paths[k].vertices), "flow": f}
                           for (od, k), f in self.path_flows.items()],
            "arc_excess": [{"tail": t, "head": h, "sigma": s}
                           for (t, h), s in self.arc_excess.items()],
            "vertex_excess": [{"id": v, "delta": d} for v, d in self.vertex_excess.items()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"


def assignment_from_path_flows(instance: Instance, params: ScenarioParams,
                               path_sets: Sequence[ODPathSet],
                               path_flows: dict[tuple[str, int], float],
                               lp_objective: float = float("nan"),
                               lp_iterations: int = 0) -> Assignment:
    """Rebuild arc/vertex flows, exact excesses and both objectives from ``y``."""
    by_od = {ps.od.id: ps for ps in path_sets}
    arc_flows = {a.key: 0.0 for a in instance.arcs}
    tau = 0.0
    for (od, k), f in path_flows.items():
        ps = by_od[od]
        path = ps.paths[k]
        tau += (path.time / ps.shortest_time) * f
        for key in path.arcs:
            arc_flows[key] += f
    inflow = {v.id: 0.0 for v in instance.vertices}
    for (tail, head), f in arc_flows.items():
        inflow[head] += f

    def excess(flow, cap):
        e = flow - cap
        return e if e > EXCESS_SNAP * max(1.0, cap) else 0.0

    arc_excess = {a.key: excess(arc_flows[a.key], a.cap) for a in instance.arcs}
    vertex_excess = {v.id: excess(inflow[v.id], v.cap) for v in instance.vertices}
    eta = sum(a.walk_time / a.cap * arc_excess[a.key] for a in instance.arcs)
    eta += sum(v.traverse_time / v.cap * vertex_excess[v.id] for v in instance.vertices)
    obj = params.alpha * tau + (1.0 - params.alpha) * eta
    return Assignment(params, tuple(path_sets), dict(path_flows), arc_flows, inflow,
                      arc_excess, vertex_excess, tau, eta, obj, lp_objective, lp_iterations)


def solve_assignment(instance: Instance, params: ScenarioParams,
                     path_sets: Sequence[ODPathSet] | None = None,
                     backend: str = "simplex") -> Assignment:
    """Solve one (phi, alpha) scenario.

    ``path_sets`` may be passed in to reuse an enumeration across alpha values;
    they must have been built for ``params.phi``.
    """
    if path_sets is None:
        path_sets = eligible_path_sets(instance, params.phi, params.max_paths)
    lp = build_gacpr_lp(instance, path_sets, params.alpha)
    sol = lpsolve.solve_lp(lp.problem, backend=backend)
    if sol.status != "optimal":
        # every demand row has at least one path and excesses are free, so the
        # LP is always feasible and bounded below by zero
        raise AssignmentError(f"internal error: scenario LP is {sol.status}")
    y = np.maximum(sol.x[:lp.n_y], 0.0)
    flows = {key: float(v) for key, v in zip(lp.y_index, y)}
    return assignment_from_path_flows(instance, params, path_sets, flows,
                                      sol.objective_value, sol.iterations)


def user_equilibrium(instance: Instance) -> Assignment:
    """Every OD's demand on its tie-broken shortest path (phi = 0, alpha = 1)."""
    return solve_assignment(instance, ScenarioParams(phi=0.0, alpha=1.0))
