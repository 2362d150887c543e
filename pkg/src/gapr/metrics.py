"""Congestion, fairness and network statistics of an assignment against the
user-equilibrium baseline."""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Sequence

from .assignment import Assignment
from .netmodel import Instance
from .pathgen import ODPathSet

LAMBDA_SPLIT = 0.25


@dataclass(frozen=True)
class StatsRecord:
    phi: float
    alpha: float
    tau: float
    eta: float
    objective: float
    sigma_bar: float
    delta_bar: float
    lambda_zero: float
    lambda_mid: float
    lambda_high: float
    u_bar: float
    total_time: float
    T: float | None
    Sigma: float | None
    Delta: float | None
    truncated: bool

    def as_dict(self) -> dict:
        return asdict(self)


def congestion_distribution(assignment: Assignment, instance: Instance):
    """Mean relative excess on arcs and on vertices, plus the three excess classes.

    Returns ``(sigma_bar, delta_bar, lambda_zero, lambda_mid, lambda_high)``;
    the classes are percentages of all arcs and vertices with ratio
    ``== 0``, ``in (0, 0.25)`` and ``>= 0.25``.
    """
    arc_ratios = [assignment.arc_excess[a.key] / a.cap for a in instance.arcs]
    vert_ratios = [assignment.vertex_excess[v.id] / v.cap for v in instance.vertices]
    sigma_bar = sum(arc_ratios) / len(arc_ratios) if arc_ratios else 0.0
    delta_bar = sum(vert_ratios) / len(vert_ratios) if vert_ratios else 0.0
    ratios = arc_ratios + vert_ratios
    total = len(ratios)
    if not total:
        return sigma_bar, delta_bar, 100.0, 0.0, 0.0
    zero = sum(1 for r in ratios if r == 0.0)
    high = sum(1 for r in ratios if r >= LAMBDA_SPLIT)
    mid = total - zero - high
    return (sigma_bar, delta_bar, 100.0 * zero / total, 100.0 * mid / total,
            100.0 * high / total)


def user_experience(assignment: Assignment, path_sets: Sequence[ODPathSet]):
    """Per-path relative detour ``U[(od, k)]`` and the demand-weighted mean in percent."""
    unfair = {}
    for ps in path_sets:
        for k, p in enumerate(ps.paths):
            unfair[(ps.od.id, k)] = (p.time - ps.shortest_time) / ps.shortest_time
    demand = sum(ps.od.demand for ps in path_sets)
    weighted = sum(f * unfair[key] for key, f in assignment.path_flows.items())
    u_bar = 100.0 * weighted / demand if demand > 0 else 0.0
    return unfair, u_bar


def total_walking_time(assignment: Assignment) -> float:
    by_od = {ps.od.id: ps for ps in assignment.path_sets}
    return sum(by_od[od].paths[k].time * f for (od, k), f in assignment.path_flows.items())


def congested_arc_time(assignment: Assignment, instance: Instance) -> float:
    return sum(a.walk_time * assignment.arc_flows[a.key] for a in instance.arcs
               if assignment.arc_excess[a.key] > 0)


def congested_vertex_time(assignment: Assignment, instance: Instance) -> float:
    return sum(v.traverse_time * assignment.vertex_inflows[v.id] for v in instance.vertices
               if assignment.vertex_excess[v.id] > 0)


def _pct_change(new: float, base: float) -> float | None:
    if base == 0:
        return None
    return 100.0 * (new - base) / base


def network_stats(assignment: Assignment, baseline: Assignment, instance: Instance):
    """Percent change of total, congested-arc and congested-vertex walking time vs UE.

    Returns ``(T, Sigma, Delta)``; a statistic whose baseline is zero is None.
    """
    keys = [a.key for a in instance.arcs]
    for who in (assignment, baseline):
        if list(who.arc_flows) != keys or list(who.vertex_inflows) != [v.id for v in instance.vertices]:
            raise ValueError("assignment and baseline do not belong to the same instance")
    T = _pct_change(total_walking_time(assignment), total_walking_time(baseline))
    S = _pct_change(congested_arc_time(assignment, instance), congested_arc_time(baseline, instance))
    D = _pct_change(congested_vertex_time(assignment, instance),
                    congested_vertex_time(baseline, instance))
    return T, S, D


def compute_stats(assignment: Assignment, baseline: Assignment, instance: Instance) -> StatsRecord:
    sigma_bar, delta_bar, lz, lm, lh = congestion_distribution(assignment, instance)
    _, u_bar = user_experience(assignment, assignment.path_sets)
    T, S, D = network_stats(assignment, baseline, instance)
    p = assignment.params
    return StatsRecord(p.phi, p.alpha, assignment.tau, assignment.eta,
                       assignment.scalarized_objective, sigma_bar, delta_bar, lz, lm, lh,
                       u_bar, total_walking_time(assignment), T, S, D, assignment.truncated)
