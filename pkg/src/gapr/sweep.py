"""The (phi, alpha) experiment grid, Pareto extraction and CSV output."""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Sequence

from .assignment import Assignment, ScenarioParams, solve_assignment, user_equilibrium
from .metrics import StatsRecord, compute_stats
from .netmodel import Instance
from .pathgen import DEFAULT_MAX_PATHS, ODPathSet, eligible_path_sets

log = logging.getLogger(__name__)

DEFAULT_PHIS = (0.0, 0.01, 0.05, 0.10, 0.15, 0.20)
DEFAULT_ALPHAS = (1.0, 0.9, 0.7, 0.5, 0.3, 0.1, 0.0)

CSV_HEADER = ("instance,phi,alpha,tau,eta,objective,total_time,T_pct,Sigma_pct,Delta_pct,"
              "sigma_bar,delta_bar,lambda_zero,lambda_mid,lambda_high,u_bar_pct,truncated,"
              "wall_seconds").split(",")


class SweepError(RuntimeError):
    def __init__(self, phi: float, alpha: float, cause: BaseException):
        super().__init__(f"cell (phi={phi}, alpha={alpha}) failed: {cause}")
        self.phi, self.alpha = phi, alpha


@dataclass(frozen=True)
class SweepConfig:
    phi_grid: tuple[float, ...] = DEFAULT_PHIS
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHAS
    max_paths: int = DEFAULT_MAX_PATHS
    parallel_cells: int = 1

    def __post_init__(self):
        phis = tuple(sorted(float(p) for p in self.phi_grid))
        alphas = tuple(sorted((float(a) for a in self.alpha_grid), reverse=True))
        if not phis or not alphas:
            raise ValueError("phi and alpha grids must be non-empty")
        if len(set(phis)) != len(phis) or len(set(alphas)) != len(alphas):
            raise ValueError("grids must be duplicate-free")
        if phis[0] < 0 or not all(0 <= a <= 1 for a in alphas):
            raise ValueError("phi must be >= 0 and alpha in [0, 1]")
        if self.max_paths < 1 or self.parallel_cells < 1:
            raise ValueError("max_paths and parallel_cells must be positive")
        object.__setattr__(self, "phi_grid", phis)
        object.__setattr__(self, "alpha_grid", alphas)

    def cells(self) -> list[tuple[float, float]]:
        """Grid cells in report order (phi ascending, alpha descending).

        The phi = 0 row collapses to the single UE cell (alpha = 1): with one
        path per OD every alpha yields the same flows.
        """
        out = []
        for phi in self.phi_grid:
            if phi == 0:
                out.append((0.0, 1.0))
            else:
                out.extend((phi, a) for a in self.alpha_grid)
        return out


@dataclass
class SweepReport:
    instance_name: str
    records: list[StatsRecord]
    ue_record: StatsRecord
    wall_times: list[float]
    ue_assignment: Assignment | None = None
    diagnostics: dict = field(default_factory=dict)

    def record(self, phi: float, alpha: float) -> StatsRecord:
        for r in self.records:
            if r.phi == phi and r.alpha == alpha:
                return r
        raise KeyError((phi, alpha))


def _solve_cell(instance: Instance, phi: float, alpha: float, max_paths: int,
                path_sets: Sequence[ODPathSet]):
    t0 = time.perf_counter()
    a = solve_assignment(instance, ScenarioParams(phi, alpha, max_paths), path_sets)
    return a, time.perf_counter() - t0


def run_sweep(instance: Instance, config: SweepConfig = SweepConfig(),
              keep_assignments: bool = False) -> SweepReport:
    """Solve UE once, then every cell; path sets are enumerated once per phi."""
    t0 = time.perf_counter()
    ue = user_equilibrium(instance)
    ue_wall = time.perf_counter() - t0
    ue_record = compute_stats(ue, ue, instance)

    cells = config.cells()
    pathgen_runs: dict[float, int] = {}
    path_sets: dict[float, tuple[ODPathSet, ...]] = {}
    for phi in config.phi_grid:
        if phi == 0:
            continue
        path_sets[phi] = eligible_path_sets(instance, phi, config.max_paths)
        pathgen_runs[phi] = pathgen_runs.get(phi, 0) + 1

    results: dict[tuple[float, float], tuple[Assignment, float]] = {}
    work = [c for c in cells if c[0] != 0]
    if config.parallel_cells > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=config.parallel_cells) as pool:
            futures = {c: pool.submit(_solve_cell, instance, c[0], c[1], config.max_paths,
                                      path_sets[c[0]]) for c in work}
            for c in work:
                try:
                    results[c] = futures[c].result()
                except Exception as exc:
                    raise SweepError(c[0], c[1], exc) from exc
    else:
        for c in work:
            try:
                results[c] = _solve_cell(instance, c[0], c[1], config.max_paths, path_sets[c[0]])
            except Exception as exc:
                raise SweepError(c[0], c[1], exc) from exc
            log.info("cell phi=%g alpha=%g solved in %.2fs", c[0], c[1], results[c][1])

    records, walls, kept = [], [], {}
    for c in cells:
        if c[0] == 0:
            records.append(ue_record)
            walls.append(ue_wall)
            kept[c] = ue
            continue
        a, wall = results[c]
        records.append(compute_stats(a, ue, instance))
        walls.append(wall)
        kept[c] = a
    diagnostics = {"pathgen_runs": pathgen_runs,
                   "lp_iterations": {c: kept[c].lp_iterations for c in cells}}
    if keep_assignments:
        diagnostics["assignments"] = kept
    return SweepReport(instance.name, records, ue_record, walls, ue, diagnostics)


def pareto_front(points: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    """Nondominated (tau, eta) pairs under joint minimization, sorted by tau."""
    pts = sorted(set(points))
    front = []
    best_eta = float("inf")
    for tau, eta in pts:
        if eta < best_eta:
            front.append((tau, eta))
            best_eta = eta
    return front


def pareto_extract(report: SweepReport, phi: float) -> list[tuple[float, float]]:
    pts = [(r.tau, r.eta) for r in report.records if r.phi == phi]
    if not pts:
        raise KeyError(f"phi={phi} is not in the report")
    return pareto_front(pts)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".9g")
    return str(v)


def emit_csv(report: SweepReport, destination: IO[str], include_timings: bool = True) -> int:
    """Write the header and one row per record; returns the number of data rows.

    With ``include_timings=False`` the ``wall_seconds`` field is left empty so
    the output depends only on the instance and the grid.
    """
    w = csv.writer(destination, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rec, wall in zip(report.records, report.wall_times):
        w.writerow([_fmt(v) for v in (
            report.instance_name, rec.phi, rec.alpha, rec.tau, rec.eta, rec.objective,
            rec.total_time, rec.T, rec.Sigma, rec.Delta, rec.sigma_bar, rec.delta_bar,
            rec.lambda_zero, rec.lambda_mid, rec.lambda_high, rec.u_bar, rec.truncated,
            wall if include_timings else None)])
    return len(report.records)
