"""A small, deterministic two-phase primal simplex for sparse LPs.

Problems are stated as ``min c.x`` subject to rows ``a.x {=,>=,<=} b`` and
``x >= 0``.  The basis inverse is kept as a sparse LU factorization of the
basis matrix followed by a file of product-form (eta) updates, refactorized
every :data:`REFACTOR_EVERY` pivots.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import IO, Mapping

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

log = logging.getLogger(__name__)

FEAS_TOL = 1e-7
COST_TOL = 1e-7
GAP_TOL = 1e-6
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 100

EQ, GE, LE = "=", ">=", "<="
_RELATIONS = {"=": EQ, "==": EQ, ">=": GE, "<=": LE}


class LpError(RuntimeError):
    pass


class IterationLimitError(LpError):
    pass


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[int, float]
    relation: str
    rhs: float
    name: str | None = None

    def __post_init__(self):
        rel = _RELATIONS.get(self.relation)
        if rel is None:
            raise ValueError(f"unknown relation {self.relation!r}")
        object.__setattr__(self, "relation", rel)


@dataclass
class LpProblem:
    n_vars: int
    objective: Mapping[int, float]
    constraints: list[Constraint]
    var_names: list[str] | None = None

    def check(self) -> None:
        def bad(v):
            return not math.isfinite(v)

        for j, v in self.objective.items():
            if not 0 <= j < self.n_vars or bad(v):
                raise ValueError(f"bad objective entry {j}: {v}")
        for i, row in enumerate(self.constraints):
            if bad(row.rhs):
                raise ValueError(f"row {i}: non-finite rhs")
            for j, v in row.coeffs.items():
                if not 0 <= j < self.n_vars or bad(v):
                    raise ValueError(f"row {i}: bad coefficient {j}: {v}")
        if self.var_names is not None and len(self.var_names) != self.n_vars:
            raise ValueError("var_names length must equal n_vars")

    def name_of(self, j: int) -> str:
        return self.var_names[j] if self.var_names else f"x{j}"

    def row_name(self, i: int) -> str:
        return self.constraints[i].name or f"r{i}"

    def cost_vector(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for j, v in self.objective.items():
            c[j] += v
        return c

    def matrix(self) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for i, row in enumerate(self.constraints):
            for j, v in row.coeffs.items():
                if v != 0:
                    rows.append(i)
                    cols.append(j)
                    vals.append(v)
        return sp.csr_matrix((vals, (rows, cols)),
                             shape=(len(self.constraints), self.n_vars))

    def rhs_vector(self) -> np.ndarray:
        return np.array([row.rhs for row in self.constraints], dtype=float)


@dataclass
class StandardForm(LpProblem):
    """Equality-only problem; columns past ``n_original`` are slacks/surpluses."""

    n_original: int = 0
    slack_of_row: dict[int, int] = field(default_factory=dict)


def to_standard_form(problem: LpProblem) -> StandardForm:
    """Turn every inequality into an equality with a zero-cost slack column."""
    if isinstance(problem, StandardForm):
        return problem
    names = list(problem.var_names) if problem.var_names else [f"x{j}" for j in range(problem.n_vars)]
    rows = []
    slack_of_row = {}
    n = problem.n_vars
    for i, row in enumerate(problem.constraints):
        coeffs = dict(row.coeffs)
        if row.relation != EQ:
            coeffs[n] = 1.0 if row.relation == LE else -1.0
            slack_of_row[i] = n
            names.append(f"s_{problem.row_name(i)}")
            n += 1
        rows.append(Constraint(coeffs, EQ, row.rhs, row.name))
    return StandardForm(n, dict(problem.objective), rows, names,
                        n_original=problem.n_vars, slack_of_row=slack_of_row)


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray
    objective_value: float
    duals: np.ndarray
    iterations: int
    phase1_iterations: int = 0
    degenerate_pivots: int = 0
    bland: bool = False
    basis: tuple[int, ...] = ()

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Basis:
    """Basis inverse as LU(B0) followed by eta transformations."""

    def __init__(self, A: sp.csc_matrix, cols: list[int]):
        self.A = A
        self.cols = cols
        self.refactor()

    def refactor(self):
        B = self.A[:, self.cols].tocsc()
        self.lu = splu(B, permc_spec="COLAMD", options={"SymmetricMode": False})
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, a: np.ndarray) -> np.ndarray:
        x = self.lu.solve(a)
        for r, d in self.etas:
            xr = x[r] / d[r]
            if xr != 0.0:
                x -= d * xr
            x[r] = xr
        return x

    def btran(self, c: np.ndarray) -> np.ndarray:
        y = c.astype(float, copy=True)
        for r, d in reversed(self.etas):
            yr = y[r]
            y[r] = 0.0
            y[r] = (yr - d @ y) / d[r]
        return self.lu.solve(y, trans="T")

    def replace(self, r: int, q: int, d: np.ndarray):
        self.cols[r] = q
        self.etas.append((r, d))
        if len(self.etas) >= REFACTOR_EVERY:
            self.refactor()


class _Simplex:
    def __init__(self, std: StandardForm, tol: float, max_iter: int | None):
        self.tol = tol
        m = len(std.constraints)
        n = std.n_vars
        A = std.matrix().tocsc()
        b = std.rhs_vector()
        self.sign = np.where(b < 0, -1.0, 1.0)
        A = sp.diags(self.sign) @ A
        b = b * self.sign

        # a slack whose coefficient stays +1 after sign normalization starts basic
        basis = [-1] * m
        for i, j in std.slack_of_row.items():
            if A[i, j] > 0:
                basis[i] = j
        art_rows = [i for i in range(m) if basis[i] < 0]
        n_art = len(art_rows)
        if n_art:
            art = sp.csc_matrix((np.ones(n_art), (art_rows, np.arange(n_art))), shape=(m, n_art))
            A = sp.hstack([A, art], format="csc")
            for k, i in enumerate(art_rows):
                basis[i] = n + k
        self.A = A.tocsc()
        self.AT = self.A.T.tocsr()
        self.b = b
        self.m, self.n, self.n_art = m, n, n_art
        self.c = np.concatenate([std.cost_vector(), np.zeros(n_art)])
        self.basis = _Basis(self.A, basis)
        self.x_B = self.basis.ftran(b.copy())
        self.iterations = 0
        self.degenerate = 0
        self.bland = False
        self.max_iter = max_iter if max_iter is not None else 50 * (m + n + 1)
        self.bland_after = 3 * (m + n)

    def column(self, q: int) -> np.ndarray:
        a = np.zeros(self.m)
        lo, hi = self.A.indptr[q], self.A.indptr[q + 1]
        a[self.A.indices[lo:hi]] = self.A.data[lo:hi]
        return a

    def duals(self, c: np.ndarray) -> np.ndarray:
        return self.basis.btran(c[self.basis.cols])

    def run(self, c: np.ndarray, eligible: np.ndarray) -> str:
        """Iterate to optimality for cost ``c``; returns "optimal" or "unbounded"."""
        scale = float(np.max(np.abs(c))) if c.size else 0.0
        rc_tol = self.tol * scale if scale > 0 else self.tol
        while True:
            pi = self.duals(c)
            rc = c - self.AT @ pi
            mask = eligible.copy()
            mask[self.basis.cols] = False
            cand = np.flatnonzero(mask & (rc < -rc_tol))
            if cand.size == 0:
                return "optimal"
            if self.bland:
                q = int(cand[0])
            else:
                q = int(cand[np.argmin(rc[cand])])
            d = self.basis.ftran(self.column(q))
            rows = np.flatnonzero(d > PIVOT_TOL)
            if rows.size == 0:
                return "unbounded"
            xb = np.maximum(self.x_B[rows], 0.0)
            ratios = xb / d[rows]
            theta = float(ratios.min())
            ties = rows[ratios <= theta + 1e-12 * (1.0 + theta)]
            cols = self.basis.cols
            r = int(min(ties, key=lambda i: cols[i]))
            theta = max(float(self.x_B[r]), 0.0) / d[r]

            if theta <= 0.0:
                self.degenerate += 1
            if not self.bland and self.degenerate >= self.bland_after:
                log.debug("switching to Bland's rule after %d degenerate pivots",
                          self.degenerate)
                self.bland = True
            self.x_B -= theta * d
            self.x_B[r] = theta
            self.basis.replace(r, q, d)
            if not self.basis.etas:
                self.x_B = self.basis.ftran(self.b.copy())
            self.iterations += 1
            if self.iterations >= self.max_iter:
                raise IterationLimitError(
                    f"simplex iteration limit {self.max_iter} exceeded")

    def drive_out_artificials(self):
        n = self.n
        for r in range(self.m):
            if self.basis.cols[r] < n:
                continue
            e = np.zeros(self.m)
            e[r] = 1.0
            row = self.AT[:n] @ self.basis.btran(e)
            row[[j for j in self.basis.cols if j < n]] = 0.0
            cand = np.flatnonzero(np.abs(row) > 1e-9)
            if cand.size == 0:
                continue  # redundant row; the artificial stays basic at zero
            q = int(cand[0])
            d = self.basis.ftran(self.column(q))
            self.basis.replace(r, q, d)
            self.x_B = self.basis.ftran(self.b.copy())
            self.iterations += 1

    def primal(self) -> np.ndarray:
        x = np.zeros(self.n + self.n_art)
        x[self.basis.cols] = self.x_B
        return x


def simplex_solve(problem: LpProblem, tol: float = COST_TOL,
                  max_iter: int | None = None, bland_after: int | None = None) -> LpSolution:
    """Two-phase primal simplex.

    Dantzig pricing with lowest-index tie-breaking; after ``3*(rows+cols)``
    degenerate pivots pricing switches permanently to Bland's rule.  Raises
    :class:`IterationLimitError` rather than returning a non-optimal answer
    (default cap ``50*(rows+cols+1)``).
    The returned ``x`` covers the variables of ``problem`` (slacks dropped)
    and ``duals`` has one entry per constraint of ``problem``.
    """
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError("tol must be in [1e-12, 1e-4]")
    problem.check()
    std = to_standard_form(problem)
    n_user = problem.n_vars
    m = len(std.constraints)
    if m == 0:
        c = problem.cost_vector()
        status = "unbounded" if (c < 0).any() else "optimal"
        obj = -math.inf if status == "unbounded" else 0.0
        return LpSolution(status, np.zeros(n_user), obj, np.zeros(0), 0)
    s = _Simplex(std, tol, max_iter)
    if bland_after is not None:
        s.bland_after = bland_after

    phase1 = 0
    if s.n_art:
        c1 = np.concatenate([np.zeros(s.n), np.ones(s.n_art)])
        s.run(c1, np.ones(s.n + s.n_art, dtype=bool))
        phase1 = s.iterations
        infeas = float(s.primal()[s.n:].sum())
        if infeas > FEAS_TOL * (1.0 + float(np.max(np.abs(s.b), initial=0.0))):
            return LpSolution("infeasible", np.zeros(n_user), math.nan, np.zeros(m),
                              s.iterations, phase1, s.degenerate, s.bland,
                              tuple(s.basis.cols))
        s.drive_out_artificials()

    eligible = np.ones(s.n + s.n_art, dtype=bool)
    eligible[s.n:] = False
    status = s.run(s.c, eligible)
    x = s.primal()
    if status == "unbounded":
        return LpSolution("unbounded", x[:n_user], -math.inf, np.zeros(m), s.iterations,
                          phase1, s.degenerate, s.bland, tuple(s.basis.cols))
    x = np.where(x < 0, 0.0, x)
    pi = s.duals(s.c) * s.sign
    obj = float(s.c[:s.n] @ x[:s.n])
    return LpSolution("optimal", x[:n_user], obj, pi, s.iterations, phase1,
                      s.degenerate, s.bland, tuple(s.basis.cols))


@dataclass
class OptimalityReport:
    primal_feasible: bool
    dual_feasible: bool
    complementary_slackness: bool
    duality_gap_ok: bool
    max_primal_residual: float
    min_reduced_cost: float
    max_cs_violation: float
    duality_gap: float

    @property
    def passed(self) -> bool:
        return (self.primal_feasible and self.dual_feasible
                and self.complementary_slackness and self.duality_gap_ok)


def verify_optimality(problem: LpProblem, solution: LpSolution,
                      tol: float = FEAS_TOL) -> OptimalityReport:
    """Check an optimal solution from scratch against the original problem.

    Uses only ``problem``, ``solution.x``, ``solution.duals`` and the reported
    objective; nothing from the solver's internal state.
    """
    A = problem.matrix()
    b = problem.rhs_vector()
    c = problem.cost_vector()
    x = np.asarray(solution.x, dtype=float)
    y = np.asarray(solution.duals, dtype=float)
    rel = [row.relation for row in problem.constraints]
    ax = A @ x
    slack = ax - b

    resid = np.zeros(len(b))
    for i, r in enumerate(rel):
        if r == EQ:
            resid[i] = abs(slack[i])
        elif r == GE:
            resid[i] = max(0.0, -slack[i])
        else:
            resid[i] = max(0.0, slack[i])
    scaled = resid / (1.0 + np.abs(b)) if b.size else resid
    neg = float(max(0.0, -x.min())) if x.size else 0.0
    max_res = float(max(scaled.max(initial=0.0), neg))
    primal_ok = max_res <= tol

    cscale = 1.0 + float(np.max(np.abs(c), initial=0.0))
    rc = c - A.T @ y
    sign_viol = 0.0
    for i, r in enumerate(rel):
        if r == GE:
            sign_viol = max(sign_viol, -y[i])
        elif r == LE:
            sign_viol = max(sign_viol, y[i])
    min_rc = float(rc.min(initial=0.0))
    dual_ok = min_rc >= -tol * cscale and sign_viol <= tol * cscale

    xscale = 1.0 + float(np.max(np.abs(x), initial=0.0))
    cs_x = np.abs(x * rc).max(initial=0.0)
    cs_row = np.abs(y * slack).max(initial=0.0)
    max_cs = float(max(cs_x, cs_row))
    cs_ok = max_cs <= tol * cscale * xscale

    dual_obj = float(b @ y)
    gap = abs(solution.objective_value - dual_obj)
    if not math.isfinite(gap):
        gap = math.inf
    gap_ok = gap <= GAP_TOL * (1.0 + abs(solution.objective_value))
    return OptimalityReport(primal_ok, dual_ok, cs_ok, gap_ok, max_res, min_rc, max_cs, gap)


def solve_lp(problem: LpProblem, backend: str = "simplex", tol: float = COST_TOL) -> LpSolution:
    """Solver seam: ``"simplex"`` (built in) or ``"highs"`` (scipy, cross-checks only)."""
    if backend == "simplex":
        return simplex_solve(problem, tol)
    if backend == "highs":
        return _highs_solve(problem)
    raise ValueError(f"unknown LP backend {backend!r}")


def _highs_solve(problem: LpProblem) -> LpSolution:
    from scipy.optimize import linprog

    A = problem.matrix()
    b = problem.rhs_vector()
    rel = np.array([row.relation for row in problem.constraints])
    eq = rel == EQ
    ub_rows = ~eq
    sign = np.where(rel == GE, -1.0, 1.0)
    A_ub = (sp.diags(sign) @ A)[ub_rows] if ub_rows.any() else None
    b_ub = (sign * b)[ub_rows] if ub_rows.any() else None
    A_eq = A[eq] if eq.any() else None
    b_eq = b[eq] if eq.any() else None
    res = linprog(problem.cost_vector(), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=(0, None), method="highs")
    m = len(problem.constraints)
    if res.status == 2:
        return LpSolution("infeasible", np.zeros(problem.n_vars), math.nan, np.zeros(m), res.nit)
    if res.status == 3:
        return LpSolution("unbounded", np.zeros(problem.n_vars), -math.inf, np.zeros(m), res.nit)
    if res.status != 0:
        raise LpError(f"HiGHS failed: {res.message}")
    duals = np.zeros(m)
    if ub_rows.any():
        duals[ub_rows] = res.ineqlin.marginals * sign[ub_rows]
    if eq.any():
        duals[eq] = res.eqlin.marginals
    return LpSolution("optimal", res.x, float(res.fun), duals, res.nit)


def write_mps(problem: LpProblem, out: IO[str], name: str = "LP") -> None:
    """Write ``problem`` in fixed-section MPS (free naming, nonnegative columns)."""
    problem.check()
    kind = {EQ: "E", GE: "G", LE: "L"}
    out.write(f"NAME          {name}\n")
    out.write("ROWS\n N  OBJ\n")
    for i, row in enumerate(problem.constraints):
        out.write(f" {kind[row.relation]}  {problem.row_name(i)}\n")
    by_col: dict[int, list[tuple[str, float]]] = {}
    for j, v in sorted(problem.objective.items()):
        if v != 0:
            by_col.setdefault(j, []).append(("OBJ", v))
    for i, row in enumerate(problem.constraints):
        for j, v in row.coeffs.items():
            if v != 0:
                by_col.setdefault(j, []).append((problem.row_name(i), v))
    out.write("COLUMNS\n")
    for j in range(problem.n_vars):
        entries = by_col.get(j)
        if not entries:
            # keep empty columns visible so the column count survives
            entries = [("OBJ", 0.0)]
        for rname, v in entries:
            out.write(f"    {problem.name_of(j):<12}  {rname:<12}  {v!r}\n")
    out.write("RHS\n")
    for i, row in enumerate(problem.constraints):
        if row.rhs != 0:
            out.write(f"    RHS           {problem.row_name(i):<12}  {row.rhs!r}\n")
    out.write("ENDATA\n")


def read_mps(source: IO[str]) -> LpProblem:
    """Parse the subset of MPS written by :func:`write_mps`."""
    section = None
    row_kind: dict[str, str] = {}
    row_order: list[str] = []
    obj_row = None
    cols: dict[str, int] = {}
    names: list[str] = []
    objective: dict[int, float] = {}
    coeffs: dict[str, dict[int, float]] = {}
    rhs: dict[str, float] = {}
    rel = {"E": EQ, "G": GE, "L": LE}
    for raw in source:
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("*"):
            continue
        if not line[0].isspace():
            section = line.split()[0]
            continue
        parts = line.split()
        if section == "ROWS":
            k, rname = parts
            if k == "N":
                obj_row = rname
            else:
                row_kind[rname] = rel[k]
                row_order.append(rname)
                coeffs[rname] = {}
        elif section == "COLUMNS":
            cname = parts[0]
            if cname not in cols:
                cols[cname] = len(names)
                names.append(cname)
            j = cols[cname]
            for rname, val in zip(parts[1::2], parts[2::2]):
                if rname == obj_row:
                    if float(val) != 0:
                        objective[j] = float(val)
                else:
                    coeffs[rname][j] = float(val)
        elif section == "RHS":
            for rname, val in zip(parts[1::2], parts[2::2]):
                rhs[rname] = float(val)
    rows = [Constraint(coeffs[r], row_kind[r], rhs.get(r, 0.0), r) for r in row_order]
    return LpProblem(len(names), objective, rows, names)
