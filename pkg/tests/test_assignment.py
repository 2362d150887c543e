import itertools
import json

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from gapr.assignment import (AssignmentError, NoEligiblePathsError, ScenarioParams,
                             assignment_from_path_flows, build_gacpr_lp, solve_assignment,
                             user_equilibrium)
from gapr.lpsolve import simplex_solve, verify_optimality
from gapr.netmodel import Arc, GeneratorConfig, Instance, ODPair, Vertex, generate_instance
from gapr.pathgen import NoPathError, eligible_path_sets
from oracles import random_graph

TOP, BOTTOM = ("c0", 0), ("c0", 1)


def small_instance(seed, n=8, od=4, density=0.4):
    return generate_instance(GeneratorConfig(n_vertices=n, arc_density=density, n_od_pairs=od,
                                             node_time_window=(0.0, 5.0), seed=seed))


# -- DIAMOND ---------------------------------------------------------------

def test_lp_shape_diamond(dia):
    lp = build_gacpr_lp(dia, eligible_path_sets(dia, 0.10), 0.5)
    assert lp.problem.n_vars == 10
    assert len(lp.problem.constraints) == 9
    assert lp.y_index == [TOP, BOTTOM]
    names = [c.name for c in lp.problem.constraints]
    assert names == (["demand_c0"] + [f"arc_{a.tail}_{a.head}" for a in dia.arcs]
                     + [f"vertex_{v.id}" for v in dia.vertices])


def test_alpha_extremes_zero_out_coefficients(dia):
    ps = eligible_path_sets(dia, 0.10)
    c1 = build_gacpr_lp(dia, ps, 1.0).problem.cost_vector()
    c0 = build_gacpr_lp(dia, ps, 0.0).problem.cost_vector()
    assert np.all(c1[2:] == 0.0) and c1[0] == 1.0 and c1[1] == pytest.approx(1.1)
    assert np.all(c0[:2] == 0.0) and c0[2:].max() > 0


def test_diamond_alpha0(dia):
    a = solve_assignment(dia, ScenarioParams(0.10, 0.0))
    assert a.path_flows[TOP] == pytest.approx(10.0, abs=1e-9)
    assert a.path_flows[BOTTOM] == pytest.approx(5.0, abs=1e-9)
    assert all(v == 0.0 for v in a.arc_excess.values())
    assert all(v == 0.0 for v in a.vertex_excess.values())
    assert a.eta == 0.0
    assert a.tau == pytest.approx(15.5, abs=1e-9)


def test_diamond_alpha1(dia):
    a = solve_assignment(dia, ScenarioParams(0.10, 1.0))
    assert a.path_flows[TOP] == pytest.approx(15.0, abs=1e-9)
    assert a.path_flows[BOTTOM] == pytest.approx(0.0, abs=1e-9)
    assert a.tau == pytest.approx(15.0, abs=1e-9)
    assert a.arc_excess[("O", "A")] == pytest.approx(5.0)
    assert a.arc_excess[("A", "D")] == pytest.approx(5.0)
    assert a.eta == pytest.approx(1.0)


def test_diamond_forced_single_path(dia):
    for alpha in (0.0, 0.3, 1.0):
        a = solve_assignment(dia, ScenarioParams(0.05, alpha))
        assert a.path_flows == {TOP: pytest.approx(15.0)}


def test_diamond_intermediate_alpha(dia):
    # split is cheaper iff 0.1 * alpha * 5 < (1 - alpha) * 0.2 * 5, i.e. alpha < 2/3
    assert solve_assignment(dia, ScenarioParams(0.10, 0.5)).path_flows[BOTTOM] == pytest.approx(5.0)
    assert solve_assignment(dia, ScenarioParams(0.10, 0.7)).path_flows[BOTTOM] == pytest.approx(0.0)


def test_user_equilibrium_diamond(dia):
    ue = user_equilibrium(dia)
    assert ue.params == ScenarioParams(0.0, 1.0)
    assert ue.path_flows == {TOP: 15.0}
    assert ue.tau == 15.0
    assert ue.arc_excess[("O", "A")] == pytest.approx(5.0)


def test_ue_without_interaction():
    verts = tuple(Vertex(v, 100.0, 1.0) for v in "abcd")
    arcs = (Arc("a", "b", 10.0, 2.0), Arc("c", "d", 10.0, 2.0), Arc("a", "d", 10.0, 9.0))
    inst = Instance(verts, arcs, (ODPair("x", "a", "b", 9.0), ODPair("y", "c", "d", 10.0)))
    ue = user_equilibrium(inst)
    assert all(v == 0 for v in ue.arc_excess.values())
    assert all(v == 0 for v in ue.vertex_excess.values())


# -- errors ---------------------------------------------------------------

def test_params_validation():
    for bad in (dict(phi=-0.1, alpha=0.5), dict(phi=0.1, alpha=1.5),
                dict(phi=0.1, alpha=-0.1), dict(phi=0.1, alpha=0.5, max_paths=0)):
        with pytest.raises(ValueError):
            ScenarioParams(**bad)


def test_missing_path_set(dia):
    with pytest.raises(NoEligiblePathsError, match="c0"):
        build_gacpr_lp(dia, [], 0.5)
    assert issubclass(NoEligiblePathsError, AssignmentError)


def test_unreachable_destination():
    inst = Instance((Vertex("a", 1.0, 0.0), Vertex("b", 1.0, 0.0)), (Arc("b", "a", 1.0, 1.0),),
                    (ODPair("x", "a", "b", 1.0),))
    with pytest.raises(NoPathError):
        user_equilibrium(inst)


# -- invariants on generated instances ------------------------------------

@settings(max_examples=25)
@given(st.integers(0, 10_000), st.sampled_from([0.0, 0.05, 0.2, 0.5]),
       st.sampled_from([0.0, 0.3, 0.5, 0.9, 1.0]))
def test_assignment_invariants(seed, phi, alpha):
    inst = small_instance(seed)
    params = ScenarioParams(phi, alpha)
    ps = eligible_path_sets(inst, phi)
    lp = build_gacpr_lp(inst, ps, alpha)
    sol = simplex_solve(lp.problem)
    assert verify_optimality(lp.problem, sol).passed
    a = solve_assignment(inst, params, ps)

    for od in inst.od_pairs:
        got = sum(f for (c, _), f in a.path_flows.items() if c == od.id)
        assert abs(got - od.demand) <= 1e-6 * od.demand
    assert min(a.path_flows.values()) >= 0.0

    # x and z rebuilt from y agree with the loads the LP rows imply
    A = lp.problem.matrix()[:, :lp.n_y]
    y = np.array([a.path_flows[k] for k in lp.y_index])
    loads = A @ y
    n_od = len(inst.od_pairs)
    for k, arc in enumerate(inst.arcs):
        assert loads[n_od + k] == pytest.approx(a.arc_flows[arc.key], abs=1e-6)
        assert a.arc_excess[arc.key] == max(0.0, a.arc_flows[arc.key] - arc.cap) or (
            a.arc_excess[arc.key] == 0.0 and a.arc_flows[arc.key] - arc.cap <= 1e-9 * max(1, arc.cap))
    for k, v in enumerate(inst.vertices):
        inflow = sum(a.arc_flows[arc.key] for arc in inst.in_arcs.get(v.id, []))
        assert a.vertex_inflows[v.id] == pytest.approx(inflow, abs=1e-6)
        assert loads[n_od + len(inst.arcs) + k] == pytest.approx(inflow, abs=1e-6)

    assert a.scalarized_objective == pytest.approx(alpha * a.tau + (1 - alpha) * a.eta)
    # post-processed excesses never exceed what the LP paid for
    assert a.scalarized_objective <= sol.objective_value + 1e-7 * (1 + abs(sol.objective_value))
    if alpha > 0:
        assert a.scalarized_objective == pytest.approx(sol.objective_value, rel=1e-7, abs=1e-9)
    if alpha == 1.0:
        total = sum(od.demand for od in inst.od_pairs)
        assert a.tau == pytest.approx(total, rel=1e-12)


@settings(max_examples=15)
@given(st.integers(0, 10_000), st.sampled_from([0.1, 0.5]), st.sampled_from([0.2, 0.6]))
def test_lp_sigma_is_tight_for_positive_alpha(seed, phi, alpha):
    inst = small_instance(seed)
    ps = eligible_path_sets(inst, phi)
    lp = build_gacpr_lp(inst, ps, alpha)
    sol = simplex_solve(lp.problem)
    a = solve_assignment(inst, ScenarioParams(phi, alpha), ps)
    for k, arc in enumerate(inst.arcs):
        if arc.walk_time > 0:
            assert sol.x[lp.sigma_col(k)] == pytest.approx(a.arc_excess[arc.key], abs=1e-6)
    for k, v in enumerate(inst.vertices):
        if v.traverse_time > 0:
            assert sol.x[lp.delta_col(k)] == pytest.approx(a.vertex_excess[v.id], abs=1e-6)


@settings(max_examples=15)
@given(st.integers(0, 10_000), st.sampled_from([0.0, 0.5, 1.0]))
def test_highs_agrees(seed, alpha):
    inst = small_instance(seed)
    ps = eligible_path_sets(inst, 0.3)
    ours = solve_assignment(inst, ScenarioParams(0.3, alpha), ps)
    ref = solve_assignment(inst, ScenarioParams(0.3, alpha), ps, backend="highs")
    assert ours.lp_objective == pytest.approx(ref.lp_objective, rel=1e-7, abs=1e-7)


def test_deterministic_representative():
    inst = small_instance(3)
    a = solve_assignment(inst, ScenarioParams(0.2, 0.0))
    b = solve_assignment(inst, ScenarioParams(0.2, 0.0))
    assert a.path_flows == b.path_flows and a.lp_iterations == b.lp_iterations


@settings(max_examples=10)
@given(st.integers(0, 10_000), st.sampled_from([0.0, 0.5, 1.0]))
def test_phi_monotone_when_untruncated(seed, alpha):
    inst = small_instance(seed)
    prev = None
    for phi in (0.0, 0.05, 0.1, 0.2, 0.4):
        a = solve_assignment(inst, ScenarioParams(phi, alpha))
        assume(not a.truncated)
        if prev is not None:
            assert a.scalarized_objective <= prev * (1 + 1e-7) + 1e-12
        prev = a.scalarized_objective


# -- brute-force grid oracle -----------------------------------------------

def _compositions(total, parts):
    for cut in itertools.combinations(range(total + parts - 1), parts - 1):
        edges = (-1,) + cut + (total + parts - 1,)
        yield [edges[i + 1] - edges[i] - 1 for i in range(parts)]


def grid_optimum(inst, path_sets, alpha, steps=100):
    """Best objective over demand splits on a 1/steps grid, evaluated vectorised."""
    keys, per_od = [], []
    for ps in path_sets:
        comps = np.array(list(_compositions(steps, len(ps.paths))), dtype=float)
        per_od.append(comps * ps.od.demand / steps)
        keys.extend((ps, k) for k in range(len(ps.paths)))
    grids = np.meshgrid(*[np.arange(len(c)) for c in per_od], indexing="ij")
    flows = np.hstack([c[g.ravel()] for c, g in zip(per_od, grids)])

    arcs = {a.key: i for i, a in enumerate(inst.arcs)}
    verts = {v.id: i for i, v in enumerate(inst.vertices)}
    inc_a = np.zeros((len(keys), len(arcs)))
    inc_v = np.zeros((len(keys), len(verts)))
    ratio = np.zeros(len(keys))
    for j, (ps, k) in enumerate(keys):
        p = ps.paths[k]
        ratio[j] = p.time / ps.shortest_time
        for t, h in p.arcs:
            inc_a[j, arcs[(t, h)]] += 1
            inc_v[j, verts[h]] += 1
    cap_a = np.array([a.cap for a in inst.arcs])
    w_a = np.array([a.walk_time / a.cap for a in inst.arcs])
    cap_v = np.array([v.cap for v in inst.vertices])
    w_v = np.array([v.traverse_time / v.cap for v in inst.vertices])
    eta = (np.maximum(flows @ inc_a - cap_a, 0) @ w_a
           + np.maximum(flows @ inc_v - cap_v, 0) @ w_v)
    obj = alpha * (flows @ ratio) + (1 - alpha) * eta
    lipschitz = float((alpha * ratio + (1 - alpha) * (inc_a @ w_a + inc_v @ w_v)).max())
    slack = sum(ps.od.demand / steps * len(ps.paths) for ps in path_sets) * lipschitz
    return float(obj.min()), slack


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.3, 0.7, 1.0]))
def test_tiny_instances_match_grid_search(seed, alpha):
    rng = np.random.default_rng(seed)
    base = random_graph(rng, 4, 0.6)
    ids = [v.id for v in base.vertices]
    ods = []
    for k in range(int(rng.integers(1, 3))):
        o, d = rng.choice(4, 2, replace=False)
        ods.append(ODPair(f"c{k}", ids[o], ids[d], float(rng.uniform(3, 25))))
    inst = base.replace(od_pairs=tuple(ods))
    try:
        ps = eligible_path_sets(inst, 0.6)
    except NoPathError:
        assume(False)
    sizes = [len(p.paths) for p in ps]
    assume(sum(sizes) <= 6 and max(sizes) <= 4)
    a = solve_assignment(inst, ScenarioParams(0.6, alpha), ps)
    best, slack = grid_optimum(inst, ps, alpha)
    assert a.scalarized_objective <= best + 1e-9
    assert best - a.scalarized_objective <= slack + 1e-9


# -- dump ------------------------------------------------------------------

def test_json_dump(dia):
    a = solve_assignment(dia, ScenarioParams(0.10, 1.0))
    doc = json.loads(a.to_json())
    assert set(doc) == {"phi", "alpha", "tau", "eta", "objective", "path_flows",
                        "arc_excess", "vertex_excess"}
    assert doc["path_flows"][0] == {"od": "c0", "path": ["O", "A", "D"], "flow": pytest.approx(15.0)}
    assert {"tail": "O", "head": "A", "sigma": pytest.approx(5.0)} in doc["arc_excess"]
    assert len(doc["vertex_excess"]) == 4
    assert doc["tau"] == pytest.approx(15.0)


def test_from_path_flows_matches_hand(dia):
    ps = eligible_path_sets(dia, 0.10)
    a = assignment_from_path_flows(dia, ScenarioParams(0.10, 0.5), ps, {TOP: 10.0, BOTTOM: 5.0})
    assert a.tau == pytest.approx(15.5)
    assert a.eta == 0.0
    assert a.vertex_inflows["D"] == 15.0
    assert a.scalarized_objective == pytest.approx(7.75)
