import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from femtosim.algorithms import (
    RunConfig,
    _log_linear_choice,
    best_response,
    equilibrium_check,
    fig_run,
    ig_run,
    la_associate,
    la_run,
    run,
    sa_run,
)
from femtosim.model import Decision, DecisionProfile, ModelParams, NonGBR, ProfileState, global_potential, local_profit
from femtosim.oracle import exhaustive_optimum
from femtosim.topology import FbsNode, UeNode, build_topology, conflict_graph, greedy_color, grid_topology

from strategies import topologies


def assert_monotone_after_association(trace):
    """Potential never drops on a step where every UE already held an association."""
    recs = trace.records
    for prev, cur in zip(recs, recs[1:]):
        if prev.unassociated == 0:
            assert cur.potential >= prev.potential - 1e-9
        elif cur.potential < prev.potential - 1e-9:
            assert cur.unassociated < prev.unassociated


def test_singleton_best_response(singleton_gbr, params):
    prof = DecisionProfile({1: Decision(1, 0)}, 10)
    br = best_response(1, prof, singleton_gbr, params)
    assert br.decision == Decision(1, 1)
    assert br.profit == pytest.approx(92.3, abs=1e-9)
    assert br.improved
    again = best_response(1, DecisionProfile({1: br.decision}, 10), singleton_gbr, params)
    assert again.decision == br.decision and not again.improved


def test_huge_omega_keeps_q_zero(singleton_non_gbr):
    params = ModelParams(omega=100.0)
    prof = DecisionProfile({1: Decision(1, 3)}, 10)
    assert best_response(1, prof, singleton_non_gbr, params).decision == Decision(1, 0)


def test_best_response_tie_keeps_current_then_lowest():
    # two FBSs covering a lone UE are interchangeable
    topo = build_topology([FbsNode(1, 0, 0), FbsNode(2, 4, 0)], [UeNode(1, 2, 0, NonGBR(20))])
    p = ModelParams()
    on2 = DecisionProfile({1: Decision(2, 2)}, 10)
    br = best_response(1, on2, topo, p)
    assert br.decision == Decision(2, 2) and not br.improved
    fresh = DecisionProfile.unassociated(topo, 10)
    assert best_response(1, fresh, topo, p).decision == Decision(1, 2)


def test_best_response_unknown_ue(singleton_gbr, params):
    with pytest.raises(KeyError):
        best_response(9, DecisionProfile({1: Decision(1, 0)}, 10), singleton_gbr, params)


def test_ig_singleton(singleton_gbr, params):
    prof, trace = ig_run(singleton_gbr, params, RunConfig("ig"))
    assert prof[1] == Decision(1, 1)
    assert trace.converged and len(trace) <= 2


def test_equilibrium_check_detects_deviation(singleton_gbr, params):
    ok, dev = equilibrium_check(DecisionProfile({1: Decision(1, 0)}, 10), singleton_gbr, params)
    assert not ok
    u, cur, better, gain = dev[0]
    assert (u, cur, better) == (1, Decision(1, 0), Decision(1, 1)) and gain > 0
    assert equilibrium_check(DecisionProfile({1: Decision(1, 1)}, 10), singleton_gbr, params)[0]
    with pytest.raises(ValueError):
        equilibrium_check(DecisionProfile.unassociated(singleton_gbr, 10), singleton_gbr, params)


def test_la_two_non_gbr_split():
    topo = build_topology([FbsNode(1, 0, 0)], [UeNode(1, 1, 0, NonGBR(20)), UeNode(2, 2, 0, NonGBR(20))])
    prof, trace = la_run(topo, ModelParams(), RunConfig("la"))
    assert prof[1] == Decision(1, 4) and prof[2] == Decision(1, 4)
    assert trace.converged


def test_la_prefers_empty_fbs():
    fbs = [FbsNode(1, 0, 0), FbsNode(2, 15, 0)]
    ues = [UeNode(1, -2, 0, NonGBR(20)), UeNode(2, 7.5, 0, NonGBR(20))]
    assoc = la_associate(build_topology(fbs, ues))
    assert assoc == [0, 1]


def test_la_grid_keeps_all_fbs_on():
    topo = grid_topology(seed=1)
    prof, _ = la_run(topo, ModelParams(), RunConfig("la"))
    assert len({d.fbs for d in prof.values()}) == 25


def _check_run(topo, params, alg, selection="round_robin", seed=0):
    n = len(topo.ues)
    prof, trace = run(topo, params, RunConfig(alg, max_iterations=10 * n * max(n, 1), selection=selection, seed=seed))
    assert trace.converged
    assert_monotone_after_association(trace)
    ok, dev = equilibrium_check(prof, topo, params)
    assert ok, dev
    assert trace.records[-1].potential == pytest.approx(global_potential(prof, topo, params), abs=1e-9)
    return prof, trace


@settings(max_examples=60, deadline=None)
@given(topologies(max_fbs=4, max_ues=8), st.sampled_from([0.0, 1.0, 2.0]), st.sampled_from(["round_robin", "random"]))
def test_ig_converges_to_equilibrium(topo, omega, selection):
    _check_run(topo, ModelParams(omega=omega), "ig", selection)


@settings(max_examples=60, deadline=None)
@given(topologies(max_fbs=4, max_ues=8), st.sampled_from([0.0, 1.0, 2.0]))
def test_fig_converges_to_equilibrium(topo, omega):
    _check_run(topo, ModelParams(omega=omega), "fig")


@pytest.mark.parametrize("alt", [False, True])
def test_grid_runs_converge_within_ten_passes(alt):
    params = ModelParams()
    for seed in range(3):
        topo = grid_topology(seed=seed, alternate=alt)
        n = len(topo.ues)
        for alg in ("ig", "fig"):
            prof, trace = run(topo, params, RunConfig(alg, max_iterations=10 * n))
            assert trace.converged
            assert_monotone_after_association(trace)
            assert equilibrium_check(prof, topo, params)[0]


@settings(max_examples=40, deadline=None)
@given(topologies(max_fbs=4, max_ues=8), st.sampled_from([0.0, 1.0]))
def test_fig_round_decomposition(topo, omega):
    params = ModelParams(omega=omega)
    classes = [[topo.ue_index[u] for u in g] for g in greedy_color(conflict_graph(topo)).classes()]
    # start from an associated profile so every step is a game move
    state = ProfileState(topo, params, [e[0] for e in topo.elig_idx], [0] * len(topo.ues))
    for t in range(3 * len(classes)):
        group = classes[t % len(classes)]
        before = state.potential()
        snapshot = state.copy()
        gain = 0.0
        moves = []
        for i in group:
            best = max(snapshot.candidates(i), key=lambda c: snapshot.local_profit(i, *c))
            gain += snapshot.local_profit(i, *best) - snapshot.local_profit(i, snapshot.assoc[i], snapshot.level[i])
            moves.append((i, best))
        for i, (b, k) in moves:
            state.apply(i, b, k)
        assert state.potential() - before == pytest.approx(gain, abs=1e-9)


def test_fig_without_conflicts_is_one_shot():
    fbs = [FbsNode(b, 50.0 * b, 0) for b in range(1, 4)]
    ues = [UeNode(b, 50.0 * b + 1, 0, NonGBR(20)) for b in range(1, 4)]
    topo = build_topology(fbs, ues)
    assert greedy_color(conflict_graph(topo)).num_colors == 1
    prof, trace = fig_run(topo, ModelParams(), RunConfig("fig"))
    assert trace.converged_at == 1 and trace.records[0].ue_updates == 3


def test_ig_and_fig_on_tiny_instance_are_oracle_equilibria():
    fbs = [FbsNode(1, 0, 0), FbsNode(2, 12, 0)]
    ues = [UeNode(1, 6, 0, NonGBR(20)), UeNode(2, -3, 0, NonGBR(20)), UeNode(3, 15, 0, NonGBR(20))]
    topo = build_topology(fbs, ues)
    params = ModelParams(n=4)
    oracle = exhaustive_optimum(topo, params)
    for alg in ("ig", "fig"):
        prof, trace = run(topo, params, RunConfig(alg))
        assert oracle.is_equilibrium(prof)
        assert oracle.best_potential >= trace.records[-1].potential - 1e-9
    assert equilibrium_check(oracle.best_profile, topo, params)[0]


def test_runs_are_deterministic():
    topo = grid_topology(seed=5, alternate=True)
    params = ModelParams()
    for alg in ("ig", "fig", "sa", "la"):
        cfg = RunConfig(alg, max_iterations=300 if alg == "sa" else 10_000, selection="random", seed=11)
        p1, t1 = run(topo, params, cfg)
        p2, t2 = run(topo, params, cfg)
        assert p1 == p2 and t1.records == t2.records


def test_log_linear_limits():
    rng = np.random.default_rng(0)
    profits = np.array([1.0, 3.0, 3.0, 2.0])
    picks = [_log_linear_choice(profits, math.inf, rng) for _ in range(400)]
    assert set(picks) == {1, 2}
    picks = np.array([_log_linear_choice(profits, 0.0, rng) for _ in range(8000)])
    freq = np.bincount(picks, minlength=4) / len(picks)
    assert np.allclose(freq, 0.25, atol=0.03)


def test_sa_large_beta_is_best_response(simple):
    params = ModelParams()
    cfg = RunConfig("sa", max_iterations=200, sa_beta0=1e9)
    prof, trace = sa_run(simple, params, cfg)
    assert len(trace) == 200
    assert equilibrium_check(prof, simple, params)[0]


def test_sa_reaches_at_least_ig_potential_on_tiny_instance():
    fbs = [FbsNode(1, 0, 0), FbsNode(2, 12, 0)]
    ues = [UeNode(1, 6, 0, NonGBR(20)), UeNode(2, -3, 0, NonGBR(20)), UeNode(3, 15, 0, NonGBR(20))]
    topo = build_topology(fbs, ues)
    params = ModelParams(n=4)
    _, ig = ig_run(topo, params, RunConfig("ig"))
    for seed in range(5):
        _, sa = sa_run(topo, params, RunConfig("sa", max_iterations=2000, seed=seed))
        assert max(sa.column("potential")) >= ig.records[-1].potential - 1e-9


def test_overload_disappears_when_penalty_dominates():
    # with a penalty slope large enough that one extra level costs more than a GBR gain
    params = ModelParams(C3=1000.0)
    for seed in range(5):
        topo = grid_topology(seed=seed)
        for alg in ("ig", "fig"):
            prof, _ = run(topo, params, RunConfig(alg))
            state = ProfileState.from_profile(prof, topo, params)
            assert max(state.load) <= params.denom


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig("xx")
    with pytest.raises(ValueError):
        RunConfig(max_iterations=0)
    with pytest.raises(ValueError):
        RunConfig(selection="zigzag")
    assert RunConfig(sa_beta0=0.05, sa_tau=50).beta(50) == pytest.approx(0.1)
