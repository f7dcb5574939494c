import dataclasses
import math

import numpy as np
import pytest

from daoctrl import plant
from daoctrl.control import ControllerParams, Regime
from daoctrl.daoop import OperationParams
from daoctrl.engine import (ConfigError, Scenario, SimConfig, SimTrace, evaluate, initial_conditions,
                            run_batch, run_simulation)
from daoctrl.plant import AgentSpec
from daoctrl.topology import Topology

plant.register_objective("flat", lambda i, x, u: 0.0, lambda i, x, u: 0.0)


def flat_scenario(topo, regime=Regime.DAO_INCENTIVE, horizon=100.0):
    agents = [AgentSpec(k + 1, tau=[0.5, 1.0, 2.0][k % 3], objective="flat") for k in range(topo.n)]
    return Scenario(topo, agents, ControllerParams(regime=regime),
                    OperationParams(), SimConfig(horizon=horizon))


def hand_trace(r, defined, g=None, dt=1.0):
    r = np.asarray(r, dtype=float)
    steps, n = r.shape
    z = np.zeros_like(r)
    return SimTrace(Regime.POS, 0, dt, t=np.arange(steps) * dt, x=z, u=z, d=z, gamma=z + 1, r=r,
                    r_defined=np.asarray(defined, dtype=bool), g=z if g is None else np.asarray(g, float),
                    subgraph_epoch=np.zeros(steps, dtype=int), initial_x=[], initial_u=[],
                    steps_recorded=steps)


def test_config_rejects_non_multiple():
    with pytest.raises(ConfigError):
        SimConfig(tau_o=0.25, base_dt=0.1)
    with pytest.raises(ConfigError):
        SimConfig(horizon=-1.0)
    topo = Topology(np.zeros((1, 1)))
    with pytest.raises(ConfigError, match="agent 1"):
        Scenario(topo, [AgentSpec(1, tau=0.15)])


def test_zero_fixed_point():
    topo = Topology(np.zeros((3, 3)))
    sc = flat_scenario(topo, horizon=20.0)
    trace, _ = run_simulation(sc, 0, initial=([0.0] * 3, [0.0] * 3))
    assert not trace.x.any() and not trace.u.any() and not trace.d.any()


def test_paper_schedule(paper):
    trace, report = run_simulation(paper.with_regime(Regime.POS), 3)
    assert trace.steps_recorded == 5000 and len(trace.t) == 5000
    np.testing.assert_allclose(np.diff(trace.t), 0.1, atol=1e-9)
    counts = np.bincount([e["agent"] for e in trace.epochs], minlength=11)[1:]
    assert counts.tolist() == [50, 250, 250, 500, 500, 500, 1000, 1000, 1000, 1000]
    assert all(counts[i] == math.floor(500 / paper.agents[i].tau) for i in range(10))


def test_zero_order_hold(paper):
    trace, _ = run_simulation(paper.with_regime(Regime.DAO_INCENTIVE), 4)
    for i, spec in enumerate(paper.agents):
        stride = round(spec.tau / 0.1)
        changed = np.flatnonzero(np.diff(trace.u[:, i]) != 0) + 1
        assert all(k % stride == 0 for k in changed)


def test_determinism(paper):
    sc = paper.with_regime(Regime.DAO_WITH_OPERATION)
    a, ra = run_simulation(sc, 11)
    b, rb = run_simulation(sc, 11)
    for name in ("x", "u", "d", "gamma", "r", "r_defined", "subgraph_epoch"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert a.events == b.events and ra.summary() == rb.summary()


def test_operation_cadence(paper):
    trace, _ = run_simulation(paper.with_regime(Regime.DAO_WITH_OPERATION), 2)
    ops = [e["t"] for e in trace.events if e["event"] == "operation"]
    assert len(ops) == 100
    assert all(abs(t / 5.0 - round(t / 5.0)) < 1e-9 for t in ops)
    for reg in (Regime.FIXED_GAIN, Regime.POS, Regime.DAO_INCENTIVE):
        tr, _ = run_simulation(paper.with_regime(reg), 2)
        assert not [e for e in tr.events if e["event"] == "operation"]
        assert not tr.subgraph_epoch.any()


def test_subgraph_epoch_tracks_successful_operations(paper):
    trace, _ = run_simulation(paper.with_regime(Regime.DAO_WITH_OPERATION), 2)
    found = sum(e["found"] for e in trace.events if e["event"] == "operation")
    assert trace.subgraph_epoch[-1] == found == len(trace.subgraphs) - 1
    assert all(e["valid"] for e in trace.events if e["event"] == "operation" and e["found"])


def test_fixed_gain_and_pos_keep_gamma(paper):
    for reg in (Regime.FIXED_GAIN, Regime.POS):
        trace, _ = run_simulation(paper.with_regime(reg), 5)
        assert (trace.gamma == 1.0).all()


def test_initial_draws_shared_across_regimes(paper):
    x0, u0 = initial_conditions(paper, 8)
    assert all(-20 <= v <= 20 for v in x0) and all(-3 <= v <= 3 for v in u0)
    for reg in Regime:
        trace, _ = run_simulation(paper.with_regime(reg), 8)
        assert trace.initial_x == x0 and trace.initial_u == u0


def test_non_finite_aborts():
    plant.register_dynamics("explode", lambda i, x, u: 1e308 * (abs(x) + 1.0))
    topo = Topology(np.zeros((1, 1)))
    sc = Scenario(topo, [AgentSpec(1, tau=1.0, dynamics="explode")], sim=SimConfig(horizon=10.0))
    from daoctrl.engine import SimulationAbort
    with pytest.raises(SimulationAbort) as exc:
        run_simulation(sc, 0)
    assert exc.value.diagnostics["agent"] == 1
    assert exc.value.trace.steps_recorded >= 1


def test_evaluate_constant_consensus():
    trace = hand_trace(np.full((6, 3), 1.5), np.ones((6, 3)))
    rep = evaluate(trace, 0.05)
    assert not rep.max_discrepancy.any() and rep.convergence_time == 0.0
    assert rep.consensus_value == 1.5


def test_evaluate_discrepancy_sample():
    rep = evaluate(hand_trace([[4.0, 2.0]], [[1, 1]]), 0.05)
    assert rep.max_discrepancy[0] == 2.0


def test_evaluate_hand_trace_oracle():
    r = [[1.0, 2.0, 9.0], [3.0, -1.0, 0.5], [0.2, 0.2, 0.4]]
    defined = [[1, 1, 0], [1, 0, 1], [1, 1, 1]]
    g = [[1.0, 2.0, 3.0], [0.0, 0.0, 0.0], [2.0, 2.5, 0.0]]
    rep = evaluate(hand_trace(r, defined, g, dt=0.5), 0.05)
    # spreadsheet arithmetic: defined sums per step are 3.0, 3.5, 0.8
    assert rep.cumulative_ece == pytest.approx(0.5 * (3.0 + 3.5 + 0.8))
    assert rep.delta_j == pytest.approx(4.5 - 6.0)
    assert rep.max_discrepancy.tolist() == pytest.approx([1.0, 2.5, 0.2])
    assert rep.consensus_value == pytest.approx(0.8 / 3)
    # 0.2 > 0.05 * 1.0, so never converged
    assert rep.convergence_time is None


def test_evaluate_convergence_with_dwell():
    r = [[0.0, 10.0], [0.0, 0.1], [0.0, 5.0], [0.0, 0.2], [0.0, 0.3]]
    rep = evaluate(hand_trace(r, np.ones((5, 2))), 0.05)
    assert rep.convergence_time == 3.0


def test_evaluate_skips_undefined_steps():
    rep = evaluate(hand_trace([[1.0, 2.0], [5.0, 0.0]], [[0, 0], [1, 1]]), 0.05)
    assert math.isnan(rep.max_discrepancy[0]) and rep.empty_steps == 1
    assert rep.initial_discrepancy == 5.0


def test_batch_single_run_matches(paper):
    short = dataclasses.replace(paper, sim=dataclasses.replace(paper.sim, horizon=50.0))
    _, rep = run_simulation(short.with_regime(Regime.POS), 3)
    batch = run_batch(short, [Regime.POS], [3])
    assert batch["regimes"]["pos"]["runs"]["3"] == rep.summary()
    stats = batch["regimes"]["pos"]["stats"]
    assert stats["delta_j"]["median"] == rep.delta_j and stats["delta_j"]["iqr"] == 0.0


def test_batch_identical_params_identical_reports(paper):
    # with phi >= n the operation always returns the full graph
    sc = dataclasses.replace(paper, operation=OperationParams(phi=10, psi=2.0),
                             sim=dataclasses.replace(paper.sim, horizon=60.0))
    batch = run_batch(sc, [Regime.DAO_INCENTIVE, Regime.DAO_WITH_OPERATION], [1, 2])
    assert batch["regimes"]["dao"]["runs"] == batch["regimes"]["proposed"]["runs"]


def test_batch_order_independent_of_workers(paper):
    short = dataclasses.replace(paper, sim=dataclasses.replace(paper.sim, horizon=20.0))
    a = run_batch(short, [Regime.POS, Regime.FIXED_GAIN], [1, 2])
    b = run_batch(short, [Regime.POS, Regime.FIXED_GAIN], [1, 2], workers=2)
    assert a["regimes"] == b["regimes"]


def test_batch_requires_seed(paper):
    with pytest.raises(ValueError):
        run_batch(paper, [Regime.POS], [])


def test_tau_scaled_consensus_changes_dynamics(paper):
    scaled = dataclasses.replace(paper, controller=dataclasses.replace(paper.controller, tau_scaled_consensus=True),
                                 sim=dataclasses.replace(paper.sim, horizon=50.0))
    plain = dataclasses.replace(paper, sim=dataclasses.replace(paper.sim, horizon=50.0))
    a, _ = run_simulation(scaled.with_regime(Regime.POS), 1)
    b, _ = run_simulation(plain.with_regime(Regime.POS), 1)
    assert not np.array_equal(a.u, b.u)


def test_non_members_freeze_stabiliser(paper):
    trace, _ = run_simulation(paper.with_regime(Regime.DAO_WITH_OPERATION), 1)
    last = trace.subgraphs[-1]
    members = {m - 1 for m in last["members"]}
    active_edges = {(i - 1) for i, _, _ in last["edges"]}
    start = int(np.flatnonzero(trace.subgraph_epoch == last["id"])[0])
    for i in range(10):
        if i not in members or i not in active_edges:
            assert np.all(trace.d[start + 1:, i] == trace.d[start + 1, i])
