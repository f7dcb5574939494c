"""Multi-rate simulation loop, trace recording and evaluation."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import control, daoop, plant
from .control import ControllerParams, Regime
from .daoop import OperationParams
from .plant import AgentSpec, AgentState
from .rng import SplitMix64, derive_seed
from .topology import Subgraph, Topology

logger = logging.getLogger(__name__)

OPERATION_STREAM = 1
_MULTIPLE_TOL = 1e-9


class ConfigError(ValueError):
    """Scenario or simulation settings violate an invariant."""


@dataclass(frozen=True)
class SimConfig:
    horizon: float = 500.0
    base_dt: float = 0.1
    tau_o: float = 5.0
    epsilon_converge: float = 0.05
    seeds: tuple[int, ...] = (1,)
    init_state_range: tuple[float, float] = (-20.0, 20.0)
    init_control_range: tuple[float, float] = (-3.0, 3.0)
    gradient_method: str = "auto"

    def __post_init__(self):
        if not self.horizon > 0:
            raise ConfigError("horizon must be positive")
        if not self.base_dt > 0:
            raise ConfigError("base_dt must be positive")
        if not self.epsilon_converge > 0:
            raise ConfigError("epsilon_converge must be positive")
        for name in ("init_state_range", "init_control_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"{name} must be a closed interval [lo, hi]")
        self.steps_for(self.tau_o, "tau_o")
        self.n_steps

    def steps_for(self, period: float, label: str = "period") -> int:
        """Number of base steps in ``period``; it must be an integer multiple."""
        k = period / self.base_dt
        ki = round(k)
        if ki < 1 or abs(k - ki) > _MULTIPLE_TOL * max(1.0, k):
            raise ConfigError(f"{label}={period} is not a positive integer multiple of base_dt={self.base_dt}")
        return ki

    @property
    def n_steps(self) -> int:
        return self.steps_for(self.horizon, "horizon")


@dataclass
class Scenario:
    topology: Topology
    agents: list[AgentSpec]
    controller: ControllerParams = field(default_factory=ControllerParams)
    operation: OperationParams = field(default_factory=OperationParams)
    sim: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self):
        n = self.topology.n
        if len(self.agents) != n:
            raise ConfigError(f"{len(self.agents)} agents given for an {n}-node topology")
        for k, spec in enumerate(self.agents):
            if spec.number != k + 1:
                raise ConfigError(f"agents[{k}] has number {spec.number}, expected {k + 1}")
            self.sim.steps_for(spec.tau, f"agent {spec.number} tau")

    @property
    def n(self) -> int:
        return self.topology.n

    def deltas(self) -> list[float]:
        if self.controller.delta_override is not None:
            return [self.controller.delta_override] * self.n
        return [spec.delta for spec in self.agents]

    def with_regime(self, regime: Regime) -> "Scenario":
        return Scenario(self.topology, self.agents, self.controller.with_regime(regime),
                        self.operation, self.sim)


@dataclass
class SimTrace:
    """Per-step arrays of shape (steps, n) plus per-epoch and event records."""

    regime: Regime
    seed: int
    base_dt: float
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    d: np.ndarray
    gamma: np.ndarray
    r: np.ndarray
    r_defined: np.ndarray
    g: np.ndarray
    subgraph_epoch: np.ndarray
    initial_x: list[float]
    initial_u: list[float]
    epochs: list[dict] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    subgraphs: list[dict] = field(default_factory=list)
    steps_recorded: int = 0
    diagnostics: Optional[dict] = None

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def truncated(self) -> "SimTrace":
        k = self.steps_recorded
        arrays = {name: getattr(self, name)[:k] for name in
                  ("t", "x", "u", "d", "gamma", "r", "r_defined", "g", "subgraph_epoch")}
        return SimTrace(self.regime, self.seed, self.base_dt, initial_x=self.initial_x,
                        initial_u=self.initial_u, epochs=self.epochs, events=self.events,
                        subgraphs=self.subgraphs, steps_recorded=k, diagnostics=self.diagnostics,
                        **arrays)


@dataclass
class EvalReport:
    max_discrepancy: np.ndarray
    convergence_time: Optional[float]
    consensus_value: Optional[float]
    delta_j: float
    cumulative_ece: float
    initial_discrepancy: Optional[float] = None
    empty_steps: int = 0

    def summary(self) -> dict:
        return {
            "convergence_time": self.convergence_time,
            "consensus_value": self.consensus_value,
            "delta_j": self.delta_j,
            "abs_delta_j": abs(self.delta_j),
            "cumulative_ece": self.cumulative_ece,
            "initial_discrepancy": self.initial_discrepancy,
            "empty_steps": self.empty_steps,
        }


class SimulationAbort(RuntimeError):
    def __init__(self, message: str, trace: SimTrace):
        super().__init__(message)
        self.trace = trace
        self.diagnostics = trace.diagnostics


def initial_conditions(scenario: Scenario, seed: int) -> tuple[list[float], list[float]]:
    """Uniform draws: every x_i in agent order, then every u_i."""
    rng = SplitMix64(seed)
    xs = [rng.uniform(*scenario.sim.init_state_range) for _ in range(scenario.n)]
    us = [rng.uniform(*scenario.sim.init_control_range) for _ in range(scenario.n)]
    return xs, us


def _abort(trace: SimTrace, t: float, reason: str, **values) -> SimulationAbort:
    trace.diagnostics = {"t": t, "reason": reason, **values}
    logger.error("simulation aborted at t=%s: %s %s", t, reason, values)
    return SimulationAbort(reason, trace.truncated())


def run_simulation(scenario: Scenario, seed: int,
                   initial: Optional[tuple[Sequence[float], Sequence[float]]] = None
                   ) -> tuple[SimTrace, EvalReport]:
    """Simulate one regime from one seed.

    At each base step: refresh the subgraph (proposed regime, every tau_o),
    run the control pipeline for agents whose epoch falls on this step,
    record, then advance every plant one explicit Euler step under a
    zero-order hold on the controls.
    """
    topo, specs, params, sim = scenario.topology, scenario.agents, scenario.controller, scenario.sim
    regime = params.regime
    n = topo.n
    n_steps = sim.n_steps
    dt = sim.base_dt
    epoch_steps = [sim.steps_for(s.tau) for s in specs]
    op_steps = sim.steps_for(sim.tau_o)
    deltas = scenario.deltas()
    taus = [s.tau for s in specs]

    x0, u0 = initial if initial is not None else initial_conditions(scenario, seed)
    states = [AgentState(x=float(x), u=float(u)) for x, u in zip(x0, u0)]
    op_rng = SplitMix64(derive_seed(seed, OPERATION_STREAM) ^ scenario.operation.rng_seed)

    shape = (n_steps, n)
    trace = SimTrace(
        regime=regime, seed=seed, base_dt=dt,
        t=np.zeros(n_steps), x=np.zeros(shape), u=np.zeros(shape), d=np.zeros(shape),
        gamma=np.zeros(shape), r=np.zeros(shape), r_defined=np.zeros(shape, dtype=bool),
        g=np.zeros(shape), subgraph_epoch=np.zeros(n_steps, dtype=np.int64),
        initial_x=[float(v) for v in x0], initial_u=[float(v) for v in u0],
    )

    active: Subgraph = topo.full_subgraph()
    sub_id = 0
    trace.subgraphs.append({"id": 0, "t": 0.0, **active.to_dict()})
    full_neighbors = [topo.neighbors(i) for i in range(n)]
    active_neighbors = full_neighbors

    for k in range(n_steps):
        t = k * dt

        if regime.uses_operation and k % op_steps == 0:
            r_vis = [s.r for s in states]
            result = daoop.operate(topo, r_vis, scenario.operation, rng=op_rng)
            if result.found:
                report = daoop.validate(topo, result.subgraph, r_vis, scenario.operation)
                sub_id += 1
                active = result.subgraph
                active_neighbors = [active.neighbors(i) for i in range(n)]
                trace.subgraphs.append({"id": sub_id, "t": t, **active.to_dict()})
                trace.events.append({"t": t, "event": "operation", "found": True, "subgraph": sub_id,
                                     "iterations": result.iterations_used,
                                     "removed_edges": result.removed_edge_count,
                                     "valid": report.ok})
            else:
                trace.events.append({"t": t, "event": "operation", "found": False,
                                     "subgraph": sub_id, "iterations": result.iterations_used})
                logger.info("t=%s: no feasible subgraph, keeping subgraph %d", t, sub_id)

        firing = [i for i in range(n) if k % epoch_steps[i] == 0]
        if firing:
            # 1. ECE samples from each agent's own window
            for i in firing:
                st = states[i]
                plant.update_ece(st, plant.local_objective(specs[i], st.x, st.u), st.u)
            r_vis = [s.r for s in states]
            r_cons = [r_vis[j] / taus[j] for j in range(n)] if params.tau_scaled_consensus else r_vis
            # 2. weights and control laws on pre-update states
            decisions = {}
            for i in firing:
                st = states[i]
                nbrs = active_neighbors[i]
                rtilde = control.local_disagreement(i, nbrs, r_vis)
                if regime.uses_voting:
                    w = control.voting_weights(st.gamma, rtilde, params.k1, params.k2, params.weight_clamp)
                    alpha, beta = w.alpha, w.beta
                    if w.clamped:
                        trace.events.append({"t": t, "event": "weight_clamp", "agent": i + 1})
                else:
                    alpha, beta = params.alpha_fixed, params.beta_fixed
                grad = plant.objective_gradient(specs[i], st.x, st.u, method=sim.gradient_method)
                cons = control.consensus_term(i, nbrs, r_cons)
                try:
                    out = control.control_step(st.d, grad, cons, alpha, beta, deltas[i], taus[i])
                except control.ControlAbort as exc:
                    raise _abort(trace, t, str(exc), agent=i + 1, **exc.diagnostics) from exc
                decisions[i] = (out, rtilde, grad)
            # 3. execute
            for i, (out, _, _) in decisions.items():
                states[i].u = out.u
                states[i].d = out.d
            # 4. incentives, after the controls are executed
            for i, (out, rtilde, grad) in decisions.items():
                st = states[i]
                rec = {"t": t, "agent": i + 1, "alpha": out.alpha, "beta": out.beta, "rtilde": rtilde,
                       "consensus": out.consensus, "grad": grad, "u": out.u}
                if regime.uses_incentive:
                    deltas_g = [(a, states[j].dg) for j, a in active_neighbors[i]]
                    inc = control.incentive_update(st.gamma, rtilde, st.last_rtilde, deltas_g,
                                                   params.k3, params.k4)
                    st.gamma = inc.gamma
                    rec.update(h=inc.h, multiplier=inc.multiplier, h_consensus=inc.consensus_reward,
                               h_support=inc.neighbor_support, gamma=inc.gamma)
                st.last_rtilde = rtilde
                trace.epochs.append(rec)

        trace.t[k] = t
        trace.subgraph_epoch[k] = sub_id
        for i, st in enumerate(states):
            trace.x[k, i] = st.x
            trace.u[k, i] = st.u
            trace.d[k, i] = st.d
            trace.gamma[k, i] = st.gamma
            trace.r[k, i] = st.r
            trace.r_defined[k, i] = st.r_defined
            trace.g[k, i] = plant.local_objective(specs[i], st.x, st.u)
        trace.steps_recorded = k + 1

        held = [st.u for st in states]
        new_x = [plant.step_dynamics(specs[i], states[i], topo.coupled_input(i, held), dt) for i in range(n)]
        for i, xv in enumerate(new_x):
            if not math.isfinite(xv):
                raise _abort(trace, t, "non-finite state", agent=i + 1, x=states[i].x, u=states[i].u)
            states[i].x = xv

    return trace, evaluate(trace, sim.epsilon_converge)


def max_discrepancy(trace: SimTrace) -> tuple[np.ndarray, int]:
    """max |r_i - r_j| over defined samples per step (NaN when none is defined)."""
    series = np.full(trace.steps_recorded, np.nan)
    empty = 0
    for k in range(trace.steps_recorded):
        vals = trace.r[k][trace.r_defined[k]]
        if vals.size:
            series[k] = vals.max() - vals.min()
        else:
            empty += 1
    return series, empty


def convergence_time(t: np.ndarray, series: np.ndarray, epsilon: float) -> tuple[Optional[float], Optional[float]]:
    """First time after which the series stays at or below epsilon * its first finite value."""
    finite = np.flatnonzero(np.isfinite(series))
    if finite.size == 0:
        return None, None
    initial = float(series[finite[0]])
    threshold = epsilon * initial
    above = finite[series[finite] > threshold]
    if above.size == 0:
        return float(t[finite[0]]), initial
    after = finite[finite > above[-1]]
    if after.size == 0:
        return None, initial
    return float(t[after[0]]), initial


def evaluate(trace: SimTrace, epsilon_converge: float) -> EvalReport:
    k = trace.steps_recorded
    series, empty = max_discrepancy(trace)
    if empty:
        logger.debug("%d steps without any defined ECE sample", empty)
    conv, initial = convergence_time(trace.t[:k], series, epsilon_converge)
    consensus = None
    if k:
        last = trace.r[k - 1][trace.r_defined[k - 1]]
        consensus = float(last.mean()) if last.size else None
    delta_j = float(trace.g[k - 1].sum() - trace.g[0].sum()) if k else 0.0
    cumulative = float(trace.base_dt * np.where(trace.r_defined[:k], trace.r[:k], 0.0).sum())
    return EvalReport(series, conv, consensus, delta_j, cumulative, initial, empty)


METRICS = ("convergence_time", "consensus_value", "delta_j", "abs_delta_j", "cumulative_ece")


def _quantile(sorted_arr: np.ndarray, q: float) -> float:
    # linear interpolation that tolerates +inf entries
    pos = q * (sorted_arr.size - 1)
    lo, hi = math.floor(pos), math.ceil(pos)
    a, b = float(sorted_arr[lo]), float(sorted_arr[hi])
    if a == b or pos == lo:
        return a
    if math.isinf(b):
        return b
    return a + (b - a) * (pos - lo)


def _stats(values: list[Optional[float]], censored: bool) -> dict:
    """Median and quartiles; ``None`` is +inf when ``censored`` and dropped otherwise."""
    if censored:
        arr = np.array([math.inf if v is None else v for v in values], dtype=float)
    else:
        arr = np.array([v for v in values if v is not None], dtype=float)
    if arr.size:
        q1, med, q3 = (_quantile(np.sort(arr), q) for q in (0.25, 0.5, 0.75))
    else:
        q1 = med = q3 = math.nan
    iqr = q3 - q1 if math.isfinite(q3) and math.isfinite(q1) else math.inf
    return {"median": med, "q1": q1, "q3": q3, "iqr": iqr, "missing": sum(v is None for v in values)}


def _run_one(args):
    scenario, seed = args
    try:
        trace, report = run_simulation(scenario, seed)
    except SimulationAbort as exc:
        return {"seed": seed, "aborted": True, "diagnostics": exc.diagnostics}
    ops = [e for e in trace.events if e["event"] == "operation"]
    return {"seed": seed, "aborted": False, "summary": report.summary(),
            "operations": {"attempted": len(ops), "found": sum(e["found"] for e in ops),
                           "valid": sum(bool(e.get("valid")) for e in ops if e["found"])},
            "t": trace.t, "max_discrepancy": report.max_discrepancy,
            "initial_x": trace.initial_x, "initial_u": trace.initial_u}


def run_batch(scenario: Scenario, regimes: Sequence[Regime], seeds: Sequence[int],
              workers: Optional[int] = None) -> dict:
    """Run every (regime, seed) pair and summarise per regime.

    All regimes see the same initial draws for a given seed.  A run that never
    converges counts as +inf in the convergence-time statistics.  Results are
    keyed by (regime, seed), independent of completion order.
    """
    if not seeds:
        raise ValueError("at least one seed is required")
    jobs = [(scenario.with_regime(reg), s) for reg in regimes for s in seeds]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_run_one, jobs))
    else:
        outputs = [_run_one(j) for j in jobs]
    by_key = {(job[0].controller.regime, job[1]): out for job, out in zip(jobs, outputs)}

    report = {"seeds": list(seeds), "regimes": {}}
    for reg in regimes:
        runs = [by_key[(reg, s)] for s in seeds]
        ok = [r for r in runs if not r["aborted"]]
        stats = {}
        for m in METRICS:
            vals = [r["summary"][m] for r in ok]
            stats[m] = _stats(vals, censored=(m == "convergence_time"))
        report["regimes"][reg.value] = {
            "runs": {str(r["seed"]): (r["summary"] if not r["aborted"] else {"aborted": True,
                                                                              "diagnostics": r["diagnostics"]})
                     for r in runs},
            "stats": stats,
            "aborted": len(runs) - len(ok),
            "operations": {k: sum(r["operations"][k] for r in ok) for k in ("attempted", "found", "valid")},
        }
    report["_series"] = {(reg.value, s): by_key[(reg, s)] for reg in regimes for s in seeds}
    return report
