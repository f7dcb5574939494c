"""DAO-style integrated control of heterogeneous networked agents."""
from .control import ControllerParams, Regime
from .daoop import OperationParams, OperationResult, brute_force, operate, tolerance, validate
from .engine import EvalReport, Scenario, SimConfig, SimTrace, evaluate, run_batch, run_simulation
from .plant import AgentSpec, AgentState
from .scenario import load_scenario, paper_scenario
from .topology import Subgraph, Topology

__all__ = [
    "AgentSpec", "AgentState", "ControllerParams", "EvalReport", "OperationParams", "OperationResult",
    "Regime", "Scenario", "SimConfig", "SimTrace", "Subgraph", "Topology", "brute_force", "evaluate",
    "load_scenario", "operate", "paper_scenario", "run_batch", "run_simulation", "tolerance", "validate",
]
