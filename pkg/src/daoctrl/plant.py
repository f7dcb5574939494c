"""Agent dynamics, local objectives and ECE estimation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

ECE_DEADBAND = 1e-9
FD_STEP = 1e-4

DynamicsFn = Callable[[int, float, float], float]
ObjectiveFn = Callable[[int, float, float], float]


@dataclass(frozen=True)
class Objective:
    value: ObjectiveFn
    grad_u: Optional[ObjectiveFn] = None


def _paper_dynamics(i: int, x: float, coupled_u: float) -> float:
    return x * math.sin(i) + coupled_u * math.cos(i)


def _paper_objective(i: int, x: float, u: float) -> float:
    return i * math.sin(x) + u * u * math.cos(i)


def _paper_objective_grad(i: int, x: float, u: float) -> float:
    return 2.0 * u * math.cos(i)


DYNAMICS: dict[str, DynamicsFn] = {"paper-hypothetical": _paper_dynamics}
OBJECTIVES: dict[str, Objective] = {
    "paper-hypothetical": Objective(_paper_objective, _paper_objective_grad),
}


def register_dynamics(name: str, fn: DynamicsFn) -> None:
    """Register ``fn(i, x, coupled_u) -> dx/dt``; ``i`` is the 1-based agent number."""
    DYNAMICS[name] = fn


def register_objective(name: str, value: ObjectiveFn, grad_u: Optional[ObjectiveFn] = None) -> None:
    OBJECTIVES[name] = Objective(value, grad_u)


@dataclass(frozen=True)
class AgentSpec:
    """Static description of one agent.

    ``number`` is the 1-based agent number fed to the scenario functions.
    """

    number: int
    tau: float
    u_min: float = -3.0
    u_max: float = 3.0
    dynamics: str = "paper-hypothetical"
    objective: str = "paper-hypothetical"

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"agent {self.number}: tau must be positive")
        if not self.u_min < self.u_max:
            raise ValueError(f"agent {self.number}: u_min must be below u_max")
        if self.dynamics not in DYNAMICS:
            raise ValueError(f"agent {self.number}: unknown dynamics {self.dynamics!r}")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"agent {self.number}: unknown objective {self.objective!r}")

    @property
    def delta(self) -> float:
        return min(abs(self.u_min), abs(self.u_max))


@dataclass
class AgentState:
    x: float
    u: float
    d: float = 0.0
    gamma: float = 1.0
    r: float = 0.0
    r_defined: bool = False
    # previous-epoch samples; None until the first epoch primes them
    last_g: Optional[float] = None
    last_u: Optional[float] = None
    last_rtilde: float = 0.0
    # objective change over the agent's most recent epoch window
    dg: float = 0.0


class EceSample(NamedTuple):
    value: float
    defined: bool


def step_dynamics(spec: AgentSpec, state: AgentState, coupled_u: float, dt: float) -> float:
    """One explicit Euler step of the agent state."""
    f = DYNAMICS[spec.dynamics](spec.number, state.x, coupled_u)
    return state.x + dt * f


def local_objective(spec: AgentSpec, x: float, u: float) -> float:
    return OBJECTIVES[spec.objective].value(spec.number, x, u)


def objective_gradient(spec: AgentSpec, x: float, u: float, method: str = "auto",
                       h: float = FD_STEP) -> float:
    """d g / d u at (x, u).

    ``method`` is ``"auto"`` (analytic when registered), ``"analytic"`` or
    ``"fd"`` (central difference with absolute step ``h``).
    """
    obj = OBJECTIVES[spec.objective]
    if method == "analytic" or (method == "auto" and obj.grad_u is not None):
        if obj.grad_u is None:
            raise ValueError(f"objective {spec.objective!r} has no analytic gradient")
        return obj.grad_u(spec.number, x, u)
    if method not in ("auto", "fd"):
        raise ValueError(f"unknown gradient method {method!r}")
    return (obj.value(spec.number, x, u + h) - obj.value(spec.number, x, u - h)) / (2.0 * h)


def update_ece(state: AgentState, g_now: float, u_now: float,
               deadband: float = ECE_DEADBAND) -> EceSample:
    """Per-epoch ECE estimate r = (g_now - last_g) / |u_now - last_u|.

    When the control did not move by more than ``deadband`` the sample is
    flagged undefined and the previous finite ``r`` is kept.  The first call
    only primes the history.
    """
    if state.last_g is None or state.last_u is None:
        sample = EceSample(state.r, False)
        state.dg = 0.0
    else:
        du = abs(u_now - state.last_u)
        dg = g_now - state.last_g
        state.dg = dg
        if du > deadband:
            sample = EceSample(dg / du, True)
            state.r = sample.value
        else:
            sample = EceSample(state.r, False)
    state.r_defined = sample.defined
    state.last_g = g_now
    state.last_u = u_now
    return sample
