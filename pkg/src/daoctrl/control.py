"""Saturated consensus control, PoS voting weights and incentive updates."""
from __future__ import annotations

import enum
import logging
import math
import sys
from dataclasses import dataclass, replace
from typing import Iterable, NamedTuple, Optional, Sequence

logger = logging.getLogger(__name__)

WEIGHT_CLAMP = 1e6
# largest double strictly below 2
_MULT_MAX = math.nextafter(2.0, 0.0)


class Regime(str, enum.Enum):
    FIXED_GAIN = "fixed-gain"
    POS = "pos"
    DAO_INCENTIVE = "dao"
    DAO_WITH_OPERATION = "proposed"

    @classmethod
    def parse(cls, name: str) -> "Regime":
        key = name.strip().lower().replace("_", "-")
        aliases = {
            "fixedgain": cls.FIXED_GAIN, "fixed": cls.FIXED_GAIN, "decentralized": cls.FIXED_GAIN,
            "dao-incentive": cls.DAO_INCENTIVE, "daoincentive": cls.DAO_INCENTIVE,
            "dao-without-operation": cls.DAO_INCENTIVE,
            "dao-with-operation": cls.DAO_WITH_OPERATION,
            "daoincentivewithoperation": cls.DAO_WITH_OPERATION,
        }
        for member in cls:
            if member.value == key:
                return member
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown regime {name!r}; choose from {[m.value for m in cls]}")

    @property
    def uses_voting(self) -> bool:
        return self is not Regime.FIXED_GAIN

    @property
    def uses_incentive(self) -> bool:
        return self in (Regime.DAO_INCENTIVE, Regime.DAO_WITH_OPERATION)

    @property
    def uses_operation(self) -> bool:
        return self is Regime.DAO_WITH_OPERATION


@dataclass(frozen=True)
class ControllerParams:
    regime: Regime = Regime.DAO_WITH_OPERATION
    alpha_fixed: float = 2.0
    beta_fixed: float = 1.0
    k1: float = 2.0
    k2: float = 5.0
    k3: float = 0.3
    k4: float = 0.1
    delta_override: Optional[float] = None
    tau_scaled_consensus: bool = False
    weight_clamp: float = WEIGHT_CLAMP

    def __post_init__(self):
        for name in ("alpha_fixed", "beta_fixed", "k1", "k2", "k3", "k4", "weight_clamp"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.delta_override is not None and not self.delta_override > 0:
            raise ValueError("delta_override must be positive")

    def with_regime(self, regime: Regime) -> "ControllerParams":
        return replace(self, regime=regime)


class VotingWeights(NamedTuple):
    alpha: float
    beta: float
    rtilde: float
    clamped: bool = False


class ControlOutput(NamedTuple):
    u: float
    d: float
    consensus: float
    alpha: float
    beta: float


class IncentiveOutput(NamedTuple):
    gamma: float
    h: float
    multiplier: float
    consensus_reward: float
    neighbor_support: float


class ControlAbort(ArithmeticError):
    """A control computation produced a non-finite value."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


def saturate(u: float, delta: float) -> float:
    """sgn(u) * min(|u|, delta)."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    return math.copysign(min(abs(u), delta), u) if u != 0 else 0.0


def local_disagreement(i: int, neighbors: Iterable[tuple[int, float]], r: Sequence[float]) -> float:
    """Sum of a_ij * (r_i - (r_i + r_j) / 2) over the given neighbours."""
    ri = r[i]
    return sum(a * (ri - r[j]) / 2.0 for j, a in neighbors)


def consensus_term(i: int, neighbors: Iterable[tuple[int, float]], r: Sequence[float]) -> float:
    ri = r[i]
    return sum(a * (ri - r[j]) for j, a in neighbors)


def _exp(z: float) -> float:
    return math.exp(z) if z < 709.0 else math.inf


def voting_weights(gamma: float, rtilde: float, k1: float, k2: float,
                   clamp: float = WEIGHT_CLAMP) -> VotingWeights:
    """alpha = gamma e^{k1 rtilde}, beta = gamma e^{-k2 rtilde}, kept in [1/clamp, clamp]."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    alpha = gamma * _exp(k1 * rtilde)
    beta = gamma * _exp(-k2 * rtilde)
    lo = 1.0 / clamp
    clamped = not (lo <= alpha <= clamp and lo <= beta <= clamp)
    if clamped:
        logger.debug("voting weights clamped (gamma=%g, rtilde=%g)", gamma, rtilde)
        alpha = min(max(alpha, lo), clamp)
        beta = min(max(beta, lo), clamp)
    return VotingWeights(alpha, beta, rtilde, clamped)


def control_step(d: float, grad: float, consensus: float, alpha: float, beta: float,
                 delta: float, dt_epoch: float) -> ControlOutput:
    """Saturated control law with Euler-integrated stabiliser.

    u = sat(-d - alpha * grad - beta * C), d' = d + dt_epoch * alpha * beta * C,
    where C is the consensus term over the active neighbours.
    """
    inner = -d - alpha * grad - beta * consensus
    d_new = d + dt_epoch * alpha * beta * consensus
    if not (math.isfinite(inner) and math.isfinite(d_new)):
        raise ControlAbort(
            "non-finite control value",
            {"d": d, "grad": grad, "consensus": consensus, "alpha": alpha, "beta": beta,
             "inner": inner, "d_new": d_new},
        )
    return ControlOutput(saturate(inner, delta), d_new, consensus, alpha, beta)


def incentive_multiplier(h: float) -> float:
    """2 arctan(h) / pi + 1, evaluated so the result stays inside (0, 2)."""
    if h < 0:
        # 1 - 2 atan|h| / pi == 2 atan(1/|h|) / pi, which cannot round to 0
        m = 2.0 * math.atan(-1.0 / h) / math.pi
        return m if m > 0 else math.ulp(0.0)
    return min(2.0 * math.atan(h) / math.pi + 1.0, _MULT_MAX)


def incentive_update(gamma: float, rtilde_now: float, rtilde_old: float,
                     neighbor_deltas: Iterable[tuple[float, float]], k3: float, k4: float) -> IncentiveOutput:
    """gamma * (2 arctan(h)/pi + 1) with h = k3 (rtilde - rtilde_old) + k4 sum a_ij (g_j - g_j_old).

    ``neighbor_deltas`` holds ``(a_ij, g_j - g_j_old)`` pairs.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    reward = k3 * (rtilde_now - rtilde_old)
    support = k4 * sum(a * dg for a, dg in neighbor_deltas)
    h = reward + support
    m = incentive_multiplier(h)
    new_gamma = gamma * m
    if new_gamma <= 0.0:
        new_gamma = math.ulp(0.0)
    elif new_gamma == math.inf:
        new_gamma = sys.float_info.max
    return IncentiveOutput(new_gamma, h, m, reward, support)
