"""Reliability/latency utilities and their Euclidean-norm joint score.

Each utility is an exponential of the relative slack against its threshold,
so a value of 1 marks the threshold exactly met and the joint score is the
norm of the latency utility and the weighted reliability utility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "JointMetricParams",
    "reliability_utility",
    "latency_utility",
    "joint_function",
]


@dataclass(frozen=True)
class JointMetricParams:
    omega: float = 10.0
    a_p: float = 1.0
    a_t: float = 1.0
    p_req: float = 0.99
    t_req: float = 0.010

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError("omega must be nonnegative")
        if not 0.0 < self.p_req <= 1.0:
            raise ValueError("p_req must lie in (0, 1]")
        if self.t_req <= 0:
            raise ValueError("t_req must be positive")


def reliability_utility(p: float, params: JointMetricParams) -> float:
    """exp(a_p (P - P_req) / P_req); at least 1 exactly when P meets P_req."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("reliability must lie in [0, 1]")
    return math.exp(params.a_p * (p - params.p_req) / params.p_req)


def latency_utility(t: float, params: JointMetricParams) -> float:
    """exp(a_t (T_req - T) / T_req); decays as latency exceeds the target."""
    if t < 0:
        raise ValueError("latency must be nonnegative")
    if math.isinf(t):
        return 0.0
    return math.exp(params.a_t * (params.t_req - t) / params.t_req)


def joint_function(i_t: float, i_p: float, omega: float) -> float:
    """Euclidean norm of the latency utility and omega-weighted reliability.

    A zero utility is accepted as the degenerate limit of an unbounded
    latency (or zero reliability); negatives are rejected.
    """
    if i_t < 0 or i_p < 0:
        raise ValueError("utilities must be positive")
    return math.hypot(i_t, omega * i_p)
