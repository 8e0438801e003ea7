"""Message latency: per-hop retransmission cost plus queue handling.

A hop with success probability p takes an expected t_slot / p of air time
(geometric retries); relays add a fixed per-hop processing delay.  Total
latency is propagation plus the dwell time in the RSU queue.
"""

from __future__ import annotations

from dataclasses import dataclass

from .channel import Link, RadioParams, p_hop
from .queueing import QueueModel, mean_dwell

__all__ = [
    "LatencyBreakdown",
    "hop_latency",
    "propagation_latency",
    "total_latency",
]

# Success probabilities below this are treated as outage: latency is capped
# and the hop is flagged rather than returning an astronomic float.
P_HOP_FLOOR = 1e-12


@dataclass(frozen=True)
class LatencyBreakdown:
    propagation_s: float
    handling_s: float
    total_s: float
    n_hops: int
    t_slot_s: float
    t_proc_s: float
    capped_hops: int = 0

    def __post_init__(self):
        if self.propagation_s < 0 or self.handling_s < 0:
            raise ValueError("latency components must be nonnegative")


def hop_latency(d: float, rp: RadioParams, t_slot: float) -> float:
    """Expected air time of one hop: t_slot / p_hop(d), capped at outage."""
    if t_slot <= 0:
        raise ValueError("t_slot must be positive")
    p = max(p_hop(d, rp), P_HOP_FLOOR)
    return t_slot / p


def hop_is_capped(d: float, rp: RadioParams) -> bool:
    """True when the hop success probability underflowed the outage floor."""
    return p_hop(d, rp) < P_HOP_FLOOR


def propagation_latency(
    link: Link, rp: RadioParams, t_slot: float, t_proc: float
) -> float:
    """Multi-hop propagation: hop air times plus per-relay processing."""
    if t_proc < 0:
        raise ValueError("t_proc must be nonnegative")
    trans = sum(hop_latency(d, rp, t_slot) for d in link.hop_distances)
    return trans + (link.n_hops - 1) * t_proc


def total_latency(
    link: Link,
    qm: QueueModel,
    rp: RadioParams,
    t_slot: float,
    t_proc: float,
) -> LatencyBreakdown:
    """Propagation over the link plus mean queue dwell at the RSU."""
    prop = propagation_latency(link, rp, t_slot, t_proc)
    handling = mean_dwell(qm)
    capped = sum(1 for d in link.hop_distances if hop_is_capped(d, rp))
    return LatencyBreakdown(
        propagation_s=prop,
        handling_s=handling,
        total_s=prop + handling,
        n_hops=link.n_hops,
        t_slot_s=t_slot,
        t_proc_s=t_proc,
        capped_hops=capped,
    )
