"""Millimeter-wave link model: path loss, hop success, multi-hop reliability.

Transmissions succeed when the received SNR clears a threshold under
log-normal shadowing; interference is ignored (beamformed links).  A link is
an ordered chain of hop distances from a source vehicle, possibly relayed by
other vehicles, to its RSU.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RadioParams",
    "Link",
    "path_loss_db",
    "noise_power_dbm",
    "psi",
    "p_hop",
    "link_reliability",
    "sample_link",
]

# Urban mmWave fit: 69.6 dB intercept, 20.9 dB/decade slope.
_PL_INTERCEPT_DB = 69.6
_PL_SLOPE_DB = 20.9

HOP_MODES = ("ppp-relay", "uniform-hops")


@dataclass(frozen=True)
class RadioParams:
    """Link-budget parameters shared by all hops."""

    p_tx_dbm: float = 30.0
    theta_db: float = 5.0
    n0_dbm_hz: float = -174.0
    bandwidth_hz: float = 1e9
    sigma_db: float = 8.0

    def __post_init__(self):
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be positive")
        if self.sigma_db <= 0:
            raise ValueError("sigma_db must be positive")


@dataclass(frozen=True)
class Link:
    """Hop-distance chain from source vehicle to RSU."""

    hop_distances: tuple[float, ...]

    def __post_init__(self):
        if len(self.hop_distances) < 1:
            raise ValueError("a link needs at least one hop")
        if any(d <= 0 for d in self.hop_distances):
            raise ValueError("hop distances must be positive")

    @property
    def n_hops(self) -> int:
        return len(self.hop_distances)


def path_loss_db(d: float) -> float:
    """Deterministic path loss in dB at distance d meters."""
    if d <= 0:
        raise ValueError("distance must be positive")
    return _PL_INTERCEPT_DB + _PL_SLOPE_DB * math.log10(d)


def noise_power_dbm(rp: RadioParams) -> float:
    """Total noise power over the transmission bandwidth, in dBm."""
    return rp.n0_dbm_hz + 10.0 * math.log10(rp.bandwidth_hz)


def psi(d: float, rp: RadioParams) -> float:
    """Shadowing margin in dB: link budget left after threshold and path loss."""
    return rp.p_tx_dbm - rp.theta_db - noise_power_dbm(rp) - path_loss_db(d)


def p_hop(d: float, rp: RadioParams) -> float:
    """One-hop success probability under N(0, sigma^2) shadowing."""
    return 0.5 * (1.0 + math.erf(psi(d, rp) / (math.sqrt(2.0) * rp.sigma_db)))


def link_reliability(link: Link, rp: RadioParams) -> float:
    """End-to-end success probability: product of per-hop probabilities."""
    out = 1.0
    for d in link.hop_distances:
        out *= p_hop(d, rp)
    return out


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_link(
    rho_v: float,
    coverage_l: float,
    mode: str = "ppp-relay",
    seed: int | np.random.Generator = 0,
    n_max: int = 5,
) -> Link:
    """Draw a random multi-hop link for a vehicle on an RSU's road segment.

    ``ppp-relay``: other vehicles form a 1-D Poisson process of intensity
    ``rho_v`` on the segment; the message hops through every vehicle between
    the uniformly placed source and the RSU, so hop lengths are the process
    spacings.  An empty stretch degenerates to one direct hop.

    ``uniform-hops``: hop count uniform on {1..n_max}, each hop length
    uniform on (0, coverage_l); kept as a sensitivity-analysis alternative.
    """
    if rho_v <= 0:
        raise ValueError("rho_v must be positive")
    if coverage_l <= 0:
        raise ValueError("coverage_l must be positive")
    rng = _as_rng(seed)

    if mode == "ppp-relay":
        # RSU at 0, source uniform on (0, L]; relays are the PPP points
        # strictly between them, traversed in descending position.
        src = rng.uniform(0.0, coverage_l)
        src = max(src, 1e-9)
        n_veh = rng.poisson(rho_v * src)
        if n_veh > 0:
            relays = np.sort(rng.uniform(0.0, src, size=n_veh))[::-1]
            positions = np.concatenate(([src], relays, [0.0]))
        else:
            positions = np.array([src, 0.0])
        hops = -np.diff(positions)
        hops = hops[hops > 0.0]
        if hops.size == 0:
            hops = np.array([src])
        return Link(hop_distances=tuple(float(h) for h in hops))

    if mode == "uniform-hops":
        if n_max < 1:
            raise ValueError("n_max must be >= 1")
        n = int(rng.integers(1, n_max + 1))
        dists = rng.uniform(0.0, coverage_l, size=n)
        dists = np.maximum(dists, 1e-9)
        return Link(hop_distances=tuple(float(d) for d in dists))

    raise ValueError(f"unknown hop mode: {mode!r}")
