"""Service slices and resource-block reallocation across one provider's RSUs.

Traffic is classed into state-report, event-driven and entertainment slices.
Each RSU first sizes its local block allocation against the per-class latency
target, releasing surplus blocks into the provider's virtual pool; the pool
is then granted to RSUs in violation order; finally every RSU's handling
latency is recomposed as the block-weighted mix of the local queue and the
provider-granted queue (which carries a round-trip offset).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .latency import LatencyBreakdown

__all__ = [
    "SliceKind",
    "ServiceSliceClass",
    "LinkStats",
    "SlicingParams",
    "SharingMatrix",
    "RsuState",
    "SlicingResult",
    "AllocationError",
    "mm1_handling",
    "composite_handling_latency",
    "sample_slice_tags",
    "grant_policy",
    "run_slicing_algorithm",
]

CLASS_ORDER = ("SRSS", "EDSS", "EASS")


class SliceKind(Enum):
    SRSS = "SRSS"
    EDSS = "EDSS"
    EASS = "EASS"


class AllocationError(Exception):
    pass


@dataclass(frozen=True)
class ServiceSliceClass:
    """One service slice: arrival rate, handling rate, latency target, slot."""

    kind: SliceKind
    lambda_a: float
    mu_s: float
    t_req: float
    t_slot: float

    def __post_init__(self):
        if self.lambda_a < 0:
            raise ValueError("lambda_a must be nonnegative")
        if self.mu_s <= 0 or self.t_req <= 0 or self.t_slot <= 0:
            raise ValueError("mu_s, t_req and t_slot must be positive")


@dataclass(frozen=True)
class LinkStats:
    """Per-RSU link summary: sum of 1/p_hop over hops, and the hop count."""

    inv_p_sum: float
    n_hops: int
    reliability: float = 1.0

    def propagation(self, t_slot: float, t_proc: float) -> float:
        return t_slot * self.inv_p_sum + (self.n_hops - 1) * t_proc


@dataclass(frozen=True)
class SlicingParams:
    """Knobs of the reallocation algorithm."""

    mu0: float
    a_max: float
    r2i_s: float = 5e-4
    t_proc_s: float = 1e-3
    orientation: str = "lend-cap"
    grant_limit_factor: int = 4

    def __post_init__(self):
        if self.mu0 <= 0:
            raise ValueError("mu0 must be positive")
        if not 0.0 <= self.a_max < 1.0:
            raise ValueError("a_max must lie in [0, 1)")
        if self.orientation not in ("lend-cap", "local-use-cap"):
            raise ValueError(f"unknown a_max orientation: {self.orientation!r}")


@dataclass
class RsuState:
    """Block bookkeeping for one RSU through the algorithm."""

    rb_total: int
    rb_local_used: int = 0
    rb_rem: int = 0
    rb_req: int = 0
    rb_granted: int = 0
    rb_idle: int = 0

    def __post_init__(self):
        if self.rb_total < 1:
            raise ValueError("every RSU needs at least one block")


@dataclass(frozen=True)
class SharingMatrix:
    """Row k: where RSU k's serving blocks come from, as fractions.

    ``a[k][k]`` is the fraction of k's own blocks kept for local slices;
    ``a[k][g]`` is the fraction of RSU g's blocks granted to k.
    """

    a: np.ndarray
    a_max: float

    def validate(self, orientation: str = "lend-cap") -> None:
        m = self.a
        n = m.shape[0]
        if m.shape != (n, n):
            raise AllocationError("sharing matrix must be square")
        if np.any(m < 0.0) or np.any(m > 1.0):
            raise AllocationError("matrix entries must lie in [0, 1]")
        off = m - np.diag(np.diag(m))
        if np.any(off >= 1.0):
            raise AllocationError("off-diagonal entries must lie in [0, 1)")
        # Lending bound: under lend-cap an RSU keeps at least the (1 - a_max)
        # fraction of its own blocks; under local-use-cap it may retain at
        # most the a_max fraction.
        diag = np.diag(m)
        if orientation == "lend-cap":
            if np.any(diag < (1.0 - self.a_max) - 1e-12):
                raise AllocationError("an RSU lent beyond the a_max bound")
        else:
            if np.any(diag > self.a_max + 1e-12):
                raise AllocationError("an RSU retains beyond the a_max bound")
        col = off.sum(axis=0) + diag
        if np.any(col > 1.0 + 1e-12):
            raise AllocationError("a column allocates more blocks than exist")


@dataclass(frozen=True)
class SlicingResult:
    matrix: SharingMatrix
    breakdowns: tuple[LatencyBreakdown, ...]
    class_latency: tuple[tuple[float, ...], ...]
    class_alloc: tuple[tuple[tuple[int, int], ...], ...]
    rsus: tuple[RsuState, ...]
    satisfied: tuple[bool, ...]
    infeasible: bool
    pool_leftover: int


def mm1_handling(lam: float, blocks: int, mu0: float) -> float:
    """Mean dwell of a block pool fed by Poisson arrivals.

    With exponential inter-arrivals the general-arrival dwell formula
    1/(mu (1 - delta)) collapses to 1/(blocks*mu0 - lam); an overloaded or
    empty pool yields an infinite dwell.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if lam == 0.0:
        return 0.0
    mu = blocks * mu0
    if mu <= lam:
        return math.inf
    return 1.0 / (mu - lam)


def composite_handling_latency(
    k: int, matrix: SharingMatrix, ts_local: float, ts_inp: float
) -> float:
    """Block-share weighted handling latency of RSU k (local vs provider)."""
    row = matrix.a[k]
    total = row.sum()
    if total <= 0:
        raise AllocationError(f"RSU {k} has an all-zero sharing row")
    w_local = row[k] / total
    return w_local * ts_local + (1.0 - w_local) * ts_inp


def _split_handling(
    lam: float, b: int, g: int, mu_s: float, r2i: float
) -> tuple[float, float, float]:
    """(composite, ts_local, ts_inp) for a class on b local + g granted blocks.

    Traffic splits in proportion to block shares; granted blocks carry the
    provider round trip.
    """
    if lam == 0.0:
        return 0.0, 0.0, 0.0
    if b + g == 0:
        return math.inf, math.inf, math.inf
    if g == 0:
        t = mm1_handling(lam, b, mu_s)
        return t, t, math.inf
    if b == 0:
        t = mm1_handling(lam, g, mu_s) + r2i
        return t, math.inf, t
    share = b / (b + g)
    ts_local = mm1_handling(lam * share, b, mu_s)
    ts_inp = mm1_handling(lam * (1.0 - share), g, mu_s) + r2i
    return share * ts_local + (1.0 - share) * ts_inp, ts_local, ts_inp


def _class_total(
    cls: ServiceSliceClass, ls: LinkStats, b: int, g: int, p: SlicingParams
) -> float:
    prop = ls.propagation(cls.t_slot, p.t_proc_s)
    comp, _, _ = _split_handling(cls.lambda_a, b, g, cls.mu_s, p.r2i_s)
    return prop + comp


def sample_slice_tags(
    n: int, proportions: tuple[float, float, float], seed
) -> np.ndarray:
    """Tag a stream of n arrivals with slice kinds by multinomial thinning."""
    props = np.asarray(proportions, dtype=float)
    if np.any(props < 0) or props.sum() <= 0:
        raise ValueError("proportions must be nonnegative with positive sum")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    kinds = np.array([SliceKind.SRSS, SliceKind.EDSS, SliceKind.EASS])
    idx = rng.choice(3, size=n, p=props / props.sum())
    return kinds[idx]


def grant_policy(pool: int, deficits: list[tuple[int, int, float]]) -> list[tuple[int, int]]:
    """Plan pool grants: largest latency violation first, ties by RSU index.

    ``deficits`` holds (rsu_index, blocks_needed, violation_seconds) rows;
    partial grants are allowed when the pool runs dry.
    """
    if pool < 0:
        raise ValueError("pool must be nonnegative")
    plan: list[tuple[int, int]] = []
    remaining = pool
    for idx, need, _viol in sorted(deficits, key=lambda r: (-r[2], r[0])):
        if remaining == 0:
            break
        take = min(need, remaining)
        if take > 0:
            plan.append((idx, take))
            remaining -= take
    return plan


def _phase1_local(
    classes: list[ServiceSliceClass],
    ls: LinkStats,
    rb_total: int,
    p: SlicingParams,
) -> tuple[dict[SliceKind, int], list[ServiceSliceClass]]:
    """Size local allocations per class (priority order); returns also the
    classes that the local budget could not satisfy."""
    budget = rb_total
    if p.orientation == "local-use-cap":
        budget = int(math.floor(p.a_max * rb_total))
    alloc: dict[SliceKind, int] = {}
    unsatisfied: list[ServiceSliceClass] = []
    remaining = budget
    ordered = sorted(classes, key=lambda c: CLASS_ORDER.index(c.kind.value))
    for cls in ordered:
        if cls.lambda_a == 0.0:
            alloc[cls.kind] = 0
            continue
        if remaining == 0:
            alloc[cls.kind] = 0
            unsatisfied.append(cls)
            continue
        if _class_total(cls, ls, remaining, 0, p) <= cls.t_req:
            # shed blocks until the target is first violated, keep the last
            # satisfying count
            b = remaining
            while b > 1 and _class_total(cls, ls, b - 1, 0, p) <= cls.t_req:
                b -= 1
        else:
            b = remaining
            unsatisfied.append(cls)
        alloc[cls.kind] = b
        remaining -= b
    return alloc, unsatisfied


def _deficit_size(
    unsatisfied: list[ServiceSliceClass],
    alloc: dict[SliceKind, int],
    ls: LinkStats,
    p: SlicingParams,
    rb_total: int,
) -> tuple[int, bool]:
    """Grants needed to satisfy the remaining classes; flags infeasibility."""
    total = 0
    infeasible = False
    limit = p.grant_limit_factor * rb_total
    for cls in unsatisfied:
        b = alloc[cls.kind]
        g = 0
        best_t = _class_total(cls, ls, b, 0, p)
        while best_t > cls.t_req and g < limit:
            t_next = _class_total(cls, ls, b, g + 1, p)
            if t_next >= best_t and math.isfinite(best_t):
                break  # extra provider blocks no longer help
            g += 1
            best_t = t_next
        if best_t > cls.t_req:
            infeasible = True
        total += g
    return total, infeasible


def run_slicing_algorithm(
    rsus: list[RsuState],
    slices: list[list[ServiceSliceClass]],
    links: list[LinkStats],
    params: SlicingParams,
) -> SlicingResult:
    """Reallocate resource blocks across one provider's RSUs.

    Phase 1 sizes every RSU's local allocation against its per-class latency
    targets (shedding surplus into the pool, bounded by the lending cap);
    phase 2 grants the pool to deficit RSUs, worst violation first; phase 3
    recomposes each RSU's handling latency from the final sharing matrix.
    """
    n = len(rsus)
    if not (n == len(slices) == len(links)):
        raise ValueError("rsus, slices and links must align")
    if n == 0:
        raise ValueError("need at least one RSU")

    allocs: list[dict[SliceKind, int]] = []
    unsat: list[list[ServiceSliceClass]] = []
    states = [RsuState(rb_total=r.rb_total) for r in rsus]

    pool = 0
    donors: list[tuple[int, int]] = []
    deficits: list[tuple[int, int, float]] = []
    sizing_infeasible = False

    for k, (st, cls_k, ls) in enumerate(zip(states, slices, links)):
        alloc, missing = _phase1_local(cls_k, ls, st.rb_total, params)
        kept = sum(alloc.values())
        if not missing:
            # donor side: retention floor caps how much leaves the RSU
            floor_keep = st.rb_total - int(math.floor(params.a_max * st.rb_total))
            extra = max(0, floor_keep - kept)
            for _ in range(extra):
                live = [c for c in cls_k if c.lambda_a > 0]
                if not live:
                    break
                worst = max(
                    live,
                    key=lambda c: _split_handling(
                        c.lambda_a, alloc[c.kind], 0, c.mu_s, params.r2i_s
                    )[0],
                )
                alloc[worst.kind] += 1
                kept += 1
            st.rb_rem = st.rb_total - kept
            st.rb_idle = 0
            if st.rb_rem > 0:
                donors.append((k, st.rb_rem))
                pool += st.rb_rem
        else:
            need, bad = _deficit_size(missing, alloc, ls, params, st.rb_total)
            sizing_infeasible = sizing_infeasible or bad
            st.rb_req = need
            st.rb_idle = st.rb_total - kept  # capped retention never pools
            viol = 0.0
            for cls in missing:
                t = _class_total(cls, ls, alloc[cls.kind], 0, params)
                v = (t - cls.t_req) if math.isfinite(t) else math.inf
                viol = max(viol, v)
            deficits.append((k, need, viol))
        st.rb_local_used = kept
        allocs.append(alloc)
        unsat.append(missing)

    plan = grant_policy(pool, deficits)
    grants = dict(plan)
    pool_left = pool - sum(grants.values())

    # attribute granted blocks to donors in index order
    a = np.zeros((n, n))
    donor_queue = [(g, rem) for g, rem in donors]
    granted_from: dict[int, list[tuple[int, int]]] = {}
    for k in sorted(grants):
        take = grants[k]
        sources = []
        while take > 0 and donor_queue:
            g_idx, avail = donor_queue[0]
            use = min(avail, take)
            sources.append((g_idx, use))
            take -= use
            if use == avail:
                donor_queue.pop(0)
            else:
                donor_queue[0] = (g_idx, avail - use)
        granted_from[k] = sources

    infeasible = sizing_infeasible
    class_latency: list[tuple[float, ...]] = []
    class_alloc: list[tuple[tuple[int, int], ...]] = []
    breakdowns: list[LatencyBreakdown] = []
    satisfied: list[bool] = []

    for k, (st, cls_k, ls) in enumerate(zip(states, slices, links)):
        alloc = allocs[k]
        got = grants.get(k, 0)
        st.rb_granted = got
        # spread granted blocks over the unsatisfied classes in priority order
        g_alloc = {c.kind: 0 for c in cls_k}
        rem = got
        for cls in sorted(unsat[k], key=lambda c: CLASS_ORDER.index(c.kind.value)):
            while rem > 0:
                t_now = _class_total(cls, ls, alloc[cls.kind], g_alloc[cls.kind], params)
                if t_now <= cls.t_req:
                    break
                g_alloc[cls.kind] += 1
                rem -= 1
        if rem > 0 and unsat[k]:
            # residual grants go to the worst remaining class
            worst = max(
                unsat[k],
                key=lambda c: _class_total(c, ls, alloc[c.kind], g_alloc[c.kind], params),
            )
            g_alloc[worst.kind] += rem
            rem = 0

        a[k, k] = st.rb_local_used / st.rb_total
        for g_idx, cnt in granted_from.get(k, []):
            a[k, g_idx] += cnt / states[g_idx].rb_total

        lam_tot = sum(c.lambda_a for c in cls_k)
        per_cls_t = []
        ok = True
        handling_acc = 0.0
        prop_acc = 0.0
        for cls in cls_k:
            b, g = alloc[cls.kind], g_alloc[cls.kind]
            comp, _, _ = _split_handling(cls.lambda_a, b, g, cls.mu_s, params.r2i_s)
            prop = ls.propagation(cls.t_slot, params.t_proc_s)
            total = prop + comp
            per_cls_t.append(total)
            if cls.lambda_a > 0:
                if total > cls.t_req:
                    ok = False
                w = cls.lambda_a / lam_tot
                handling_acc += w * comp
                prop_acc += w * prop
        if not ok and st.rb_req > 0 and got >= st.rb_req:
            infeasible = True  # fully served yet still violating
        satisfied.append(ok)
        class_latency.append(tuple(per_cls_t))
        class_alloc.append(tuple((alloc[c.kind], g_alloc[c.kind]) for c in cls_k))
        breakdowns.append(
            LatencyBreakdown(
                propagation_s=prop_acc,
                handling_s=handling_acc if math.isfinite(handling_acc) else math.inf,
                total_s=prop_acc + handling_acc,
                n_hops=ls.n_hops,
                t_slot_s=cls_k[0].t_slot if cls_k else 0.0,
                t_proc_s=params.t_proc_s,
            )
        )

    matrix = SharingMatrix(a=a, a_max=params.a_max)
    matrix.validate(params.orientation)
    # any deficit RSU left short of its sized need marks the run infeasible
    for k, need, _ in deficits:
        if grants.get(k, 0) < need:
            infeasible = True

    return SlicingResult(
        matrix=matrix,
        breakdowns=tuple(breakdowns),
        class_latency=tuple(class_latency),
        class_alloc=tuple(class_alloc),
        rsus=tuple(states),
        satisfied=tuple(satisfied),
        infeasible=infeasible,
        pool_leftover=pool_left,
    )
