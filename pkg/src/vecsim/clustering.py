"""Vehicle-centric virtual clusters and non-conflicting resource slices.

Each vehicle is served by the top-k APs it can reach (clusters may overlap
across vehicles); downlink CTUs and AN power are then partitioned into
pairwise-disjoint slices, one per cluster, by greedy water-filling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from vecsim.mac import CtuPool


@dataclass(frozen=True)
class VirtualCluster:
    center_vehicle: int
    members: tuple[int, ...]          # AP ids, descending SNR order
    formation_slot: int

    @property
    def empty(self) -> bool:
        return len(self.members) == 0


@dataclass(frozen=True)
class SliceAssignment:
    """Per-cluster downlink CTU sets and power budgets.

    ctus maps cluster (vehicle) id to a disjoint set of CTU ids; power maps it
    to a wattage within the granting AN's budget. unsatisfied records demand
    that found no free CTUs.
    """

    ctus: dict[int, frozenset[int]]
    power_w: dict[int, float]
    unsatisfied: dict[int, int]

    def validate_disjoint(self) -> None:
        seen: set[int] = set()
        for cid in sorted(self.ctus):
            overlap = seen & self.ctus[cid]
            if overlap:
                raise AssertionError(f"slice for cluster {cid} reuses CTUs {sorted(overlap)}")
            seen |= self.ctus[cid]


def form_cluster(
    vehicle_id: int,
    candidates: list[tuple[int, float]],
    k_cluster: int,
    slot: int,
) -> VirtualCluster:
    """Top-min(k, |candidates|) APs by SNR with AP-id tiebreak.

    An empty candidate list yields an empty cluster: the vehicle is unserved
    this slot and the caller records the loss (open-loop, no retry queue).
    """
    if k_cluster < 1:
        raise ValueError("k_cluster must be >= 1")
    ranked = sorted(candidates, key=lambda pair: (-pair[1], pair[0]))
    members = tuple(ap for ap, _ in ranked[:k_cluster])
    return VirtualCluster(center_vehicle=vehicle_id, members=members, formation_slot=slot)


def allocate_slices(
    clusters: list[VirtualCluster],
    pool: CtuPool,
    demands: dict[int, int],
    an_power_budget_w: dict[int, float],
    ap_owner: dict[int, int],
) -> SliceAssignment:
    """Greedy water-filling in descending demand order (cluster-id tiebreak).

    Each cluster receives min(demand, remaining) CTUs, disjoint by
    construction, plus a share of its serving AN's power budget proportional
    to its member count among the clusters that AN serves.
    """
    order = sorted(
        (c for c in clusters if not c.empty),
        key=lambda c: (-demands.get(c.center_vehicle, 0), c.center_vehicle),
    )
    free = list(range(pool.size))
    ctus: dict[int, frozenset[int]] = {}
    unsatisfied: dict[int, int] = {}
    for cluster in order:
        want = demands.get(cluster.center_vehicle, 0)
        take = min(want, len(free))
        ctus[cluster.center_vehicle] = frozenset(free[:take])
        free = free[take:]
        if take < want:
            unsatisfied[cluster.center_vehicle] = want - take

    # Power: each cluster draws from the AN owning its best AP.
    an_members: dict[int, int] = {}
    serving_an: dict[int, int] = {}
    for cluster in order:
        an = ap_owner[cluster.members[0]]
        serving_an[cluster.center_vehicle] = an
        an_members[an] = an_members.get(an, 0) + len(cluster.members)
    power: dict[int, float] = {}
    for cluster in order:
        an = serving_an[cluster.center_vehicle]
        budget = an_power_budget_w.get(an, 0.0)
        share = len(cluster.members) / an_members[an] if an_members[an] else 0.0
        power[cluster.center_vehicle] = budget * share

    assignment = SliceAssignment(ctus=ctus, power_w=power, unsatisfied=unsatisfied)
    assignment.validate_disjoint()
    return assignment
