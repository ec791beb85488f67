"""Pluggable peer-selection (choke) policies.

Each policy is a PolicySpec: how many regular and optimistic upload slots a
peer runs, how often each kind is re-evaluated, and the ordering criterion
used to fill regular slots in leecher and seed state. Four built-ins are
registered:

    name    regular      optimistic   leecher order           seed order
    bt      3 / 10 s     1 / 30 s     fastest uploaders       fastest downloaders
    sbnp    2 / 10 s     2 / 30 s     fastest uploaders       recently unchoked first
    sonp    1 / 10 s     3 / 20 s     fastest uploaders       recently unchoked first
    srnp    3 / 10 s     1 / 30 s     starved-then-fastest    recently unchoked first

Regular selection excludes peers that currently snub the selector and peers
already holding one of its optimistic slots; optimistic selection ignores
snub markings (the recovery path) and excludes current regular targets, so
the served set stays distinct. All residual ties break uniformly at random
from the run's RNG stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .swarm import NEVER, PeerRecord, Swarm, SwarmError

SNUB_TIMEOUT = 60.0


class Criterion(Enum):
    """Strict weak ordering over unchoke candidates, best first."""

    # descending rate at which the candidate uploads to the selector
    FASTEST_UPLOADERS = "fastest_uploaders"
    # descending rate at which the selector uploads to the candidate
    FASTEST_DOWNLOADERS = "fastest_downloaders"
    # candidates the selector unchoked most recently first; rate to them breaks ties
    RECENTLY_UNCHOKED = "recently_unchoked"
    # candidates longest without receiving data first; their upload rate breaks ties
    STARVED_THEN_FASTEST = "starved_then_fastest"


@dataclass(frozen=True)
class PolicySpec:
    name: str
    regular_slots: int
    optimistic_slots: int
    regular_period: float
    optimistic_period: float
    leecher_order: Criterion
    seed_order: Criterion

    @property
    def total_slots(self) -> int:
        return self.regular_slots + self.optimistic_slots


BUILTIN_POLICIES: dict[str, PolicySpec] = {
    "bt": PolicySpec("bt", 3, 1, 10.0, 30.0,
                     Criterion.FASTEST_UPLOADERS, Criterion.FASTEST_DOWNLOADERS),
    "sbnp": PolicySpec("sbnp", 2, 2, 10.0, 30.0,
                       Criterion.FASTEST_UPLOADERS, Criterion.RECENTLY_UNCHOKED),
    "sonp": PolicySpec("sonp", 1, 3, 10.0, 20.0,
                       Criterion.FASTEST_UPLOADERS, Criterion.RECENTLY_UNCHOKED),
    "srnp": PolicySpec("srnp", 3, 1, 10.0, 30.0,
                       Criterion.STARVED_THEN_FASTEST, Criterion.RECENTLY_UNCHOKED),
}


def get_policy(name: str) -> PolicySpec:
    try:
        return BUILTIN_POLICIES[name.lower()]
    except KeyError:
        raise ValueError(
            f"unknown policy {name!r}; choose from {', '.join(sorted(BUILTIN_POLICIES))}"
        ) from None


# -- snub rule ---------------------------------------------------------------


def snub_check(local: PeerRecord, remote_id: int, t: float, timeout: float = SNUB_TIMEOUT) -> bool:
    """True iff remote has starved local for strictly more than ``timeout``.

    Only meaningful for pairs local was downloading from; a pair with no
    received data yet is never snubbed.
    """
    last = local.last_received_from.get(remote_id)
    return last is not None and (t - last) > timeout


def is_all_snubbed(local: PeerRecord, t: float, timeout: float = SNUB_TIMEOUT) -> bool:
    """True iff every remote local was downloading from now snubs it."""
    sources = local.last_received_from
    if local.is_seed or not sources:
        return False
    return all(t - last > timeout for last in sources.values())


# -- candidate ranking -------------------------------------------------------


def rank_candidates(
    local: PeerRecord,
    candidates: list[PeerRecord],
    criterion: Criterion,
    t: float,
    rng,
) -> list[PeerRecord]:
    """Order candidates best-first under a criterion; full ties randomized.

    One uniform draw is attached per candidate so tied groups come out in
    uniformly random order, deterministically for a given stream state.
    """
    lid = local.peer_id
    decorated = []
    if criterion is Criterion.FASTEST_UPLOADERS:
        for c in candidates:
            decorated.append((-local.received_rate(c.peer_id, t), rng.random(), c))
    elif criterion is Criterion.FASTEST_DOWNLOADERS:
        for c in candidates:
            decorated.append((-c.received_rate(lid, t), rng.random(), c))
    elif criterion is Criterion.RECENTLY_UNCHOKED:
        for c in candidates:
            ts = c.last_unchoked_by.get(lid, NEVER)
            decorated.append((-ts, -c.received_rate(lid, t), rng.random(), c))
    elif criterion is Criterion.STARVED_THEN_FASTEST:
        for c in candidates:
            decorated.append(
                (c.last_received_at, -local.received_rate(c.peer_id, t), rng.random(), c)
            )
    else:  # pragma: no cover
        raise ValueError(f"unhandled criterion {criterion}")
    decorated.sort(key=lambda item: item[:-1])
    return [item[-1] for item in decorated]


def _iter_neighbors(local: PeerRecord, swarm: Swarm):
    peers = swarm.peers
    for nid in sorted(local.neighbors):
        yield peers[nid]


def regular_unchoke(
    local: PeerRecord,
    swarm: Swarm,
    policy: PolicySpec,
    t: float,
    rng,
    timeout: float = SNUB_TIMEOUT,
) -> list[int]:
    """Pick the regular-slot targets for ``local`` at time t.

    Eligible: interested neighbors that are not snubbing local and do not
    already hold one of local's optimistic slots. Returns up to
    ``regular_slots`` peer ids, best first.
    """
    progress = local.progress_bytes
    opt = local.optimistic_targets
    cands = []
    for c in _iter_neighbors(local, swarm):
        if c.progress_bytes >= progress:
            continue
        if c.peer_id in opt:
            continue
        if snub_check(local, c.peer_id, t, timeout):
            continue
        cands.append(c)
    if not cands:
        return []
    criterion = policy.seed_order if local.is_seed else policy.leecher_order
    ranked = rank_candidates(local, cands, criterion, t, rng)
    return [c.peer_id for c in ranked[: policy.regular_slots]]


def optimistic_unchoke(
    local: PeerRecord,
    swarm: Swarm,
    policy: PolicySpec,
    t: float,
    rng,
    timeout: float = SNUB_TIMEOUT,
) -> list[int]:
    """Pick optimistic-slot targets uniformly at random at time t.

    Candidates are interested neighbors not currently holding a regular slot
    from local; snub markings do not exclude anyone here. When local is a
    leecher snubbed by every peer it was downloading from, the pick widens to
    the full slot budget so service can recover.
    """
    progress = local.progress_bytes
    reg = local.regular_targets
    cands = [
        c.peer_id
        for c in _iter_neighbors(local, swarm)
        if c.progress_bytes < progress and c.peer_id not in reg
    ]
    k = policy.optimistic_slots
    if is_all_snubbed(local, t, timeout):
        k = policy.total_slots
    k = min(k, len(cands))
    if k == 0:
        return []
    return rng.sample(cands, k)


def apply_assignments(
    local: PeerRecord,
    kind: str,
    new_targets: list[int],
    t: float,
    swarm: Swarm,
    policy: PolicySpec,
) -> tuple[set[int], set[int]]:
    """Replace one kind of slot set; returns (choked ids, newly unchoked ids).

    Newly unchoked peers record the unchoke time; peers keeping their slot do
    not. The combined slot count must stay within the policy budget, or
    within regular + full budget under the all-snubbed recovery.
    """
    slots = local.regular_targets if kind == "regular" else local.optimistic_targets
    other = local.optimistic_targets if kind == "regular" else local.regular_targets
    new = set(new_targets)
    if new & other:
        raise SwarmError_f(local, new & other)
    limit = policy.total_slots
    if kind == "optimistic" and len(new) > policy.optimistic_slots:
        # all-snubbed recovery widened the pick
        limit = policy.regular_slots + policy.total_slots
    if len(new) + len(other) > limit:
        raise ValueError(
            f"peer {local.peer_id} would hold {len(new) + len(other)} slots (limit {limit})"
        )
    choked = slots - new
    unchoked = new - slots
    lid = local.peer_id
    for pid in unchoked:
        swarm.peers[pid].last_unchoked_by[lid] = t
    slots.clear()
    slots.update(new)
    return choked, unchoked


def SwarmError_f(local, overlap):  # pragma: no cover
    from .swarm import SwarmError

    return SwarmError(f"peer {local.peer_id}: slot kinds overlap on {sorted(overlap)}")
