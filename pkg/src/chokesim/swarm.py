"""Swarm state: peers, tracker, neighbor sets, interest, steady-state churn.

Content is modeled as a sequential prefix: a peer's holdings are fully
described by ``progress_bytes``, always a multiple of the block size. Peer A
is interested in peer B exactly when B's prefix is longer, which reproduces
the one-way reciprocity of streaming swarms (later arrivals cannot serve
earlier ones). Seeds hold the full content and never depart; a leecher that
finishes is replaced immediately by a fresh newcomer so the population stays
constant.
"""

from __future__ import annotations

from collections import deque

NEVER = float("-inf")


class SwarmError(Exception):
    """Violation of a swarm operation precondition (programming error)."""


class WindowEstimator:
    """Rolling byte-rate estimator over a fixed window.

    rate(t) = bytes credited in (t - window, t] divided by the window length;
    samples older than the window are evicted lazily.
    """

    __slots__ = ("window", "_samples", "_total")

    def __init__(self, window: float) -> None:
        self.window = window
        self._samples: deque[tuple[float, int]] = deque()
        self._total = 0

    def add(self, t: float, nbytes: int) -> None:
        self._samples.append((t, nbytes))
        self._total += nbytes

    def rate(self, t: float) -> float:
        cutoff = t - self.window
        samples = self._samples
        while samples and samples[0][0] <= cutoff:
            self._total -= samples.popleft()[1]
        return self._total / self.window


class PeerRecord:
    """One swarm participant.

    Slot targets are the peers this record is currently unchoking, split by
    slot kind. Rate estimators live on the receiving side: ``rate_in[nbr]``
    measures bytes arriving from that neighbor, and the sender's outbound
    rate to us is read from the same object.
    """

    __slots__ = (
        "peer_id",
        "is_seed",
        "progress_bytes",
        "neighbors",
        "arrival_time",
        "initiated_count",
        "regular_targets",
        "optimistic_targets",
        "rate_in",
        "last_unchoked_by",
        "last_received_from",
        "last_received_at",
        "pending_regular",
        "pending_optimistic",
        "pending_completion",
    )

    def __init__(self, peer_id: int, is_seed: bool, progress_bytes: int, arrival_time: float):
        self.peer_id = peer_id
        self.is_seed = is_seed
        self.progress_bytes = progress_bytes
        self.neighbors: set[int] = set()
        self.arrival_time = arrival_time
        self.initiated_count = 0
        self.regular_targets: set[int] = set()
        self.optimistic_targets: set[int] = set()
        self.rate_in: dict[int, WindowEstimator] = {}
        # last_unchoked_by[u]: when u last moved this peer from choked to unchoked
        self.last_unchoked_by: dict[int, float] = {}
        # last_received_from[u]: when this peer last got data from u (snub timer)
        self.last_received_from: dict[int, float] = {}
        # last time this peer received data from anyone
        self.last_received_at = NEVER

    @property
    def state(self) -> str:
        return "seed" if self.is_seed else "leecher"

    def received_rate(self, sender_id: int, t: float) -> float:
        est = self.rate_in.get(sender_id)
        return est.rate(t) if est is not None else 0.0

    def all_targets(self) -> set[int]:
        return self.regular_targets | self.optimistic_targets


class Tracker:
    """Central roster of live peers; hands out bounded random peer lists."""

    def __init__(self, list_size: int = 50) -> None:
        self.roster: set[int] = set()
        self.list_size = list_size

    def peer_list(self, rng, requester_id: int) -> list[int]:
        """Random list of up to list_size live peers, never the requester."""
        pool = sorted(self.roster - {requester_id})
        k = min(self.list_size, len(pool))
        return rng.sample(pool, k)


class Swarm:
    """Owns all peer records and the tracker; mutated only by the run loop.

    ``on_join(peer, t)`` / ``on_depart(peer, t)`` callbacks let the driver
    schedule and cancel per-peer events without the swarm knowing about the
    event queue.
    """

    def __init__(
        self,
        content_bytes: int,
        block_bytes: int,
        rng,
        *,
        rate_window: float = 20.0,
        tracker_list_size: int = 50,
        max_neighbors: int = 80,
        max_initiated: int = 40,
    ) -> None:
        self.content_bytes = content_bytes
        self.block_bytes = block_bytes
        self.rng = rng
        self.rate_window = rate_window
        self.max_neighbors = max_neighbors
        self.max_initiated = max_initiated
        self.tracker = Tracker(tracker_list_size)
        self.peers: dict[int, PeerRecord] = {}
        self.leecher_count = 0
        self.seed_count = 0
        self.clients_served = 0
        self.bytes_credited = 0
        self.bytes_overshoot = 0
        self._next_id = 0
        self.on_join = None
        self.on_depart = None

    # -- population ------------------------------------------------------

    def new_peer(self, is_seed: bool, t: float, progress_bytes: int | None = None) -> PeerRecord:
        if progress_bytes is None:
            progress_bytes = self.content_bytes if is_seed else 0
        if is_seed != (progress_bytes == self.content_bytes):
            raise SwarmError("seed state must coincide with full progress")
        if progress_bytes % self.block_bytes:
            raise SwarmError(f"progress {progress_bytes} not a multiple of block size")
        peer = PeerRecord(self._next_id, is_seed, progress_bytes, t)
        self._next_id += 1
        return peer

    def join(self, peer: PeerRecord, t: float) -> PeerRecord:
        """Wire a newcomer into the swarm via a tracker list and start its ticks.

        The newcomer initiates connections to the listed peers, bounded by
        its initiated-connection cap; each link also respects both sides'
        neighbor-set cap.
        """
        if peer.peer_id in self.peers:
            raise SwarmError(f"duplicate peer id {peer.peer_id}")
        for cand_id in self.tracker.peer_list(self.rng, peer.peer_id):
            if peer.initiated_count >= self.max_initiated:
                break
            if len(peer.neighbors) >= self.max_neighbors:
                break
            cand = self.peers[cand_id]
            if len(cand.neighbors) >= self.max_neighbors:
                continue
            peer.neighbors.add(cand_id)
            cand.neighbors.add(peer.peer_id)
            peer.initiated_count += 1
        self.peers[peer.peer_id] = peer
        self.tracker.roster.add(peer.peer_id)
        if peer.is_seed:
            self.seed_count += 1
        else:
            self.leecher_count += 1
        if self.on_join is not None:
            self.on_join(peer, t)
        return peer

    def depart_and_replace(self, finished: PeerRecord, t: float) -> PeerRecord:
        """Remove a finished leecher and admit a fresh newcomer at time t.

        Seeds never depart, so the population stays at the configured
        leecher/seed split. The newcomer re-queries the tracker rather than
        inheriting the departed peer's links.
        """
        if finished.is_seed:
            raise SwarmError("seeds never depart")
        if finished.progress_bytes != self.content_bytes:
            raise SwarmError(
                f"peer {finished.peer_id} departing with incomplete progress "
                f"{finished.progress_bytes}/{self.content_bytes}"
            )
        pid = finished.peer_id
        for nbr_id in finished.neighbors:
            nbr = self.peers[nbr_id]
            nbr.neighbors.discard(pid)
            nbr.regular_targets.discard(pid)
            nbr.optimistic_targets.discard(pid)
            nbr.rate_in.pop(pid, None)
            nbr.last_unchoked_by.pop(pid, None)
            nbr.last_received_from.pop(pid, None)
        del self.peers[pid]
        self.tracker.roster.discard(pid)
        self.leecher_count -= 1
        self.clients_served += 1
        if self.on_depart is not None:
            self.on_depart(finished, t)
        newcomer = self.new_peer(False, t)
        self.join(newcomer, t)
        return newcomer

    # -- relations and accounting -----------------------------------------

    @staticmethod
    def interested(a: PeerRecord, b: PeerRecord) -> bool:
        """True iff b holds content a lacks (strictly longer prefix)."""
        return b.progress_bytes > a.progress_bytes

    def record_transfer(self, sender_id: int, receiver_id: int, nbytes: int, t: float) -> int:
        """Credit block-quantized bytes received at time t; returns the credit.

        The credit is capped at the content size; the residual beyond the cap
        is tallied separately so end-of-run conservation can be reconciled.
        Resets the receiver's snub timer for the sender.
        """
        if nbytes % self.block_bytes:
            raise SwarmError(f"transfer of {nbytes} B not block-quantized")
        receiver = self.peers[receiver_id]
        room = self.content_bytes - receiver.progress_bytes
        credited = nbytes if nbytes <= room else room
        receiver.progress_bytes += credited
        self.bytes_credited += credited
        self.bytes_overshoot += nbytes - credited
        est = receiver.rate_in.get(sender_id)
        if est is None:
            est = receiver.rate_in[sender_id] = WindowEstimator(self.rate_window)
        est.add(t, credited)
        receiver.last_received_from[sender_id] = t
        receiver.last_received_at = t
        return credited

    # -- invariants --------------------------------------------------------

    def check_invariants(self) -> None:
        """Structural checks; cheap enough to run at every join/depart."""
        leechers = sum(1 for p in self.peers.values() if not p.is_seed)
        seeds = len(self.peers) - leechers
        assert leechers == self.leecher_count and seeds == self.seed_count, (
            "population counters out of sync"
        )
        assert self.tracker.roster == set(self.peers), "tracker roster out of sync"
        for p in self.peers.values():
            assert 0 <= p.progress_bytes <= self.content_bytes
            assert p.progress_bytes % self.block_bytes == 0
            # a finished leecher may sit at full progress until its
            # completion event departs it within the same instant
            if p.is_seed:
                assert p.progress_bytes == self.content_bytes
            for nbr_id in p.neighbors:
                assert p.peer_id in self.peers[nbr_id].neighbors, (
                    f"neighbor link {p.peer_id}<->{nbr_id} not symmetric"
                )
