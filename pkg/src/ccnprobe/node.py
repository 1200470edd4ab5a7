"""Per-router state: content store, PIT, provider-recording FIB, and the
interest/data/timeout processing procedures with probe selection."""

from __future__ import annotations

import random
from collections import OrderedDict
from dataclasses import dataclass, field
from enum import Enum

from .model import (LOCAL, PROBE_RESPONSE_CAPACITY, ContentName, DataPacket,
                    InterestPacket, RouterId)
from .topology import SPTable

INF = float("inf")


class ProbeStrategy(str, Enum):
    NONE = "basic-ccn"
    PIT_POPULAR = "pit-probe"
    FIB_MAX_COST = "fib-probe"
    SEQUENTIAL = "sequential"
    RANDOM = "random"


class Forwarding(str, Enum):
    BEST_ROUTE = "best-route"
    BROADCAST = "broadcast"


class ActionKind(Enum):
    FORWARD_INTEREST = 1
    FORWARD_DATA = 2
    DELIVER_LOCAL = 3
    DROP = 4


@dataclass(slots=True)
class Action:
    """One step a handler asks the engine to perform."""

    kind: ActionKind
    packet: InterestPacket | DataPacket
    out_iface: RouterId = LOCAL
    reason: str = ""
    entry: "PitEntry | None" = None


@dataclass(slots=True)
class CsEntry:
    size: int
    insert_time: float
    last_access: float


class ContentStore:
    """Bounded cache of content payloads with FIFO or LRU replacement."""

    def __init__(self, capacity: int, policy: str = "lru"):
        if capacity < 1:
            raise ValueError(f"content store capacity must be >= 1, got {capacity}")
        if policy not in ("fifo", "lru"):
            raise ValueError(f"unknown cache policy {policy!r}")
        self.capacity = capacity
        self.policy = policy
        self.entries: OrderedDict[ContentName, CsEntry] = OrderedDict()

    def __contains__(self, name: ContentName) -> bool:
        return name in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def touch(self, name: ContentName, now: float) -> None:
        entry = self.entries.get(name)
        if entry is None:
            return
        entry.last_access = now
        if self.policy == "lru":
            self.entries.move_to_end(name)

    def insert(self, name: ContentName, size: int, now: float) -> ContentName | None:
        """Store `name`; returns the evicted name when the store was full.

        Re-inserting an existing name refreshes its timestamps and position
        without evicting anything.
        """
        existing = self.entries.get(name)
        if existing is not None:
            existing.insert_time = now
            existing.last_access = now
            self.entries.move_to_end(name)
            return None
        evicted = None
        if len(self.entries) >= self.capacity:
            evicted, _ = self.entries.popitem(last=False)
        self.entries[name] = CsEntry(size, now, now)
        return evicted

    def remove(self, name: ContentName) -> None:
        self.entries.pop(name, None)

    def names(self) -> list[ContentName]:
        return list(self.entries)


@dataclass(slots=True)
class PitEntry:
    name: ContentName
    deadline: float
    created: float
    incoming: set[RouterId] = field(default_factory=set)
    outgoing: RouterId | None = None
    seen_nonces: set[int] = field(default_factory=set)
    arrival_count: int = 1
    # Populated only at the router where the interest originated.
    local_tokens: list[tuple[int, float]] = field(default_factory=list)
    tried_providers: set[RouterId] = field(default_factory=set)
    expected_provider: RouterId | None = None
    broadcast_retry_used: bool = False
    # Deadline for which a timeout event is already queued (engine bookkeeping).
    timeout_event_at: float = -1.0

    @property
    def is_initial(self) -> bool:
        return bool(self.local_tokens)


@dataclass(slots=True)
class FibEntry:
    name: ContentName
    providers: list[RouterId]
    last_update: float
    last_access: float
    # Cached min SPT cost over providers, tagged with the SPT generation it
    # was computed against.
    _min_cost: float = INF
    _min_cost_gen: int = -1


class RouterState:
    """One router's tables plus the packet-processing procedures.

    Single-owner mutable state: the engine delivers events to one router at
    a time, so handlers never run re-entrantly.
    """

    def __init__(self, rid: RouterId, cs: ContentStore, spt: SPTable,
                 neighbors: list[RouterId],
                 probe_strategy: ProbeStrategy = ProbeStrategy.NONE,
                 forwarding: Forwarding = Forwarding.BEST_ROUTE,
                 fib_capacity: int | None = None,
                 fib_entry_ttl: float | None = None,
                 timeout: float = 0.5,
                 payload_size: int = 1024,
                 origin: frozenset[ContentName] = frozenset(),
                 producer_routes: dict[str, RouterId] | None = None,
                 nonces=None):
        self.id = rid
        self.cs = cs
        self.spt = spt
        self.spt_gen = 0
        self.neighbors = sorted(neighbors)
        self.probe_strategy = probe_strategy
        self.forwarding = forwarding
        self.fib_capacity = fib_capacity
        # Time-based entry validity: providers in entries not refreshed
        # within the window are not trusted for forwarding. Probe selection
        # still sees aged entries; refreshing them is what probes are for.
        self.fib_entry_ttl = fib_entry_ttl
        self.timeout = timeout
        self.payload_size = payload_size
        self.origin = origin
        # Static name-prefix routes toward producers (the routing-plane
        # knowledge every deployment has); empty means broadcast on FIB miss.
        self.producer_routes = producer_routes or {}
        self.pit: dict[ContentName, PitEntry] = {}
        self.fib: OrderedDict[ContentName, FibEntry] = OrderedDict()
        # Insertion-ordered name ring for the sequential probe cursor;
        # names evicted from the FIB are skipped lazily.
        self._fib_ring: list[ContentName] = []
        self.seq_cursor = 0
        self._nonces = nonces

    def replace_spt(self, spt: SPTable, neighbors: list[RouterId]) -> None:
        self.spt = spt
        self.spt_gen += 1
        self.neighbors = sorted(neighbors)

    def holds(self, name: ContentName) -> bool:
        return name in self.origin or name in self.cs.entries

    # -- probe selection ----------------------------------------------------

    def _entry_min_cost(self, entry: FibEntry) -> float:
        if entry._min_cost_gen != self.spt_gen:
            cost = INF
            spt_cost = self.spt.cost
            for rid in entry.providers:
                c = spt_cost(rid)
                if c is not None and c < cost:
                    cost = c
            entry._min_cost = cost
            entry._min_cost_gen = self.spt_gen
        return entry._min_cost

    def select_probe(self, now: float, rng: random.Random) -> ContentName | None:
        """Pick a content name to piggyback on an outgoing interest.

        Empty source tables (or the basic-ccn strategy) yield no probe; all
        tie-breaks are fully ordered so reruns pick identically.
        """
        strategy = self.probe_strategy
        if strategy == ProbeStrategy.NONE:
            return None
        if strategy == ProbeStrategy.PIT_POPULAR:
            best = None
            best_count = -1
            best_deadline = INF
            for name, entry in self.pit.items():
                count = entry.arrival_count
                if (count > best_count
                        or (count == best_count
                            and (entry.deadline < best_deadline
                                 or (entry.deadline == best_deadline and name < best)))):
                    best = name
                    best_count = count
                    best_deadline = entry.deadline
            return best
        if strategy == ProbeStrategy.FIB_MAX_COST:
            best = None
            best_cost = -1.0
            best_updated = INF
            gen = self.spt_gen
            spt_cost = self.spt.cost
            for name, entry in self.fib.items():
                if entry._min_cost_gen != gen:
                    cost = INF
                    for rid in entry.providers:
                        c = spt_cost(rid)
                        if c is not None and c < cost:
                            cost = c
                    entry._min_cost = cost
                    entry._min_cost_gen = gen
                else:
                    cost = entry._min_cost
                if (cost > best_cost
                        or (cost == best_cost
                            and (entry.last_update < best_updated
                                 or (entry.last_update == best_updated and name < best)))):
                    best = name
                    best_cost = cost
                    best_updated = entry.last_update
            return best
        if strategy == ProbeStrategy.SEQUENTIAL:
            ring = self._fib_ring
            fib = self.fib
            for _ in range(len(ring)):
                name = ring[self.seq_cursor % len(ring)]
                self.seq_cursor = (self.seq_cursor + 1) % len(ring)
                if name in fib:
                    self._compact_ring()
                    return name
            self._compact_ring()
            return None
        if strategy == ProbeStrategy.RANDOM:
            pool = list(self.pit)
            seen = self.pit
            pool.extend(n for n in self.fib if n not in seen)
            if not pool:
                return None
            return pool[rng.randrange(len(pool))]
        raise ValueError(f"unknown probe strategy {strategy!r}")

    def _compact_ring(self) -> None:
        if len(self._fib_ring) > 4 * max(len(self.fib), 16):
            fib = self.fib
            self._fib_ring = [n for n in self._fib_ring if n in fib]
            self.seq_cursor = 0

    # -- provider selection ---------------------------------------------------

    def select_best_provider(self, name: ContentName,
                             excluded: frozenset[RouterId] | set[RouterId] = frozenset(),
                             now: float | None = None,
                             avoid_iface: RouterId | None = None,
                             ) -> tuple[RouterId, RouterId] | None:
        """Cheapest reachable FIB provider for `name` and its first hop.

        Ties break toward the lowest router id. Returns None when the FIB
        misses or every candidate is excluded or unreachable. Candidates
        reached through `avoid_iface` are skipped: an interest is never sent
        back out the interface it arrived on.
        """
        entry = self.fib.get(name)
        if entry is None:
            return None
        if (self.fib_entry_ttl is not None and now is not None
                and now - entry.last_update > self.fib_entry_ttl):
            return None
        if now is not None:
            entry.last_access = now
        self.fib.move_to_end(name)
        best_rid = None
        best_cost = INF
        spt = self.spt
        spt_cost = spt.cost
        for rid in entry.providers:
            if rid in excluded:
                continue
            c = spt_cost(rid)
            if c is None:
                continue
            if avoid_iface is not None and spt.first_hop(rid) == avoid_iface:
                continue
            if c < best_cost or (c == best_cost and rid < best_rid):
                best_cost = c
                best_rid = rid
        if best_rid is None:
            return None
        return best_rid, spt.first_hop(best_rid)

    def _producer_route(self, name: ContentName,
                        excluded: set[RouterId],
                        avoid_iface: RouterId | None,
                        ) -> tuple[RouterId, RouterId] | None:
        """Static fallback route toward the name's producer, if known."""
        rid = self.producer_routes.get(name.prefix)
        if rid is None or rid == self.id or rid in excluded:
            return None
        hop = self.spt.first_hop(rid)
        if hop is None or hop == avoid_iface:
            return None
        return rid, hop

    # -- FIB updating ---------------------------------------------------------

    def fib_update(self, name: ContentName, providers: list[RouterId],
                   now: float) -> None:
        """Create or extend the FIB entry for `name` with `providers`.

        Over the 5-provider cap the farthest provider by SPT cost is dropped
        (unreachable counts as infinitely far); a brand-new entry may evict
        the least-recently-used FIB entry when the table is full.
        """
        entry = self.fib.get(name)
        if entry is None:
            if self.fib_capacity is not None and len(self.fib) >= self.fib_capacity:
                self.fib.popitem(last=False)
            entry = FibEntry(name, [], now, now)
            self.fib[name] = entry
            self._fib_ring.append(name)
        else:
            self.fib.move_to_end(name)
        known = entry.providers
        for rid in providers:
            if rid not in known:
                known.append(rid)
        while len(known) > PROBE_RESPONSE_CAPACITY:
            worst_i = 0
            worst_cost = -1.0
            spt_cost = self.spt.cost
            for i, rid in enumerate(known):
                c = spt_cost(rid)
                c = INF if c is None else c
                if c >= worst_cost:
                    worst_cost = c
                    worst_i = i
            known.pop(worst_i)
        entry.last_update = now
        entry._min_cost_gen = -1

    # -- packet handlers ------------------------------------------------------

    def on_interest(self, interest: InterestPacket, in_iface: RouterId,
                    now: float, rng: random.Random) -> list[Action]:
        """Process one arriving interest (Initial / Miss / Hit roles).

        Order: PIT aggregation and duplicate-nonce suppression first, then
        the content-store check, probe handling, and output selection.
        """
        name = interest.name
        entry = self.pit.get(name)
        if entry is not None:
            if interest.nonce in entry.seen_nonces:
                return [Action(ActionKind.DROP, interest, reason="duplicate-nonce")]
            entry.seen_nonces.add(interest.nonce)
            entry.arrival_count += 1
            if in_iface == LOCAL:
                entry.local_tokens.append((interest.nonce, now))
            else:
                entry.incoming.add(in_iface)
            return [Action(ActionKind.DROP, interest, reason="pit-aggregated")]

        entry = PitEntry(name, deadline=now + self.timeout, created=now,
                         seen_nonces={interest.nonce})
        if in_iface == LOCAL:
            entry.local_tokens.append((interest.nonce, now))
        else:
            entry.incoming.add(in_iface)
        self.pit[name] = entry

        probe = interest.probe
        if self.holds(name):
            # Hit: answer from the content store, replicating probe fields.
            self.cs.touch(name, now)
            response = list(interest.probe_response)
            if probe is not None and self.holds(probe):
                self.cs.touch(probe, now)
                if self.id not in response and len(response) < PROBE_RESPONSE_CAPACITY:
                    response.append(self.id)
            data = DataPacket(name, provider_id=self.id,
                              payload_size=self.payload_size,
                              probe=probe, probe_response=response)
            del self.pit[name]
            if in_iface == LOCAL:
                return [Action(ActionKind.DELIVER_LOCAL, data, LOCAL, entry=entry)]
            return [Action(ActionKind.FORWARD_DATA, data, in_iface)]

        # Miss: record ourselves as a probe provider when it applies.
        if probe is not None and self.holds(probe):
            self.cs.touch(probe, now)
            if (self.id not in interest.probe_response
                    and len(interest.probe_response) < PROBE_RESPONSE_CAPACITY):
                interest.probe_response.append(self.id)
        elif probe is None and in_iface == LOCAL:
            attached = self.select_probe(now, rng)
            if attached is not None:
                interest.probe = attached
                interest.probe_response = []

        if self.forwarding == Forwarding.BEST_ROUTE:
            best = self.select_best_provider(name, entry.tried_providers, now,
                                             avoid_iface=in_iface)
            if best is None:
                best = self._producer_route(name, entry.tried_providers, in_iface)
            if best is not None:
                provider, iface = best
                entry.outgoing = iface
                if in_iface == LOCAL:
                    entry.expected_provider = provider
                return [Action(ActionKind.FORWARD_INTEREST, interest, iface)]
        outs = [nb for nb in self.neighbors if nb != in_iface]
        if not outs:
            return [Action(ActionKind.DROP, interest, reason="no-route")]
        return [Action(ActionKind.FORWARD_INTEREST, interest, nb) for nb in outs]

    def on_data(self, data: DataPacket, in_iface: RouterId,
                now: float) -> list[Action]:
        """Process one arriving data packet: refresh FIBs, cache, fan out."""
        if data.probe is not None and data.probe_response:
            self.fib_update(data.probe, data.probe_response, now)
        name = data.name
        entry = self.pit.pop(name, None)
        if entry is None:
            return [Action(ActionKind.DROP, data, reason="unsolicited")]
        if not self.holds(name):
            self.cs.insert(name, data.payload_size, now)
        else:
            self.cs.touch(name, now)
        self.fib_update(name, [data.provider_id], now)
        actions = []
        if entry.local_tokens:
            actions.append(Action(ActionKind.DELIVER_LOCAL, data, LOCAL, entry=entry))
        for iface in sorted(entry.incoming):
            actions.append(Action(ActionKind.FORWARD_DATA, data, iface))
        return actions

    def on_timeout(self, name: ContentName, now: float,
                   rng: random.Random) -> list[Action]:
        """Handle a PIT entry whose deadline passed.

        The origin router excludes the provider that failed to answer and
        re-sends toward the next-best one, falling back to one broadcast
        before giving the interest up; relay entries just expire.
        """
        entry = self.pit[name]
        if not entry.local_tokens:
            del self.pit[name]
            return []
        if entry.expected_provider is not None:
            entry.tried_providers.add(entry.expected_provider)
            entry.expected_provider = None
        nonce = next(self._nonces)
        interest = InterestPacket(name, nonce, issue_time=now)
        entry.seen_nonces.add(nonce)
        if self.probe_strategy != ProbeStrategy.NONE:
            attached = self.select_probe(now, rng)
            if attached is not None:
                interest.probe = attached
        if self.forwarding == Forwarding.BEST_ROUTE:
            best = self.select_best_provider(name, entry.tried_providers, now)
            if best is None:
                best = self._producer_route(name, entry.tried_providers, None)
            if best is not None:
                provider, iface = best
                entry.deadline = now + self.timeout
                entry.outgoing = iface
                entry.expected_provider = provider
                return [Action(ActionKind.FORWARD_INTEREST, interest, iface)]
        if not entry.broadcast_retry_used and self.neighbors:
            entry.broadcast_retry_used = True
            entry.deadline = now + self.timeout
            return [Action(ActionKind.FORWARD_INTEREST, interest, nb)
                    for nb in self.neighbors]
        del self.pit[name]
        return [Action(ActionKind.DROP, interest, reason="unsatisfied", entry=entry)]
