"""Deterministic discrete-event simulation: event queue, finite-bandwidth
links with drop-tail queues, consumer workload, cache churn, and failures."""

from __future__ import annotations

import itertools
import math
import random
from collections import deque
from dataclasses import dataclass, fields, replace
from heapq import heappop, heappush

from .metrics import MetricsReport
from .model import (LOCAL, ContentName, InterestPacket, RouterId,
                    content_catalog, wire_size)
from .node import (Action, ActionKind, ContentStore, Forwarding, ProbeStrategy,
                   RouterState)
from .topology import Graph, SPTable, apply_failure, build_all_spts, load_topology

# Event kinds; pop order at equal timestamps follows push order via seq.
EV_END, EV_FAILURE, EV_CHURN, EV_ISSUE, EV_TIMEOUT, EV_ARRIVAL = range(6)


class ConfigError(ValueError):
    """Invalid scenario or experiment configuration."""


@dataclass
class Scenario:
    """One simulation's declarative configuration."""

    topology: str
    sim_duration: float = 480.0
    interest_frequency: int = 1          # interests/s per consumer
    cache_size_ratio: float = 0.10       # CS capacity / catalog size
    cache_update_ratio: float = 0.0      # per-second CS churn fraction
    probe_strategy: str = "basic-ccn"
    cs_policy: str = "lru"
    forwarding: str = "best-route"
    timeout: float = 0.5                 # PIT deadline, seconds
    failures: tuple[tuple[float, int], ...] = ()
    rng_seed: int = 1
    contents_per_producer: int = 100
    payload_size: int = 1024             # data payload bytes
    link_delay: float | None = None      # override every link when set
    link_bandwidth: float | str | None = None  # number, "unlimited", or None
    queue_capacity: int = 64             # packets per link direction
    fib_capacity: int | None = 256
    fib_entry_ttl: float | None = None   # forwarding trusts entries this fresh
    producer_routing: bool = False       # static prefix routes toward producers

    def validate(self) -> None:
        if self.sim_duration < 0:
            raise ConfigError(f"sim_duration must be >= 0: {self.sim_duration}")
        if self.interest_frequency < 0:
            raise ConfigError(
                f"interest_frequency must be >= 0: {self.interest_frequency}")
        if not 0.0 <= self.cache_size_ratio <= 1.0:
            raise ConfigError(f"cache_size_ratio out of [0,1]: {self.cache_size_ratio}")
        if not 0.0 <= self.cache_update_ratio <= 1.0:
            raise ConfigError(
                f"cache_update_ratio out of [0,1]: {self.cache_update_ratio}")
        if self.timeout <= 0:
            raise ConfigError(f"timeout must be positive: {self.timeout}")
        if self.payload_size < 0:
            raise ConfigError(f"payload_size must be >= 0: {self.payload_size}")
        if self.queue_capacity < 1:
            raise ConfigError(f"queue_capacity must be >= 1: {self.queue_capacity}")
        if self.fib_capacity is not None and self.fib_capacity < 1:
            raise ConfigError(f"fib_capacity must be >= 1: {self.fib_capacity}")
        if self.fib_entry_ttl is not None and self.fib_entry_ttl <= 0:
            raise ConfigError(f"fib_entry_ttl must be positive: {self.fib_entry_ttl}")
        if self.link_delay is not None and self.link_delay < 0:
            raise ConfigError(f"link_delay must be >= 0: {self.link_delay}")
        if (isinstance(self.link_bandwidth, (int, float))
                and self.link_bandwidth <= 0):
            raise ConfigError(
                f"link_bandwidth must be positive: {self.link_bandwidth}")
        if self.contents_per_producer < 1:
            raise ConfigError(
                f"contents_per_producer must be >= 1: {self.contents_per_producer}")
        try:
            ProbeStrategy(self.probe_strategy)
        except ValueError:
            raise ConfigError(
                f"unknown probe_strategy {self.probe_strategy!r}; expected one "
                f"of {[s.value for s in ProbeStrategy]}") from None
        try:
            Forwarding(self.forwarding)
        except ValueError:
            raise ConfigError(f"unknown forwarding {self.forwarding!r}") from None
        if self.cs_policy not in ("fifo", "lru"):
            raise ConfigError(f"unknown cs_policy {self.cs_policy!r}")
        if isinstance(self.link_bandwidth, str) and self.link_bandwidth != "unlimited":
            raise ConfigError(
                f"link_bandwidth must be a number or 'unlimited': "
                f"{self.link_bandwidth!r}")
        for time, count in self.failures:
            if time < 0 or time > self.sim_duration:
                raise ConfigError(f"failure time {time} outside the run")
            if count < 0:
                raise ConfigError(f"failure count must be >= 0: {count}")

    def canonical(self) -> str:
        parts = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "failures":
                value = ";".join(f"{t}:{c}" for t, c in value)
            parts.append(f"{f.name}={value}")
        return "\n".join(parts)


class LinkQueue:
    """One direction of a link: propagation delay, serialization, drop-tail.

    `completions` holds the serialization finish times of packets still in
    the queue or on the wire head; the last one is the busy-until mark.
    """

    __slots__ = ("delay", "bandwidth", "queue_cap", "completions")

    def __init__(self, delay: float, bandwidth: float | None, queue_cap: int):
        self.delay = delay
        self.bandwidth = bandwidth
        self.queue_cap = queue_cap
        self.completions: deque[float] = deque()


def schedule_transmission(link: LinkQueue, wire_bytes: int,
                          now: float) -> float | None:
    """Arrival time of a packet entering `link` at `now`; None when dropped.

    arrival = max(now, busy-until) + bits/bandwidth + delay. Links with
    unlimited bandwidth never queue, so they arrive at now + delay.
    """
    if link.bandwidth is None:
        return now + link.delay
    completions = link.completions
    while completions and completions[0] <= now:
        completions.popleft()
    if len(completions) >= link.queue_cap:
        return None
    start = completions[-1] if completions else now
    if start < now:
        start = now
    done = start + wire_bytes * 8.0 / link.bandwidth
    completions.append(done)
    return done + link.delay


def generate_interest_events(consumers: list[RouterId],
                             catalog: list[ContentName],
                             scenario: Scenario,
                             rng: random.Random,
                             ) -> list[tuple[float, RouterId, ContentName]]:
    """Issue times and names for every consumer interest of the run.

    Each consumer sends `interest_frequency` interests per simulated second
    at uniform offsets within the second; names are drawn uniformly from
    the whole catalog.
    """
    events = []
    if not catalog:
        return events
    n = len(catalog)
    for second in range(int(scenario.sim_duration)):
        for consumer in consumers:
            for _ in range(scenario.interest_frequency):
                t = second + rng.random()
                name = catalog[rng.randrange(n)]
                events.append((t, consumer, name))
    return events


def inject_cache_churn(routers: list[RouterState], ratio: float,
                       rng: random.Random) -> int:
    """Evict ceil(ratio * |CS|) uniformly chosen entries from each router.

    Models fast-changing cached content; FIBs are left untouched so their
    provider lists go stale, which is the effect under study. Returns the
    number of evicted entries.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"churn ratio out of [0,1]: {ratio}")
    evicted = 0
    for router in sorted(routers, key=lambda r: r.id):
        count = len(router.cs.entries)
        if count == 0 or ratio == 0.0:
            continue
        k = math.ceil(ratio * count)
        for name in rng.sample(router.cs.names(), k):
            router.cs.remove(name)
        evicted += k
    return evicted


def inject_failure(graph: Graph, count: int, rng: random.Random,
                   ) -> tuple[Graph, dict[RouterId, SPTable], list[RouterId]]:
    """Crash `count` randomly chosen pure routers.

    Returns the surviving graph, freshly built SPTables for every survivor
    (convergence is instantaneous), and the victim list.
    """
    eligible = graph.pure_routers()
    if count > len(eligible):
        raise ConfigError(
            f"cannot fail {count} routers; only {len(eligible)} eligible")
    victims = rng.sample(eligible, count) if count else []
    for victim in victims:
        graph = apply_failure(graph, victim)
    return graph, build_all_spts(graph), victims


class Simulation:
    """A single deterministic run of one scenario.

    All randomness flows from one generator seeded with the scenario seed;
    event ordering is total via (time, push-sequence).
    """

    def __init__(self, scenario: Scenario, interest_hook=None):
        scenario.validate()
        self.scenario = scenario
        self.rng = random.Random(scenario.rng_seed)
        self.nonces = itertools.count(1)
        self.interest_hook = interest_hook

        graph = load_topology(scenario.topology)
        if scenario.link_delay is not None or scenario.link_bandwidth is not None:
            graph.links = {
                key: self._override_link(link) for key, link in graph.links.items()
            }
        self.graph = graph

        producer_ids = graph.producers()
        self.catalog = content_catalog(
            [graph.name_of[rid] for rid in producer_ids],
            scenario.contents_per_producer)
        cs_capacity = max(1, int(scenario.cache_size_ratio * len(self.catalog) + 1e-9))

        for time, count in scenario.failures:
            if count > len(graph.pure_routers()):
                raise ConfigError(
                    f"failure of {count} routers exceeds the {len(graph.pure_routers())} "
                    f"eligible pure routers")

        spts = build_all_spts(graph)
        strategy = ProbeStrategy(scenario.probe_strategy)
        forwarding = Forwarding(scenario.forwarding)
        # Routing-plane knowledge shared by every node: which router
        # publishes each name prefix. Off by default; a miss then broadcasts.
        producer_routes = {}
        if scenario.producer_routing:
            producer_routes = {graph.name_of[rid]: rid for rid in producer_ids}
        self.routers: dict[RouterId, RouterState] = {}
        for rid in graph.nodes:
            origin = frozenset()
            if "producer" in graph.roles[rid]:
                prefix = graph.name_of[rid]
                origin = frozenset(
                    n for n in self.catalog if n.prefix == prefix)
            self.routers[rid] = RouterState(
                rid, ContentStore(cs_capacity, scenario.cs_policy), spts[rid],
                graph.adj[rid], strategy, forwarding, scenario.fib_capacity,
                scenario.fib_entry_ttl, scenario.timeout, scenario.payload_size,
                origin, producer_routes, self.nonces)

        self.links: dict[tuple[RouterId, RouterId], LinkQueue] = {
            key: LinkQueue(link.delay, link.bandwidth, scenario.queue_capacity)
            for key, link in graph.links.items()
        }

        self.stats = MetricsReport(duration=scenario.sim_duration)
        self._heap: list = []
        self._seq = itertools.count()
        self._inflight_drops = 0

        self._push(scenario.sim_duration, EV_END, None, None, None)
        for time, count in scenario.failures:
            self._push(time, EV_FAILURE, count, None, None)
        if scenario.cache_update_ratio > 0:
            for second in range(1, int(scenario.sim_duration) + 1):
                self._push(float(second), EV_CHURN, None, None, None)
        for time, consumer, name in generate_interest_events(
                graph.consumers(), self.catalog, scenario, self.rng):
            self._push(time, EV_ISSUE, consumer, name, None)

    def _override_link(self, link):
        delay = link.delay if self.scenario.link_delay is None else self.scenario.link_delay
        bandwidth = link.bandwidth
        override = self.scenario.link_bandwidth
        if override == "unlimited":
            bandwidth = None
        elif override is not None:
            bandwidth = float(override)
        return type(link)(delay, bandwidth)

    def _push(self, time, kind, a, b, c):
        heappush(self._heap, (time, next(self._seq), kind, a, b, c))

    def run(self) -> MetricsReport:
        heap = self._heap
        stats = self.stats
        while heap:
            now, _, kind, a, b, c = heappop(heap)
            if kind == EV_ARRIVAL:
                self._on_arrival(now, a, b, c)
            elif kind == EV_TIMEOUT:
                self._on_timeout_event(now, a, b, c)
            elif kind == EV_ISSUE:
                self._on_issue(now, a, b)
            elif kind == EV_CHURN:
                inject_cache_churn(list(self.routers.values()),
                                   self.scenario.cache_update_ratio, self.rng)
            elif kind == EV_FAILURE:
                self._on_failure(a)
            else:  # EV_END
                break
        stats.pending_at_end = sum(
            len(entry.local_tokens)
            for router in self.routers.values()
            for entry in router.pit.values())
        return stats.finalize()

    # -- event handlers -------------------------------------------------------

    def _on_issue(self, now: float, rid: RouterId, name: ContentName) -> None:
        router = self.routers.get(rid)
        if router is None:
            return
        self.stats.issued_interests += 1
        interest = InterestPacket(name, next(self.nonces), issue_time=now)
        if self.interest_hook is None:
            actions = router.on_interest(interest, LOCAL, now, self.rng)
        else:
            actions = self._hooked_interest(router, interest, LOCAL, now)
        self._apply(rid, actions, now)
        self._arm_timeout(router, rid, name)

    def _on_arrival(self, now: float, packet, src: RouterId, dst: RouterId) -> None:
        router = self.routers.get(dst)
        if router is None or (src, dst) not in self.links:
            self._inflight_drops += 1
            return
        packet.hop_count += 1
        if isinstance(packet, InterestPacket):
            self.stats.received_interests += 1
            if self.interest_hook is None:
                actions = router.on_interest(packet, src, now, self.rng)
            else:
                actions = self._hooked_interest(router, packet, src, now)
            self._apply(dst, actions, now)
            self._arm_timeout(router, dst, packet.name)
        else:
            self.stats.received_data += 1
            actions = router.on_data(packet, src, now)
            self._apply(dst, actions, now)

    def _hooked_interest(self, router, interest, in_iface, now):
        entry = router.pit.get(interest.name)
        had_entry = entry is not None
        nonce_seen = had_entry and interest.nonce in entry.seen_nonces
        actions = router.on_interest(interest, in_iface, now, self.rng)
        self.interest_hook(router.id, interest, in_iface, had_entry,
                           nonce_seen, actions)
        return actions

    def _on_timeout_event(self, now: float, rid: RouterId, name: ContentName,
                          deadline: float) -> None:
        router = self.routers.get(rid)
        if router is None:
            return
        entry = router.pit.get(name)
        if entry is None or entry.deadline != deadline:
            return
        self.stats.timeout_count += 1
        actions = router.on_timeout(name, now, self.rng)
        self._apply(rid, actions, now)
        self._arm_timeout(router, rid, name)

    def _on_failure(self, count: int) -> None:
        self.graph, spts, victims = inject_failure(self.graph, count, self.rng)
        for victim in victims:
            router = self.routers.pop(victim)
            self.stats.unsatisfied_failed += sum(
                len(entry.local_tokens) for entry in router.pit.values())
        self.links = {key: lq for key, lq in self.links.items()
                      if key in self.graph.links}
        for rid, router in self.routers.items():
            router.replace_spt(spts[rid], self.graph.adj[rid])

    # -- action execution -----------------------------------------------------

    def _apply(self, rid: RouterId, actions: list[Action], now: float) -> None:
        stats = self.stats
        for act in actions:
            kind = act.kind
            if kind is ActionKind.FORWARD_INTEREST:
                stats.sent_interests += 1
                stats.forwarded_interests += 1
                self._transmit(rid, act.out_iface, act.packet, now)
            elif kind is ActionKind.FORWARD_DATA:
                stats.sent_data += 1
                self._transmit(rid, act.out_iface, act.packet, now)
            elif kind is ActionKind.DELIVER_LOCAL:
                entry = act.entry
                data = act.packet
                stats.delivered_data += 1
                stats.hop_count_sum += data.hop_count
                for _token, t0 in entry.local_tokens:
                    stats.satisfied_count += 1
                    stats.add_response(now - t0)
                if entry.expected_provider is not None:
                    stats.expected_provider_total += 1
                    if entry.expected_provider == data.provider_id:
                        stats.expected_provider_hits += 1
            elif act.reason == "unsatisfied":
                stats.unsatisfied_timeout += len(act.entry.local_tokens)

    def _transmit(self, src: RouterId, dst: RouterId, packet, now: float) -> None:
        link = self.links.get((src, dst))
        if link is None:
            return  # interface severed by a failure: sent but lost
        arrival = schedule_transmission(link, wire_size(packet), now)
        if arrival is None:
            return  # drop-tail loss: sent but never received
        self._push(arrival, EV_ARRIVAL, packet.clone(), src, dst)

    def _arm_timeout(self, router: RouterState, rid: RouterId,
                     name: ContentName) -> None:
        entry = router.pit.get(name)
        if entry is not None and entry.timeout_event_at != entry.deadline:
            entry.timeout_event_at = entry.deadline
            self._push(entry.deadline, EV_TIMEOUT, rid, name, entry.deadline)


def run(scenario: Scenario) -> MetricsReport:
    """Run one scenario to completion and return its finalized report."""
    return Simulation(scenario).run()


def scenario_variant(scenario: Scenario, **overrides) -> Scenario:
    return replace(scenario, **overrides)
