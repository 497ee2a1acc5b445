"""Deterministic replay of a contact trace under one router flavour.

Per contact: mutual setup at contact start (handshake, plaintext announce,
or summary exchange depending on the router); at contact end, delivery
notices, then transfers within the byte budget (link rate times contact
duration per direction), then the energy or predictability updates.
Forwarding decisions therefore always see pre-contact values.

Event order is (time, kind priority, sequence number) with contact starts
before message creations before contact ends at equal times; all ties are
broken by the deterministic sequence numbers assigned at trace build time.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor

from .. import auth
from ..baselines import EpidemicRouter, NoPrivacyPrifRouter, ProphetRouter
from ..model import ContactEvent, Message
from ..routing import (Action, AuthContext, PrifRouter, RouterConfig, WireLog,
                       encode_message_header, relay_copy, seal_payload)
from .metrics import MetricsLedger, MetricsReport
from .scenario import MB, Scenario
from .trace import ContactTrace, build_trace, stream_seed, _STREAM_CRYPTO

TRACE_SCHEMA = ("lines are 'time kind a b msg'; '-' marks an absent field; "
                "kinds: contact_start contact_end hs_ok hs_fail create reject "
                "relay deliver dup anti handoff evict expire partial")

DecisionLog = list[tuple[float, int, int, int, str, str]]


class ReplayEngine:
    """One run: scenario + trace + router flavour -> metrics report."""

    def __init__(self, scenario: Scenario, trace: ContactTrace,
                 wire: WireLog | None = None,
                 decisions: DecisionLog | None = None,
                 trace_lines: list[str] | None = None) -> None:
        scenario.validate()
        self.scenario = scenario
        self.trace = trace
        self.wire = wire
        self.decisions = decisions
        self.trace_lines = trace_lines
        self.ledger = MetricsLedger()
        self.crypto_rng = random.Random(stream_seed(scenario.seed, _STREAM_CRYPTO))
        self.ta: auth.TrustAuthority | None = None
        self.gid_of_interest: dict[int, str] = {}
        self.routers = self._build_routers()
        self.active: dict[tuple[int, int], tuple[bool, int, int]] = {}
        self.link_rate = scenario.per_node("link_rate_bps")

    # -- construction -----------------------------------------------------

    def _build_routers(self) -> dict[int, object]:
        sc = self.scenario
        interests = self.trace.interests
        config = RouterConfig(forward_and_delete=sc.forward_and_delete,
                              antipacket_mode=sc.antipacket_mode,
                              charge_handshake_bytes=sc.charge_handshake_bytes)
        n_communities = int(interests.max()) + 1
        routers: dict[int, object] = {}
        if sc.router == "prif":
            params = auth.TOY_PARAMS if sc.crypto == "toy" else auth.DEFAULT_PARAMS_2048
            self.ta = auth.TrustAuthority(params, self.crypto_rng)
            for idx in range(n_communities):
                self.gid_of_interest[idx] = self.ta.create_group().gid
            ctx = AuthContext(params, self.ta.rl, self.ta.directory())
            for node in range(sc.n_nodes):
                interest = int(interests[node])
                gid = self.gid_of_interest[interest]
                routers[node] = PrifRouter(node, interest, gid,
                                           self.ta.register(gid), ctx,
                                           sc.energy, sc.buffer_bytes, config)
        elif sc.router == "prif-noprivacy":
            for node in range(sc.n_nodes):
                routers[node] = NoPrivacyPrifRouter(node, int(interests[node]),
                                                    sc.energy, sc.buffer_bytes,
                                                    config)
        elif sc.router == "epidemic":
            for node in range(sc.n_nodes):
                routers[node] = EpidemicRouter(node, int(interests[node]),
                                               sc.buffer_bytes, config)
        elif sc.router == "prophet":
            for node in range(sc.n_nodes):
                routers[node] = ProphetRouter(node, int(interests[node]),
                                              sc.buffer_bytes, config,
                                              p_init=sc.prophet_p_init,
                                              beta_transitive=sc.prophet_beta,
                                              gamma_age=sc.prophet_gamma,
                                              window=sc.energy.window)
        else:
            raise ValueError(f"unknown router {sc.router!r}")
        return routers

    # -- trace lines ----------------------------------------------------------

    def _line(self, t: float, kind: str, a, b, msg) -> None:
        if self.trace_lines is not None:
            fa = "-" if a is None else str(a)
            fb = "-" if b is None else str(b)
            fm = "-" if msg is None else str(msg)
            self.trace_lines.append(f"{t:.1f} {kind} {fa} {fb} {fm}")

    # -- event handlers ----------------------------------------------------------

    def _on_create(self, plan_entry) -> None:
        sc = self.scenario
        p = plan_entry
        dest_router = self.routers[p.destination]
        dest_interest = int(self.trace.interests[p.destination])
        sealed = seal_payload(p.token, dest_router.pseudo_identity(), p.nonce)
        m = Message(msg_id=p.msg_id, source=p.source, destination=p.destination,
                    dest_interest=dest_interest,
                    dest_gid=self.gid_of_interest.get(dest_interest, ""),
                    size_bytes=p.size_bytes, created_at=p.t, ttl_min=sc.ttl_min,
                    hop_count=0, payload=sealed)
        self.ledger.on_create(m)
        self._line(p.t, "create", p.source, p.destination, p.msg_id)
        src_router = self.routers[p.source]
        admitted, evicted, purged = src_router.admit(m, p.t)
        self._account_buffer_fallout(p.t, p.source, evicted, purged)
        if admitted:
            self.ledger.on_admit(m)
        else:
            self.ledger.on_reject(m)
            self._line(p.t, "reject", p.source, None, p.msg_id)

    def _account_buffer_fallout(self, now: float, node: int,
                                evicted: list[Message], purged: list[Message]) -> None:
        for v in purged:
            self.ledger.on_copy_gone(v, "expired")
            self._line(now, "expire", node, None, v.msg_id)
        for v in evicted:
            self.ledger.on_copy_gone(v, "evicted")
            self._line(now, "evict", node, None, v.msg_id)

    def _on_contact_start(self, c: ContactEvent) -> None:
        ra, rb = self.routers[c.a], self.routers[c.b]
        ok, cost_ab, cost_ba = ra.begin_contact(rb, c.start, self.crypto_rng, self.wire)
        self.active[(c.a, c.b)] = (ok, cost_ab, cost_ba)
        self._line(c.start, "contact_start", c.a, c.b, None)
        self._line(c.start, "hs_ok" if ok else "hs_fail", c.a, c.b, None)

    def _on_contact_end(self, c: ContactEvent) -> None:
        ra, rb = self.routers[c.a], self.routers[c.b]
        ok, cost_ab, cost_ba = self.active.pop((c.a, c.b))
        self._line(c.end, "contact_end", c.a, c.b, None)
        if ok:
            now = c.end
            if (self.scenario.antipacket_mode == "gossip"
                    and isinstance(ra, PrifRouter)):
                dropped_a, dropped_b = ra.exchange_antipackets(rb)
                for node, dropped in ((c.a, dropped_a), (c.b, dropped_b)):
                    for v in dropped:
                        self.ledger.on_copy_gone(v, "antipacket")
                        self._line(now, "anti", node, None, v.msg_id)
            rate = min(self.link_rate[c.a], self.link_rate[c.b])
            budget = rate * c.duration / 8.0
            charge = self.scenario.charge_handshake_bytes
            self._transfer(ra, rb, budget - (cost_ab if charge else 0), now)
            self._transfer(rb, ra, budget - (cost_ba if charge else 0), now)
        ra.end_contact(rb, c)

    def _transfer(self, carrier, peer, budget: float, now: float) -> None:
        if budget <= 0:
            return
        for m in carrier.schedule_messages(peer, now):
            decision = carrier.decide(peer, m, now)
            if self.decisions is not None:
                self.decisions.append((now, carrier.node, peer.node, m.msg_id,
                                       decision.action.value, decision.reason.value))
            if decision.action is Action.HOLD:
                continue
            if m.size_bytes > budget:
                # not enough contact time left: partial transfer, discarded
                self._line(now, "partial", carrier.node, peer.node, m.msg_id)
                break
            budget -= m.size_bytes
            copy = relay_copy(m)
            self.ledger.on_relay(copy)
            if self.wire is not None:
                header = encode_message_header(copy, carrier.header_label(copy))
                self.wire.record(now, carrier.node, peer.node, "msg_header", header)
                self.wire.record(now, carrier.node, peer.node, "payload", copy.payload)
            if decision.action is Action.DELIVER:
                first = peer.accept_delivery(copy)
                self.ledger.on_delivered(copy, first)
                self._line(now, "deliver" if first else "dup",
                           carrier.node, peer.node, copy.msg_id)
                carrier.delivered_ids.add(copy.msg_id)
                own = carrier.buffer.remove(m.msg_id) if m.msg_id in carrier.buffer else None
                if own is not None:
                    self.ledger.on_copy_gone(own, "handoff")
                    self._line(now, "handoff", carrier.node, None, m.msg_id)
                if first and self.scenario.antipacket_mode == "instant":
                    self._instant_discard(copy.msg_id, now)
            else:
                admitted, evicted, purged = peer.admit(copy, now)
                self._account_buffer_fallout(now, peer.node, evicted, purged)
                if admitted:
                    self._line(now, "relay", carrier.node, peer.node, copy.msg_id)
                    if self.scenario.forward_and_delete:
                        carrier.buffer.remove(m.msg_id)
                    else:
                        self.ledger.on_admit(copy)

    def _instant_discard(self, msg_id: int, now: float) -> None:
        for node, router in self.routers.items():
            router.delivered_ids.add(msg_id)
            if msg_id in router.buffer:
                v = router.buffer.remove(msg_id)
                self.ledger.on_copy_gone(v, "antipacket")
                self._line(now, "anti", node, None, msg_id)

    # -- main loop -------------------------------------------------------------

    def run(self, axis: str = "none", axis_value: float = 0.0) -> MetricsReport:
        events: list[tuple[float, int, int, str, object]] = []
        seq = 0
        for c in self.trace.contacts:
            events.append((c.start, 0, seq, "start", c))
            seq += 1
        for p in self.trace.plan:
            events.append((p.t, 1, seq, "create", p))
            seq += 1
        for c in self.trace.contacts:
            events.append((c.end, 2, seq, "end", c))
            seq += 1
        events.sort(key=lambda e: (e[0], e[1], e[2]))
        for _, _, _, kind, payload in events:
            if kind == "start":
                self._on_contact_start(payload)
            elif kind == "create":
                self._on_create(payload)
            else:
                self._on_contact_end(payload)
        end = self.trace.duration
        for node, router in self.routers.items():
            for v in router.buffer.pop_expired(end):
                self.ledger.on_copy_gone(v, "expired")
                self._line(end, "expire", node, None, v.msg_id)
        return self.ledger.finalize(self.scenario.router, self.scenario.seed,
                                    axis, axis_value)


def run(scenario: Scenario, *, wire: WireLog | None = None,
        decisions: DecisionLog | None = None,
        trace_lines: list[str] | None = None,
        trace: ContactTrace | None = None,
        axis: str = "none", axis_value: float = 0.0) -> MetricsReport:
    """Build (or reuse) the trace for a scenario and replay it."""
    if trace is None:
        trace = build_trace(scenario)
    engine = ReplayEngine(scenario, trace, wire=wire, decisions=decisions,
                          trace_lines=trace_lines)
    return engine.run(axis=axis, axis_value=axis_value)


SWEEP_AXES = ("buffer", "ttl", "time")


def apply_axis(scenario: Scenario, axis: str, value: float) -> Scenario:
    """Bind one sweep-axis value: buffer in MB, ttl in minutes, time in
    seconds."""
    if axis == "buffer":
        return scenario.with_overrides(buffer_bytes=int(value * MB))
    if axis == "ttl":
        return scenario.with_overrides(ttl_min=float(value))
    if axis == "time":
        return scenario.with_overrides(duration=float(value))
    raise ValueError(f"unknown sweep axis {axis!r}; valid: {', '.join(SWEEP_AXES)}")


def _sweep_one_seed(args) -> list[MetricsReport]:
    scenario, axis, values, seed = args
    reports = []
    base = scenario.with_overrides(seed=seed)
    shared_trace = None if axis == "time" else build_trace(base)
    for value in values:
        sc = apply_axis(base, axis, value)
        trace = build_trace(sc) if axis == "time" else shared_trace
        reports.append(run(sc, trace=trace, axis=axis, axis_value=value))
    return reports


def run_sweep(scenario: Scenario, axis: str, values: list[float],
              seeds: list[int], jobs: int = 1) -> list[MetricsReport]:
    """One independent run per (value, seed); the trace is reused across
    axis values whenever the axis cannot affect it."""
    if not values:
        raise ValueError("sweep needs at least one value")
    if not seeds:
        raise ValueError("sweep needs at least one seed")
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; valid: {', '.join(SWEEP_AXES)}")
    tasks = [(scenario, axis, values, seed) for seed in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_sweep_one_seed, tasks))
    else:
        chunks = [_sweep_one_seed(t) for t in tasks]
    reports = [r for chunk in chunks for r in chunk]
    reports.sort(key=lambda r: (r.axis_value, r.seed))
    return reports
