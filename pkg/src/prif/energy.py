"""Community-energy bookkeeping for one node.

Two kinds of record live in a node's table:

* inter-community energy, one record per same-community peer, built from
  contact durations relative to the inter-encounter gap, plus a transitive
  strengthening rule fed by summaries exchanged during contacts;
* intra-community energy, one record per foreign community, an average
  encounter rate since the first encounter with that community.

Both kinds carry the raw current observation and the previous one; reads
return a weighted moving average of the two.  All values decay by gamma per
elapsed aging window; decay is applied lazily, in whole-window quanta, before
every read and every update, which is observably identical to eager per-tick
aging.  Forwarding comparisons use strict ``>``: a tie is no evidence of
improvement, so the carrier keeps the message.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable

from .model import ContactEvent, NodeId, SimTime

CommunityKey = Hashable


@dataclass(frozen=True)
class EnergyParams:
    """Prediction weights, decay factor and aging window (seconds)."""

    alpha: float = 0.3
    beta: float = 0.3
    gamma: float = 0.98
    window: float = 30.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.window <= 0.0:
            raise ValueError("aging window must be positive")


@dataclass
class InterEnergyRecord:
    peer: NodeId
    value: float = 0.0
    prev_value: float = 0.0
    last_encounter_end: SimTime = 0.0
    last_aged_at: SimTime = 0.0
    encounter_count: int = 0


@dataclass
class IntraEnergyRecord:
    community: CommunityKey
    value: float = 0.0
    prev_value: float = 0.0
    cumulative_count: int = 0
    first_encounter: SimTime = 0.0
    last_aged_at: SimTime = 0.0


def predict_inter(rec: InterEnergyRecord, alpha: float) -> float:
    """Moving-average prediction over the last two inter observations."""
    return alpha * rec.prev_value + (1.0 - alpha) * rec.value


def predict_intra(rec: IntraEnergyRecord, beta: float) -> float:
    """Moving-average prediction over the last two intra observations."""
    return beta * rec.prev_value + (1.0 - beta) * rec.value


def _age_windows(last_aged_at: SimTime, now: SimTime, window: float) -> int:
    if now <= last_aged_at:
        return 0
    return int(math.floor((now - last_aged_at) / window))


class EnergyTable:
    """Per-node store of inter and intra community energies.

    Inter records exist only for peers of the owner's own community; intra
    records are keyed by foreign community labels and never by the owner's
    own.  Community keys are any hashable label: the privacy-preserving
    router keys them by opaque group ids, the plaintext router by interest
    numbers; the arithmetic is identical.
    """

    def __init__(self, owner: NodeId, owner_community: CommunityKey,
                 params: EnergyParams | None = None) -> None:
        self.owner = owner
        self.owner_community = owner_community
        self.params = params or EnergyParams()
        self.inter: dict[NodeId, InterEnergyRecord] = {}
        self.intra: dict[CommunityKey, IntraEnergyRecord] = {}

    # -- aging ---------------------------------------------------------

    def age(self, now: SimTime) -> None:
        """Decay every record by gamma per whole aging window elapsed.

        Decay advances ``last_aged_at`` in window quanta only, so aging to
        t1 and then t2 lands on exactly the same state as aging straight to
        t2.  Both the current and the previous observation decay, keeping
        the predicted read consistent with evaporation.
        """
        g = self.params.gamma
        w = self.params.window
        for rec in self.inter.values():
            k = _age_windows(rec.last_aged_at, now, w)
            if k:
                f = g ** k
                rec.value *= f
                rec.prev_value *= f
                rec.last_aged_at += k * w
        for rec in self.intra.values():
            k = _age_windows(rec.last_aged_at, now, w)
            if k:
                f = g ** k
                rec.value *= f
                rec.prev_value *= f
                rec.last_aged_at += k * w

    # -- inter-community updates ----------------------------------------

    def update_direct_inter(self, peer: NodeId, peer_community: CommunityKey,
                            contact: ContactEvent) -> InterEnergyRecord:
        """Record a direct same-community encounter ending now.

        The raw observation is contact duration over the gap since the
        previous encounter's end; the very first gap is measured from
        simulation start, which keeps the value in (0, 1] and penalises a
        late first contact.
        """
        if peer_community != self.owner_community:
            raise ValueError(
                "inter-community energy is only kept for same-community peers")
        now = contact.end
        self.age(now)
        rec = self.inter.get(peer)
        if rec is None:
            rec = InterEnergyRecord(peer=peer, last_aged_at=now)
            self.inter[peer] = rec
        elapsed = now - rec.last_encounter_end
        if elapsed <= 0.0:
            raise ValueError("encounters for one peer must not overlap")
        raw = contact.duration / elapsed
        rec.prev_value = rec.value
        rec.value = raw
        rec.encounter_count += 1
        rec.last_encounter_end = now
        return rec

    def update_transitive_inter(self, via: NodeId,
                                summary: Iterable[tuple[NodeId, float]],
                                now: SimTime) -> None:
        """Fold a peer's reported inter energies into our own records.

        For each reported (c, e_bc) with c other than the owner, the record
        for c gains (1 - old) * e_via * e_bc where e_via is our effective
        energy toward the relaying peer.  Entries are strengthened in place:
        the previous-observation slot and encounter count are untouched.
        """
        self.age(now)
        via_rec = self.inter.get(via)
        if via_rec is None:
            return
        e_via = predict_inter(via_rec, self.params.alpha)
        if e_via <= 0.0:
            return
        for node, e_bc in summary:
            if node == self.owner or node == via:
                continue
            rec = self.inter.get(node)
            if rec is None:
                rec = InterEnergyRecord(peer=node, last_aged_at=now)
                self.inter[node] = rec
            rec.value = rec.value + (1.0 - rec.value) * e_via * e_bc

    # -- intra-community updates ----------------------------------------

    def update_intra(self, community: CommunityKey, now: SimTime) -> IntraEnergyRecord:
        """Record an encounter with a member of a foreign community.

        The raw observation is the cumulative encounter count over the time
        since the first encounter with that community, with the denominator
        clamped to at least one aging window so back-to-back encounters
        cannot divide by ~0.
        """
        if community == self.owner_community:
            raise ValueError("intra-community energy never targets the owner's own community")
        self.age(now)
        rec = self.intra.get(community)
        if rec is None:
            rec = IntraEnergyRecord(community=community, first_encounter=now,
                                    last_aged_at=now)
            self.intra[community] = rec
        rec.cumulative_count += 1
        denom = max(now - rec.first_encounter, self.params.window)
        rec.prev_value = rec.value
        rec.value = rec.cumulative_count / denom
        return rec

    # -- reads -----------------------------------------------------------

    def effective_inter(self, peer: NodeId, now: SimTime) -> float:
        """Aged, predicted inter energy toward a peer; 0 if unknown."""
        self.age(now)
        rec = self.inter.get(peer)
        if rec is None:
            return 0.0
        return predict_inter(rec, self.params.alpha)

    def effective_intra(self, community: CommunityKey, now: SimTime) -> float:
        """Aged, predicted intra energy toward a community; 0 if unknown."""
        self.age(now)
        rec = self.intra.get(community)
        if rec is None:
            return 0.0
        return predict_intra(rec, self.params.beta)

    def inter_summary(self, now: SimTime) -> list[tuple[NodeId, float]]:
        """Snapshot of effective inter energies, exchanged during contacts."""
        self.age(now)
        a = self.params.alpha
        return [(peer, predict_inter(rec, a)) for peer, rec in sorted(self.inter.items())]

    # -- debugging --------------------------------------------------------

    def dump(self) -> str:
        """One record per line: kind, key, value, prev, last_aged_at."""
        lines = []
        for peer, rec in sorted(self.inter.items()):
            lines.append(f"inter {peer} {rec.value!r} {rec.prev_value!r} {rec.last_aged_at!r}")
        for community, rec in sorted(self.intra.items(), key=lambda kv: str(kv[0])):
            lines.append(f"intra {rec.community} {rec.value!r} {rec.prev_value!r} {rec.last_aged_at!r}")
        return "\n".join(lines)
