"""Shared domain vocabulary: node identities, interests, messages, contacts.

All simulation times are float seconds from run start.  Message TTLs are
configured in minutes (the conventional unit for DTN workloads) and converted
exactly to seconds wherever they are compared against ages.
"""

from __future__ import annotations

from dataclasses import dataclass

NodeId = int
InterestId = int
SimTime = float

SECONDS_PER_MINUTE = 60.0


@dataclass(frozen=True)
class Message:
    """A routable store-carry-forward unit.

    ``size_bytes`` drives all buffer and bandwidth accounting; ``payload`` is
    a sealed opaque token readable only by the destination.  ``dest_gid`` is
    the opaque group label of the destination's community, the only community
    naming that ever appears on the wire; ``dest_interest`` is the plaintext
    community number, kept for scenario bookkeeping and the no-privacy router.
    """

    msg_id: int
    source: NodeId
    destination: NodeId
    dest_interest: InterestId
    dest_gid: str
    size_bytes: int
    created_at: SimTime
    ttl_min: float
    hop_count: int = 0
    payload: bytes = b""

    def __post_init__(self) -> None:
        if self.size_bytes <= 0:
            raise ValueError("message size must be positive")
        if self.ttl_min <= 0:
            raise ValueError("message ttl must be positive")
        if self.hop_count < 0:
            raise ValueError("hop count cannot be negative")

    @property
    def ttl_seconds(self) -> float:
        return self.ttl_min * SECONDS_PER_MINUTE

    def age(self, now: SimTime) -> float:
        return now - self.created_at


def message_is_expired(m: Message, now: SimTime) -> bool:
    """True iff the message age strictly exceeds its TTL.

    A message exactly at TTL age is still alive; the boundary rule is strict
    inequality and is relied on by buffer purging and metrics.
    """
    return m.age(now) > m.ttl_seconds


@dataclass(frozen=True)
class ContactEvent:
    """A closed radio-range interval between two nodes.

    The pair is unordered; constructors normalise so ``a < b``.
    """

    a: NodeId
    b: NodeId
    start: SimTime
    end: SimTime

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise ValueError("contact must have start < end")
        if self.a == self.b:
            raise ValueError("contact requires two distinct nodes")
        if self.a > self.b:
            lo, hi = self.b, self.a
            object.__setattr__(self, "a", lo)
            object.__setattr__(self, "b", hi)

    @property
    def duration(self) -> float:
        return self.end - self.start

    def peer_of(self, node: NodeId) -> NodeId:
        if node == self.a:
            return self.b
        if node == self.b:
            return self.a
        raise ValueError(f"node {node} not part of contact {self}")
