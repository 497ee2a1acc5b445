"""Store-carry-forward simulator and protocol library for interest-community
forwarding with privacy-preserving group-membership authentication."""

from .energy import EnergyParams, EnergyTable
from .model import ContactEvent, Message, message_is_expired
from .routing import ForwardDecision, PrifRouter, seal_payload, unseal_payload

__version__ = "0.1.0"

__all__ = [
    "ContactEvent",
    "EnergyParams",
    "EnergyTable",
    "ForwardDecision",
    "Message",
    "PrifRouter",
    "message_is_expired",
    "seal_payload",
    "unseal_payload",
    "__version__",
]
