"""
Consistency Package
Weak-initials membership and event-driven consistency of trace graphs
"""

from evdpor.consistency.checker import check_consistency, linearize, order_messages
from evdpor.consistency.weak_initials import (
    AccessSummary, PrefixView, StageCounters, WeakInitials, WiResult, wi_decide, wi_member,
)

__all__ = [
    "check_consistency", "linearize", "order_messages", "AccessSummary", "PrefixView",
    "StageCounters", "WeakInitials", "WiResult", "wi_decide", "wi_member",
]
