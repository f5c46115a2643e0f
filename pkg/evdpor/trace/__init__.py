"""
Trace Package
Happens-before, trace keys, saturation, races and the graph format
"""

from evdpor.trace.hb import (
    HbRelation, TraceKey, access_conflict, coarse_conflict, compute_hb, detect_races,
    is_hb_prefix, race_positions, trace_key,
)
from evdpor.trace.relation import Relation, saturate

__all__ = [
    "HbRelation", "TraceKey", "access_conflict", "coarse_conflict", "compute_hb", "detect_races",
    "is_hb_prefix", "race_positions", "trace_key", "Relation", "saturate",
]
