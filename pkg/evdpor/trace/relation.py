"""
Relations
Bitset-backed binary relations over event positions, closure and saturation
"""

from __future__ import annotations

from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from evdpor.program.events import Event, InstanceId


class Relation:
    """Binary relation on nodes 0..size-1; row i is the bitmask of successors of i"""

    def __init__(self, size: int, rows: Optional[List[int]] = None):
        self.size = size
        self.rows = rows if rows is not None else [0] * size

    @classmethod
    def from_edges(cls, size: int, edges: Iterable[Tuple[int, int]]) -> "Relation":
        relation = cls(size)
        for i, j in edges:
            relation.add(i, j)
        return relation

    def copy(self) -> "Relation":
        return Relation(self.size, list(self.rows))

    def add(self, i: int, j: int):
        self.rows[i] |= 1 << j

    def has(self, i: int, j: int) -> bool:
        return bool(self.rows[i] >> j & 1)

    def edges(self) -> Iterator[Tuple[int, int]]:
        for i, row in enumerate(self.rows):
            j = 0
            while row:
                if row & 1:
                    yield i, j
                row >>= 1
                j += 1

    def close(self) -> "Relation":
        """Transitive closure in place"""
        rows = self.rows
        for k in range(self.size):
            bit = 1 << k
            row_k = rows[k]
            for i in range(self.size):
                if rows[i] & bit:
                    rows[i] |= row_k
        return self

    def reduced(self) -> "Relation":
        """Edges not implied by a two-step path; reachability is unchanged when acyclic"""
        rows = self.rows
        result = []
        for row in rows:
            implied = 0
            members = row
            while members:
                low = members & -members
                implied |= rows[low.bit_length() - 1]
                members ^= low
            result.append(row & ~implied)
        return Relation(self.size, result)

    @property
    def cyclic(self) -> bool:
        """Only meaningful on a closed relation"""
        return any(row >> i & 1 for i, row in enumerate(self.rows))

    def issubset(self, other: "Relation") -> bool:
        return all(a & ~b == 0 for a, b in zip(self.rows, other.rows))

    def __eq__(self, other) -> bool:
        return isinstance(other, Relation) and self.rows == other.rows

    def __repr__(self) -> str:
        return f"Relation({self.size}, {sorted(self.edges())})"


def message_masks(events: Sequence[Event]) -> Dict[str, List[int]]:
    """Handler -> bitmask of event positions per message instance on it"""
    masks: Dict[InstanceId, int] = {}
    for position, event in enumerate(events):
        if event.instance.handler is not None:
            masks[event.instance] = masks.get(event.instance, 0) | 1 << position
    by_handler: Dict[str, List[int]] = {}
    for instance in sorted(masks):
        by_handler.setdefault(instance.handler, []).append(masks[instance])
    return by_handler


def saturate_masks(relation: Relation, groups: Dict[str, List[int]]) -> Relation:
    """Close `relation` in place under transitivity and whole-message ordering

    For two messages on one handler, once some event of one precedes some
    event of the other, every event of the first precedes every event of
    the second. A cycle is reported through `relation.cyclic`.
    """
    rows = relation.rows
    while True:
        relation.close()
        changed = False
        for masks in groups.values():
            for a in masks:
                reach = 0
                members = a
                while members:
                    low = members & -members
                    reach |= rows[low.bit_length() - 1]
                    members ^= low
                for b in masks:
                    if a == b or not reach & b:
                        continue
                    members = a
                    while members:
                        low = members & -members
                        i = low.bit_length() - 1
                        if rows[i] & b != b:
                            rows[i] |= b
                            changed = True
                        members ^= low
        if not changed:
            return relation


def saturate(events: Sequence[Event], base_order: Relation) -> Relation:
    """Saturation of `base_order` over `events` grouped by their handlers

    Returns a new relation; check `.cyclic` for the inconsistency signal.
    """
    return saturate_masks(base_order.copy(), message_masks(events))
