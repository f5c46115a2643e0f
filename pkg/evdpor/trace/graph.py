"""
Trace Graphs
JSON interchange format for happens-before graphs
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Tuple

from evdpor.errors import GraphFormatError
from evdpor.program.events import AccessDescriptor, AccessKind, Event, ExecutionRecord, InstanceId
from evdpor.trace.hb import ConflictModel, access_conflict, compute_hb

Edge = Tuple[int, int]


@dataclass(frozen=True)
class ConsistencyGraph:
    """Events with the po, cnf and pb generator edges (as event-list positions)"""
    events: Tuple[Event, ...]
    po: Tuple[Edge, ...] = ()
    cnf: Tuple[Edge, ...] = ()
    pb: Tuple[Edge, ...] = ()
    incomplete: FrozenSet[InstanceId] = field(default_factory=frozenset)

    @property
    def edges(self) -> Tuple[Edge, ...]:
        return self.po + self.cnf + self.pb

    def validate(self, conflicts: ConflictModel = access_conflict) -> "ConsistencyGraph":
        """Check the graph is well formed

        cnf must orient exactly the pairs of events that conflict under
        `conflicts`, and pb must join each post to the Begin of its target.

        Raises:
            GraphFormatError: bad edge endpoints, po not total per instance,
                duplicate events, a Begin posted more than once, a cnf edge
                between non-conflicting events, a conflicting pair without
                a cnf edge, or a post whose pb edge is missing or misplaced
        """
        size = len(self.events)
        for name, edges in (("po", self.po), ("cnf", self.cnf), ("pb", self.pb)):
            for i, j in edges:
                if not (0 <= i < size and 0 <= j < size) or i == j:
                    raise GraphFormatError(f"{name} edge ({i}, {j}) does not join two events")
        seen = set()
        indices: Dict[InstanceId, List[int]] = {}
        for event in self.events:
            if event.uid in seen:
                raise GraphFormatError(f"duplicate event {event}")
            seen.add(event.uid)
            indices.setdefault(event.instance, []).append(event.index)
        for instance, found in indices.items():
            if sorted(found) != list(range(1, len(found) + 1)):
                raise GraphFormatError(f"events of {instance} are not numbered 1..{len(found)}")
        for i, j in self.po:
            if self.events[i].instance != self.events[j].instance:
                raise GraphFormatError(f"po edge ({i}, {j}) joins different instances")
        reach: Dict[int, set] = {}
        for i, j in self.po:
            reach.setdefault(i, set()).add(j)
        position = {e.uid: p for p, e in enumerate(self.events)}
        for instance, found in indices.items():
            for index in range(1, len(found)):
                a, b = position[(instance, index)], position[(instance, index + 1)]
                if not self._reaches(reach, a, b):
                    raise GraphFormatError(f"po is not total on {instance}: <{instance},{index}> "
                                           f"does not precede <{instance},{index + 1}>")
        posted = set()
        for i, j in self.pb:
            if self.events[i].access.kind is not AccessKind.POST or not self.events[j].is_begin:
                raise GraphFormatError(f"pb edge ({i}, {j}) must join a post to a Begin")
            if j in posted:
                raise GraphFormatError(f"Begin {self.events[j]} is posted more than once")
            posted.add(j)
            if self.events[i].access.target != self.events[j].instance:
                raise GraphFormatError(f"pb edge ({i}, {j}) joins a post of {self.events[i].access.target} "
                                       f"to the Begin of {self.events[j].instance}")
        pb = set(self.pb)
        for i, event in enumerate(self.events):
            if event.access.kind is AccessKind.POST:
                j = position.get((event.access.target, 1))
                if j is not None and (i, j) not in pb:
                    raise GraphFormatError(f"post {event} has no pb edge to the Begin it posted")
        self._validate_cnf(conflicts)
        return self

    def _validate_cnf(self, conflicts: ConflictModel):
        oriented = set()
        for i, j in self.cnf:
            if not conflicts(self.events[i], self.events[j]):
                raise GraphFormatError(f"cnf edge ({i}, {j}) joins non-conflicting events "
                                       f"{self.events[i]} and {self.events[j]}")
            oriented.add(frozenset((i, j)))
        for j in range(len(self.events)):
            for i in range(j):
                if frozenset((i, j)) not in oriented and conflicts(self.events[i], self.events[j]):
                    raise GraphFormatError(f"conflicting events {self.events[i]} and {self.events[j]} "
                                           f"have no cnf edge")

    @staticmethod
    def _reaches(reach: Dict[int, set], a: int, b: int) -> bool:
        stack, visited = [a], set()
        while stack:
            node = stack.pop()
            if node == b:
                return True
            for nxt in reach.get(node, ()):
                if nxt not in visited:
                    visited.add(nxt)
                    stack.append(nxt)
        return False

    @classmethod
    def from_execution(cls, record: ExecutionRecord, conflicts: ConflictModel = access_conflict) -> "ConsistencyGraph":
        hb = compute_hb(record, conflicts)
        incomplete = frozenset(i for i in record.handler_of if i not in record.completed)
        return cls(record.events, tuple(hb.po), tuple(hb.cnf), tuple(hb.pb), incomplete)

    def to_dict(self) -> dict:
        return {
            "events": [{"instance": str(e.instance), "index": e.index, "access": e.access.to_dict()}
                       for e in self.events],
            "po": [list(edge) for edge in self.po],
            "cnf": [list(edge) for edge in self.cnf],
            "pb": [list(edge) for edge in self.pb],
            "incomplete": sorted(str(i) for i in self.incomplete),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConsistencyGraph":
        try:
            events = tuple(Event(InstanceId.parse(item["instance"]), int(item["index"]),
                                 AccessDescriptor.from_dict(item["access"]))
                           for item in data["events"])
            edges = {name: tuple((int(i), int(j)) for i, j in data.get(name, ()))
                     for name in ("po", "cnf", "pb")}
            incomplete = frozenset(InstanceId.parse(i) for i in data.get("incomplete", ()))
        except (AttributeError, KeyError, TypeError, ValueError) as e:
            raise GraphFormatError(f"malformed graph document: {e}")
        return cls(events, edges["po"], edges["cnf"], edges["pb"], incomplete).validate()

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def loads(cls, text: str) -> "ConsistencyGraph":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise GraphFormatError(f"invalid JSON: {e}")
        if not isinstance(data, dict):
            raise GraphFormatError("graph document must be a JSON object")
        return cls.from_dict(data)
