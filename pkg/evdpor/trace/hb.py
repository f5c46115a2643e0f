"""
Happens-Before
Vector-clock happens-before, trace keys, races and hb-prefix tests
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from evdpor.program.events import AccessKind, Event, ExecutionRecord, InstanceId
from evdpor.trace.relation import Relation

ConflictModel = Callable[[Event, Event], bool]

Events = Union[ExecutionRecord, Sequence[Event]]


def access_conflict(a: Event, b: Event) -> bool:
    """Events of different instances accessing a common variable, one writing"""
    return a.access.conflicts_with(b.access) and a.instance != b.instance


def coarse_conflict(a: Event, b: Event) -> bool:
    """access_conflict, plus any two events of different messages on one handler"""
    if a.instance == b.instance:
        return False
    handler = a.instance.handler
    if handler is not None and handler == b.instance.handler:
        return True
    return a.access.conflicts_with(b.access)


def _events(events: Events) -> Tuple[Event, ...]:
    return events.events if isinstance(events, ExecutionRecord) else tuple(events)


class HbRelation:
    """Happens-before over a sequence of events

    Every event carries a vector clock over the instances of the sequence;
    the po, cnf and pb generator edges are kept as position pairs.
    """

    def __init__(self, events: Sequence[Event], conflicts: ConflictModel = access_conflict):
        self.events = tuple(events)
        self.conflicts = conflicts
        self.slots: Dict[InstanceId, int] = {}
        for event in self.events:
            self.slots.setdefault(event.instance, len(self.slots))
        self.position = {e.uid: i for i, e in enumerate(self.events)}
        self._slot = [self.slots[e.instance] for e in self.events]
        self.po: List[Tuple[int, int]] = []
        self.cnf: List[Tuple[int, int]] = []
        self.pb: List[Tuple[int, int]] = []
        self.clocks: List[List[int]] = []
        self._build()

    def _build(self):
        width = len(self.slots)
        last: Dict[InstanceId, int] = {}
        post_of: Dict[InstanceId, int] = {}
        for j, event in enumerate(self.events):
            preds = []
            if event.instance in last:
                preds.append(last[event.instance])
                self.po.append((last[event.instance], j))
            if event.is_begin and event.instance in post_of:
                preds.append(post_of[event.instance])
                self.pb.append((post_of[event.instance], j))
            for i in range(j):
                if self.conflicts(self.events[i], event):
                    preds.append(i)
                    self.cnf.append((i, j))
            clock = [0] * width
            for p in preds:
                clock = [max(x, y) for x, y in zip(clock, self.clocks[p])]
            clock[self._slot[j]] = event.index
            self.clocks.append(clock)
            last[event.instance] = j
            if event.access.kind is AccessKind.POST:
                post_of[event.access.target] = j

    def __len__(self) -> int:
        return len(self.events)

    def before(self, i: int, j: int) -> bool:
        """Position i happens-before position j"""
        if i == j:
            return False
        return self.clocks[j][self._slot[i]] >= self.events[i].index

    def happens_before(self, a: Event, b: Event) -> bool:
        return self.before(self.position[a.uid], self.position[b.uid])

    def predecessors(self, j: int) -> List[int]:
        return [i for i in range(j) if self.before(i, j)]

    def successors(self, i: int) -> List[int]:
        return [j for j in range(i + 1, len(self.events)) if self.before(i, j)]

    def generators(self) -> Relation:
        """po, cnf and pb as one relation over positions"""
        return Relation.from_edges(len(self.events), self.po + self.cnf + self.pb)

    def relation(self) -> Relation:
        """Transitive closure as an explicit relation"""
        relation = Relation(len(self.events))
        for j in range(len(self.events)):
            for i in range(j):
                if self.before(i, j):
                    relation.add(i, j)
        return relation


def compute_hb(events: Events, conflicts: ConflictModel = access_conflict) -> HbRelation:
    """Happens-before of an execution (or of any event sequence)"""
    return HbRelation(_events(events), conflicts)


@dataclass(frozen=True)
class TraceKey:
    """Canonical form of a trace: sorted events and sorted conflict edges

    po and pb are determined by the events, so the oriented conflict
    pairs fix the rest of the happens-before closure.
    """
    events: Tuple[Tuple, ...]
    edges: Tuple[Tuple, ...]

    def digest(self) -> str:
        text = repr((self.events, self.edges)).encode()
        return hashlib.sha256(text).hexdigest()[:16]


def trace_key(events: Events, conflicts: ConflictModel = access_conflict,
              hb: Optional[HbRelation] = None) -> TraceKey:
    """Schedule-independent key; equal keys iff equivalent executions"""
    evs = _events(events)
    hb = hb or HbRelation(evs, conflicts)

    def uid(event: Event) -> Tuple:
        return (event.instance, event.index)

    nodes = sorted((e.instance, e.index, e.access.sort_key(), e.final) for e in evs)
    edges = sorted((uid(evs[i]), uid(evs[j])) for i, j in hb.cnf)
    return TraceKey(tuple(nodes), tuple(edges))


def race_positions(hb: HbRelation) -> List[Tuple[int, int]]:
    """Position pairs of hb-adjacent conflicting events of different instances"""
    races = []
    for i, j in hb.cnf:
        if not any(hb.before(i, k) and hb.before(k, j) for k in range(i + 1, j)):
            races.append((i, j))
    return races


def detect_races(events: Events, conflicts: ConflictModel = access_conflict,
                 hb: Optional[HbRelation] = None) -> List[Tuple[Event, Event]]:
    """All races of an execution, ordered by position of the second event"""
    hb = hb or compute_hb(events, conflicts)
    pairs = sorted(race_positions(hb), key=lambda pair: (pair[1], pair[0]))
    return [(hb.events[i], hb.events[j]) for i, j in pairs]


def is_hb_prefix(sub: Events, full: Events, conflicts: ConflictModel = access_conflict) -> bool:
    """True iff `sub` is a happens-before prefix of `full`

    dom(sub) is contained in dom(full), hb(sub) is hb(full) restricted to
    it, and dom(sub) is closed under hb-predecessors in `full`.
    """
    sub_events, full_events = _events(sub), _events(full)
    full_hb = compute_hb(full_events, conflicts)
    positions = []
    for event in sub_events:
        position = full_hb.position.get(event.uid)
        if position is None or full_events[position].access != event.access:
            return False
        positions.append(position)
    members = set(positions)
    for position in positions:
        if any(p not in members for p in full_hb.predecessors(position)):
            return False
    sub_hb = compute_hb(sub_events, conflicts)
    for a, pa in enumerate(positions):
        for b, pb in enumerate(positions):
            if sub_hb.before(a, b) != full_hb.before(pa, pb):
                return False
    return True
