"""
Race Reversal
Builds the maximal executions that perform the second event of a race
without the first, as (prefix of E, wakeup sequence) pairs
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from evdpor.consistency.checker import linearize, message_spans, order_messages
from evdpor.program.events import Event, ExecutionRecord, InstanceId
from evdpor.trace.hb import ConflictModel, HbRelation, access_conflict, compute_hb, trace_key
from evdpor.trace.relation import Relation, message_masks, saturate_masks

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReversalCandidate:
    """E' (a prefix of E, by length) and the wakeup sequence u.e' to run after it"""
    prefix_len: int
    wakeup: Tuple[Event, ...]
    removed: FrozenSet[InstanceId] = frozenset()

    def base_prefix(self, execution: ExecutionRecord) -> ExecutionRecord:
        return execution.prefix(self.prefix_len)

    def schedule(self, execution: Sequence[Event]) -> List[InstanceId]:
        """Full schedule E'.u.e' as instance ids"""
        return [e.instance for e in execution[:self.prefix_len]] + [e.instance for e in self.wakeup]


@dataclass
class ReversalStats:
    races: int = 0
    candidates: int = 0
    abandoned: int = 0
    cycle_breaks: int = 0
    first_attempt_ok: int = 0
    order_repairs: int = 0

    def as_dict(self) -> Dict[str, int]:
        return dict(self.__dict__)


def not_after(execution: Sequence[Event], e: Event,
              conflicts: ConflictModel = access_conflict) -> List[Event]:
    """Events of the execution, in order, that do not happen after e (e excluded)"""
    hb = compute_hb(execution, conflicts)
    i = hb.position[e.uid]
    return [event for k, event in enumerate(hb.events) if k != i and not hb.before(i, k)]


class _Reversal:
    """One reverse_race call: search over kept-event sets, then linearize"""

    def __init__(self, events: Tuple[Event, ...], hb: HbRelation, first: int, second: int,
                 stats: ReversalStats):
        self.events = events
        self.hb = hb
        self.second = second
        self.target = events[second].instance
        self.stats = stats
        self.base = frozenset(k for k in range(len(events))
                              if k != first and k != second and not hb.before(first, k))
        self.required = self._required()

    def _required(self) -> FrozenSet[int]:
        """The anchor (last earlier event of e'-s instance, or its post) and its hb-predecessors"""
        hb = self.hb
        anchor: Optional[int] = None
        for k in range(self.second - 1, -1, -1):
            if self.events[k].instance == self.target:
                anchor = k
                break
        if anchor is None:
            anchor = next((i for i, j in hb.pb if j == self.second), None)
        if anchor is None:
            return frozenset()
        return frozenset([anchor] + hb.predecessors(anchor))

    # Removal

    def remove(self, kept: FrozenSet[int], instances: Iterable[InstanceId]) -> FrozenSet[int]:
        """Drop every kept event of `instances` and all of their hb-successors"""
        instances = set(instances)
        removed = [k for k in kept if self.events[k].instance in instances]
        return frozenset(k for k in kept
                         if self.events[k].instance not in instances
                         and not any(self.hb.before(r, k) for r in removed))

    def viable(self, kept: FrozenSet[int]) -> bool:
        return self.required <= kept

    # Per-state structure

    def nodes(self, kept: FrozenSet[int]) -> List[int]:
        return sorted(kept) + [self.second]

    def incomplete(self, nodes: List[int]) -> Dict[InstanceId, bool]:
        """Message instance -> finished within nodes"""
        finished: Dict[InstanceId, bool] = {}
        for k in nodes:
            event = self.events[k]
            if event.instance.is_thread:
                continue
            finished[event.instance] = finished.get(event.instance, False) or event.final
        return {m: done for m, done in finished.items() if not done}

    def holds_required(self, nodes: List[int], instance: InstanceId) -> bool:
        return instance == self.target or any(
            self.events[k].instance == instance for k in nodes if k in self.required)

    def relation(self, nodes: List[int], incomplete: Iterable[InstanceId]) -> Tuple[Relation, List[Event]]:
        """Saturated hb over nodes, e' last, other messages before incomplete ones"""
        local = [self.events[k] for k in nodes]
        size = len(nodes)
        relation = Relation(size)
        for a in range(size):
            for b in range(size):
                if a != b and self.hb.before(nodes[a], nodes[b]):
                    relation.add(a, b)
        for a in range(size - 1):
            relation.add(a, size - 1)
        spans = message_spans(local)
        for m in incomplete:
            for other, (_, last, _) in spans.items():
                if other != m and other.handler == m.handler:
                    relation.add(last, spans[m][0])
        return saturate_masks(relation, message_masks(local)), local

    def cycle_instances(self, relation: Relation, local: List[Event]) -> List[InstanceId]:
        """Instances on the cycle through the least cyclic node"""
        x = next(i for i in range(relation.size) if relation.has(i, i))
        members = {local[y].instance for y in range(relation.size)
                   if y == x or (relation.has(x, y) and relation.has(y, x))}
        return sorted(members)


def _appearance_order(relation: Relation, local: List[Event], nodes: List[int]) -> Relation:
    """Order every unordered pair of same-handler messages as they appear in E"""
    relation = relation.copy()
    spans = message_spans(local)
    by_handler: Dict[str, List[InstanceId]] = {}
    for m in sorted(spans, key=lambda m: nodes[spans[m][0]]):
        by_handler.setdefault(m.handler, []).append(m)
    for messages in by_handler.values():
        for index, a in enumerate(messages):
            for b in messages[index + 1:]:
                fa, fb = spans[a][0], spans[b][0]
                if not relation.has(fa, fb) and not relation.has(fb, fa):
                    relation.add(spans[a][1], fb)
    return saturate_masks(relation, message_masks(local))


def reverse_race(execution: Sequence[Event], e: Event, e_prime: Event,
                 conflicts: ConflictModel = access_conflict,
                 stats: Optional[ReversalStats] = None,
                 hb: Optional[HbRelation] = None) -> List[ReversalCandidate]:
    """Race-reversing (prefix, wakeup) pairs for the race e -> e'

    Every returned wakeup ends with e', none contains e, and the prefix
    followed by the wakeup minus e' is an hb-prefix of the execution.
    An irreversible race gives an empty list. `hb` may be passed when the
    caller already holds the happens-before of `execution`.
    """
    stats = stats if stats is not None else ReversalStats()
    stats.races += 1
    events = tuple(execution)
    hb = hb if hb is not None else compute_hb(events, conflicts)
    work = _Reversal(events, hb, hb.position[e.uid], hb.position[e_prime.uid], stats)

    finals: List[Tuple[FrozenSet[int], FrozenSet[InstanceId]]] = []
    visited: Set[FrozenSet[int]] = set()
    stack: List[Tuple[FrozenSet[int], FrozenSet[InstanceId]]] = [(work.base, frozenset())]
    while stack:
        kept, removed = stack.pop()
        if kept in visited:
            continue
        visited.add(kept)
        if not work.viable(kept):
            stats.abandoned += 1
            continue
        nodes = work.nodes(kept)
        incomplete = work.incomplete(nodes)

        # an incomplete message holding a required event keeps its handler
        drop = set()
        for m in sorted(incomplete):
            if m not in drop and work.holds_required(nodes, m):
                drop.update(o for o in incomplete if o != m and o.handler == m.handler)
        if drop:
            stack.append((work.remove(kept, drop), removed | drop))
            continue

        per_handler: Dict[str, List[InstanceId]] = {}
        for m in sorted(incomplete):
            per_handler.setdefault(m.handler, []).append(m)
        crowded = next((ms for _, ms in sorted(per_handler.items()) if len(ms) > 1), None)
        if crowded is not None:
            for keep in reversed(crowded):
                others = frozenset(o for o in crowded if o != keep)
                stack.append((work.remove(kept, others), removed | others))
            continue

        relation, local = work.relation(nodes, incomplete)
        if relation.cyclic:
            stats.cycle_breaks += 1
            for instance in reversed(work.cycle_instances(relation, local)):
                if instance == work.target:
                    continue
                stack.append((work.remove(kept, [instance]), removed | {instance}))
            continue
        finals.append((kept, removed))

    candidates: List[ReversalCandidate] = []
    seen = set()
    for kept, removed in sorted(finals, key=lambda item: sorted(item[0])):
        candidate = _finalize(work, kept, removed, conflicts)
        if candidate is None:
            continue
        key = trace_key(events[:candidate.prefix_len] + candidate.wakeup, conflicts)
        if key in seen:
            continue
        seen.add(key)
        candidates.append(candidate)
    stats.candidates += len(candidates)
    logger.debug("race %s -> %s: %d candidate(s)", e, e_prime, len(candidates))
    return candidates


def _finalize(work: _Reversal, kept: FrozenSet[int], removed: FrozenSet[InstanceId],
              conflicts: ConflictModel) -> Optional[ReversalCandidate]:
    nodes = work.nodes(kept)
    incomplete = work.incomplete(nodes)
    relation, local = work.relation(nodes, incomplete)
    ordered = _appearance_order(relation, local, nodes)
    if ordered.cyclic:
        work.stats.order_repairs += 1
        found = order_messages(local, relation, incomplete=incomplete)
        if found is None:
            logger.debug("no message order linearizes kept set of %d events", len(nodes))
            return None
        ordered = found[1]
    else:
        work.stats.first_attempt_ok += 1
    order = linearize(len(nodes), ordered, priority=lambda n: nodes[n])
    linear = [local[n] for n in order]
    assert linear[-1] == work.events[work.second]
    body = linear[:-1]
    prefix_len = 0
    while prefix_len < len(body) and body[prefix_len] == work.events[prefix_len]:
        prefix_len += 1
    return ReversalCandidate(prefix_len, tuple(linear[prefix_len:]), removed)
