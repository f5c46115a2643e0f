"""
Weak Initials
Decides whether an instance can run first in some continuation that keeps a
given event sequence as a happens-before prefix
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from evdpor.consistency.checker import linearize, message_spans, order_messages
from evdpor.program.events import LOCAL, AccessDescriptor, AccessKind, Event, InstanceId
from evdpor.trace.hb import ConflictModel, HbRelation, access_conflict
from evdpor.trace.relation import Relation, message_masks, saturate_masks

logger = logging.getLogger(__name__)

AccessSequence = Tuple[AccessDescriptor, ...]


@dataclass(frozen=True)
class PrefixView:
    """Scheduling facts about the state reached by a prefix"""
    started: FrozenSet[InstanceId] = frozenset()
    finished: FrozenSet[InstanceId] = frozenset()
    posted: FrozenSet[InstanceId] = frozenset()
    steps: Mapping[InstanceId, int] = field(default_factory=dict)

    def advance(self, events: Iterable[Event]) -> "PrefixView":
        started, finished, posted = set(self.started), set(self.finished), set(self.posted)
        steps = dict(self.steps)
        for event in events:
            started.add(event.instance)
            steps[event.instance] = event.index
            if event.final:
                finished.add(event.instance)
            if event.access.kind is AccessKind.POST:
                posted.add(event.access.target)
        return PrefixView(frozenset(started), frozenset(finished), frozenset(posted), steps)

    @classmethod
    def of(cls, events: Iterable[Event]) -> "PrefixView":
        return cls().advance(events)

    def starts_after(self, instance: InstanceId) -> bool:
        """Posted but no event performed yet"""
        return instance in self.posted and instance not in self.started

    def running(self, handler: str) -> Optional[InstanceId]:
        for instance in self.started:
            if instance.handler == handler and instance not in self.finished:
                return instance
        return None


@dataclass(frozen=True)
class AccessSummary:
    """What is known about an instance's behaviour after a prefix

    A scheduled instance is described by its next event. A starting
    instance is described by its recorded access sequences, or by its
    actual events when a maximal execution supplies them.
    """
    event: Optional[Event] = None
    sequences: Optional[FrozenSet[AccessSequence]] = None
    events: Optional[Tuple[Event, ...]] = None

    @classmethod
    def scheduled(cls, event: Event) -> "AccessSummary":
        return cls(event=event)

    @classmethod
    def starting(cls, sequences: Iterable[AccessSequence]) -> "AccessSummary":
        return cls(sequences=frozenset(sequences))

    @classmethod
    def observed(cls, events: Sequence[Event]) -> "AccessSummary":
        return cls(events=tuple(events))


class Stage(str, Enum):
    SCHEDULED = "scheduled"
    SIMPLE = "simple"
    HB_CHECK = "hb-check"
    WITNESS = "witness"
    DECIDE = "decide"
    INSUFFICIENT = "insufficient"
    NOT_ENABLED = "not-enabled"


@dataclass
class StageCounters:
    """Outcome counters per check stage"""
    scheduled: int = 0
    simple: int = 0
    hb_negative: int = 0
    witness_positive: int = 0
    witness_negative: int = 0
    decide: int = 0
    insufficient: int = 0

    def as_dict(self) -> Dict[str, int]:
        return dict(self.__dict__)


@dataclass(frozen=True)
class WiResult:
    """member is None when the summary cannot settle the question

    `remainder` is a sequence that, run after the prefix and p's first
    event, contains the checked sequence as a happens-before prefix.
    """
    member: Optional[bool]
    stage: Stage
    remainder: Optional[Tuple[Event, ...]] = None

    def __bool__(self) -> bool:
        return bool(self.member)


def without_first(w: Sequence[Event], instance: InstanceId) -> Tuple[Event, ...]:
    """w with the first event of `instance` removed"""
    for position, event in enumerate(w):
        if event.instance == instance:
            return tuple(w[:position]) + tuple(w[position + 1:])
    return tuple(w)


def handler_messages(w: Sequence[Event], handler: str) -> List[InstanceId]:
    """Messages of `handler` in order of first appearance in w"""
    seen: List[InstanceId] = []
    for event in w:
        if event.instance.handler == handler and event.instance not in seen:
            seen.append(event.instance)
    return seen


class _Problem:
    """w extended by p's completion, with the constraints every witness obeys"""

    def __init__(self, view: PrefixView, w: Sequence[Event], p: InstanceId,
                 completion: Sequence[Event], conflicts: ConflictModel):
        self.p = p
        self.nodes: Tuple[Event, ...] = tuple(w) + tuple(completion)
        self.size = len(self.nodes)
        self.hb = HbRelation(self.nodes, conflicts)
        self.spans = message_spans(self.nodes)
        self.groups = message_masks(self.nodes)
        self.p_mask = self.spans[p][2]
        self.predecessors = [q for q in handler_messages(w, p.handler) if q != p]
        self.incomplete = {m for m in self.spans
                           if not any(e.final for e in self.nodes if e.instance == m)}
        base = self.hb.generators()
        self.fixed_first: Dict[str, InstanceId] = {p.handler: p}
        for handler in self.groups:
            current = view.running(handler)
            if current is not None and current in self.spans:
                self.fixed_first[handler] = current
        for handler, first in self.fixed_first.items():
            self._order_before_others(base, first, handler)
        for m in self.incomplete:
            for other in self.spans:
                if other != m and other.handler == m.handler:
                    base.add(self.spans[other][1], self.spans[m][0])
        self.base = base

    def _order_before_others(self, relation: Relation, first: InstanceId, handler: str):
        if first == self.p:
            return
        for other in self.spans:
            if other != first and other.handler == handler:
                relation.add(self.spans[first][1], self.spans[other][0])

    def mandatory(self) -> Relation:
        """Saturated generators plus running-first and incomplete-last orderings"""
        return saturate_masks(self.base.copy(), self.groups)

    def forced_before_p(self, relation: Relation) -> bool:
        """Some event of a message preceding p on its handler is ordered before p"""
        for q in self.predecessors:
            mask = self.spans[q][2]
            for i in range(self.size):
                if mask >> i & 1 and relation.rows[i] & self.p_mask:
                    return True
        return False

    def p_first(self, relation: Relation) -> Relation:
        relation = relation.copy()
        last_p = self.spans[self.p][1]
        for q in self.spans:
            if q != self.p and q.handler == self.p.handler:
                relation.add(last_p, self.spans[q][0])
        return saturate_masks(relation, self.groups)

    def in_appearance_order(self, relation: Relation) -> Relation:
        relation = relation.copy()
        for handler in self.groups:
            order = sorted((m for m in self.spans if m.handler == handler),
                           key=lambda m: (m != self.p if handler == self.p.handler else False,
                                          self.spans[m][0]))
            for a_index, a in enumerate(order):
                for b in order[a_index + 1:]:
                    if not relation.has(self.spans[a][0], self.spans[b][0]) and \
                            not relation.has(self.spans[b][0], self.spans[a][0]):
                        relation.add(self.spans[a][1], self.spans[b][0])
        return saturate_masks(relation, self.groups)

    def witness(self, relation: Relation) -> Tuple[Event, ...]:
        """Linearization starting with p's first event, without that event"""
        begin = self.spans[self.p][0]
        order = linearize(self.size, relation, priority=lambda n: (n != begin, n))
        return tuple(self.nodes[i] for i in order if i != begin)


class WeakInitials:
    """Membership checks p in WI_E(w), with per-stage instrumentation"""

    def __init__(self, conflicts: ConflictModel = access_conflict):
        self.conflicts = conflicts
        self.stats = StageCounters()

    def check(self, view: PrefixView, w: Sequence[Event], p: InstanceId,
              summary: AccessSummary) -> WiResult:
        """Decide p in WI after the prefix described by `view`

        Args:
            view: State after the prefix E
            w: Event sequence such that E.w is an execution
            p: Candidate instance
            summary: Next event (scheduled p) or completion behaviour (starting p)
        """
        w = tuple(w)
        if p in view.finished or (not p.is_thread and p not in view.posted):
            return WiResult(False, Stage.NOT_ENABLED)
        if not view.starts_after(p):
            return self._inspect(w, p, summary)
        if view.running(p.handler) is not None:
            return WiResult(False, Stage.NOT_ENABLED)
        first = handler_messages(w, p.handler)
        if not first or first[0] == p:
            self.stats.simple += 1
            return WiResult(True, Stage.SIMPLE, without_first(w, p))
        completions = self._completions(w, p, summary)
        if not completions:
            self.stats.insufficient += 1
            logger.debug("no usable access summary for %s", p)
            return WiResult(None, Stage.INSUFFICIENT)
        if all(self._conflict_forced(w, p, completion) for completion in completions):
            self.stats.hb_negative += 1
            return WiResult(False, Stage.HB_CHECK)
        problems = [_Problem(view, w, p, completion, self.conflicts) for completion in completions]
        return self._starting(problems)

    def decide(self, view: PrefixView, w: Sequence[Event], p: InstanceId,
               summary: AccessSummary) -> WiResult:
        """Exact decision by backtracking, skipping the cheap stages"""
        w = tuple(w)
        if p in view.finished or (not p.is_thread and p not in view.posted):
            return WiResult(False, Stage.NOT_ENABLED)
        if not view.starts_after(p):
            return self._inspect(w, p, summary)
        if view.running(p.handler) is not None:
            return WiResult(False, Stage.NOT_ENABLED)
        if p not in w and not handler_messages(w, p.handler):
            return WiResult(True, Stage.DECIDE, w)
        completions = self._completions(w, p, summary)
        if not completions:
            return WiResult(None, Stage.INSUFFICIENT)
        results = [self._decide(_Problem(view, w, p, c, self.conflicts)) for c in completions]
        return self._combine(results, Stage.DECIDE)

    # Scheduled instances

    def _inspect(self, w: Tuple[Event, ...], p: InstanceId, summary: AccessSummary) -> WiResult:
        self.stats.scheduled += 1
        nxt = summary.event
        if nxt is None:
            return WiResult(None, Stage.INSUFFICIENT)
        position = next((i for i, e in enumerate(w) if e.instance == p), None)
        if not nxt.access.is_shared:
            return WiResult(True, Stage.SCHEDULED, without_first(w, p))
        if position is not None:
            # p's first event in w has no po predecessor, so only cnf and pb can order it
            first = w[position]
            blocked = any(self.conflicts(e, first) or (first.is_begin and e.access.target == p)
                          for e in w[:position])
            return WiResult(not blocked, Stage.SCHEDULED, None if blocked else without_first(w, p))
        blocked = any(self.conflicts(nxt, e) for e in w)
        return WiResult(not blocked, Stage.SCHEDULED, None if blocked else w)

    # Starting instances

    def _conflict_forced(self, w: Tuple[Event, ...], p: InstanceId,
                         completion: Tuple[Event, ...]) -> bool:
        """An event of another message on p's handler in w conflicts with a later event of p

        That cnf edge alone orders the other message before p.
        """
        nodes = w + completion
        own = [j for j, e in enumerate(nodes) if e.instance == p]
        for i, event in enumerate(nodes):
            if event.instance == p or event.instance.handler != p.handler:
                continue
            if any(self.conflicts(event, nodes[j]) for j in own if j > i):
                return True
        return False

    def _completions(self, w: Tuple[Event, ...], p: InstanceId,
                     summary: AccessSummary) -> List[Tuple[Event, ...]]:
        """Candidate sequences of p's events missing from w"""
        present = [e for e in w if e.instance == p]
        if any(e.final for e in present):
            return [()]
        if summary.events is not None:
            have = {e.index for e in present}
            return [tuple(e for e in summary.events if e.index not in have)]
        if summary.sequences is None:
            return []
        done = [e.access for e in present if e.access.is_global]
        next_index = present[-1].index + 1 if present else 1
        completions = []
        for sequence in sorted(summary.sequences, key=lambda s: [a.sort_key() for a in s]):
            if tuple(sequence[:len(done)]) != tuple(done):
                continue
            rest = list(sequence[len(done):]) or [LOCAL]
            events = []
            index = next_index
            if not present:
                events.append(Event(p, 1, AccessDescriptor(AccessKind.BEGIN)))
                index = 2
            for offset, access in enumerate(rest):
                events.append(Event(p, index + offset, access, final=offset == len(rest) - 1))
            completions.append(tuple(events))
        return completions

    @staticmethod
    def _combine(results: List[Tuple[bool, Optional[Tuple[Event, ...]]]], stage: Stage) -> WiResult:
        # several recorded behaviours only count when they all agree
        if all(member for member, _ in results):
            return WiResult(True, stage, results[0][1])
        if len(results) > 1 and any(member for member, _ in results):
            logger.debug("access summaries disagree; treating as non-member")
        return WiResult(False, stage)

    def _starting(self, problems: List[_Problem]) -> WiResult:
        mandatory = [problem.mandatory() for problem in problems]
        if all(rel.cyclic or problem.forced_before_p(rel) for problem, rel in zip(problems, mandatory)):
            self.stats.hb_negative += 1
            return WiResult(False, Stage.HB_CHECK)

        outcomes = []
        for problem, rel in zip(problems, mandatory):
            if rel.cyclic or problem.forced_before_p(rel):
                outcomes.append((False, None))
                continue
            first = problem.p_first(rel)
            if first.cyclic:
                outcomes.append((False, None))
                continue
            total = problem.in_appearance_order(first)
            outcomes.append((True, problem.witness(total)) if not total.cyclic else (None, None))
        if all(member is True for member, _ in outcomes):
            self.stats.witness_positive += 1
            return WiResult(True, Stage.WITNESS, outcomes[0][1])
        if all(member is False for member, _ in outcomes):
            self.stats.witness_negative += 1
            return WiResult(False, Stage.WITNESS)

        self.stats.decide += 1
        logger.debug("falling back to the decision procedure for %s", problems[0].p)
        return self._combine([self._decide(problem) for problem in problems], Stage.DECIDE)

    @staticmethod
    def _decide(problem: _Problem) -> Tuple[bool, Optional[Tuple[Event, ...]]]:
        found = order_messages(problem.nodes, problem.base, problem.fixed_first, problem.incomplete)
        if found is None:
            return False, None
        _, relation = found
        return True, problem.witness(relation)


def wi_member(execution: Iterable[Event], w: Sequence[Event], p: InstanceId,
              summary: AccessSummary, conflicts: ConflictModel = access_conflict) -> Optional[bool]:
    """p in WI after `execution`; None when the summary is insufficient"""
    return WeakInitials(conflicts).check(PrefixView.of(execution), w, p, summary).member


def wi_decide(execution: Iterable[Event], w: Sequence[Event], p: InstanceId,
              summary: AccessSummary, conflicts: ConflictModel = access_conflict) -> Optional[bool]:
    return WeakInitials(conflicts).decide(PrefixView.of(execution), w, p, summary).member
