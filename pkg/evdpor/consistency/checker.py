"""
Consistency Checker
Backtracking search for per-handler message orders that make a graph serializable
"""

from __future__ import annotations

import itertools
import logging
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import networkx as nx

from evdpor.errors import ContractViolation
from evdpor.program.events import Event, InstanceId
from evdpor.trace.graph import ConsistencyGraph
from evdpor.trace.hb import ConflictModel, access_conflict, compute_hb
from evdpor.trace.relation import Relation

logger = logging.getLogger(__name__)

HandlerOrders = Dict[str, List[InstanceId]]


def message_spans(events: Sequence[Event]) -> Dict[InstanceId, Tuple[int, int, int]]:
    """Message instance -> (position of first event, position of last event, bitmask)"""
    spans: Dict[InstanceId, Tuple[int, int, int]] = {}
    for position, event in enumerate(events):
        instance = event.instance
        if instance.handler is None:
            continue
        first, last, mask = spans.get(instance, (position, position, 0))
        if event.index < events[first].index:
            first = position
        if event.index > events[last].index:
            last = position
        spans[instance] = (first, last, mask | 1 << position)
    return spans


def _candidate_orders(messages: List[InstanceId], first: Optional[InstanceId],
                      incomplete: Set[InstanceId]) -> Iterable[Tuple[InstanceId, ...]]:
    tail = [m for m in messages if m in incomplete and m != first]
    if len(tail) > 1 or (first in incomplete and len(messages) > 1):
        return
    middle = [m for m in messages if m != first and m not in tail]
    head = [first] if first is not None else []
    for perm in itertools.permutations(middle):
        yield tuple(head) + perm + tuple(tail)


def order_messages(events: Sequence[Event], base: Relation,
                   fixed_first: Optional[Mapping[str, InstanceId]] = None,
                   incomplete: Iterable[InstanceId] = ()) -> Optional[Tuple[HandlerOrders, Relation]]:
    """Find per-handler total orders of messages keeping `base` acyclic

    Handlers are tried by name and messages by InstanceId, so the first
    solution found is deterministic. Messages in `incomplete` must come
    last on their handler and `fixed_first` pins the first message.

    Returns:
        (orders, closed relation including the chain edges), or None
    """
    fixed_first = dict(fixed_first or {})
    incomplete = set(incomplete)
    spans = message_spans(events)
    by_handler: Dict[str, List[InstanceId]] = {}
    for instance in sorted(spans):
        by_handler.setdefault(instance.handler, []).append(instance)
    handlers = sorted(by_handler)
    start = base.copy().close()
    if start.cyclic:
        return None

    def search(level: int, relation: Relation, orders: HandlerOrders):
        if level == len(handlers):
            return orders, relation
        handler = handlers[level]
        first = fixed_first.get(handler)
        if first not in spans:
            first = None
        for order in _candidate_orders(by_handler[handler], first, incomplete):
            trial = relation.copy()
            consistent = True
            for a, b in zip(order, order[1:]):
                last_a, first_b = spans[a][1], spans[b][0]
                if trial.has(first_b, last_a):
                    consistent = False
                    break
                trial.add(last_a, first_b)
            if not consistent:
                continue
            trial.close()
            if trial.cyclic:
                continue
            found = search(level + 1, trial, {**orders, handler: list(order)})
            if found is not None:
                return found
        return None

    return search(0, start, {})


def linearize(size: int, relation: Relation, priority=None) -> List[int]:
    """Topological order of positions; ties broken by `priority` (default position)"""
    graph = nx.DiGraph()
    graph.add_nodes_from(range(size))
    graph.add_edges_from(relation.reduced().edges())
    key = priority if priority is not None else (lambda node: node)
    return list(nx.lexicographical_topological_sort(graph, key=key))


def realizes(graph: ConsistencyGraph, order: Sequence[Event], conflicts: ConflictModel = access_conflict) -> bool:
    """The happens-before generators of `order` are those of `graph`"""
    hb = compute_hb(order, conflicts)

    def uids(events: Sequence[Event], edges) -> Set[Tuple]:
        return {(events[i].uid, events[j].uid) for i, j in edges}

    return (uids(order, hb.cnf) == uids(graph.events, graph.cnf)
            and uids(order, hb.pb) == uids(graph.events, graph.pb))


def check_consistency(graph: ConsistencyGraph,
                      conflicts: ConflictModel = access_conflict) -> Optional[List[Event]]:
    """Execution-shaped linearization of a trace graph, or None if inconsistent

    Every generator edge is respected and messages sharing a handler are
    serialized, with an incomplete message last on its handler. The
    witness has exactly the cnf and pb edges of the graph.

    Raises:
        GraphFormatError: the graph is malformed for `conflicts`
        ContractViolation: the linearization found does not realize the graph
    """
    graph.validate(conflicts)
    base = Relation.from_edges(len(graph.events), graph.edges)
    found = order_messages(graph.events, base, incomplete=graph.incomplete)
    if found is None:
        logger.debug("graph with %d events is inconsistent", len(graph.events))
        return None
    _, relation = found
    witness = [graph.events[i] for i in linearize(len(graph.events), relation)]
    if not realizes(graph, witness, conflicts):
        raise ContractViolation("linearization does not realize the graph")
    return witness
