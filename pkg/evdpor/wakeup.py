"""
Wakeup Trees
Ordered trees of pending wakeup sequences, insertion and parked sequences
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from evdpor.consistency.weak_initials import (
    AccessSummary, PrefixView, WeakInitials, handler_messages, without_first,
)
from evdpor.errors import ContractViolation
from evdpor.program.events import Event, InstanceId

logger = logging.getLogger(__name__)

Wakeup = Tuple[Event, ...]


@dataclass(eq=False)
class WakeupNode:
    """Node u.p of a wakeup tree; `event` is next(E'.u, p), None at the root

    `parked` holds wakeup sequences waiting for this node's instance to be
    explored. `former_leaf` is set when the node is extracted for
    exploration without children.
    """
    event: Optional[Event] = None
    children: List["WakeupNode"] = field(default_factory=list)
    parked: List[Wakeup] = field(default_factory=list)
    former_leaf: bool = False

    @property
    def instance(self) -> Optional[InstanceId]:
        return self.event.instance if self.event is not None else None

    def child(self, instance: InstanceId) -> Optional["WakeupNode"]:
        return next((c for c in self.children if c.instance == instance), None)

    def is_leaf(self) -> bool:
        return not self.children or self.former_leaf


class WakeupTree:
    """Wakeup tree rooted at a node; sibling order is insertion order"""

    def __init__(self, root: Optional[WakeupNode] = None):
        self.root = root if root is not None else WakeupNode()

    @classmethod
    def of(cls, *sequences: Sequence[Event]) -> "WakeupTree":
        tree = cls()
        for sequence in sequences:
            tree.add_branch(tree.root, sequence)
        return tree

    def __bool__(self) -> bool:
        return bool(self.root.children)

    def min_branch(self) -> InstanceId:
        """Least child of the root

        Raises:
            ContractViolation: the tree has no branch
        """
        if not self.root.children:
            raise ContractViolation("wakeup tree is empty")
        return self.root.children[0].instance

    def subtree_after(self, p: InstanceId) -> "WakeupTree":
        """Subtree below child p, re-rooted; it shares nodes with this tree"""
        node = self.root.child(p)
        if node is None:
            raise ContractViolation(f"{p} is not a child of the root")
        return WakeupTree(node)

    def remove_branch(self, p: InstanceId):
        node = self.root.child(p)
        if node is None:
            raise ContractViolation(f"{p} is not a child of the root")
        self.root.children.remove(node)

    @staticmethod
    def add_branch(node: WakeupNode, sequence: Sequence[Event]) -> WakeupNode:
        """Append `sequence` as the rightmost branch below `node`; returns the new leaf"""
        for event in sequence:
            fresh = WakeupNode(event)
            node.children.append(fresh)
            node = fresh
        return node

    def leaves(self) -> List[Wakeup]:
        """Root-to-leaf event sequences in tree order"""
        result: List[Wakeup] = []

        def walk(node: WakeupNode, prefix: Wakeup):
            if not node.children:
                if prefix:
                    result.append(prefix)
                return
            for child in node.children:
                walk(child, prefix + (child.event,))

        walk(self.root, ())
        return result

    def branches(self) -> List[Tuple[InstanceId, ...]]:
        return [tuple(e.instance for e in leaf) for leaf in self.leaves()]

    def parked_count(self) -> int:
        def count(node: WakeupNode) -> int:
            return len(node.parked) + sum(count(c) for c in node.children)
        return count(self.root)

    def dump(self) -> str:
        """Indented text view, one node per line, parked sequences below their node"""
        lines = ["<root>"]

        def walk(node: WakeupNode, depth: int):
            for child in node.children:
                indent = "  " * depth
                marker = " *" if child.former_leaf else ""
                lines.append(f"{indent}{child.event}{marker}")
                for parked in child.parked:
                    text = " ".join(str(e.instance) for e in parked)
                    lines.append(f"{indent}  ~ parked: {text}")
                walk(child, depth + 1)

        walk(self.root, 1)
        return "\n".join(lines)


@dataclass
class InsertStats:
    inserted: int = 0
    dropped: int = 0
    parked: int = 0
    resumed: int = 0
    parked_leaked: int = 0

    def as_dict(self) -> Dict[str, int]:
        return dict(self.__dict__)


def first_on_handler(v: Sequence[Event], p: InstanceId) -> bool:
    """p is the first message, if any, on its handler in v"""
    messages = handler_messages(v, p.handler)
    return not messages or messages[0] == p


def fully_present(v: Sequence[Event], p: InstanceId) -> bool:
    return any(e.instance == p and e.final for e in v)


class WakeupInserter:
    """Inserts wakeup sequences into the trees along the current execution

    `bind` attaches the current execution E, the tree nodes on its path
    (`path[d]` roots the tree at E[:d] and is the child of `path[d-1]`
    for E[d-1]) and the prefix views. The nodes of the path are shared
    with the trees above them, so a descent that reaches the branch being
    explored is resolved against E directly.
    """

    def __init__(self, wi: WeakInitials):
        self.wi = wi
        self.stats = InsertStats()
        self.execution: Tuple[Event, ...] = ()
        self.path: List[WakeupNode] = []
        self.views: List[PrefixView] = []
        self._live: Dict[int, int] = {}

    def bind(self, execution: Sequence[Event], path: Sequence[WakeupNode],
             views: Sequence[PrefixView]):
        self.execution = tuple(execution)
        self.path = list(path)
        self.views = list(views)
        self._live = {id(node): depth for depth, node in enumerate(self.path)}

    def summary_from_execution(self, depth: int) -> AccessSummary:
        """What E says about the instance of E[depth] after E[:depth]"""
        event = self.execution[depth]
        if not self.views[depth].starts_after(event.instance):
            return AccessSummary.scheduled(event)
        return AccessSummary.observed([e for e in self.execution[depth:] if e.instance == event.instance])

    def insert_wus(self, v: Sequence[Event], depth: int, skip: Optional[WakeupNode] = None):
        """Insert v into the tree at E[:depth]"""
        v = tuple(v)
        node = self.path[depth]
        view = self.views[depth]
        at_root = True
        while True:
            if not v or (not at_root and node.is_leaf()):
                self.stats.dropped += 1
                return
            for child in node.children:
                if child is skip:
                    continue
                p = child.instance
                live = self._live.get(id(child))
                if live is not None:
                    result = self.wi.check(view, v, p, self.summary_from_execution(live - 1))
                    if result.member:
                        self.insert_parked(result.remainder, live + 1, resumed=True)
                        return
                    continue
                if not view.starts_after(p):
                    result = self.wi.check(view, v, p, AccessSummary.scheduled(child.event))
                    if not result.member:
                        continue
                    if not any(e.uid == child.event.uid for e in v):
                        self.stats.dropped += 1
                        return
                    v = result.remainder
                elif first_on_handler(v, p):
                    if not any(e.instance == p for e in v):
                        self.stats.dropped += 1
                        return
                    v = without_first(v, p)
                elif fully_present(v, p):
                    result = self.wi.check(view, v, p, AccessSummary.observed(()))
                    if not result.member:
                        continue
                    v = result.remainder
                else:
                    child.parked.append(v)
                    self.stats.parked += 1
                    logger.debug("parked %d events at %s", len(v), child.event)
                    return
                view = view.advance([child.event])
                node = child
                at_root = False
                skip = None
                break
            else:
                WakeupTree.add_branch(node, v)
                self.stats.inserted += 1
                logger.debug("inserted wakeup %s", " ".join(str(e.instance) for e in v))
                return

    def insert_parked(self, v: Sequence[Event], depth: int, resumed: bool = False):
        """Resume the insertion of v parked at E[:depth]

        E[:depth] is E''.p; the first call never stops at E'' since the
        insertion that parked v already stood on it.
        """
        v = tuple(v)
        if not v:
            self.stats.dropped += 1
            return
        if resumed and self.path[depth - 1].former_leaf:
            self.stats.dropped += 1
            return
        if depth > len(self.execution):
            logger.warning("parked wakeup outlives its execution; dropping %d events", len(v))
            self.stats.dropped += 1
            return
        p = self.execution[depth - 1].instance
        result = self.wi.check(self.views[depth - 1], v, p, self.summary_from_execution(depth - 1))
        if result.member:
            self.insert_parked(result.remainder, depth + 1, resumed=True)
        else:
            self.insert_wus(v, depth - 1, skip=self.path[depth])

    def flush(self):
        """Resume every sequence parked along the path, shortest prefix first"""
        for depth in range(1, len(self.path)):
            node = self.path[depth]
            pending, node.parked = node.parked, []
            for v in pending:
                self.stats.resumed += 1
                self.insert_parked(v, depth)
