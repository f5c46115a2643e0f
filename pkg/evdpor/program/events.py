"""
Events and Executions
Instance identities, access descriptors, events and execution records
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple


@dataclass(frozen=True, order=True)
class PostLabel:
    """One step of an instance path: the k-th post of `message` to `handler`"""
    ordinal: int
    message: str
    handler: str


_LABEL_RE = re.compile(r"^(?P<message>[A-Za-z_]\w*)#(?P<ordinal>\d+)@(?P<handler>[A-Za-z_]\w*)$")


@dataclass(frozen=True, order=True)
class InstanceId:
    """Schedule-independent identity of a thread or a message instance

    A thread is the path (name,); a message instance extends its poster's
    path with the PostLabel of the post that created it.
    """
    root: str
    posts: Tuple[PostLabel, ...] = ()

    @classmethod
    def thread(cls, name: str) -> "InstanceId":
        return cls(name)

    def child(self, ordinal: int, message: str, handler: str) -> "InstanceId":
        """Instance created by this instance's `ordinal`-th post"""
        return InstanceId(self.root, self.posts + (PostLabel(ordinal, message, handler),))

    @property
    def is_thread(self) -> bool:
        return not self.posts

    @property
    def handler(self) -> Optional[str]:
        """Handler that executes this instance (None for plain threads)"""
        return self.posts[-1].handler if self.posts else None

    @property
    def name(self) -> str:
        """Thread name or message name"""
        return self.posts[-1].message if self.posts else self.root

    @property
    def poster(self) -> Optional["InstanceId"]:
        return InstanceId(self.root, self.posts[:-1]) if self.posts else None

    @classmethod
    def parse(cls, text: str) -> "InstanceId":
        """Inverse of str(): 's' or 's/p1#1@h/q#2@k'"""
        root, *labels = text.strip().split("/")
        if not root:
            raise ValueError(f"invalid instance id {text!r}")
        posts = []
        for label in labels:
            match = _LABEL_RE.match(label)
            if match is None:
                raise ValueError(f"invalid instance id {text!r}")
            posts.append(PostLabel(int(match["ordinal"]), match["message"], match["handler"]))
        return cls(root, tuple(posts))

    def __str__(self) -> str:
        return "/".join([self.root] + [f"{p.message}#{p.ordinal}@{p.handler}" for p in self.posts])


class AccessKind(str, Enum):
    BEGIN = "begin"
    LOCAL = "local"
    READ = "read"
    WRITE = "write"
    RMW = "rmw"
    POST = "post"


SHARED_KINDS = frozenset({AccessKind.READ, AccessKind.WRITE, AccessKind.RMW})


@dataclass(frozen=True)
class AccessDescriptor:
    """Global action performed by one event"""
    kind: AccessKind
    var: Optional[str] = None
    target: Optional[InstanceId] = None

    @property
    def is_shared(self) -> bool:
        return self.kind in SHARED_KINDS

    @property
    def is_global(self) -> bool:
        """Shared access or post (Begin and Local are not global)"""
        return self.is_shared or self.kind is AccessKind.POST

    @property
    def writes(self) -> bool:
        return self.kind in (AccessKind.WRITE, AccessKind.RMW)

    def conflicts_with(self, other: "AccessDescriptor") -> bool:
        """Same shared variable, at least one write (Rmw is read and write)"""
        return (self.is_shared and other.is_shared and self.var == other.var
                and (self.writes or other.writes))

    def sort_key(self) -> Tuple[str, str, str]:
        return (self.kind.value, self.var or "", str(self.target) if self.target else "")

    def to_dict(self) -> Dict[str, str]:
        data = {"kind": self.kind.value}
        if self.var is not None:
            data["var"] = self.var
        if self.target is not None:
            data["target"] = str(self.target)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, str]) -> "AccessDescriptor":
        target = data.get("target")
        return cls(AccessKind(data["kind"]), data.get("var"),
                   InstanceId.parse(target) if target else None)

    def __str__(self) -> str:
        if self.kind is AccessKind.POST:
            return f"post({self.target})"
        if self.var is not None:
            return f"{self.kind.value}({self.var})"
        return self.kind.value


BEGIN = AccessDescriptor(AccessKind.BEGIN)
LOCAL = AccessDescriptor(AccessKind.LOCAL)


@dataclass(frozen=True)
class Event:
    """Step `index` (1-based) of `instance`, performing `access`

    `final` marks the step after which the instance has finished; it is
    derived from the program and not part of the event's identity.
    """
    instance: InstanceId
    index: int
    access: AccessDescriptor
    final: bool = field(default=False, compare=False)

    @property
    def uid(self) -> Tuple[InstanceId, int]:
        return (self.instance, self.index)

    @property
    def is_begin(self) -> bool:
        return self.access.kind is AccessKind.BEGIN

    def __str__(self) -> str:
        return f"<{self.instance},{self.index}> {self.access}"


@dataclass(frozen=True)
class Violation:
    """Failed assertion"""
    instance: InstanceId
    message: str


@dataclass(frozen=True)
class ExecutionRecord:
    """Replayable sequence of events with derived metadata"""
    events: Tuple[Event, ...] = ()
    violations: Tuple[Violation, ...] = ()

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def __getitem__(self, index):
        return self.events[index]

    @property
    def schedule(self) -> Tuple[InstanceId, ...]:
        return tuple(e.instance for e in self.events)

    @property
    def poster(self) -> Dict[Event, InstanceId]:
        """Post event -> instance it created"""
        return {e: e.access.target for e in self.events if e.access.kind is AccessKind.POST}

    @property
    def handler_of(self) -> Dict[InstanceId, str]:
        return {e.instance: e.instance.handler for e in self.events if not e.instance.is_thread}

    @property
    def completed(self) -> FrozenSet[InstanceId]:
        return frozenset(e.instance for e in self.events if e.final)

    def prefix(self, length: int) -> "ExecutionRecord":
        return ExecutionRecord(self.events[:length])

    def events_of(self, instance: InstanceId) -> List[Event]:
        return [e for e in self.events if e.instance == instance]

    def position(self) -> Dict[Tuple[InstanceId, int], int]:
        return {e.uid: i for i, e in enumerate(self.events)}

    @classmethod
    def of(cls, events: Iterable[Event]) -> "ExecutionRecord":
        return cls(tuple(events))
