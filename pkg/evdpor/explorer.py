"""
Explorer
Event-driven DPOR exploration, the coarse handlers-as-locks baseline and
the brute-force oracle
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

from evdpor.config import Algorithm, ExploreConfig
from evdpor.consistency.weak_initials import AccessSequence, AccessSummary, PrefixView, WeakInitials
from evdpor.errors import CapExceededError
from evdpor.program.events import Event, InstanceId
from evdpor.program.interpreter import MachineState, Status, enabled, init_state, step
from evdpor.program.model import Program
from evdpor.reversal import ReversalStats, reverse_race
from evdpor.trace.hb import (
    ConflictModel, TraceKey, access_conflict, coarse_conflict, compute_hb, detect_races, trace_key,
)
from evdpor.wakeup import WakeupInserter, WakeupNode, WakeupTree

logger = logging.getLogger(__name__)

DoneMap = Dict[InstanceId, AccessSummary]
MsgAccesses = Dict[InstanceId, Set[AccessSequence]]


@dataclass
class ExplorationStats:
    """Counters of one exploration; `keys` and `schedules` only when recorded"""
    algorithm: str = Algorithm.EVENT.value
    traces: int = 0
    executions: int = 0
    races: int = 0
    candidates: int = 0
    redundant: int = 0
    insertions: int = 0
    parked: int = 0
    parked_leaked: int = 0
    duplicate_keys: int = 0
    violations: int = 0
    counterexample: Optional[List[str]] = None
    wi: Dict[str, int] = field(default_factory=dict)
    reversal: Dict[str, int] = field(default_factory=dict)
    complete: bool = True
    wall_ms: float = 0.0
    keys: Optional[Set[TraceKey]] = None
    schedules: Optional[List[Tuple[InstanceId, ...]]] = None

    @property
    def decide(self) -> int:
        """Decision-procedure invocations"""
        return self.wi.get("decide", 0)


class _CapReached(Exception):
    pass


class Explorer:
    """One exploration of a program; not reentrant"""

    def __init__(self, program: Program, config: Optional[ExploreConfig] = None,
                 conflicts: ConflictModel = access_conflict):
        self.program = program
        self.config = config or ExploreConfig()
        self.conflicts = conflicts
        self.wi = WeakInitials(conflicts)
        self.inserter = WakeupInserter(self.wi)
        self.reversal_stats = ReversalStats()
        self.stats = ExplorationStats(algorithm=self.config.algorithm.value)
        self.tree = WakeupTree()
        self.events: List[Event] = []
        self.path: List[WakeupNode] = [self.tree.root]
        self.views: List[PrefixView] = [PrefixView()]
        self.done: List[DoneMap] = []
        self._keys: Set[TraceKey] = set()
        self._schedules: List[Tuple[InstanceId, ...]] = []
        self._verdicts: Dict[Tuple, bool] = {}

    def run(self) -> ExplorationStats:
        started = time.perf_counter()
        try:
            self._explore(init_state(self.program))
        except _CapReached:
            self.stats.complete = False
            logger.warning("execution cap %d reached; exploration is partial", self.config.cap)
        self._finish_stats(started)
        return self.stats

    def _finish_stats(self, started: float):
        stats = self.stats
        stats.traces = len(self._keys)
        stats.duplicate_keys = stats.executions - len(self._keys)
        stats.wi = self.wi.stats.as_dict()
        stats.reversal = self.reversal_stats.as_dict()
        stats.candidates = self.reversal_stats.candidates
        stats.insertions = self.inserter.stats.inserted
        stats.parked = self.inserter.stats.parked
        stats.parked_leaked = self.inserter.stats.parked_leaked
        stats.wall_ms = (time.perf_counter() - started) * 1000.0
        if self.config.record_keys:
            stats.keys = set(self._keys)
            stats.schedules = list(self._schedules)
        if stats.duplicate_keys:
            logger.warning("%d explored executions repeat an earlier trace", stats.duplicate_keys)
        logger.info("%s: %d traces in %d executions (%.1f ms)", stats.algorithm, stats.traces,
                    stats.executions, stats.wall_ms)

    # Exploration loop

    def _explore(self, state: MachineState) -> MsgAccesses:
        done: DoneMap = {}
        self.done.append(done)
        try:
            ready = enabled(state)
            if not ready:
                self._maximal(state)
                return {}
            return self._branch(state, ready, done)
        finally:
            self.done.pop()

    def _branch(self, state: MachineState, ready: FrozenSet[InstanceId], done: DoneMap) -> MsgAccesses:
        node = self.path[-1]
        if not node.children:
            p = min(ready)
            _, event = step(state, p)
            node.children.append(WakeupNode(event))

        active = [i for i, s in state.instances.items() if s.status is not Status.FINISHED]
        msg_accesses: MsgAccesses = {q: set() for q in active}
        while node.children:
            child = node.children[0]
            p = child.instance
            if p not in ready:
                logger.warning("wakeup branch %s is not enabled here; dropping it", p)
                node.children.remove(child)
                continue
            after, event = step(state, p)
            if event != child.event:
                logger.warning("wakeup event %s replayed as %s", child.event, event)
                child.event = event
            if not child.children:
                child.former_leaf = True

            starts = self.views[-1].starts_after(p)
            self.events.append(event)
            self.path.append(child)
            self.views.append(self.views[-1].advance([event]))
            try:
                tmp = self._explore(after)
            finally:
                self.events.pop()
                self.path.pop()
                self.views.pop()
            if child.parked:
                self.inserter.stats.parked_leaked += len(child.parked)
                logger.debug("%d parked sequence(s) at %s never resumed", len(child.parked), event)
                child.parked.clear()

            if event.final:
                tmp[p] = {()}
            if event.access.is_global:
                tmp[p] = {(event.access,) + sequence for sequence in tmp.get(p, set())}
            for q in active:
                msg_accesses[q].update(tmp.get(q, ()))
            if starts:
                done[p] = AccessSummary.starting(msg_accesses.get(p, set()))
            else:
                done[p] = AccessSummary.scheduled(event)
            node.children.remove(child)
        return msg_accesses

    def _maximal(self, state: MachineState):
        stats = self.stats
        execution = tuple(self.events)
        stats.executions += 1
        hb = compute_hb(execution, self.conflicts)
        key = trace_key(execution, self.conflicts, hb)
        if key in self._keys:
            logger.warning("execution %d repeats trace %s", stats.executions, key.digest())
        self._keys.add(key)
        if self.config.record_keys:
            self._schedules.append(tuple(e.instance for e in execution))
        if state.violations:
            stats.violations += len(state.violations)
            if stats.counterexample is None:
                stats.counterexample = [str(e.instance) for e in execution]
                logger.info("assertion violation: %s", state.violations[0].message)

        self._verdicts.clear()
        self.inserter.bind(execution, self.path, self.views)
        self.inserter.flush()
        for e, e_prime in detect_races(execution, self.conflicts, hb):
            stats.races += 1
            for candidate in reverse_race(execution, e, e_prime, self.conflicts, self.reversal_stats, hb):
                if logger.isEnabledFor(logging.DEBUG):
                    logger.debug("candidate after %d: %s", candidate.prefix_len,
                                 " ".join(str(i) for i in candidate.schedule(execution)))
                if self._redundant(candidate.prefix_len, candidate.wakeup):
                    stats.redundant += 1
                    continue
                self.inserter.insert_wus(candidate.wakeup, candidate.prefix_len)
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug("tree after execution %d:\n%s", stats.executions, self.tree.dump())
        if stats.executions >= self.config.cap:
            raise _CapReached()

    def _redundant(self, prefix_len: int, v: Tuple[Event, ...]) -> bool:
        """Some explored p at a split E''.w = E' has p in WI(w.v)

        Verdicts are kept for the current maximal execution.
        """
        key = (prefix_len, tuple(e.uid for e in v))
        verdict = self._verdicts.get(key)
        if verdict is None:
            verdict = self._verdicts[key] = self._explored_initial(prefix_len, v)
        return verdict

    def _explored_initial(self, prefix_len: int, v: Tuple[Event, ...]) -> bool:
        for depth in range(prefix_len + 1):
            done = self.done[depth]
            if not done:
                continue
            w = tuple(self.events[depth:prefix_len]) + v
            for p, summary in done.items():
                if self.wi.check(self.views[depth], w, p, summary).member:
                    return True
        return False


def explore(program: Program, config: Optional[ExploreConfig] = None) -> ExplorationStats:
    """Explore with the configured algorithm"""
    config = config or ExploreConfig()
    if config.algorithm is Algorithm.BRUTE:
        return brute_force_stats(program, config)
    conflicts = coarse_conflict if config.algorithm is Algorithm.COARSE else access_conflict
    return Explorer(program, config, conflicts).run()


def explore_coarse(program: Program, config: Optional[ExploreConfig] = None) -> ExplorationStats:
    """Handlers-as-locks baseline: any two messages of one handler conflict"""
    config = config or ExploreConfig(algorithm=Algorithm.COARSE)
    return Explorer(program, config, coarse_conflict).run()


@dataclass
class BruteForceResult:
    keys: Set[TraceKey]
    schedules: int
    violations: int = 0
    counterexample: Optional[List[str]] = None


def brute_force(program: Program, cap: int = 10 ** 7,
                conflicts: ConflictModel = access_conflict) -> BruteForceResult:
    """Every maximal schedule, reduced to the set of trace keys

    Raises:
        CapExceededError: more than `cap` maximal schedules
    """
    result = BruteForceResult(set(), 0)
    events: List[Event] = []

    def visit(state: MachineState):
        ready = enabled(state)
        if not ready:
            result.schedules += 1
            if result.schedules > cap:
                raise CapExceededError(f"more than {cap} maximal schedules")
            result.keys.add(trace_key(events, conflicts))
            if state.violations:
                result.violations += len(state.violations)
                if result.counterexample is None:
                    result.counterexample = [str(e.instance) for e in events]
            return
        for p in sorted(ready):
            after, event = step(state, p)
            events.append(event)
            visit(after)
            events.pop()

    visit(init_state(program))
    return result


def brute_force_stats(program: Program, config: ExploreConfig) -> ExplorationStats:
    started = time.perf_counter()
    result = brute_force(program, config.cap)
    stats = ExplorationStats(
        algorithm=Algorithm.BRUTE.value,
        traces=len(result.keys),
        executions=result.schedules,
        violations=result.violations,
        counterexample=result.counterexample,
    )
    if config.record_keys:
        stats.keys = set(result.keys)
    stats.wall_ms = (time.perf_counter() - started) * 1000.0
    return stats

