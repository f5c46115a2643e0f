"""
Benchmark Programs
Parametric generators for the small example programs and the benchmark families
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Tuple

from evdpor.errors import BenchmarkParameterError, UnknownBenchmarkError
from evdpor.program.model import Program
from evdpor.program.parser import parse_program

logger = logging.getLogger(__name__)

Params = Dict[str, int]


@dataclass(frozen=True)
class ParamRange:
    default: int
    low: int
    high: int


@dataclass(frozen=True)
class BenchmarkSpec:
    """A builtin program family

    `expected` gives the event-driven trace count when it is known in
    closed form; `sweep` lists the parameter values used by corpus and
    compare sweeps.
    """
    name: str
    description: str
    builder: Callable[..., str]
    params: Dict[str, ParamRange] = field(default_factory=dict)
    non_branching: bool = True
    expected: Optional[Callable[..., int]] = None
    sweep: Tuple[int, ...] = ()

    def resolve(self, params: Optional[Mapping[str, int]] = None) -> Params:
        """Fill defaults and check ranges"""
        params = dict(params or {})
        unknown = set(params) - set(self.params)
        if unknown:
            raise BenchmarkParameterError(
                f"{self.name} takes no parameter {', '.join(sorted(unknown))}")
        resolved = {}
        for key, bounds in self.params.items():
            value = params.get(key, bounds.default)
            try:
                value = int(value)
            except (TypeError, ValueError):
                raise BenchmarkParameterError(f"{self.name}: {key} must be an integer, got {value!r}")
            if not bounds.low <= value <= bounds.high:
                raise BenchmarkParameterError(
                    f"{self.name}: {key}={value} outside [{bounds.low}, {bounds.high}]")
            resolved[key] = value
        return resolved

    def expected_traces(self, params: Optional[Mapping[str, int]] = None) -> Optional[int]:
        if self.expected is None:
            return None
        return self.expected(**self.resolve(params))


def _lines(*parts: str) -> str:
    return "\n".join(parts) + "\n"


def _fig1_wrr() -> str:
    return _lines(
        "shared x y z",
        "thread s { store x 1 }",
        "thread t { load a y  load b x }",
        "thread u { load c z  load d x }",
    )


def _fig2_nc() -> str:
    return _lines(
        "shared x y",
        "handler h",
        "thread s { post p1 -> h }",
        "thread t { post p2 -> h }",
        "message p1 { store x 1 }",
        "message p2 { store y 2 }",
    )


def _fig2_conf() -> str:
    return _lines(
        "shared u v x y",
        "handler h",
        "thread s { post p1 -> h }",
        "thread t { post p2 -> h }",
        "message p1 { store u 1  store x 1  store y 1 }",
        "message p2 { store v 2  load a x  load b y }",
    )


def _fig3_branch() -> str:
    return _lines(
        "shared x y",
        "handler h",
        "thread s { post p1 -> h  store x 1 }",
        "thread t { post p2 -> h }",
        "message p1 { store y 2 }",
        "message p2 {",
        "    load a x",
        "    if a == 0 { load b y }",
        "}",
    )


def _fig4_two_handlers() -> str:
    return _lines(
        "shared d x y z",
        "handler h k",
        "thread t { post p1 -> h  post p2 -> h  post q1 -> k  post q2 -> k }",
        "message p1 { store d 1  load a y }",
        "message p2 { store z 1 }",
        "message q1 { store y 1  store x 1 }",
        "message q2 { load b z  load c x }",
    )


def _fig5_wi() -> str:
    return _lines(
        "shared x y z",
        "handler h",
        "thread s { post p1 -> h }",
        "thread t { post p2 -> h }",
        "message p1 { store x 1 }",
        "message p2 { store y 2  store z 2 }",
    )


def _conditional_write() -> str:
    return _lines(
        "shared x y",
        "handler h",
        "thread s { post p1 -> h }",
        "thread t { store y 1  post p2 -> h }",
        "message p1 {",
        "    load a y",
        "    if a == 0 { store x 1 }",
        "}",
        "message p2 { store x 2 }",
    )


def _writers(n: int) -> str:
    parts = ["shared x", "handler h"]
    parts += [f"thread t{i} {{ post w{i} -> h }}" for i in range(1, n + 1)]
    parts += [f"message w{i} {{ store x {i}  load r x  assert r == {i} }}" for i in range(1, n + 1)]
    return _lines(*parts)


def _posters(n: int) -> str:
    parts = ["shared x", "handler h"]
    parts += [f"thread t{i} {{ post a{i} -> h }}" for i in range(1, n + 1)]
    for i in range(1, n + 1):
        parts.append(f"message a{i} {{ store x {i}  post b{i} -> h  load r x  assert r == {i} }}")
        parts.append(f"message b{i} {{ store x {100 + i} }}")
    return _lines(*parts)


def _prolific_cycle(n: int) -> str:
    parts = ["shared " + " ".join(f"v{i}" for i in range(1, n + 1)), "handler h"]
    parts += [f"thread t{i} {{ post m{i} -> h }}" for i in range(1, n + 1)]
    parts += [f"message m{i} {{ store v{i} {i}  store v{i % n + 1} {i} }}" for i in range(1, n + 1)]
    return _lines(*parts)


def _plb(n: int) -> str:
    posts = "  ".join(f"post task{i} -> h" for i in range(1, n + 1))
    parts = ["shared " + " ".join(f"buf{i}" for i in range(1, n + 1)), "handler h"]
    parts.append(f"thread main {{ {posts} }}")
    parts += [f"message task{i} {{ store buf{i} {i} }}" for i in range(1, n + 1)]
    return _lines(*parts)


def _ping_pong(n: int) -> str:
    posts = "  ".join(f"post pong{i} -> pong" for i in range(1, n + 1))
    parts = ["shared last ack", "handler ping pong", f"thread pinger {{ {posts} }}"]
    for i in range(1, n + 1):
        parts.append(f"message pong{i} {{ store last {i}  post ack{i} -> ping }}")
        parts.append(f"message ack{i} {{ load a last  store ack a }}")
    return _lines(*parts)


def _consensus_lite(n: int) -> str:
    nodes = range(1, n + 1)
    parts = ["shared " + " ".join(f"d{j}" for j in nodes),
             "handler " + " ".join(f"c{j}" for j in nodes)]
    for i in nodes:
        posts = "  ".join(f"post val{i}_{j} -> c{j}" for j in nodes)
        parts.append(f"thread b{i} {{ {posts} }}")
    for i in nodes:
        for j in nodes:
            parts.append(f"message val{i}_{j} {{ load a d{j}  if a < {i} {{ store d{j} {i} }} }}")
    return _lines(*parts)


BENCHMARKS: Dict[str, BenchmarkSpec] = {spec.name: spec for spec in [
    BenchmarkSpec("fig1_wrr", "three plain threads, one writer and two readers of x",
                  _fig1_wrr, expected=lambda: 4),
    BenchmarkSpec("fig2_nc", "two non-conflicting messages on one handler",
                  _fig2_nc, expected=lambda: 1),
    BenchmarkSpec("fig2_conf", "two messages conflicting on x and y",
                  _fig2_conf, expected=lambda: 2),
    BenchmarkSpec("fig3_branch", "a branching message reading x and maybe y",
                  _fig3_branch, non_branching=False, expected=lambda: 3),
    BenchmarkSpec("fig4_two_handlers", "four messages on two handlers",
                  _fig4_two_handlers, expected=lambda: 8),
    BenchmarkSpec("fig5_wi", "weak-initials illustration",
                  _fig5_wi, expected=lambda: 1),
    BenchmarkSpec("conditional_write", "a message that writes x only if y is unset",
                  _conditional_write, non_branching=False),
    BenchmarkSpec("writers", "n messages storing to and checking one variable",
                  _writers, {"n": ParamRange(2, 1, 8)}, sweep=(1, 2, 3, 4)),
    BenchmarkSpec("posters", "writers that also post a second store to the handler",
                  _posters, {"n": ParamRange(2, 1, 6)}, sweep=(1, 2, 3)),
    BenchmarkSpec("prolific_cycle", "n messages each conflicting with its two neighbours",
                  _prolific_cycle, {"n": ParamRange(3, 2, 10)},
                  expected=lambda n: 2 ** n - 2, sweep=(3, 4, 5, 6)),
    BenchmarkSpec("plb", "one thread posting n independent tasks",
                  _plb, {"n": ParamRange(3, 1, 16)}, expected=lambda n: 1, sweep=(2, 4, 6, 8)),
    BenchmarkSpec("ping_pong", "pong handler acknowledging numbered messages to ping",
                  _ping_pong, {"n": ParamRange(2, 1, 6)}, sweep=(1, 2, 3)),
    BenchmarkSpec("consensus_lite", "n broadcasters, n collectors keeping the maximum",
                  _consensus_lite, {"n": ParamRange(2, 1, 3)}, non_branching=False, sweep=(1, 2)),
]}


def get_spec(name: str) -> BenchmarkSpec:
    try:
        return BENCHMARKS[name]
    except KeyError:
        raise UnknownBenchmarkError(
            f"unknown benchmark {name!r}; choose from {', '.join(sorted(BENCHMARKS))}")


def source(name: str, params: Optional[Mapping[str, int]] = None) -> str:
    """Program text of a builtin"""
    spec = get_spec(name)
    return spec.builder(**spec.resolve(params))


def generate(name: str, params: Optional[Mapping[str, int]] = None) -> Program:
    """Program of a builtin, parsed from its own text"""
    return parse_program(source(name, params))


def corpus_name(name: str, params: Optional[Mapping[str, int]] = None) -> str:
    """File name `<name>_<params>.evp`, e.g. prolific_cycle_n4.evp"""
    resolved = get_spec(name).resolve(params)
    suffix = "".join(f"_{key}{value}" for key, value in sorted(resolved.items()))
    return f"{name}{suffix}.evp"


def sweep_params(name: str) -> List[Params]:
    """Parameter sets used by sweeps; the default alone when none are listed"""
    spec = get_spec(name)
    if not spec.params:
        return [{}]
    if not spec.sweep:
        return [spec.resolve()]
    (key,) = spec.params
    return [{key: value} for value in spec.sweep]


def write_corpus(out_dir, sweep: bool = False) -> List[Path]:
    """Write every builtin's text under `out_dir`; with `sweep`, every sweep point"""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(BENCHMARKS):
        for params in sweep_params(name) if sweep else [get_spec(name).resolve()]:
            path = out / corpus_name(name, params)
            path.write_text(source(name, params))
            written.append(path)
    logger.info("wrote %d program(s) to %s", len(written), out)
    return written

