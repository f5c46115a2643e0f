#!/usr/bin/env python3
"""
evdpor CLI Application
Command-line interface for running explorations, comparing algorithms and
checking trace graphs
"""

import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import click

from evdpor import __version__
from evdpor.bench import BENCHMARKS, generate, get_spec, sweep_params, write_corpus
from evdpor.config import Algorithm, Config, ExploreConfig
from evdpor.consistency import check_consistency
from evdpor.errors import BenchmarkParameterError, EvdporError, ProgramError
from evdpor.explorer import ExplorationStats, explore
from evdpor.logging_conf import setup_logging
from evdpor.program import InstanceId, Program, parse_program, run as run_schedule
from evdpor.trace import detect_races, trace_key
from evdpor.trace.graph import ConsistencyGraph

REPORT_SCHEMA = "evdpor.run/1"
BUILTIN_PREFIX = "builtin:"
EXIT_VIOLATION = 2


class Colors:
    """ANSI styles for report lines"""
    OK = '\033[92m'
    WARN = '\033[93m'
    FAIL = '\033[91m'
    HEADING = '\033[94m'
    BOLD = '\033[1m'
    RESET = '\033[0m'


def colorize(text: str, color: str, bold: bool = False) -> str:
    """Wrap text in ANSI styles when stdout is a terminal"""
    if sys.stdout.isatty():
        prefix = Colors.BOLD if bold else ''
        return f"{prefix}{color}{text}{Colors.RESET}"
    return text


def print_error(message: str):
    click.echo(colorize(f"ERROR: {message}", Colors.FAIL, bold=True), err=True)


def print_success(message: str):
    click.echo(colorize(f"✓ {message}", Colors.OK))


def print_warning(message: str):
    click.echo(colorize(f"⚠ {message}", Colors.WARN))


@dataclass
class RunReport:
    """Result of one exploration, as printed and serialized"""
    program: str
    algorithm: str
    traces: int
    executions: int
    redundant: int
    parked: int
    violations: int
    time_ms: float
    complete: bool = True
    stages: Dict[str, int] = field(default_factory=dict)
    decide: int = 0
    counterexample: Optional[List[str]] = None

    @classmethod
    def from_stats(cls, program: str, stats: ExplorationStats) -> "RunReport":
        return cls(
            program=program,
            algorithm=stats.algorithm,
            traces=stats.traces,
            executions=stats.executions,
            redundant=stats.redundant,
            parked=stats.parked,
            violations=stats.violations,
            time_ms=round(stats.wall_ms, 3),
            complete=stats.complete,
            stages=dict(stats.wi),
            decide=stats.decide,
            counterexample=stats.counterexample,
        )

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "program": self.program,
            "algorithm": self.algorithm,
            "traces": self.traces,
            "executions": self.executions,
            "redundant": self.redundant,
            "parked": self.parked,
            "wi_stages": dict(sorted(self.stages.items())),
            "decide": self.decide,
            "violations": self.violations,
            "counterexample": self.counterexample,
            "complete": self.complete,
            "time_ms": self.time_ms,
        }


def parse_params(values: Tuple[str, ...]) -> Dict[str, int]:
    """Turn repeated k=v options into a dict"""
    params = {}
    for item in values:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise BenchmarkParameterError(f"--param expects k=v, got {item!r}")
        try:
            params[key.strip()] = int(value)
        except ValueError:
            raise BenchmarkParameterError(f"{key} must be an integer, got {value!r}")
    return params


def parse_range(text: str) -> List[int]:
    """'3..6' -> [3, 4, 5, 6]; '2,4,8' -> [2, 4, 8]; '5' -> [5]"""
    try:
        if ".." in text:
            low, high = (int(part) for part in text.split("..", 1))
            return list(range(low, high + 1))
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise BenchmarkParameterError(f"--n expects N, A..B or a comma list, got {text!r}")


def load_program(spec: str, params: Dict[str, int]) -> Tuple[str, Program]:
    """Resolve `builtin:NAME` or a program file to (label, Program)"""
    if spec.startswith(BUILTIN_PREFIX):
        name = spec[len(BUILTIN_PREFIX):]
        resolved = get_spec(name).resolve(params)
        label = name + "".join(f" {k}={v}" for k, v in sorted(resolved.items()))
        return label, generate(name, resolved)
    if params:
        raise BenchmarkParameterError("--param only applies to builtin programs")
    path = Path(spec)
    try:
        text = path.read_text()
    except OSError as e:
        raise ProgramError(f"cannot read {spec}: {e.strerror}")
    return path.name, parse_program(text)


def print_report(report: RunReport):
    click.echo(colorize(f"\n📊 {report.program} ({report.algorithm})", Colors.HEADING, bold=True))
    rows = [
        ("traces", report.traces),
        ("executions", report.executions),
        ("redundant", report.redundant),
        ("parked", report.parked),
        ("decide", report.decide),
        ("violations", report.violations),
    ]
    for key, value in rows:
        click.echo(f"  {key:20s}: {value:12d}")
    for key, value in sorted(report.stages.items()):
        if key != "decide":
            click.echo(f"  {'wi.' + key:20s}: {value:12d}")
    click.echo(f"  {'time (ms)':20s}: {report.time_ms:12.1f}")
    if not report.complete:
        print_warning("execution cap reached; counts are partial")


def _configure_logging(verbose: bool, debug: bool, log_file: Optional[str] = None):
    setup_logging("DEBUG" if debug else "INFO" if verbose else Config.DEFAULT_LOG_LEVEL, log_file)


def _settings(algo: str, cap: Optional[int]) -> Config:
    """Environment defaults overridden by command-line options"""
    config = Config.from_env()
    config.algorithm = algo
    if cap is not None:
        config.cap = cap
    config.validate()
    return config


@click.group()
@click.version_option(version=__version__, prog_name="evdpor")
def cli():
    """
    evdpor - stateless model checker for event-driven programs

    Explores every trace of a program of threads and handler messages,
    replaying one execution per trace where the program allows it.
    """
    pass


# Run command
@cli.command()
@click.option('-p', '--program', 'program_spec', required=True,
              help='Program file or builtin:NAME')
@click.option('--param', 'params', multiple=True, metavar='K=V', help='Builtin parameter (repeatable)')
@click.option('-a', '--algo', type=click.Choice([a.value for a in Algorithm]),
              default=Config.DEFAULT_ALGORITHM.value, show_default=True, help='Exploration algorithm')
@click.option('--json', 'as_json', is_flag=True, help='Print a JSON report')
@click.option('--cap', type=int, default=None, help='Maximum executions (default: $EVDPOR_CAP or 10^7)')
@click.option('-v', '--verbose', is_flag=True, help='Log run summaries')
@click.option('--debug', is_flag=True, help='Log reversal candidates and the wakeup tree')
@click.option('--log-file', type=click.Path(dir_okay=False), default=None, help='Also write log records to FILE')
def run(program_spec: str, params: Tuple[str, ...], algo: str, as_json: bool,
        cap: Optional[int], verbose: bool, debug: bool, log_file: Optional[str]):
    """
    Explore a program

    Exits 0 when every explored execution passes its assertions and 2
    when some assertion failed; the first failing schedule is printed.

    Examples:
        python -m evdpor run -p builtin:prolific_cycle --param n=5
        python -m evdpor run -p builtin:fig2_nc --algo brute --json
        python -m evdpor run -p corpus/fig1_wrr.evp --debug
    """
    _configure_logging(verbose, debug, log_file)
    try:
        label, program = load_program(program_spec, parse_params(params))
        stats = explore(program, _settings(algo, cap).explore_config())
    except (EvdporError, ValueError) as e:
        print_error(str(e))
        sys.exit(1)

    report = RunReport.from_stats(label, stats)
    if as_json:
        click.echo(json.dumps(report.to_dict(), indent=2))
    else:
        print_report(report)

    if report.violations:
        if not as_json:
            click.echo(colorize(f"\n✗ {report.violations} assertion violation(s)", Colors.FAIL, bold=True))
            click.echo(f"  schedule: {','.join(report.counterexample or [])}")
        sys.exit(EXIT_VIOLATION)


def _compare_row(job: Tuple[str, Dict[str, int], ExploreConfig]) -> dict:
    name, params, config = job
    stats = explore(generate(name, params), config)
    return {
        "benchmark": name,
        "n": params.get("n", ""),
        "algo": config.algorithm.value,
        "traces": stats.traces,
        "executions": stats.executions,
        "time_ms": round(stats.wall_ms, 3),
        "complete": stats.complete,
    }


COMPARE_COLUMNS = ["benchmark", "n", "algo", "traces", "executions", "time_ms", "complete"]


# Compare command
@cli.command()
@click.argument('benchmarks', nargs=-1)
@click.option('--n', 'n_range', default=None, help='Values of n: N, A..B or A,B,C (default: sweep)')
@click.option('--algos', default='event,coarse', show_default=True, help='Comma-separated algorithms')
@click.option('--csv', 'csv_path', type=click.Path(dir_okay=False), default=None, help='Also write rows to FILE')
@click.option('-j', '--jobs', type=click.IntRange(min=1), default=1, show_default=True,
              help='Worker processes')
@click.option('--cap', type=int, default=None, help='Maximum executions per row')
@click.option('-v', '--verbose', is_flag=True, help='Log run summaries')
def compare(benchmarks: Tuple[str, ...], n_range: Optional[str], algos: str,
            csv_path: Optional[str], jobs: int, cap: Optional[int], verbose: bool):
    """
    Compare algorithms across builtin programs

    Prints one row per (benchmark, n, algorithm).

    Examples:
        python -m evdpor compare prolific_cycle --n 3..6
        python -m evdpor compare plb --n 2..10 --algos event
        python -m evdpor compare writers posters --algos event,brute --csv rows.csv -j 4
    """
    _configure_logging(verbose, False)
    try:
        configs = [_settings(a.strip(), cap).explore_config() for a in algos.split(",") if a.strip()]
        jobs_list = []
        for name in benchmarks:
            spec = get_spec(name)
            if n_range is not None and "n" in spec.params:
                points = [spec.resolve({"n": n}) for n in parse_range(n_range)]
            else:
                points = [spec.resolve(p) for p in sweep_params(name)]
            for params in points:
                jobs_list.extend((name, params, config) for config in configs)

        if jobs > 1 and len(jobs_list) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(_compare_row, jobs_list))
        else:
            rows = [_compare_row(job) for job in jobs_list]
    except (EvdporError, ValueError) as e:
        print_error(str(e))
        sys.exit(1)

    click.echo(colorize(f"{'benchmark':20s} {'n':>3s} {'algo':8s} {'traces':>10s} "
                        f"{'executions':>12s} {'time (ms)':>12s}", Colors.HEADING, bold=True))
    for row in rows:
        line = (f"{row['benchmark']:20s} {str(row['n']):>3s} {row['algo']:8s} {row['traces']:10d} "
                f"{row['executions']:12d} {row['time_ms']:12.1f}")
        click.echo(line if row["complete"] else colorize(line + "  (cap)", Colors.WARN))

    if csv_path:
        try:
            with open(csv_path, "w", newline="") as f:
                writer = csv.DictWriter(f, fieldnames=COMPARE_COLUMNS)
                writer.writeheader()
                writer.writerows(rows)
        except OSError as e:
            print_error(f"Failed to write {csv_path}: {e.strerror}")
            sys.exit(1)
        print_success(f"Wrote {len(rows)} row(s) to {csv_path}")


# Consistency command
@cli.command(name="check-consistency")
@click.option('-g', '--graph', 'graph_path', required=True, type=click.Path(exists=True, dir_okay=False),
              help='Trace graph JSON file')
@click.option('-w', '--witness', is_flag=True, help='Print an execution realizing the graph')
def check_consistency_cmd(graph_path: str, witness: bool):
    """
    Check whether a trace graph is realized by some execution

    Exits 0 when consistent and 1 when not (or when the file is malformed).

    Examples:
        python -m evdpor check-consistency --graph g.json
        python -m evdpor check-consistency --graph g.json --witness
    """
    try:
        graph = ConsistencyGraph.loads(Path(graph_path).read_text())
        found = check_consistency(graph)
    except (EvdporError, OSError) as e:
        print_error(str(e))
        sys.exit(1)

    if found is None:
        click.echo(colorize("✗ inconsistent", Colors.FAIL, bold=True))
        sys.exit(1)
    print_success(f"consistent ({len(graph.events)} events)")
    if witness:
        for position, event in enumerate(found):
            click.echo(f"  {position:3d}  {event}")


# Replay command
@cli.command()
@click.option('-p', '--program', 'program_spec', required=True, help='Program file or builtin:NAME')
@click.option('--param', 'params', multiple=True, metavar='K=V', help='Builtin parameter (repeatable)')
@click.option('-s', '--schedule', required=True, help='Comma-separated instances, e.g. "s,t,s/p1#1@h"')
def replay(program_spec: str, params: Tuple[str, ...], schedule: str):
    """
    Replay one schedule and show its events and races

    Examples:
        python -m evdpor replay -p builtin:fig1_wrr -s "t,t,s,u,u"
        python -m evdpor replay -p builtin:fig2_nc -s "s,t,s/p1#1@h,s/p1#1@h,t/p2#1@h,t/p2#1@h"
    """
    try:
        _, program = load_program(program_spec, parse_params(params))
        instances = [InstanceId.parse(item.strip()) for item in schedule.split(",") if item.strip()]
        record = run_schedule(program, instances)
    except (EvdporError, ValueError) as e:
        print_error(str(e))
        sys.exit(1)

    click.echo(colorize(f"\n📋 {len(record)} events", Colors.HEADING, bold=True))
    for position, event in enumerate(record):
        click.echo(f"  {position:3d}  {event}")

    races = detect_races(record)
    click.echo(colorize(f"\nRaces: {len(races)}", Colors.HEADING, bold=True))
    for e, e_prime in races:
        click.echo(f"  {e}  ->  {e_prime}")

    click.echo(f"\nTrace key: {trace_key(record).digest()}")
    for violation in record.violations:
        print_warning(f"assertion failed in {violation.instance}: {violation.message}")
    if record.violations:
        sys.exit(EXIT_VIOLATION)


# Corpus command
@cli.command()
@click.option('-o', '--out', 'out_dir', required=True, type=click.Path(file_okay=False),
              help='Output directory')
@click.option('--sweep', is_flag=True, help='Write every sweep point, not just the defaults')
def corpus(out_dir: str, sweep: bool):
    """
    Write the builtin programs as text files

    Examples:
        python -m evdpor corpus --out corpus/
        python -m evdpor corpus --out corpus/ --sweep
    """
    try:
        written = write_corpus(out_dir, sweep=sweep)
    except (EvdporError, OSError) as e:
        print_error(f"Failed to write corpus: {e}")
        sys.exit(1)
    print_success(f"Wrote {len(written)} program(s) to {out_dir}")


# List command
@cli.command(name="list")
def list_builtins():
    """
    List builtin programs and their parameters
    """
    click.echo(colorize("\n📋 Builtin programs", Colors.HEADING, bold=True))
    for name in sorted(BENCHMARKS):
        spec = BENCHMARKS[name]
        params = ", ".join(f"{k}={r.default} [{r.low}..{r.high}]" for k, r in spec.params.items())
        kind = "" if spec.non_branching else colorize(" branching", Colors.WARN)
        click.echo(f"  {name:20s} {params:16s}{kind}  {spec.description}")


if __name__ == '__main__':
    cli()
