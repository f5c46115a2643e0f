"""
Tests for the event-driven explorer, the coarse baseline and the brute-force oracle
"""

import time

import pytest

from evdpor.bench import BENCHMARKS, sweep_params
from evdpor.config import Algorithm, ExploreConfig
from evdpor.errors import CapExceededError
from evdpor.explorer import brute_force, explore, explore_coarse
from evdpor.program import parse_program
from evdpor.trace import coarse_conflict
from oracles import oracle_keys

RACY_ASSERT = "shared x\nthread s { store x 1 }\nthread t { load a x  assert a == 0 }\n"

SMALL = [
    ("fig1_wrr", {}), ("fig2_nc", {}), ("fig2_conf", {}), ("fig3_branch", {}),
    ("fig4_two_handlers", {}), ("fig5_wi", {}), ("conditional_write", {}),
    ("writers", {"n": 2}), ("writers", {"n": 3}), ("posters", {"n": 2}),
    ("prolific_cycle", {"n": 3}), ("prolific_cycle", {"n": 4}), ("plb", {"n": 3}),
    ("ping_pong", {"n": 2}), ("consensus_lite", {"n": 1}),
]


def recorded(program, algorithm=Algorithm.EVENT, cap=10 ** 7):
    return explore(program, ExploreConfig(algorithm=algorithm, cap=cap, record_keys=True))


@pytest.mark.parametrize("name,expected", [
    ("fig1_wrr", 4), ("fig2_nc", 1), ("fig2_conf", 2), ("fig3_branch", 3),
    ("fig4_two_handlers", 8), ("fig5_wi", 1),
])
def test_example_trace_counts(builtin, name, expected):
    stats = explore(builtin(name))
    assert stats.traces == expected, f"{name}: {stats.traces} traces, expected {expected}"
    assert stats.complete


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_prolific_cycle(builtin, n):
    stats = explore(builtin("prolific_cycle", n=n))
    assert stats.traces == 2 ** n - 2, f"n={n}: got {stats.traces}"
    assert stats.executions == stats.traces, "one execution per trace"


@pytest.mark.parametrize("n", [7, 8])
def test_prolific_cycle_within_ten_seconds(builtin, n):
    program = builtin("prolific_cycle", n=n)
    started = time.perf_counter()
    stats = explore(program)
    elapsed = time.perf_counter() - started
    assert stats.traces == stats.executions == 2 ** n - 2, f"n={n}: got {stats.traces}"
    assert elapsed < 10.0, f"n={n} took {elapsed:.1f} s"


@pytest.mark.parametrize("n", [2, 5, 8])
def test_plb_single_trace(builtin, n):
    stats = explore(builtin("plb", n=n))
    assert stats.traces == 1 and stats.executions == 1


@pytest.mark.parametrize("name,params", SMALL)
def test_keys_match_oracle(builtin, name, params):
    """Every trace found by exhaustive enumeration is explored"""
    program = builtin(name, **params)
    stats = recorded(program)
    assert stats.keys == oracle_keys(program), f"{name} {params}: trace sets differ"
    assert stats.parked_leaked == 0, f"{name} {params}: parked sequences never resumed"


@pytest.mark.parametrize("name,params", [
    (name, params) for name, params in SMALL if BENCHMARKS[name].non_branching
])
def test_non_branching_optimal(builtin, name, params):
    """No two explored executions are equivalent"""
    stats = recorded(builtin(name, **params))
    assert stats.duplicate_keys == 0, f"{name} {params}: {stats.duplicate_keys} duplicate(s)"
    assert stats.executions == stats.traces


@pytest.mark.parametrize("name,params", SMALL)
def test_no_repeated_schedules(builtin, name, params):
    stats = recorded(builtin(name, **params))
    assert len(stats.schedules) == len(set(stats.schedules)), "a schedule was explored twice"
    assert stats.traces <= stats.executions


@pytest.mark.parametrize("name", sorted(BENCHMARKS))
def test_cheap_checks_suffice(builtin, name):
    """The decision procedure is never needed across the builtin sweep"""
    for params in sweep_params(name):
        stats = explore(builtin(name, **params))
        assert stats.decide == 0, f"{name} {params}: decision procedure invoked {stats.decide} time(s)"


@pytest.mark.parametrize("name", ["fig3_branch", "fig5_wi", "conditional_write"])
def test_branching_duplicates_reported(builtin, name):
    """Branching programs may repeat a trace; the count is reported, not enforced"""
    stats = recorded(builtin(name))
    assert stats.duplicate_keys == stats.executions - stats.traces
    assert stats.traces == len(stats.keys)


def test_deterministic(builtin):
    program = builtin("fig4_two_handlers")
    first, second = recorded(program), recorded(program)
    assert first.schedules == second.schedules, "exploration order changed between runs"
    assert (first.traces, first.executions, first.races) == (second.traces, second.executions, second.races)


def test_cap_marks_partial(builtin):
    stats = explore(builtin("prolific_cycle", n=4), ExploreConfig(cap=2))
    assert not stats.complete, "cap must flag the run incomplete"
    assert stats.executions == 2


def test_violation_counterexample():
    stats = explore(parse_program(RACY_ASSERT))
    assert stats.violations == 1, f"got {stats.violations} violation(s)"
    assert stats.counterexample == ["s", "t"], "write first makes t read 1"


def test_coarse_orders_messages(builtin):
    assert explore_coarse(builtin("fig2_nc")).traces == 2, "both message orders"
    assert explore_coarse(builtin("plb", n=1)).traces == 1, "one message, one trace"


@pytest.mark.parametrize("n", [3, 4])
def test_coarse_matches_coarse_oracle(builtin, n):
    program = builtin("prolific_cycle", n=n)
    stats = recorded(program, Algorithm.COARSE)
    assert stats.keys == oracle_keys(program, coarse_conflict)


def test_coarse_grows_faster(builtin):
    for n in (4, 5):
        program = builtin("prolific_cycle", n=n)
        assert explore_coarse(program).traces > explore(program).traces, f"n={n}"


def test_coarse_growth_accelerates(builtin):
    counts = [explore_coarse(builtin("prolific_cycle", n=n)).traces for n in range(3, 8)]
    assert counts == [6, 24, 120, 720, 5040], "one trace per message order"
    ratios = [b / a for a, b in zip(counts, counts[1:])]
    assert all(r1 < r2 for r1, r2 in zip(ratios, ratios[1:])), f"counts {counts}"


def test_brute_force(builtin):
    result = brute_force(builtin("fig2_nc"))
    assert len(result.keys) == 1 and result.schedules > 1
    single = brute_force(parse_program("shared x\nthread s { store x 1  load a x }\n"))
    assert len(single.keys) == 1 and single.schedules == 1
    assert len(brute_force(builtin("fig4_two_handlers")).keys) == 8


def test_brute_force_cap(builtin):
    with pytest.raises(CapExceededError):
        brute_force(builtin("fig4_two_handlers"), cap=2)


def test_brute_algorithm_stats(builtin):
    stats = explore(builtin("fig2_nc"), ExploreConfig(algorithm=Algorithm.BRUTE))
    assert stats.algorithm == "brute" and stats.traces == 1 and stats.executions > 1
