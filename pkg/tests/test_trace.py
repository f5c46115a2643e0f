"""
Tests for happens-before, trace keys, races and the graph format
"""

import json

import pytest

from evdpor.errors import GraphFormatError
from evdpor.trace import (
    Relation, coarse_conflict, compute_hb, detect_races, is_hb_prefix, saturate, trace_key,
)
from evdpor.trace.graph import ConsistencyGraph
from oracles import all_executions, oracle_keys, replay_text

FIG2_SCHEDULE = "s,t,s/p1#1@h,s/p1#1@h,t/p2#1@h,t/p2#1@h"


def test_hb_contains_program_order(fig1):
    record = replay_text(fig1, "t,u,t,s,u")
    hb = compute_hb(record)
    assert hb.before(0, 2), "<t,1> before <t,2>"
    assert hb.before(2, 3), "read of x by t before the write by s"
    assert not hb.before(0, 1), "t and u are independent"
    assert not hb.relation().close().cyclic, "hb is acyclic"


def test_post_before_begin(fig2_nc):
    record = replay_text(fig2_nc, FIG2_SCHEDULE)
    hb = compute_hb(record)
    assert (0, 2) in hb.pb and (1, 4) in hb.pb, f"unexpected pb {hb.pb}"
    assert not hb.before(2, 4), "non-conflicting messages stay unordered"


def test_detect_races_fig1(fig1):
    """The write of x races with both reads when it runs first"""
    record = replay_text(fig1, "s,t,t,u,u")
    races = [(str(a.instance), str(b.instance)) for a, b in detect_races(record)]
    assert races == [("s", "t"), ("s", "u")], f"got {races}"


def test_trace_key_schedule_independent(fig1):
    a = replay_text(fig1, "t,t,u,u,s")
    b = replay_text(fig1, "u,t,u,t,s")
    c = replay_text(fig1, "s,t,t,u,u")
    assert trace_key(a) == trace_key(b), "commuting steps keep the key"
    assert trace_key(a) != trace_key(c), "reordering a race changes the key"
    assert trace_key(a).digest() == trace_key(b).digest()


def test_trace_key_counts_fig1(fig1):
    assert len(oracle_keys(fig1)) == 4, "fig1 has four traces"


def test_coarse_conflict_orders_messages(fig2_nc):
    """Messages on one handler conflict under the coarse model"""
    assert len(oracle_keys(fig2_nc)) == 1, "one trace with access conflicts"
    assert len(oracle_keys(fig2_nc, coarse_conflict)) == 2, "two traces when handlers are locks"


def test_is_hb_prefix(fig1):
    full = replay_text(fig1, "t,t,s,u,u")
    assert is_hb_prefix(list(full)[:1], full), "a first event is always a prefix"
    assert is_hb_prefix([full[0], full[3]], full), "<t,1> and <u,1> have no predecessors"
    assert not is_hb_prefix([full[2]], full), "the write of x needs the read before it"


def test_saturation_orders_whole_messages(fig2_nc):
    record = replay_text(fig2_nc, FIG2_SCHEDULE)
    base = Relation.from_edges(len(record), [(3, 4)])
    closed = saturate(list(record), base)
    for i in (2, 3):
        for j in (4, 5):
            assert closed.has(i, j), f"expected {i} -> {j}"
    assert not closed.has(4, 2) and not closed.cyclic


def test_saturation_detects_cycle(fig2_nc):
    record = replay_text(fig2_nc, FIG2_SCHEDULE)
    base = Relation.from_edges(len(record), [(3, 4), (5, 2)])
    assert saturate(list(record), base).cyclic, "p1 before p2 before p1"


def test_relation_closure():
    relation = Relation.from_edges(3, [(0, 1), (1, 2)]).close()
    assert relation.has(0, 2) and not relation.cyclic
    relation.add(2, 0)
    assert relation.close().cyclic


def test_relation_reduced_keeps_reachability():
    closed = Relation.from_edges(4, [(0, 1), (1, 2), (0, 3)]).close()
    reduced = closed.reduced()
    assert sorted(reduced.edges()) == [(0, 1), (0, 3), (1, 2)]
    assert reduced.copy().close() == closed


def test_graph_round_trip(fig2_nc):
    record = replay_text(fig2_nc, FIG2_SCHEDULE)
    graph = ConsistencyGraph.from_execution(record)
    loaded = ConsistencyGraph.loads(graph.dumps())
    assert loaded.events == graph.events and loaded.edges == graph.edges, "graph changed in transit"


def test_graph_rejects_bad_pb(fig2_nc):
    record = replay_text(fig2_nc, FIG2_SCHEDULE)
    data = ConsistencyGraph.from_execution(record).to_dict()
    data["pb"].append([3, 5])
    with pytest.raises(GraphFormatError):
        ConsistencyGraph.loads(json.dumps(data))


def test_graph_rejects_non_object():
    with pytest.raises(GraphFormatError):
        ConsistencyGraph.loads("[1, 2]")
    with pytest.raises(GraphFormatError):
        ConsistencyGraph.loads("{not json")


def test_every_execution_hb_acyclic(builtin):
    for record in all_executions(builtin("fig4_two_handlers")):
        assert not compute_hb(record).relation().close().cyclic


def test_graph_rejects_missing_conflict_edge(fig1):
    data = ConsistencyGraph.from_execution(replay_text(fig1, "s,t,t,u,u")).to_dict()
    assert data["cnf"], "s and t conflict on x"
    data["cnf"].pop()
    with pytest.raises(GraphFormatError, match="no cnf edge"):
        ConsistencyGraph.loads(json.dumps(data))


def test_graph_rejects_edge_between_independent_events(fig2_nc):
    graph = ConsistencyGraph.from_execution(replay_text(fig2_nc, FIG2_SCHEDULE))
    begins = [i for i, e in enumerate(graph.events) if e.is_begin]
    bad = ConsistencyGraph(graph.events, graph.po, graph.cnf + ((begins[0], begins[1]),), graph.pb)
    with pytest.raises(GraphFormatError, match="non-conflicting"):
        bad.validate()


def test_graph_rejects_missing_pb(fig2_nc):
    graph = ConsistencyGraph.from_execution(replay_text(fig2_nc, FIG2_SCHEDULE))
    bad = ConsistencyGraph(graph.events, graph.po, graph.cnf, graph.pb[1:])
    with pytest.raises(GraphFormatError, match="no pb edge"):
        bad.validate()


def test_graph_validated_under_its_conflict_model(fig2_nc):
    """Coarse graphs order messages of one handler, which plain conflicts reject"""
    graph = ConsistencyGraph.from_execution(replay_text(fig2_nc, FIG2_SCHEDULE), coarse_conflict)
    graph.validate(coarse_conflict)
    with pytest.raises(GraphFormatError):
        graph.validate()
