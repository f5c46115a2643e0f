"""
Tests for wakeup trees and wakeup-sequence insertion
"""

import pytest

from evdpor.consistency import PrefixView, WeakInitials
from evdpor.errors import ContractViolation
from evdpor.program import InstanceId
from evdpor.wakeup import WakeupInserter, WakeupTree
from oracles import builtin_record, ids, replay_text


def bind_path(execution):
    """Tree holding E as its only branch, with an inserter bound to it"""
    execution = list(execution)
    tree = WakeupTree()
    WakeupTree.add_branch(tree.root, execution)
    path = [tree.root]
    while path[-1].children:
        path.append(path[-1].children[0])
    views = [PrefixView.of(execution[:d]) for d in range(len(execution) + 1)]
    inserter = WakeupInserter(WeakInitials())
    inserter.bind(execution, path, views)
    return tree, path, inserter


def test_empty_tree():
    tree = WakeupTree()
    assert not tree, "no branches"
    with pytest.raises(ContractViolation):
        tree.min_branch()
    with pytest.raises(ContractViolation):
        tree.subtree_after(InstanceId.thread("s"))


def test_tree_branch_operations(fig1):
    a = list(replay_text(fig1, "t,u"))
    b = list(replay_text(fig1, "s,t"))
    tree = WakeupTree.of(a, b)
    assert tree.min_branch() == InstanceId.thread("t"), "first inserted branch is least"
    assert tree.branches() == [tuple(ids("t", "u")), tuple(ids("s", "t"))]
    sub = tree.subtree_after(InstanceId.thread("s"))
    assert sub.branches() == [tuple(ids("t"))], "subtree is re-rooted below s"
    tree.remove_branch(InstanceId.thread("t"))
    assert tree.min_branch() == InstanceId.thread("s")


def test_insert_new_branch(fig1):
    """t.u.t reverses the race on x and lands next to the explored branch"""
    record = replay_text(fig1, "s,t,t,u,u")
    tree, _, inserter = bind_path(record)
    wakeup = (record[1], record[3], record[2])
    inserter.insert_wus(wakeup, 0)
    assert tree.branches() == [tuple(ids("s", "t", "t", "u", "u")), tuple(ids("t", "u", "t"))]
    assert inserter.stats.inserted == 1


def test_equivalent_insert_dropped(fig1):
    """u.t.t is already covered by t.u.t"""
    record = replay_text(fig1, "s,t,t,u,u")
    tree, _, inserter = bind_path(record)
    inserter.insert_wus((record[1], record[3], record[2]), 0)
    inserter.insert_wus((record[3], record[1], record[2]), 0)
    assert len(tree.branches()) == 2, f"unexpected branches {tree.branches()}"
    assert inserter.stats.dropped == 1


def test_insert_below_live_prefix():
    """A reversal of fig2_conf's x race branches after s.t"""
    record = builtin_record(
        "fig2_conf",
        "s,t,s/p1#1@h,s/p1#1@h,s/p1#1@h,s/p1#1@h,t/p2#1@h,t/p2#1@h,t/p2#1@h,t/p2#1@h",
    )
    _, path, inserter = bind_path(record)
    inserter.insert_wus((record[6], record[7], record[8]), 2)
    children = [child.instance for child in path[2].children]
    assert children == ids("s/p1#1@h", "t/p2#1@h"), f"got {children}"


def test_parked_when_message_order_unknown():
    """A message that is neither first nor complete in v waits for its exploration"""
    schedule = "t1,t2,t3" + ",t1/w1#1@h" * 3 + ",t2/w2#1@h" * 3 + ",t3/w3#1@h" * 3
    record = builtin_record("writers", schedule, n=3)
    w2 = builtin_record("writers", "t1,t2,t3,t2/w2#1@h,t2/w2#1@h", n=3)
    w3 = builtin_record("writers", "t1,t2,t3,t3/w3#1@h,t3/w3#1@h", n=3)
    tree, path, inserter = bind_path(record)
    inserter.insert_wus(tuple(w2)[3:], 3)
    inserter.insert_wus(tuple(w3)[3:], 3)
    assert inserter.stats.inserted == 1 and inserter.stats.parked == 1
    assert tree.parked_count() == 1
    assert "~ parked: t3/w3#1@h t3/w3#1@h" in tree.dump()
    parked_at = path[3].children[1]
    assert parked_at.instance == InstanceId.parse("t2/w2#1@h")


def test_empty_sequence_dropped(fig1):
    record = replay_text(fig1, "s,t,t,u,u")
    _, _, inserter = bind_path(record)
    inserter.insert_wus((), 0)
    inserter.insert_parked((), 1)
    assert inserter.stats.dropped == 2


def test_dump_marks_former_leaf(fig1):
    tree = WakeupTree.of(list(replay_text(fig1, "s")))
    tree.root.children[0].former_leaf = True
    assert tree.dump().splitlines()[1].endswith("*"), tree.dump()


def test_insert_into_empty_tree(fig1):
    """An empty tree takes v as its only branch"""
    record = replay_text(fig1, "s,t,t,u,u")
    tree = WakeupTree()
    inserter = WakeupInserter(WeakInitials())
    inserter.bind(record, [tree.root], [PrefixView.of(())])
    inserter.insert_wus((record[1], record[3], record[2]), 0)
    assert tree.branches() == [tuple(ids("t", "u", "t"))]
    assert inserter.stats.inserted == 1 and inserter.stats.dropped == 0


WRITERS_SCHEDULE = "t1,t2,t3" + ",t1/w1#1@h" * 3 + ",t2/w2#1@h" * 3 + ",t3/w3#1@h" * 3


def writers_path():
    """writers n=3 explored as t1.t2.t3.w1.w2.w3, and w3 alone after the threads"""
    record = builtin_record("writers", WRITERS_SCHEDULE, n=3)
    w3 = tuple(builtin_record("writers", "t1,t2,t3" + ",t3/w3#1@h" * 3, n=3))[3:]
    tree, path, inserter = bind_path(record)
    return record, w3, tree, path, inserter


def test_parked_reinserted_next_to_explored_message():
    """w1 cannot run before w3's store, so w3 branches off after the threads"""
    _, w3, _, path, inserter = writers_path()
    inserter.insert_parked(w3, 4)
    assert [c.instance for c in path[3].children] == ids("t1/w1#1@h", "t3/w3#1@h")
    assert inserter.stats.inserted == 1 and inserter.stats.dropped == 0


def test_parked_walks_down_explored_prefix():
    """Each thread of the explored prefix is consumed before the insertion lands"""
    record, w3, tree, path, inserter = writers_path()
    inserter.insert_parked(tuple(record[:3]) + w3, 1)
    assert [c.instance for c in tree.root.children] == ids("t1"), "nothing added at the root"
    assert [c.instance for c in path[3].children] == ids("t1/w1#1@h", "t3/w3#1@h")
    assert inserter.stats.inserted == 1


def test_resumed_insertion_below_former_leaf_dropped():
    _, w3, tree, path, inserter = writers_path()
    path[3].former_leaf = True
    before = tree.branches()
    inserter.insert_parked(w3, 4, resumed=True)
    assert tree.branches() == before
    assert inserter.stats.dropped == 1 and inserter.stats.inserted == 0


def test_subtree_keeps_parked_sequences():
    _, w3, tree, path, _ = writers_path()
    path[2].parked.append(w3)
    sub = tree.subtree_after(InstanceId.thread("t1"))
    assert sub.root.children[0].parked == [w3]
    assert sub.parked_count() == 1
