from apiminer.cfg import (CONTROL, NORMAL, build_cfg, cfg_to_dot,
                          count_branch_nodes, unreachable_nodes)
from apiminer.ir import parse_method

from conftest import diamond_method


def test_straight_line_chain():
    m = parse_method(".method A.f 2 ()\n  const v0 1\n  const v1 2\n"
                     "  move v0 v1\n  return\n.end\n")
    cfg = build_cfg(m)
    assert len(cfg) == 4
    assert cfg.successors == ((1,), (2,), (3,), ())
    assert [cfg.kind(i) for i in range(4)] == [NORMAL, NORMAL, NORMAL, CONTROL]


def test_if_diamond_successors():
    cfg = build_cfg(parse_method(diamond_method(1)))
    if_nodes = [i for i in range(len(cfg))
                if cfg.nodes[i][0].__class__.__name__ == "If"]
    assert len(if_nodes) == 1
    succ = cfg.successors[if_nodes[0]]
    assert len(succ) == 2
    assert succ[0] == if_nodes[0] + 1  # fall-through listed first


def test_backward_goto_creates_back_edge():
    m = parse_method(".method A.f 1 ()\n:top\n  const v0 1\n"
                     "  if eq v0 0 :out\n  goto :top\n:out\n  return\n.end\n")
    cfg = build_cfg(m)
    goto_idx = 2
    assert cfg.successors[goto_idx] == (0,)  # jumps backwards


def test_switch_successors_fallthrough_first():
    m = parse_method(".method A.f 1 ()\n  switch v0 :a :b\n  return\n"
                     ":a\n  return\n:b\n  return\n.end\n")
    cfg = build_cfg(m)
    assert cfg.successors[0] == (1, 2, 3)
    assert cfg.kind(0) == CONTROL


def test_branch_counting():
    straight = parse_method(".method A.f 1 ()\n  const v0 1\n  return\n.end\n")
    assert count_branch_nodes(build_cfg(straight)) == 0

    three_ifs = parse_method(
        ".method A.f 1 ()\n:x\n  if eq v0 0 :x\n  if ne v0 0 :x\n"
        "  if lt v0 0 :x\n  return\n.end\n")
    assert count_branch_nodes(build_cfg(three_ifs)) == 3

    if_plus_switch = parse_method(
        ".method A.f 1 ()\n:x\n  if eq v0 0 :x\n  switch v0 :x :y\n"
        ":y\n  return\n.end\n")
    assert count_branch_nodes(build_cfg(if_plus_switch)) == 3


def test_kind_partition():
    m = parse_method(".method A.f 2 ()\n  const v0 1\n  if eq v0 0 :x\n"
                     "  goto :x\n:x\n  switch v0 :y\n:y\n  throw v0\n.end\n")
    cfg = build_cfg(m)
    kinds = [cfg.kind(i) for i in range(len(cfg))]
    assert kinds == [NORMAL, CONTROL, CONTROL, CONTROL, CONTROL]


def test_unreachable_detection():
    m = parse_method(".method A.f 1 ()\n  goto :end\n  const v0 1\n"
                     ":end\n  return\n.end\n")
    cfg = build_cfg(m)
    assert unreachable_nodes(cfg) == {1}


def test_dot_dump_lists_all_nodes_and_edges():
    m = parse_method(".method A.f 1 ()\n  const v0 1\n  return\n.end\n")
    dot = cfg_to_dot(build_cfg(m), "A.f")
    assert "digraph" in dot and "n0 -> n1" in dot
    assert dot.count("shape=") == 2
