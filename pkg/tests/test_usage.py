import pytest

from apiminer.cfg import build_cfg
from apiminer.errors import BranchLimitExceeded, MalformedPathError
from apiminer.ir import parse_method
from apiminer.usage import build_usage_graphs, usage_graph_to_dot

from conftest import diamond_method
from helpers import count_simple_paths


def graphs_for(text, **kwargs):
    method = parse_method(text)
    return build_usage_graphs(method, build_cfg(method), **kwargs)


def test_reader_example_single_path(reader_method):
    graphs = build_usage_graphs(reader_method, build_cfg(reader_method))
    assert len(graphs) == 1
    graph = graphs[0]
    visible = [a.label for a in graph.action_nodes if not a.pseudo]
    assert visible == ["java.io.FileReader.init", "java.io.BufferedReader.init",
                       "java.io.BufferedReader.readLine",
                       "java.io.BufferedReader.close"]
    types = sorted(o.type_label for o in graph.object_nodes)
    # param String, FileReader + BufferedReader allocations, readLine result
    assert types == ["java.io.BufferedReader", "java.io.FileReader",
                     "java.lang.String", "java.lang.String"]


def test_new_instance_maps_register_and_produces_object():
    graphs = graphs_for(".method A.f 1 ()\n"
                        "  new-instance v0 java.io.FileReader\n"
                        "  invoke-virtual java.io.FileReader.read (v0)\n"
                        "  return\n.end\n")
    graph = graphs[0]
    alloc = graph.action_nodes[0]
    assert alloc.pseudo and alloc.label == "java.io.FileReader.init-alloc"
    produced = [o for a, o in graph.result_edges if a == alloc.id]
    assert len(produced) == 1
    read = graph.action_nodes[1]
    assert graph.param_edges == ((produced[0], read.id),)


def test_invoke_then_move_result_links_result_edge():
    graphs = graphs_for(".method A.f 2 ()\n"
                        "  new-instance v0 java.io.BufferedReader\n"
                        "  invoke-virtual java.io.BufferedReader.readLine (v0)\n"
                        "  move-result v1 java.lang.String\n"
                        "  invoke-static java.lang.Log.print (v1)\n"
                        "  return\n.end\n")
    graph = graphs[0]
    read = next(a for a in graph.action_nodes if a.label.endswith("readLine"))
    results = [o for a, o in graph.result_edges if a == read.id]
    assert len(results) == 1
    by_id = {o.id: o for o in graph.object_nodes}
    assert by_id[results[0]].type_label == "java.lang.String"
    # the println consumes exactly that object
    log = next(a for a in graph.action_nodes if a.label.endswith("print"))
    assert (results[0], log.id) in graph.param_edges


def test_move_aliases_without_new_nodes():
    graphs = graphs_for(".method A.f 4 ()\n"
                        "  new-instance v0 java.io.File\n"
                        "  move v3 v0\n"
                        "  invoke-virtual java.io.File.delete (v3)\n"
                        "  return\n.end\n")
    graph = graphs[0]
    assert len(graph.object_nodes) == 1  # alias, not a copy
    delete = next(a for a in graph.action_nodes if a.label.endswith("delete"))
    assert (graph.object_nodes[0].id, delete.id) in graph.param_edges


def test_unmapped_invoke_argument_gets_unknown_object():
    graphs = graphs_for(".method A.f 2 ()\n"
                        "  invoke-static java.lang.Log.print (v0)\n"
                        "  return\n.end\n")
    graph = graphs[0]
    assert [o.type_label for o in graph.object_nodes] == ["unknown"]


def test_const_binop_field_rules():
    graphs = graphs_for(".method A.f 4 ()\n"
                        "  const v0 1\n"
                        '  const v1 "s"\n'
                        "  binop add v2 v0 v0\n"
                        "  new-instance v3 p.Q\n"
                        "  iget v0 v3 p.Q.size\n"
                        "  iput v1 v3 p.Q.name\n"
                        "  return\n.end\n")
    graph = graphs[0]
    types = [o.type_label for o in graph.object_nodes]
    assert types[:2] == ["int", "string"]  # const literals
    add = next(a for a in graph.action_nodes if a.label == "add")
    assert add.class_name is None
    get_ = next(a for a in graph.action_nodes if a.label == "p.Q.size")
    put = next(a for a in graph.action_nodes if a.label == "p.Q.name")
    assert len([o for a, o in graph.result_edges if a == get_.id]) == 1
    assert len([o for o, a in graph.param_edges if a == put.id]) == 2


def test_move_result_without_invoke_is_malformed():
    with pytest.raises(MalformedPathError):
        graphs_for(".method A.f 1 ()\n  const v0 1\n  move-result v0\n"
                   "  return\n.end\n")


def test_intervening_instruction_discards_pending_result():
    with pytest.raises(MalformedPathError):
        graphs_for(".method A.f 2 ()\n"
                   "  invoke-static p.Q.get ()\n"
                   "  const v0 1\n"
                   "  move-result v1\n"
                   "  return\n.end\n")


def test_one_if_two_arms_two_graphs():
    assert len(graphs_for(diamond_method(1))) == 2


@pytest.mark.parametrize("arms", [1, 2, 3, 4])
def test_diamond_path_count_matches_oracle(arms):
    method = parse_method(diamond_method(arms))
    cfg = build_cfg(method)
    graphs = build_usage_graphs(method, cfg)
    assert len(graphs) == 2 ** arms == count_simple_paths(cfg)


def test_loop_taken_zero_or_one_times(loop_method):
    graphs = build_usage_graphs(loop_method, build_cfg(loop_method))
    assert len(graphs) == 2
    push_counts = sorted(
        sum(1 for a in g.action_nodes if a.label.endswith("push"))
        for g in graphs)
    assert push_counts == [0, 1]
    for g in graphs:
        assert sum(1 for a in g.action_nodes if a.label.endswith("close")) == 1


def test_throw_paths_discarded():
    graphs = graphs_for(".method A.f 2 ()\n"
                        "  new-instance v0 java.io.File\n"
                        "  if eq v1 0 :boom\n"
                        "  invoke-virtual java.io.File.delete (v0)\n"
                        "  return\n:boom\n  throw v0\n.end\n")
    assert len(graphs) == 1
    assert any(a.label.endswith("delete") for a in graphs[0].action_nodes)


def test_no_return_reachable_gives_empty_result():
    graphs = graphs_for(".method A.f 1 ()\n  const v0 1\n  throw v0\n.end\n")
    assert graphs == []


def test_branch_cap_exclusion():
    with pytest.raises(BranchLimitExceeded):
        graphs_for(diamond_method(3), max_branch_nodes=2)


def test_fallthrough_arm_explored_first():
    graphs = graphs_for(diamond_method(1))
    first_labels = [a.label for a in graphs[0].action_nodes]
    assert any(l.endswith("low0") for l in first_labels)
    second_labels = [a.label for a in graphs[1].action_nodes]
    assert any(l.endswith("high0") for l in second_labels)


def test_deterministic_output():
    a = [usage_graph_to_dot(g) for g in graphs_for(diamond_method(3))]
    b = [usage_graph_to_dot(g) for g in graphs_for(diamond_method(3))]
    assert a == b


def test_no_repeated_normal_nodes_per_path(loop_method):
    # every graph's action multiset reflects each instruction at most once
    graphs = build_usage_graphs(loop_method, build_cfg(loop_method))
    for g in graphs:
        labels = [a.label for a in g.action_nodes]
        assert len(labels) == len(set(labels))


def test_param_objects_created_before_exploration(reader_method):
    graph = build_usage_graphs(reader_method, build_cfg(reader_method))[0]
    assert graph.object_nodes[0].type_label == "java.lang.String"


def test_param_edge_ordering_sound(reader_method):
    graph = build_usage_graphs(reader_method, build_cfg(reader_method))[0]
    created_at = {}
    for order, obj in enumerate(graph.object_nodes):
        created_at[obj.id] = order
    # objects are created no later than the action consuming them
    action_order = {a.id: i for i, a in enumerate(graph.action_nodes)}
    for oid, aid in graph.param_edges:
        assert oid in created_at and aid in action_order


def test_dot_dump_styles():
    dot = usage_graph_to_dot(graphs_for(diamond_method(1))[0])
    assert "style=rounded" in dot and "style=dashed" in dot
