"""Per-execution-path usage graphs of objects and the actions applied to them.

A usage graph has object nodes (values: parameters, allocations, call
results, literals) and action nodes (allocations, calls, field accesses,
arithmetic). Action nodes form a single temporal chain per path; data edges
link objects to the actions that consume them (param) and actions to the
objects they produce (result).

Graphs are built by enumerating execution paths of the CFG with a depth-first
stack, visiting each non-control node at most once per path, so loop bodies
contribute either zero or one pass. Only paths that end at a ``return``
produce a graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ir
from .cfg import CONTROL, Cfg
from .errors import BranchLimitExceeded, MalformedPathError
from .ir import Instruction, Method

INIT_ALLOC_SUFFIX = ".init-alloc"


@dataclass(frozen=True)
class ObjectNode:
    id: int
    type_label: str


@dataclass(frozen=True)
class ActionNode:
    id: int
    label: str  # "C.m" for allocations/calls/field accesses, op name otherwise
    class_name: str | None  # None for plain operations (never API)
    pseudo: bool = False  # allocation helper nodes; excluded from sequences


@dataclass(frozen=True)
class UsageGraph:
    object_nodes: tuple[ObjectNode, ...]
    action_nodes: tuple[ActionNode, ...]  # list order is the temporal order
    param_edges: tuple[tuple[int, int], ...]  # object id -> action id
    result_edges: tuple[tuple[int, int], ...]  # action id -> object id

    def objects_adjacent_to(self, action_id: int) -> list[ObjectNode]:
        by_id = {o.id: o for o in self.object_nodes}
        ids = [o for o, a in self.param_edges if a == action_id]
        ids += [o for a, o in self.result_edges if a == action_id]
        seen, out = set(), []
        for oid in ids:
            if oid not in seen:
                seen.add(oid)
                out.append(by_id[oid])
        return out

    def actions_adjacent_to(self, object_ids: set[int]) -> list[ActionNode]:
        """Actions touching any of the given objects, in temporal order."""
        adjacent = {a for o, a in self.param_edges if o in object_ids}
        adjacent |= {a for a, o in self.result_edges if o in object_ids}
        return [a for a in self.action_nodes if a.id in adjacent]


class _State:
    """One frontier of the path exploration: where to resume plus everything
    accumulated so far (explored normal nodes, partial graph, register map)."""

    __slots__ = ("start", "explored", "objects", "actions", "param_edges",
                 "result_edges", "register_map", "pending_invoke",
                 "control_visits", "next_object_id", "next_action_id")

    def __init__(self, start: int):
        self.start = start
        self.explored: set[int] = set()
        self.objects: list[ObjectNode] = []
        self.actions: list[ActionNode] = []
        self.param_edges: list[tuple[int, int]] = []
        self.result_edges: list[tuple[int, int]] = []
        self.register_map: dict[int, int] = {}
        self.pending_invoke: int | None = None
        self.control_visits: dict[int, int] = {}
        self.next_object_id = 0
        self.next_action_id = 0

    def fork(self, start: int) -> "_State":
        child = _State.__new__(_State)
        child.start = start
        child.explored = set(self.explored)
        child.objects = list(self.objects)
        child.actions = list(self.actions)
        child.param_edges = list(self.param_edges)
        child.result_edges = list(self.result_edges)
        child.register_map = dict(self.register_map)
        child.pending_invoke = self.pending_invoke
        child.control_visits = dict(self.control_visits)
        child.next_object_id = self.next_object_id
        child.next_action_id = self.next_action_id
        return child

    def new_object(self, type_label: str) -> int:
        oid = self.next_object_id
        self.next_object_id += 1
        self.objects.append(ObjectNode(oid, type_label))
        return oid

    def new_action(self, label: str, class_name: str | None,
                   pseudo: bool = False) -> int:
        aid = self.next_action_id
        self.next_action_id += 1
        self.actions.append(ActionNode(aid, label, class_name, pseudo))
        return aid

    def object_for(self, register: int) -> int:
        """Object node currently held by a register, creating an untyped one
        for registers that were never written."""
        oid = self.register_map.get(register)
        if oid is None:
            oid = self.new_object(ir.UNKNOWN_TYPE)
            self.register_map[register] = oid
        return oid

    def add_params(self, oid: int, aid: int) -> None:
        if (oid, aid) not in self.param_edges:
            self.param_edges.append((oid, aid))

    def snapshot(self) -> UsageGraph:
        return UsageGraph(
            object_nodes=tuple(self.objects),
            action_nodes=tuple(self.actions),
            param_edges=tuple(self.param_edges),
            result_edges=tuple(self.result_edges),
        )


def _apply(state: _State, instr: Instruction) -> None:
    """Fold one non-control instruction into the partial graph."""
    pending = state.pending_invoke
    state.pending_invoke = None
    match instr:
        case ir.NewInstance(dst, cls):
            aid = state.new_action(cls + INIT_ALLOC_SUFFIX, cls, pseudo=True)
            oid = state.new_object(cls)
            state.result_edges.append((aid, oid))
            state.register_map[dst] = oid
        case ir.Invoke(_, target, args):
            aid = state.new_action(target.display, target.class_name)
            for reg in args:
                state.add_params(state.object_for(reg), aid)
            state.pending_invoke = aid
        case ir.MoveResult(dst, result_type):
            if pending is None:
                raise MalformedPathError(
                    "move-result without a directly preceding invoke")
            oid = state.new_object(result_type)
            state.result_edges.append((pending, oid))
            state.register_map[dst] = oid
        case ir.Const(dst, _):
            state.register_map[dst] = state.new_object(instr.literal_kind)
        case ir.Move(dst, src):
            state.register_map[dst] = state.object_for(src)
        case ir.Binop(op, dst, a, b):
            aid = state.new_action(op, None)
            state.add_params(state.object_for(a), aid)
            state.add_params(state.object_for(b), aid)
            oid = state.new_object("int")
            state.result_edges.append((aid, oid))
            state.register_map[dst] = oid
        case ir.FieldGet(dst, obj, fieldref):
            aid = state.new_action(fieldref.display, fieldref.class_name)
            state.add_params(state.object_for(obj), aid)
            oid = state.new_object(ir.UNKNOWN_TYPE)
            state.result_edges.append((aid, oid))
            state.register_map[dst] = oid
        case ir.FieldPut(src, obj, fieldref):
            aid = state.new_action(fieldref.display, fieldref.class_name)
            state.add_params(state.object_for(src), aid)
            state.add_params(state.object_for(obj), aid)
        case _:
            raise AssertionError(f"control instruction reached _apply: {instr!r}")


def build_usage_graphs(method: Method, cfg: Cfg,
                       max_branch_nodes: int = 10) -> list[UsageGraph]:
    """Enumerate execution paths and return one usage graph per return-ending
    path, deterministically ordered (fall-through arm explored first).

    Raises BranchLimitExceeded when the method has more branch points than
    ``max_branch_nodes``; callers treat that as an exclusion, not a failure.
    """
    from .cfg import count_branch_nodes

    branches = count_branch_nodes(cfg)
    if branches > max_branch_nodes:
        raise BranchLimitExceeded(branches, max_branch_nodes)

    # Revisit cap: a control node re-entered more than node-count times on one
    # path cannot be making progress (pure control cycle), so the path dies.
    visit_cap = max(len(cfg), 1)

    graphs: list[UsageGraph] = []
    initial = _State(cfg.entry)
    for reg, type_label in method.params:
        initial.register_map[reg] = initial.new_object(type_label)
    stack = [initial]
    while stack:
        state = stack.pop()
        node = state.start
        while cfg.kind(node) != CONTROL:
            _apply(state, cfg.instruction(node))
            state.explored.add(node)
            node = cfg.successors[node][0]
        visits = state.control_visits.get(node, 0) + 1
        if visits > visit_cap:
            continue
        state.control_visits[node] = visits
        instr = cfg.instruction(node)
        if isinstance(instr, ir.Return):
            graphs.append(state.snapshot())
        elif isinstance(instr, ir.Throw):
            pass  # throw-terminated paths are discarded
        else:
            # Push in reverse so the first successor (fall-through) pops first.
            for nxt in reversed(cfg.successors[node]):
                if nxt not in state.explored:
                    stack.append(state.fork(nxt))
    return graphs


def usage_graph_to_dot(graph: UsageGraph, title: str = "usage") -> str:
    """DOT rendering: object nodes as rounded boxes, action nodes as boxes,
    data edges dashed, the temporal chain solid."""
    lines = [f'digraph "{title}" {{']
    for obj in graph.object_nodes:
        lines.append(f'  o{obj.id} [shape=box, style=rounded, '
                     f'label="{obj.type_label}"];')
    for act in graph.action_nodes:
        lines.append(f'  a{act.id} [shape=box, label="{act.label}"];')
    for prev, nxt in zip(graph.action_nodes, graph.action_nodes[1:]):
        lines.append(f"  a{prev.id} -> a{nxt.id};")
    for oid, aid in graph.param_edges:
        lines.append(f"  o{oid} -> a{aid} [style=dashed];")
    for aid, oid in graph.result_edges:
        lines.append(f"  a{aid} -> o{oid} [style=dashed];")
    lines.append("}")
    return "\n".join(lines) + "\n"
