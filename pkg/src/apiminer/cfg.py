"""Per-method control-flow graph over individual instructions.

Each instruction becomes one node. ``if``, ``goto``, ``switch``, ``return``
and ``throw`` are control nodes; everything else is a normal node with a
single fall-through successor. Successor ordering is fixed: fall-through
first, then branch targets in source order.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ir import (CONTROL_KINDS, Goto, If, Instruction, Method, Return, Switch,
                 Throw, format_instruction)

NORMAL = "normal"
CONTROL = "control"


@dataclass(frozen=True)
class Cfg:
    nodes: tuple[tuple[Instruction, str], ...]  # (instruction, kind)
    successors: tuple[tuple[int, ...], ...]
    entry: int = 0

    def kind(self, index: int) -> str:
        return self.nodes[index][1]

    def instruction(self, index: int) -> Instruction:
        return self.nodes[index][0]

    def __len__(self) -> int:
        return len(self.nodes)


def build_cfg(method: Method) -> Cfg:
    """Build the instruction-level CFG; parser invariants guarantee validity."""
    nodes = []
    successors = []
    n = len(method.instructions)
    for idx, instr in enumerate(method.instructions):
        kind = CONTROL if isinstance(instr, CONTROL_KINDS) else NORMAL
        nodes.append((instr, kind))
        if isinstance(instr, If):
            succ = (idx + 1, method.labels[instr.label])
        elif isinstance(instr, Switch):
            succ = (idx + 1, *(method.labels[l] for l in instr.labels))
        elif isinstance(instr, Goto):
            succ = (method.labels[instr.label],)
        elif isinstance(instr, (Return, Throw)):
            succ = ()
        else:
            succ = (idx + 1,)
        assert all(0 <= s < n for s in succ)
        successors.append(succ)
    return Cfg(nodes=tuple(nodes), successors=tuple(successors))


def count_branch_nodes(cfg: Cfg) -> int:
    """Number of branch points; a switch with L labels counts as L."""
    count = 0
    for instr, _ in cfg.nodes:
        if isinstance(instr, If):
            count += 1
        elif isinstance(instr, Switch):
            count += len(instr.labels)
    return count


def unreachable_nodes(cfg: Cfg) -> set[int]:
    """Indices never reachable from the entry node."""
    seen: set[int] = set()
    stack = [cfg.entry]
    while stack:
        idx = stack.pop()
        if idx in seen:
            continue
        seen.add(idx)
        stack.extend(cfg.successors[idx])
    return set(range(len(cfg))) - seen


def cfg_to_dot(cfg: Cfg, title: str = "cfg") -> str:
    """Render the CFG as DOT text; control nodes are diamonds."""
    lines = [f'digraph "{title}" {{']
    for idx, (instr, kind) in enumerate(cfg.nodes):
        shape = "diamond" if kind == CONTROL else "box"
        label = f"{idx}: {format_instruction(instr)}".replace('"', '\\"')
        lines.append(f'  n{idx} [shape={shape}, label="{label}"];')
    for idx, succ in enumerate(cfg.successors):
        for s in succ:
            lines.append(f"  n{idx} -> n{s};")
    lines.append("}")
    return "\n".join(lines) + "\n"
