"""Textual register-based micro-bytecode IR: types, parser, printer.

A method listing looks like:

    .method com.example.App.readTextFile 3 (v2:java.lang.String)
      new-instance v0 java.io.FileReader
      invoke-direct java.io.FileReader.init (v0, v2)
      invoke-virtual java.io.FileReader.read (v0)
      move-result v1 int
      return
    .end

One instruction per line, ``#`` starts a comment, labels are written as
``:name`` on their own line and refer to the next instruction. Registers are
``v0..v{R-1}`` where R is the declared register count; declared parameters
must occupy the highest-numbered registers. ``invoke-* C.<init>`` is
normalized to the method name ``init``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError

_REGISTER_RE = re.compile(r"^v(\d+)$")
_INT_RE = re.compile(r"^-?\d+$")
_STRING_RE = re.compile(r'^"[^"]*"$')
_LABEL_RE = re.compile(r"^:[A-Za-z_][A-Za-z0-9_]*$")
_NAME_RE = re.compile(r"^[A-Za-z_$][A-Za-z0-9_$]*(\.[A-Za-z_$<][A-Za-z0-9_$>]*)+$")

UNKNOWN_TYPE = "unknown"


@dataclass(frozen=True)
class MethodRef:
    """Reference to a method (or field) as a qualified class plus member name."""

    class_name: str
    method_name: str

    def __post_init__(self):
        if not self.class_name or not self.method_name:
            raise ValueError("class and member names must be non-empty")

    @property
    def display(self) -> str:
        return f"{self.class_name}.{self.method_name}"


@dataclass(frozen=True)
class NewInstance:
    dst: int
    class_name: str


@dataclass(frozen=True)
class Invoke:
    style: str  # virtual | static | direct
    target: MethodRef
    args: tuple[int, ...]


@dataclass(frozen=True)
class MoveResult:
    dst: int
    # static type of the produced value when the listing carries one
    result_type: str = UNKNOWN_TYPE


@dataclass(frozen=True)
class Const:
    dst: int
    literal: str

    @property
    def literal_kind(self) -> str:
        return "string" if self.literal.startswith('"') else "int"


@dataclass(frozen=True)
class Move:
    dst: int
    src: int


@dataclass(frozen=True)
class Binop:
    op: str
    dst: int
    a: int
    b: int


@dataclass(frozen=True)
class FieldGet:
    dst: int
    obj: int
    field: MethodRef


@dataclass(frozen=True)
class FieldPut:
    src: int
    obj: int
    field: MethodRef


@dataclass(frozen=True)
class If:
    cond: str
    a: int
    b: str  # raw token: register "vN" or integer literal
    label: str


@dataclass(frozen=True)
class Goto:
    label: str


@dataclass(frozen=True)
class Switch:
    src: int
    labels: tuple[str, ...]


@dataclass(frozen=True)
class Return:
    value: int | None = None


@dataclass(frozen=True)
class Throw:
    src: int


Instruction = (
    NewInstance | Invoke | MoveResult | Const | Move | Binop
    | FieldGet | FieldPut | If | Goto | Switch | Return | Throw
)

CONTROL_KINDS = (If, Goto, Switch, Return, Throw)


@dataclass(frozen=True)
class Method:
    owner_class: str
    name: str
    register_count: int
    params: tuple[tuple[int, str], ...]
    instructions: tuple[Instruction, ...]
    labels: dict[str, int] = field(compare=True)

    @property
    def qualified_name(self) -> str:
        return f"{self.owner_class}.{self.name}"


def _tokens(line: str) -> list[tuple[str, int]]:
    return [(m.group(0), m.start() + 1) for m in re.finditer(r"\S+", line)]


def _strip_comment(line: str) -> str:
    # '#' never appears inside our string literals' charset of interest;
    # cut at the first unquoted '#'.
    out = []
    in_str = False
    for ch in line:
        if ch == '"':
            in_str = not in_str
        if ch == "#" and not in_str:
            break
        out.append(ch)
    return "".join(out)


def _split_qualified(token: str, what: str, lineno: int, col: int) -> MethodRef:
    if not _NAME_RE.match(token):
        raise ParseError(f"malformed {what} '{token}'", lineno, col)
    class_name, _, member = token.rpartition(".")
    if member == "<init>":
        member = "init"
    return MethodRef(class_name, member)


class _MethodParser:
    """Parses one ``.method`` block; line numbers are absolute in the source."""

    def __init__(self, lines: list[tuple[int, str]]):
        self.lines = lines
        self.instructions: list[Instruction] = []
        self.instr_lines: list[int] = []
        self.labels: dict[str, int] = {}
        self.label_lines: dict[str, int] = {}
        self.register_count = 0

    def parse(self) -> Method:
        if not self.lines:
            raise ParseError("empty method block")
        header_line, header = self.lines[0]
        owner, name, params = self._parse_header(header, header_line)
        for lineno, line in self.lines[1:]:
            if line.startswith(":"):
                self._parse_label(line, lineno)
            else:
                self._parse_instruction(line, lineno)
        if not self.instructions:
            raise ParseError("no instructions in method body", header_line)
        self._validate(owner, name, params, header_line)
        return Method(
            owner_class=owner,
            name=name,
            register_count=self.register_count,
            params=tuple(params),
            instructions=tuple(self.instructions),
            labels=dict(self.labels),
        )

    def _parse_header(self, line: str, lineno: int):
        m = re.match(r"^\.method\s+(\S+)\s+(\d+)\s+\((.*)\)\s*$", line)
        if not m:
            raise ParseError("malformed .method header", lineno, 1)
        qualified, count_tok, params_tok = m.groups()
        ref = _split_qualified(qualified, "method name", lineno, len(".method ") + 1)
        self.register_count = int(count_tok)
        params: list[tuple[int, str]] = []
        if params_tok.strip():
            for part in params_tok.split(","):
                part = part.strip()
                pm = re.match(r"^v(\d+):(\S+)$", part)
                if not pm:
                    raise ParseError(f"malformed parameter '{part}'", lineno)
                params.append((int(pm.group(1)), pm.group(2)))
        return ref.class_name, ref.method_name, params

    def _parse_label(self, line: str, lineno: int):
        if not _LABEL_RE.match(line):
            raise ParseError(f"malformed label '{line}'", lineno, 1)
        name = line[1:]
        if name in self.labels:
            raise ParseError(f"duplicate label :{name}", lineno, 1)
        self.labels[name] = len(self.instructions)
        self.label_lines[name] = lineno

    def _parse_instruction(self, line: str, lineno: int):
        toks = _tokens(line)
        op, col = toks[0]
        rest = toks[1:]
        handler = _INSTRUCTION_HANDLERS.get(op)
        if handler is None:
            raise ParseError(f"unknown instruction '{op}'", lineno, col)
        self.instructions.append(handler(self, rest, line, lineno))
        self.instr_lines.append(lineno)

    # --- per-instruction handlers -------------------------------------

    def _reg(self, tok: str, lineno: int, col: int) -> int:
        m = _REGISTER_RE.match(tok)
        if not m:
            raise ParseError(f"expected register, got '{tok}'", lineno, col)
        return int(m.group(1))

    def _label_ref(self, tok: str, lineno: int, col: int) -> str:
        if not _LABEL_RE.match(tok):
            raise ParseError(f"expected label, got '{tok}'", lineno, col)
        return tok[1:]

    def _expect(self, rest, n, lineno, what):
        if len(rest) != n:
            raise ParseError(f"{what} takes {n} operand(s), got {len(rest)}", lineno)

    def _new_instance(self, rest, line, lineno):
        self._expect(rest, 2, lineno, "new-instance")
        dst = self._reg(rest[0][0], lineno, rest[0][1])
        cls = rest[1][0]
        if not re.match(r"^[A-Za-z_$][A-Za-z0-9_$.]*$", cls):
            raise ParseError(f"malformed class name '{cls}'", lineno, rest[1][1])
        return NewInstance(dst, cls)

    def _invoke(self, style: str, rest, line, lineno):
        if not rest:
            raise ParseError("invoke needs a target", lineno)
        target = _split_qualified(rest[0][0], "invoke target", lineno, rest[0][1])
        m = re.search(r"\(([^)]*)\)\s*$", line)
        if not m:
            raise ParseError("invoke needs an argument list '(...)'", lineno)
        args = []
        inner = m.group(1).strip()
        if inner:
            for part in inner.split(","):
                part = part.strip()
                args.append(self._reg(part, lineno, line.find(part) + 1))
        return Invoke(style, target, tuple(args))

    def _move_result(self, rest, line, lineno):
        if len(rest) not in (1, 2):
            raise ParseError("move-result takes a register and optional type", lineno)
        dst = self._reg(rest[0][0], lineno, rest[0][1])
        result_type = rest[1][0] if len(rest) == 2 else UNKNOWN_TYPE
        return MoveResult(dst, result_type)

    def _const(self, rest, line, lineno):
        if len(rest) < 2:
            raise ParseError("const takes a register and a literal", lineno)
        dst = self._reg(rest[0][0], lineno, rest[0][1])
        literal = line[rest[1][1] - 1:].strip()
        if not (_INT_RE.match(literal) or _STRING_RE.match(literal)):
            raise ParseError(f"malformed literal {literal!r}", lineno, rest[1][1])
        return Const(dst, literal)

    def _move(self, rest, line, lineno):
        self._expect(rest, 2, lineno, "move")
        return Move(self._reg(rest[0][0], lineno, rest[0][1]),
                    self._reg(rest[1][0], lineno, rest[1][1]))

    def _binop(self, rest, line, lineno):
        self._expect(rest, 4, lineno, "binop")
        op = rest[0][0]
        return Binop(op,
                     self._reg(rest[1][0], lineno, rest[1][1]),
                     self._reg(rest[2][0], lineno, rest[2][1]),
                     self._reg(rest[3][0], lineno, rest[3][1]))

    def _iget(self, rest, line, lineno):
        self._expect(rest, 3, lineno, "iget")
        return FieldGet(self._reg(rest[0][0], lineno, rest[0][1]),
                        self._reg(rest[1][0], lineno, rest[1][1]),
                        _split_qualified(rest[2][0], "field", lineno, rest[2][1]))

    def _iput(self, rest, line, lineno):
        self._expect(rest, 3, lineno, "iput")
        return FieldPut(self._reg(rest[0][0], lineno, rest[0][1]),
                        self._reg(rest[1][0], lineno, rest[1][1]),
                        _split_qualified(rest[2][0], "field", lineno, rest[2][1]))

    def _if(self, rest, line, lineno):
        self._expect(rest, 4, lineno, "if")
        cond = rest[0][0]
        a = self._reg(rest[1][0], lineno, rest[1][1])
        b_tok = rest[2][0]
        if not (_REGISTER_RE.match(b_tok) or _INT_RE.match(b_tok)):
            raise ParseError(f"expected register or int literal, got '{b_tok}'",
                             lineno, rest[2][1])
        label = self._label_ref(rest[3][0], lineno, rest[3][1])
        return If(cond, a, b_tok, label)

    def _goto(self, rest, line, lineno):
        self._expect(rest, 1, lineno, "goto")
        return Goto(self._label_ref(rest[0][0], lineno, rest[0][1]))

    def _switch(self, rest, line, lineno):
        if len(rest) < 2:
            raise ParseError("switch takes a register and at least one label", lineno)
        src = self._reg(rest[0][0], lineno, rest[0][1])
        labels = tuple(self._label_ref(t, lineno, c) for t, c in rest[1:])
        return Switch(src, labels)

    def _return(self, rest, line, lineno):
        if len(rest) > 1:
            raise ParseError("return takes at most one register", lineno)
        value = self._reg(rest[0][0], lineno, rest[0][1]) if rest else None
        return Return(value)

    def _throw(self, rest, line, lineno):
        self._expect(rest, 1, lineno, "throw")
        return Throw(self._reg(rest[0][0], lineno, rest[0][1]))

    # --- whole-method validation --------------------------------------

    def _validate(self, owner, name, params, header_line):
        n = len(self.instructions)
        for label, idx in self.labels.items():
            if idx >= n:
                raise ParseError(f"label :{label} is not followed by an instruction",
                                 self.label_lines.get(label))
        for instr, lineno in zip(self.instructions, self.instr_lines):
            for reg in _instruction_registers(instr):
                if reg >= self.register_count:
                    raise ParseError(
                        f"register v{reg} out of range (count {self.register_count})",
                        lineno)
            for label in _instruction_labels(instr):
                if label not in self.labels:
                    raise ParseError(f"undeclared label :{label}", lineno)
        preg = sorted(r for r, _ in params)
        if preg:
            expected = list(range(self.register_count - len(preg), self.register_count))
            if preg != expected:
                raise ParseError(
                    "parameters must occupy the highest-numbered registers "
                    f"(expected {expected}, got {preg})", header_line)
        last = self.instructions[-1]
        if not isinstance(last, (Return, Throw, Goto)):
            raise ParseError(
                "control may fall off the end: last instruction must be "
                "return, throw, or goto", self.instr_lines[-1])


_INSTRUCTION_HANDLERS = {
    "new-instance": _MethodParser._new_instance,
    "invoke-virtual": lambda self, rest, line, lineno: self._invoke("virtual", rest, line, lineno),
    "invoke-static": lambda self, rest, line, lineno: self._invoke("static", rest, line, lineno),
    "invoke-direct": lambda self, rest, line, lineno: self._invoke("direct", rest, line, lineno),
    "move-result": _MethodParser._move_result,
    "const": _MethodParser._const,
    "move": _MethodParser._move,
    "binop": _MethodParser._binop,
    "iget": _MethodParser._iget,
    "iput": _MethodParser._iput,
    "if": _MethodParser._if,
    "goto": _MethodParser._goto,
    "switch": _MethodParser._switch,
    "return": _MethodParser._return,
    "throw": _MethodParser._throw,
}


def _instruction_registers(instr: Instruction) -> list[int]:
    match instr:
        case NewInstance(dst, _):
            return [dst]
        case Invoke(_, _, args):
            return list(args)
        case MoveResult(dst, _):
            return [dst]
        case Const(dst, _):
            return [dst]
        case Move(dst, src):
            return [dst, src]
        case Binop(_, dst, a, b):
            return [dst, a, b]
        case FieldGet(dst, obj, _):
            return [dst, obj]
        case FieldPut(src, obj, _):
            return [src, obj]
        case If(_, a, b, _):
            m = _REGISTER_RE.match(b)
            return [a, int(m.group(1))] if m else [a]
        case Switch(src, _):
            return [src]
        case Return(value):
            return [] if value is None else [value]
        case Throw(src):
            return [src]
    return []


def _instruction_labels(instr: Instruction) -> list[str]:
    match instr:
        case If(_, _, _, label):
            return [label]
        case Goto(label):
            return [label]
        case Switch(_, labels):
            return list(labels)
    return []


def parse_method(text: str) -> Method:
    """Parse a single ``.method ... .end`` block."""
    methods = parse_corpus(text)
    if not methods:
        raise ParseError("no .method block found")
    if len(methods) > 1:
        raise ParseError("expected a single method")
    return methods[0]


def parse_corpus(text: str) -> list[Method]:
    """Parse every method block in ``text``, in source order.

    Duplicate (owner class, name) pairs keep the first occurrence, mirroring
    an analyzed-method dictionary that processes each method once.
    """
    methods: list[Method] = []
    seen: set[tuple[str, str]] = set()
    block: list[tuple[int, str]] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.split()[0] == ".method":
            if block is not None:
                raise ParseError("nested .method block", lineno, 1)
            block = [(lineno, line)]
        elif line == ".end":
            if block is None:
                raise ParseError(".end without .method", lineno, 1)
            method = _MethodParser(block).parse()
            key = (method.owner_class, method.name)
            if key not in seen:
                seen.add(key)
                methods.append(method)
            block = None
        else:
            if block is None:
                raise ParseError(f"instruction outside .method block: '{line}'", lineno, 1)
            block.append((lineno, line))
    if block is not None:
        raise ParseError("unterminated .method block (missing .end)", block[0][0])
    return methods


def parse_corpus_file(path: str | Path) -> list[Method]:
    """Parse all methods in a file; I/O and parse errors carry file context."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        return parse_corpus(text)
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def format_instruction(instr: Instruction) -> str:
    match instr:
        case NewInstance(dst, cls):
            return f"new-instance v{dst} {cls}"
        case Invoke(style, target, args):
            arglist = ", ".join(f"v{a}" for a in args)
            return f"invoke-{style} {target.display} ({arglist})"
        case MoveResult(dst, rtype):
            suffix = "" if rtype == UNKNOWN_TYPE else f" {rtype}"
            return f"move-result v{dst}{suffix}"
        case Const(dst, literal):
            return f"const v{dst} {literal}"
        case Move(dst, src):
            return f"move v{dst} v{src}"
        case Binop(op, dst, a, b):
            return f"binop {op} v{dst} v{a} v{b}"
        case FieldGet(dst, obj, fieldref):
            return f"iget v{dst} v{obj} {fieldref.display}"
        case FieldPut(src, obj, fieldref):
            return f"iput v{src} v{obj} {fieldref.display}"
        case If(cond, a, b, label):
            return f"if {cond} v{a} {b} :{label}"
        case Goto(label):
            return f"goto :{label}"
        case Switch(src, labels):
            return f"switch v{src} " + " ".join(f":{l}" for l in labels)
        case Return(value):
            return "return" if value is None else f"return v{value}"
        case Throw(src):
            return f"throw v{src}"
    raise TypeError(f"unknown instruction {instr!r}")


def format_method(method: Method) -> str:
    """Pretty-print a method; re-parsing the output yields an equal Method."""
    params = ", ".join(f"v{r}:{t}" for r, t in method.params)
    lines = [f".method {method.qualified_name} {method.register_count} ({params})"]
    by_index: dict[int, list[str]] = {}
    for label, idx in method.labels.items():
        by_index.setdefault(idx, []).append(label)
    for idx, instr in enumerate(method.instructions):
        for label in sorted(by_index.get(idx, [])):
            lines.append(f":{label}")
        lines.append("  " + format_instruction(instr))
    lines.append(".end")
    return "\n".join(lines) + "\n"
