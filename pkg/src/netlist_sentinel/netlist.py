"""Structural gate-level Verilog parsing.

Only the flat structural subset is accepted: a single module with port and
wire declarations, ``assign`` aliases and cell instantiations. Cell pin
directions come from a :class:`CellLibrary`.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple


class NetlistError(ValueError):
    """Base class for parse and library errors."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}" if line is not None else message)


class NetlistSyntaxError(NetlistError):
    pass


class UnknownCellError(NetlistError):
    pass


class MultipleDriverError(NetlistError):
    pass


class LibraryError(NetlistError):
    pass


class CellKind(str, Enum):
    COMB = "comb"
    FF = "ff"


# Pins that a flip-flop never uses as data.
_CONTROL_PIN_NAMES = frozenset(
    {"CLK", "CK", "CLOCK", "C", "G", "EN", "RST", "RSTB", "RN", "R", "RESET",
     "SET", "SETB", "SN", "S", "CLR", "CLRB", "PRE", "PREB"}
)
_OUTPUT_PIN_GUESS = frozenset({"Y", "Z", "ZN", "Q", "QN", "O", "OUT"})


@dataclass(frozen=True)
class CellDef:
    cell_name: str
    kind: CellKind
    input_pins: tuple[str, ...]
    output_pins: tuple[str, ...]
    control_pins: frozenset[str] = frozenset()
    # Verilog primitive style: positional only, output first, any input count.
    variadic: bool = False

    def __post_init__(self):
        if not self.output_pins:
            raise LibraryError(f"cell {self.cell_name!r} has no output pins")
        if not self.variadic and not self.input_pins:
            raise LibraryError(f"cell {self.cell_name!r} has no input pins")
        overlap = set(self.input_pins) & set(self.output_pins)
        if overlap:
            raise LibraryError(f"cell {self.cell_name!r}: pins {sorted(overlap)} are both input and output")
        if not self.control_pins <= set(self.input_pins):
            raise LibraryError(f"cell {self.cell_name!r}: control pins must be inputs")

    @property
    def is_flipflop(self) -> bool:
        return self.kind is CellKind.FF

    def is_output(self, pin: str) -> bool:
        return pin in self.output_pins

    def is_input(self, pin: str) -> bool:
        if self.variadic:
            return pin not in self.output_pins
        return pin in self.input_pins

    def positional_pins(self, count: int) -> tuple[str, ...]:
        """Pin names for ``count`` positional connections (outputs first)."""
        if self.variadic:
            return self.output_pins + tuple(f"A{i}" for i in range(1, count))
        return self.output_pins + self.input_pins


@dataclass
class CellLibrary:
    cells: dict[str, CellDef] = field(default_factory=dict)
    default_policy: str = "error"  # or "infer_combinational"

    def __post_init__(self):
        if self.default_policy not in ("error", "infer_combinational"):
            raise LibraryError(f"unknown default_policy {self.default_policy!r}")

    def __contains__(self, name: str) -> bool:
        return name in self.cells

    def __len__(self) -> int:
        return len(self.cells)

    def add(self, cell: CellDef) -> None:
        if cell.cell_name in self.cells:
            raise LibraryError(f"duplicate cell {cell.cell_name!r}")
        self.cells[cell.cell_name] = cell

    def lookup(self, name: str, line: int | None = None) -> CellDef | None:
        """Return the cell, or ``None`` when the policy allows inference."""
        cell = self.cells.get(name)
        if cell is None and self.default_policy == "error":
            raise UnknownCellError(f"unknown cell or submodule {name!r}", line)
        return cell


def infer_cell(name: str, pins: Iterable[str] | None) -> CellDef:
    """Guess a combinational cell from the pins used at one instance."""
    if pins is None:
        return CellDef(name, CellKind.COMB, (), ("Y",), variadic=True)
    pins = list(pins)
    outs = tuple(p for p in pins if p.upper() in _OUTPUT_PIN_GUESS) or (pins[-1],)
    ins = tuple(p for p in pins if p not in outs)
    return CellDef(name, CellKind.COMB, ins or ("_",), outs)


def _cell_from_json(entry: Mapping) -> CellDef:
    try:
        name = entry["name"]
        kind = CellKind(entry["kind"])
        inputs = tuple(entry.get("inputs", ()))
        outputs = tuple(entry["outputs"])
    except (KeyError, TypeError, ValueError) as exc:
        raise LibraryError(f"malformed cell entry {entry!r}: {exc}") from None
    if "control" in entry:
        control = frozenset(entry["control"])
    elif kind is CellKind.FF:
        control = frozenset(p for p in inputs if p.upper() in _CONTROL_PIN_NAMES)
    else:
        control = frozenset()
    return CellDef(name, kind, inputs, outputs, control, bool(entry.get("variadic", False)))


def load_cell_library(text: str) -> CellLibrary:
    """Build a library from its JSON document.

    Schema: ``{"cells": [{"name", "kind": "comb"|"ff", "inputs", "outputs"}]}``
    with optional per-cell ``control`` and ``variadic`` keys and an optional
    top-level ``default_policy``.
    """
    if not text.strip():
        return CellLibrary()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LibraryError(f"malformed library document: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("cells", []), list):
        raise LibraryError("library document must be an object with a 'cells' list")
    lib = CellLibrary(default_policy=doc.get("default_policy", "error"))
    for entry in doc.get("cells", []):
        lib.add(_cell_from_json(entry))
    return lib


def default_library() -> CellLibrary:
    """SAED/LEDA-flavoured standard cells plus Verilog gate primitives."""
    lib = CellLibrary()
    comb = CellKind.COMB

    def add(name, ins, outs, kind=comb, control=()):
        lib.add(CellDef(name, kind, tuple(ins), tuple(outs), frozenset(control)))

    for n in range(2, 9):
        ins = [f"IN{i}" for i in range(1, n + 1)]
        leda = [f"DIN{i}" for i in range(1, n + 1)]
        for drive in ("X0", "X1", "X2", "X4"):
            add(f"AND{n}{drive}", ins, ["Q"])
            add(f"OR{n}{drive}", ins, ["Q"])
            add(f"NAND{n}{drive}", ins, ["QN"])
            add(f"NOR{n}{drive}", ins, ["QN"])
        for drive in ("s1", "s2", "s3"):
            add(f"and{n}{drive}", leda, ["Q"])
            add(f"or{n}{drive}", leda, ["Q"])
            add(f"nnd{n}{drive}", leda, ["Q"])
            add(f"nor{n}{drive}", leda, ["Q"])
    for n in (2, 3):
        ins = [f"IN{i}" for i in range(1, n + 1)]
        for drive in ("X1", "X2"):
            add(f"XOR{n}{drive}", ins, ["Q"])
            add(f"XNOR{n}{drive}", ins, ["Q"])
    for drive in ("s1", "s2"):
        add(f"xor2{drive}", ["DIN1", "DIN2"], ["Q"])
        add(f"xnr2{drive}", ["DIN1", "DIN2"], ["Q"])
    for drive in ("X0", "X1", "X2", "X4", "X8", "X16", "X32"):
        add(f"INV{drive}", ["INP"], ["ZN"])
        add(f"NBUFF{drive}", ["INP"], ["Z"])
    for drive in ("X1", "X2"):
        add(f"IBUFF{drive}", ["INP"], ["ZN"])
        add(f"MUX21{drive}", ["IN1", "IN2", "S"], ["Q"])
        add(f"MUX41{drive}", ["IN1", "IN2", "IN3", "IN4", "S0", "S1"], ["Q"])
        for a, b in (("AO21", "Q"), ("AOI21", "QN"), ("OA21", "Q"), ("OAI21", "QN")):
            add(f"{a}{drive}", ["IN1", "IN2", "IN3"], [b])
        for a, b in (("AO22", "Q"), ("AOI22", "QN"), ("OA22", "Q"), ("OAI22", "QN")):
            add(f"{a}{drive}", ["IN1", "IN2", "IN3", "IN4"], [b])
    for drive in ("s1", "s2", "s3"):
        add(f"hi1{drive}", ["DIN"], ["Q"])
        add(f"i1{drive}", ["DIN"], ["Q"])
        add(f"ib1{drive}", ["DIN"], ["Q"])
        add(f"nb1{drive}", ["DIN"], ["Q"])
        add(f"mxi21{drive}", ["DIN1", "DIN2", "SIN"], ["Q"])
        add(f"mx21{drive}", ["DIN1", "DIN2", "SIN"], ["Q"])

    ff = CellKind.FF
    for drive in ("X1", "X2"):
        add(f"DFFX{drive[1:]}", ["D", "CLK"], ["Q", "QN"], ff, ["CLK"])
        add(f"DFFARX{drive[1:]}", ["D", "CLK", "RSTB"], ["Q", "QN"], ff, ["CLK", "RSTB"])
        add(f"DFFASX{drive[1:]}", ["D", "CLK", "SETB"], ["Q", "QN"], ff, ["CLK", "SETB"])
        add(f"DFFASRX{drive[1:]}", ["D", "CLK", "RSTB", "SETB"], ["Q", "QN"], ff, ["CLK", "RSTB", "SETB"])
        add(f"DFFNX{drive[1:]}", ["D", "CLK"], ["Q", "QN"], ff, ["CLK"])
    for drive in ("s1", "s2", "s3"):
        add(f"dffs{drive[1:]}", ["DIN", "CLK"], ["Q", "QN"], ff, ["CLK"])
        add(f"dffcs{drive[1:]}", ["DIN", "CLK", "CLRB"], ["Q", "QN"], ff, ["CLK", "CLRB"])
        add(f"dffles{drive[1:]}", ["DIN", "EB", "CLK"], ["Q", "QN"], ff, ["CLK"])
    add("DFF", ["D", "CLK"], ["Q"], ff, ["CLK"])
    add("dff", ["D", "CLK"], ["Q"], ff, ["CLK"])

    for prim in ("and", "or", "nand", "nor", "xor", "xnor", "not", "buf"):
        lib.add(CellDef(prim, comb, (), ("Y",), variadic=True))
    return lib


# ---------------------------------------------------------------------------
# IR


class PinRef(NamedTuple):
    instance: int
    pin: str


@dataclass(frozen=True)
class Instance:
    instance_name: str
    cell_name: str
    pin_map: Mapping[str, int]
    source_line: int


@dataclass(frozen=True)
class NetlistIR:
    """Parsed netlist. Net ids index into ``nets``; aliases share an id."""

    module_name: str
    nets: tuple[str, ...]
    primary_inputs: tuple[int, ...]
    primary_outputs: tuple[int, ...]
    instances: tuple[Instance, ...]
    cells: Mapping[str, CellDef]
    names: Mapping[str, int]
    drivers: tuple[PinRef | None, ...]
    consumers: tuple[tuple[PinRef, ...], ...]
    constants: frozenset[int] = frozenset()
    warnings: tuple[str, ...] = ()

    def net_id(self, name: str | int) -> int:
        if isinstance(name, int):
            if not 0 <= name < len(self.nets):
                raise KeyError(name)
            return name
        return self.names[name]

    def cell_of(self, index: int) -> CellDef:
        return self.cells[self.instances[index].cell_name]

    def is_driven(self, net: int) -> bool:
        return (
            self.drivers[net] is not None
            or net in self._pi_set
            or net in self.constants
        )

    @cached_property
    def _pi_set(self) -> frozenset[int]:
        return frozenset(self.primary_inputs)

    def floating_nets(self) -> list[int]:
        pis = self._pi_set
        return [
            n for n in range(len(self.nets))
            if self.drivers[n] is None and n not in pis and n not in self.constants
        ]


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<lcomment>//[^\n]*)
  | (?P<bcomment>/\*.*?\*/)
  | (?P<attr>\(\*.*?\*\))
  | (?P<escid>\\\S+)
  | (?P<const>\d*\s*'[sS]?[bBoOdDhH]\s*[0-9a-fA-FxXzZ_?]+)
  | (?P<number>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<punct>[()\[\]:;,.={}#])
    """,
    re.VERBOSE | re.DOTALL,
)

_KEYWORDS = frozenset({"module", "endmodule", "input", "output", "inout", "wire", "assign",
                       "reg", "always", "initial", "parameter", "generate", "tri", "supply0", "supply1"})


class _Tok(NamedTuple):
    kind: str
    text: str
    line: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line = 0, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise NetlistSyntaxError(f"unexpected character {text[pos]!r}", line)
        kind = m.lastgroup
        chunk = m.group()
        if kind in ("ident", "number", "punct", "const"):
            toks.append(_Tok(kind, chunk, line))
        elif kind == "escid":
            toks.append(_Tok("ident", chunk[1:], line))
        line += chunk.count("\n")
        pos = m.end()
    toks.append(_Tok("eof", "", line))
    return toks


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, text: str, lib: CellLibrary):
        self.toks = _tokenize(text)
        self.i = 0
        self.lib = lib
        self.warnings: list[str] = []
        self.buses: dict[str, list[str]] = {}   # declared name -> bit names
        self.net_order: list[str] = []
        self.declared: set[str] = set()
        self.directions: dict[str, str] = {}
        self.port_order: list[str] = []
        self.parent: dict[str, str] = {}         # union-find over net names
        self.constants: set[str] = set()
        self.raw_instances: list[tuple[str, CellDef, dict[str, str], int]] = []
        self.used_cells: dict[str, CellDef] = {}

    # token helpers
    def peek(self, offset: int = 0) -> _Tok:
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.next()
        if tok.text != text:
            raise NetlistSyntaxError(f"expected {text!r}, found {tok.text or 'end of file'!r}", tok.line)
        return tok

    def accept(self, text: str) -> bool:
        if self.peek().text == text and self.peek().kind != "eof":
            self.i += 1
            return True
        return False

    def ident(self) -> _Tok:
        tok = self.next()
        if tok.kind != "ident" or tok.text in _KEYWORDS:
            raise NetlistSyntaxError(f"expected identifier, found {tok.text or 'end of file'!r}", tok.line)
        return tok

    # declarations
    def declare(self, name: str, rng: tuple[int, int] | None, line: int) -> list[str]:
        if rng is None:
            bits = [name]
        else:
            hi, lo = rng
            step = -1 if hi >= lo else 1
            bits = [f"{name}[{b}]" for b in range(hi, lo + step, step)]
        if name in self.buses:
            if self.buses[name] != bits:
                raise NetlistSyntaxError(f"conflicting redeclaration of {name!r}", line)
            return bits
        self.buses[name] = bits
        for b in bits:
            if b not in self.declared:
                self.declared.add(b)
                self.net_order.append(b)
                self.parent[b] = b
        return bits

    def parse_range(self) -> tuple[int, int] | None:
        if not self.accept("["):
            return None
        hi = self.next()
        self.expect(":")
        lo = self.next()
        self.expect("]")
        if hi.kind != "number" or lo.kind != "number":
            raise NetlistSyntaxError("range bounds must be integer literals", hi.line)
        return int(hi.text), int(lo.text)

    def parse_decl(self, keyword: str) -> list[str]:
        line = self.peek().line
        if keyword in ("input", "output"):
            self.accept("wire")
        rng = self.parse_range()
        names = []
        while True:
            name = self.ident().text
            names.append(name)
            self.declare(name, rng, line)
            if keyword in ("input", "output"):
                prev = self.directions.get(name)
                if prev is not None and prev != keyword:
                    raise NetlistSyntaxError(f"{name!r} declared as both {prev} and {keyword}", line)
                self.directions[name] = keyword
            if not self.accept(","):
                break
            # ANSI header: "input a, output b"
            if self.peek().text in ("input", "output", "inout"):
                self.i -= 1
                break
        return names

    # references
    def netref(self) -> list[str] | None:
        """Parse a connection expression into bit names (None = unconnected)."""
        tok = self.peek()
        if tok.kind == "const":
            self.next()
            return self.constant_bits(tok)
        if tok.text == "{":
            raise NetlistSyntaxError("concatenations are not supported", tok.line)
        name = self.ident()
        if self.accept("["):
            idx = self.next()
            if idx.kind != "number":
                raise NetlistSyntaxError("bit select must be an integer literal", idx.line)
            if self.accept(":"):
                raise NetlistSyntaxError("part selects are not supported", idx.line)
            self.expect("]")
            bit = f"{name.text}[{idx.text}]"
            if bit not in self.declared:
                raise NetlistSyntaxError(f"undeclared net {bit!r}", name.line)
            return [bit]
        if name.text in self.buses:
            return list(self.buses[name.text])
        self.warnings.append(f"line {name.line}: implicit declaration of net {name.text!r}")
        return self.declare(name.text, None, name.line)

    def constant_bits(self, tok: _Tok) -> list[str]:
        m = re.fullmatch(r"(\d*)\s*'[sS]?([bBoOdDhH])\s*([0-9a-fA-FxXzZ_?]+)", tok.text)
        width = int(m.group(1)) if m.group(1) else 32
        digits = m.group(3).replace("_", "")
        base = {"b": 2, "o": 8, "d": 10, "h": 16}[m.group(2).lower()]
        try:
            value = int(digits, base)
        except ValueError:
            raise NetlistSyntaxError(f"unsupported constant {tok.text!r}", tok.line) from None
        bits = []
        for b in range(width - 1, -1, -1):
            name = f"1'b{(value >> b) & 1}"
            if name not in self.declared:
                self.declared.add(name)
                self.net_order.append(name)
                self.parent[name] = name
                self.constants.add(name)
            bits.append(name)
        return bits

    # union-find for assign aliases
    def find(self, name: str) -> str:
        while self.parent[name] != name:
            self.parent[name] = self.parent[self.parent[name]]
            name = self.parent[name]
        return name

    def union(self, a: str, b: str, line: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if ra in self.constants and rb in self.constants:
            raise MultipleDriverError(f"assign ties two constants {a!r}, {b!r}", line)
        # keep the earliest-declared name (ports come first) as representative
        if self.net_order.index(ra) > self.net_order.index(rb):
            ra, rb = rb, ra
        if rb in self.constants:
            ra, rb = rb, ra
        self.parent[rb] = ra

    # statements
    def parse_module(self) -> str:
        self.expect("module")
        name = self.ident().text
        if self.accept("#"):
            raise NetlistSyntaxError("module parameters are not supported", self.peek().line)
        if self.accept("("):
            if not self.accept(")"):
                while True:
                    tok = self.peek()
                    if tok.text in ("input", "output"):
                        self.next()
                        self.port_order.extend(self.parse_decl(tok.text))
                    elif tok.text == "inout":
                        raise NetlistSyntaxError("inout ports are not supported", tok.line)
                    else:
                        self.port_order.append(self.ident().text)
                    if not self.accept(","):
                        break
                self.expect(")")
        self.expect(";")
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                raise NetlistSyntaxError("missing endmodule", tok.line)
            if tok.text == "endmodule":
                self.next()
                break
            self.parse_item()
        if self.peek().kind != "eof":
            tok = self.peek()
            raise NetlistSyntaxError("only a single module per file is supported", tok.line)
        return name

    def parse_item(self) -> None:
        tok = self.next()
        if tok.text in ("input", "output", "wire"):
            self.parse_decl(tok.text)
            self.expect(";")
        elif tok.text == "assign":
            while True:
                lhs = self.netref()
                eq = self.expect("=")
                rhs = self.netref()
                if lhs is None or rhs is None or len(lhs) != len(rhs):
                    raise NetlistSyntaxError("assign operands must have equal width", eq.line)
                for a, b in zip(lhs, rhs):
                    self.union(a, b, eq.line)
                if not self.accept(","):
                    break
            self.expect(";")
        elif tok.kind == "ident" and tok.text not in _KEYWORDS:
            self.parse_instances(tok)
        else:
            raise NetlistSyntaxError(f"unsupported construct {tok.text!r}", tok.line)

    def parse_instances(self, cell_tok: _Tok) -> None:
        if self.peek().text == "#":
            raise NetlistSyntaxError("parameterised instances are not supported", cell_tok.line)
        cell = self.lib.lookup(cell_tok.text, cell_tok.line)
        while True:
            if self.peek().text == "(":
                inst_tok = _Tok("ident", f"_{cell_tok.text}_{len(self.raw_instances)}", cell_tok.line)
            else:
                inst_tok = self.ident()
            self.expect("(")
            named: dict[str, list[str] | None] = {}
            positional: list[list[str] | None] = []
            if not self.accept(")"):
                while True:
                    if self.accept("."):
                        pin = self.ident().text
                        self.expect("(")
                        ref = None if self.peek().text == ")" else self.netref()
                        self.expect(")")
                        if pin in named:
                            raise NetlistSyntaxError(f"pin {pin!r} connected twice", inst_tok.line)
                        named[pin] = ref
                    else:
                        ref = None if self.peek().text in (",", ")") else self.netref()
                        positional.append(ref)
                    if not self.accept(","):
                        break
                self.expect(")")
            if named and positional:
                raise NetlistSyntaxError("mixed named and positional connections", inst_tok.line)
            use = cell
            if use is None:
                use = self.used_cells.get(cell_tok.text) or infer_cell(
                    cell_tok.text, list(named) if named else None)
            if positional:
                pins = use.positional_pins(len(positional))
                if len(positional) > len(pins):
                    raise NetlistSyntaxError(
                        f"{len(positional)} connections for cell {use.cell_name!r} with {len(pins)} pins",
                        inst_tok.line)
                named = dict(zip(pins, positional))
            pin_map: dict[str, str] = {}
            for pin, ref in named.items():
                if not (use.is_input(pin) or use.is_output(pin)):
                    raise NetlistSyntaxError(f"cell {use.cell_name!r} has no pin {pin!r}", inst_tok.line)
                if ref is None:
                    continue
                if len(ref) != 1:
                    raise NetlistSyntaxError(
                        f"pin {pin!r} of {inst_tok.text!r} connected to a {len(ref)}-bit bus", inst_tok.line)
                pin_map[pin] = ref[0]
            if not any(use.is_output(p) for p in pin_map):
                raise NetlistSyntaxError(f"instance {inst_tok.text!r} has no connected output pin", inst_tok.line)
            self.used_cells.setdefault(use.cell_name, use)
            self.raw_instances.append((inst_tok.text, use, pin_map, inst_tok.line))
            if not self.accept(","):
                break
        self.expect(";")

    def build(self, module_name: str) -> NetlistIR:
        for port in self.port_order:
            if port not in self.directions:
                raise NetlistSyntaxError(f"port {port!r} has no direction declaration")
        reps: list[str] = []
        rep_id: dict[str, int] = {}
        for name in self.net_order:
            r = self.find(name)
            if r not in rep_id:
                rep_id[r] = len(reps)
                reps.append(r)
        names = {name: rep_id[self.find(name)] for name in self.net_order}

        def ports(direction: str) -> tuple[int, ...]:
            out: list[int] = []
            for name in self.buses:
                if self.directions.get(name) == direction:
                    for bit in self.buses[name]:
                        nid = names[bit]
                        if nid not in out:
                            out.append(nid)
            return tuple(out)

        pis, pos = ports("input"), ports("output")
        pi_set = set(pis)
        constants = frozenset(rep_id[self.find(c)] for c in self.constants)
        if constants & pi_set:
            raise MultipleDriverError("constant tied to a primary input")
        drivers: list[PinRef | None] = [None] * len(reps)
        consumers: list[list[PinRef]] = [[] for _ in reps]
        instances = []
        seen_names: set[str] = set()
        for idx, (iname, cell, pmap, line) in enumerate(self.raw_instances):
            if iname in seen_names:
                raise NetlistSyntaxError(f"duplicate instance name {iname!r}", line)
            seen_names.add(iname)
            ids = {}
            for pin, net in pmap.items():
                nid = names[net]
                ids[pin] = nid
                if cell.is_output(pin):
                    if drivers[nid] is not None or nid in pi_set or nid in constants:
                        raise MultipleDriverError(f"net {reps[nid]!r} has multiple drivers", line)
                    drivers[nid] = PinRef(idx, pin)
                else:
                    consumers[nid].append(PinRef(idx, pin))
            instances.append(Instance(iname, cell.cell_name, MappingProxyType(ids), line))
        for nid in pos:
            if drivers[nid] is None and nid not in pi_set and nid not in constants:
                self.warnings.append(f"primary output {reps[nid]!r} has no driver")
        return NetlistIR(
            module_name=module_name,
            nets=tuple(reps),
            primary_inputs=pis,
            primary_outputs=pos,
            instances=tuple(instances),
            cells=MappingProxyType(dict(self.used_cells)),
            names=MappingProxyType(names),
            drivers=tuple(drivers),
            consumers=tuple(tuple(c) for c in consumers),
            constants=constants,
            warnings=tuple(self.warnings),
        )


def parse_netlist(text: str, lib: CellLibrary | None = None) -> NetlistIR:
    """Parse one structural Verilog module into a :class:`NetlistIR`."""
    parser = _Parser(text, lib if lib is not None else default_library())
    name = parser.parse_module()
    return parser.build(name)
