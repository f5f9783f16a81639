"""Circuit graph construction and the five per-net topology features.

Level conventions (shared with the test oracle):

* ``ffi`` / ``pi`` count gates upstream *including* the net's own driver.
  A flip-flop output has ``ffi == 0``; a primary input has ``pi == 0``.
* ``ffo`` counts gates downstream up to and including the first flip-flop,
  so a net feeding a flip-flop data pin directly has ``ffo == 1``.
* ``po`` counts gates downstream excluding the output terminal, so a
  primary output net has ``po == 0``.
* ``pi`` and ``po`` walk through flip-flops, which count as one level.
* Unreachable targets report ``cap``.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

from .netlist import CellLibrary, NetlistIR

FEATURE_NAMES = ("LGFi", "FFi", "FFo", "PI", "PO")
DEFAULT_CAP = 64
DEFAULT_PATTERNS = ("troj",)

TROJAN = 1
NON_TROJAN = 0


class FeatureVector(NamedTuple):
    lgfi: int
    ffi: int
    ffo: int
    pi: int
    po: int


@dataclass(frozen=True)
class Origin:
    part: str
    version: str
    line: int
    name: str
    net: str

    def as_dict(self) -> dict:
        return {"part": self.part, "version": self.version, "line": self.line,
                "name": self.name, "net": self.net}


@dataclass(frozen=True)
class NetRecord:
    origin: Origin
    features: FeatureVector
    class_label: int

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.origin.part, self.origin.version, self.origin.net)


class Node(NamedTuple):
    kind: str  # "gate", "pi" or "po"
    name: str


class Edge(NamedTuple):
    src: int
    dst: int
    net: int


class CircuitGraph:
    """Directed gate graph over a parsed netlist.

    Nodes are gate instances (sorted by instance name), then primary-input
    terminals, then primary-output terminals. An edge runs from a net's
    driver to each consumer and carries the net id.
    """

    def __init__(self, ir: NetlistIR, *, cap: int = DEFAULT_CAP, exclude_control: bool = True):
        if cap < 1:
            raise ValueError("cap must be positive")
        self.ir = ir
        self.cap = cap
        self.exclude_control = exclude_control

        order = sorted(range(len(ir.instances)), key=lambda i: ir.instances[i].instance_name)
        self.nodes: list[Node] = [Node("gate", ir.instances[i].instance_name) for i in order]
        self._by_name = {ir.instances[i].instance_name: i for i in order}
        self._gate_node = {inst: pos for pos, inst in enumerate(order)}
        self._pi_node = {}
        for net in ir.primary_inputs:
            self._pi_node[net] = len(self.nodes)
            self.nodes.append(Node("pi", ir.nets[net]))
        self._po_node = {}
        for net in ir.primary_outputs:
            self._po_node[net] = len(self.nodes)
            self.nodes.append(Node("po", ir.nets[net]))

        self.edges: list[Edge] = []
        for net in range(len(ir.nets)):
            drv = ir.drivers[net]
            if drv is not None:
                src = self._gate_node[drv.instance]
            elif net in self._pi_node:
                src = self._pi_node[net]
            else:
                continue
            for ref in ir.consumers[net]:
                self.edges.append(Edge(src, self._gate_node[ref.instance], net))
            if net in self._po_node:
                self.edges.append(Edge(src, self._po_node[net], net))
        self.edges.sort()

    def instance_index(self, name: str) -> int:
        return self._by_name[name]

    # pin helpers -------------------------------------------------------

    def _is_data(self, inst: int, pin: str) -> bool:
        if not self.exclude_control:
            return True
        return pin not in self.ir.cell_of(inst).control_pins

    def data_inputs(self, inst: int) -> list[int]:
        """Net ids on the traversable input pins of ``inst``."""
        cell = self.ir.cell_of(inst)
        return [
            net for pin, net in self.ir.instances[inst].pin_map.items()
            if cell.is_input(pin) and self._is_data(inst, pin)
        ]

    def outputs(self, inst: int) -> list[int]:
        cell = self.ir.cell_of(inst)
        return [net for pin, net in self.ir.instances[inst].pin_map.items() if cell.is_output(pin)]

    def data_consumers(self, net: int) -> list[int]:
        return [r.instance for r in self.ir.consumers[net] if self._is_data(r.instance, r.pin)]

    def is_ff(self, inst: int) -> bool:
        return self.ir.cell_of(inst).is_flipflop

    # level maps --------------------------------------------------------

    def _bfs(self, seeds: dict[int, int], step) -> list[int]:
        n = len(self.ir.nets)
        dist = [self.cap] * n
        queue = deque()
        for net, d in sorted(seeds.items(), key=lambda kv: kv[1]):
            if d < dist[net]:
                dist[net] = d
                queue.append(net)
        # unit steps: BFS order keeps distances minimal
        while queue:
            net = queue.popleft()
            nd = dist[net] + 1
            if nd >= self.cap:
                continue
            for nxt in step(net):
                if nd < dist[nxt]:
                    dist[nxt] = nd
                    queue.append(nxt)
        return dist

    @cached_property
    def ffi_levels(self) -> list[int]:
        seeds = {}
        for inst in range(len(self.ir.instances)):
            if self.is_ff(inst):
                for net in self.outputs(inst):
                    seeds[net] = 0

        def step(net):
            for inst in self.data_consumers(net):
                if not self.is_ff(inst):
                    yield from self.outputs(inst)
        return self._bfs(seeds, step)

    @cached_property
    def pi_levels(self) -> list[int]:
        seeds = {net: 0 for net in self.ir.primary_inputs}

        def step(net):
            for inst in self.data_consumers(net):
                yield from self.outputs(inst)
        return self._bfs(seeds, step)

    def _upstream_comb(self, net):
        drv = self.ir.drivers[net]
        if drv is not None and not self.is_ff(drv.instance):
            yield from self.data_inputs(drv.instance)

    @cached_property
    def ffo_levels(self) -> list[int]:
        seeds = {}
        for inst in range(len(self.ir.instances)):
            if self.is_ff(inst):
                for net in self.data_inputs(inst):
                    seeds[net] = 1
        return self._bfs(seeds, self._upstream_comb)

    @cached_property
    def po_levels(self) -> list[int]:
        seeds = {net: 0 for net in self.ir.primary_outputs}

        def step(net):
            drv = self.ir.drivers[net]
            if drv is not None:
                yield from self.data_inputs(drv.instance)
        return self._bfs(seeds, step)

    def lgfi(self, net: int) -> int:
        drv = self.ir.drivers[net]
        if drv is None:
            return 0
        level1 = drv.instance
        total = len(self.data_inputs(level1))
        if self.is_ff(level1):
            return total
        seen = {level1}
        for inp in self.data_inputs(level1):
            up = self.ir.drivers[inp]
            if up is not None and up.instance not in seen:
                seen.add(up.instance)
                total += len(self.data_inputs(up.instance))
        return total


def build_graph(ir: NetlistIR, *, cap: int = DEFAULT_CAP, exclude_control: bool = True) -> CircuitGraph:
    return CircuitGraph(ir, cap=cap, exclude_control=exclude_control)


def extract_features(g: CircuitGraph, net: int | str) -> FeatureVector:
    nid = g.ir.net_id(net)
    if not g.ir.is_driven(nid):
        raise ValueError(f"net {g.ir.nets[nid]!r} has no driver")
    return FeatureVector(
        lgfi=min(g.lgfi(nid), g.cap),
        ffi=g.ffi_levels[nid],
        ffo=g.ffo_levels[nid],
        pi=g.pi_levels[nid],
        po=g.po_levels[nid],
    )


def compile_patterns(patterns: Iterable[str]) -> list[re.Pattern]:
    patterns = list(patterns)
    if not patterns:
        raise ValueError("at least one label pattern is required")
    try:
        return [re.compile(p, re.IGNORECASE) for p in patterns]
    except re.error as exc:
        raise ValueError(f"invalid label pattern: {exc}") from None


def label_net(ir: NetlistIR, net: int | str, patterns: Sequence[str] = DEFAULT_PATTERNS) -> int:
    """Trojan iff the driving instance name or any name of the net matches."""
    compiled = compile_patterns(patterns)
    return _label(ir, ir.net_id(net), compiled)


def _label(ir: NetlistIR, nid: int, compiled: list[re.Pattern]) -> int:
    names = [name for name, i in ir.names.items() if i == nid]
    drv = ir.drivers[nid]
    if drv is not None:
        names.append(ir.instances[drv.instance].instance_name)
    for rx in compiled:
        if any(rx.search(n) for n in names):
            return TROJAN
    return NON_TROJAN


def extract_all(
    ir: NetlistIR,
    lib: CellLibrary | None = None,
    part: str = "",
    version: str = "",
    patterns: Sequence[str] = DEFAULT_PATTERNS,
    *,
    cap: int = DEFAULT_CAP,
    exclude_control: bool = True,
) -> list[NetRecord]:
    """One record per gate-driven net, ordered by instance name then pin.

    ``lib`` is accepted for interface symmetry; the IR already carries the
    cell definitions it was parsed with.
    """
    compiled = compile_patterns(patterns)
    g = build_graph(ir, cap=cap, exclude_control=exclude_control)
    aliases: dict[int, list[str]] = {}
    for name, nid in ir.names.items():
        aliases.setdefault(nid, []).append(name)
    records = []
    for node in g.nodes:
        if node.kind != "gate":
            continue
        inst_idx = g.instance_index(node.name)
        inst = ir.instances[inst_idx]
        cell = ir.cell_of(inst_idx)
        for pin in cell.output_pins:
            nid = inst.pin_map.get(pin)
            if nid is None:
                continue
            names = aliases.get(nid, []) + [inst.instance_name]
            label = TROJAN if any(rx.search(n) for rx in compiled for n in names) else NON_TROJAN
            records.append(NetRecord(
                origin=Origin(part, version, inst.source_line, inst.cell_name, f"{inst.instance_name}.{pin}"),
                features=extract_features(g, nid),
                class_label=label,
            ))
    return records
