"""Synthetic gate-level netlists with a rare-event trojan and ground truth.

The host is a random layered DAG of combinational gates (arity 1-4) with
roughly ten percent flip-flops. The trojan is an AND tree over internal
nets, flip-flop outputs first. Inner gates take up to ``tree_fanin`` inputs
and the root up to eight. The trigger either switches a leak mux in front
of a primary output or XORs into an internal net.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field

PAYLOADS = ("mux_leak", "xor_corrupt")

_COMB_CELLS = {
    1: (("INVX1", "ZN"), ("NBUFFX2", "Z")),
    2: (("NAND2X1", "QN"), ("NOR2X1", "QN"), ("AND2X1", "Q"), ("OR2X1", "Q"), ("XOR2X1", "Q")),
    3: (("NAND3X0", "QN"), ("NOR3X0", "QN"), ("AND3X1", "Q"), ("OR3X1", "Q"), ("AO21X1", "Q")),
    4: (("NAND4X1", "QN"), ("NOR4X0", "QN"), ("AND4X1", "Q"), ("OR4X1", "Q"), ("AOI22X1", "QN")),
}
_ARITY_WEIGHTS = (0.3, 0.35, 0.2, 0.15)
_SINGLE_INPUT_PIN = "INP"
_MAX_AND = 8


@dataclass(frozen=True)
class TrojanSpec:
    trigger_width: int = 4
    payload: str = "mux_leak"
    host_gates: int = 100
    seed: int = 0
    ff_fraction: float = 0.1
    module_name: str = "synth"
    tree_fanin: int = 4

    def validate(self) -> None:
        if self.trigger_width < 2:
            raise ValueError("trigger_width must be at least 2")
        if self.payload not in PAYLOADS:
            raise ValueError(f"payload must be one of {PAYLOADS}")
        if self.host_gates < 2:
            raise ValueError("host_gates must be at least 2")
        if not 2 <= self.tree_fanin <= 8:
            raise ValueError("tree_fanin must lie in 2..8")
        if not 0.0 <= self.ff_fraction < 1.0:
            raise ValueError("ff_fraction must lie in [0, 1)")


@dataclass
class Manifest:
    module: str
    trojan_nets: list[str]
    trojan_instances: list[str]
    gate_count: int
    pi_count: int
    po_count: int
    node_count: int
    edge_count: int
    driven_nets: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Manifest":
        return cls(**json.loads(text))


@dataclass
class _Gate:
    name: str
    cell: str
    inputs: dict[str, str]
    out_pin: str
    out: str
    ff: bool = False


def _pins_for(arity: int) -> list[str]:
    if arity == 1:
        return [_SINGLE_INPUT_PIN]
    return [f"IN{i}" for i in range(1, arity + 1)]


def generate(spec: TrojanSpec) -> tuple[str, Manifest]:
    spec.validate()
    rng = random.Random(spec.seed)
    n_pi = max(4, spec.host_gates // 8)
    pis = [f"in{i}" for i in range(n_pi)]
    pool: list[str] = list(pis)
    gates: list[_Gate] = []
    ff_outputs: list[str] = []

    def pick_inputs(count: int) -> list[str]:
        window = pool[-max(8, len(pool) // 3):]
        chosen: list[str] = []
        while len(chosen) < count:
            src = window if rng.random() < 0.7 else pool
            net = rng.choice(src)
            if net not in chosen:
                chosen.append(net)
        return chosen

    for i in range(spec.host_gates):
        out = f"n{i}"
        if i > 0 and rng.random() < spec.ff_fraction:
            gates.append(_Gate(f"U{i}", "DFFX1", {"D": pick_inputs(1)[0], "CLK": "clk"}, "Q", out, ff=True))
            ff_outputs.append(out)
        else:
            arity = rng.choices((1, 2, 3, 4), weights=_ARITY_WEIGHTS)[0]
            arity = min(arity, len(pool))
            cell, out_pin = rng.choice(_COMB_CELLS[arity])
            nets = pick_inputs(arity)
            gates.append(_Gate(f"U{i}", cell, dict(zip(_pins_for(arity), nets)), out_pin, out))
        pool.append(out)

    internal = [g.out for g in gates]
    if spec.trigger_width > len(internal):
        raise ValueError(f"trigger_width {spec.trigger_width} exceeds {len(internal)} internal nets")

    # trigger taps: flip-flop outputs first, then other internal nets
    taps = rng.sample(ff_outputs, min(len(ff_outputs), spec.trigger_width))
    others = [n for n in internal if n not in taps]
    taps += rng.sample(others, spec.trigger_width - len(taps))

    trojan_nets: list[str] = []
    trojan_gates: list[_Gate] = []
    level, depth = taps, 0
    while len(level) > 1:
        # the root may take up to _MAX_AND inputs, so widths up to
        # tree_fanin * _MAX_AND stay within two levels of the trigger output
        fanin = _MAX_AND if len(level) <= _MAX_AND else spec.tree_fanin
        groups = math.ceil(len(level) / fanin)
        size, extra = divmod(len(level), groups)
        nxt, pos = [], 0
        for gi in range(groups):
            width = size + (gi < extra)
            chunk = level[pos:pos + width]
            pos += width
            if width == 1:
                nxt.append(chunk[0])
                continue
            out = f"troj_trig_{depth}_{gi}"
            trojan_gates.append(_Gate(f"troj_and_{depth}_{gi}", f"AND{width}X1",
                                      dict(zip(_pins_for(width), chunk)), "Q", out))
            trojan_nets.append(out)
            nxt.append(out)
        level, depth = nxt, depth + 1
    trigger = level[0]

    consumed = {n for g in gates for n in g.inputs.values()}
    if spec.payload == "mux_leak":
        dangling = [g.out for g in gates if g.out not in consumed]
        victim = rng.choice(dangling) if dangling else gates[-1].out
        leak_pool = [n for n in ff_outputs if n != victim] or [n for n in internal if n != victim]
        leak = rng.choice(leak_pool)
        trojan_gates.append(_Gate("troj_payload", "MUX21X1", {"IN1": victim, "IN2": leak, "S": trigger},
                                  "Q", "troj_leak_out"))
        trojan_nets.append("troj_leak_out")
    else:
        candidates = [g.out for g in gates if g.out in consumed]
        victim = rng.choice(candidates)
        for g in gates:
            for pin, net in g.inputs.items():
                if net == victim:
                    g.inputs[pin] = "troj_xor_out"
        trojan_gates.append(_Gate("troj_payload", "XOR2X1", {"IN1": victim, "IN2": trigger},
                                  "Q", "troj_xor_out"))
        trojan_nets.append("troj_xor_out")

    all_gates = gates + trojan_gates
    consumers: dict[str, int] = {}
    for g in all_gates:
        for net in g.inputs.values():
            consumers[net] = consumers.get(net, 0) + 1
    pos_ = [g.out for g in all_gates if g.out not in consumers]
    has_ff = any(g.ff for g in gates)
    inputs = (["clk"] if has_ff else []) + pis
    wires = [g.out for g in all_gates if g.out not in pos_]

    lines = [f"// synthetic netlist, seed {spec.seed}, payload {spec.payload}",
             f"module {spec.module_name} ({', '.join(inputs + pos_)});"]
    lines += _wrap("input", inputs)
    lines += _wrap("output", pos_)
    lines += _wrap("wire", wires)
    for g in all_gates:
        conns = [f".{p}({n})" for p, n in g.inputs.items()] + [f".{g.out_pin}({g.out})"]
        lines.append(f"  {g.cell} {g.name} ({', '.join(conns)});")
    lines.append("endmodule")
    text = "\n".join(lines) + "\n"

    edge_count = sum(consumers.get(n, 0) for n in inputs + [g.out for g in all_gates]) + len(pos_)
    manifest = Manifest(
        module=spec.module_name,
        trojan_nets=trojan_nets,
        trojan_instances=[g.name for g in trojan_gates],
        gate_count=len(all_gates),
        pi_count=len(inputs),
        po_count=len(pos_),
        node_count=len(all_gates) + len(inputs) + len(pos_),
        edge_count=edge_count,
        driven_nets=[g.out for g in all_gates],
    )
    return text, manifest


def _wrap(keyword: str, names: list[str], per_line: int = 12) -> list[str]:
    return [f"  {keyword} {', '.join(names[i:i + per_line])};" for i in range(0, len(names), per_line)]
