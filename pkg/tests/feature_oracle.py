"""Independent feature oracle for generated netlists.

Reads the emitted Verilog with a regex of its own (no shared parser code),
builds a net-level graph with networkx and takes exhaustive single-source
shortest paths. Only the small cell vocabulary the generator uses is known
here.
"""

import re

import networkx as nx

OUTPUT_PINS = {"Q", "QN", "Z", "ZN"}
CONTROL_PINS = {"CLK"}

_INST = re.compile(r"^\s*(\w+)\s+(\w+)\s*\((.*)\);\s*$")
_CONN = re.compile(r"\.(\w+)\((\w+)\)")
_DECL = re.compile(r"^\s*(input|output)\s+(.*);\s*$")


def read(text):
    pis, pos, gates = [], [], []
    for line in text.splitlines():
        m = _DECL.match(line)
        if m:
            names = [n.strip() for n in m.group(2).split(",")]
            (pis if m.group(1) == "input" else pos).extend(names)
            continue
        m = _INST.match(line)
        if m and m.group(1) != "module":
            conns = dict(_CONN.findall(m.group(3)))
            ff = m.group(1).startswith("DFF")
            ins = [n for p, n in conns.items() if p not in OUTPUT_PINS and p not in CONTROL_PINS]
            outs = [(p, n) for p, n in conns.items() if p in OUTPUT_PINS]
            gates.append({"name": m.group(2), "ff": ff, "ins": ins,
                          "outs": [n for _, n in outs], "pins": outs})
    return pis, pos, gates


def _graphs(gates):
    every, comb = nx.DiGraph(), nx.DiGraph()
    for g in gates:
        every.add_nodes_from(g["ins"] + g["outs"])
        comb.add_nodes_from(g["ins"] + g["outs"])
        for i in g["ins"]:
            for o in g["outs"]:
                every.add_edge(i, o)
                if not g["ff"]:
                    comb.add_edge(i, o)
    return every, comb


def _lengths(graph, sources):
    """Per-source BFS tables, one full single-source search per source."""
    return {s: nx.single_source_shortest_path_length(graph, s) for s in sources if s in graph}


def _best(tables, target, cap, offset=0):
    hops = [t[target] + offset for t in tables.values() if target in t]
    return min(hops + [cap])


def features(text, cap=64):
    """Map of "instance.pin" -> (lgfi, ffi, ffo, pi, po) for every gate output."""
    pis, pos, gates = read(text)
    every, comb = _graphs(gates)
    driver = {o: g for g in gates for o in g["outs"]}
    ff_outs = [o for g in gates if g["ff"] for o in g["outs"]]
    ff_ins = [i for g in gates if g["ff"] for i in g["ins"]]
    from_ff = _lengths(comb, ff_outs)
    from_pi = _lengths(every, pis)
    # downstream searches run on the reversed graphs
    to_ff = _lengths(comb.reverse(copy=False), ff_ins)
    to_po = _lengths(every.reverse(copy=False), pos)
    result = {}
    for g in gates:
        for pin, net in g["pins"]:
            lgfi = len(g["ins"])
            if not g["ff"]:
                seen = set()
                for i in g["ins"]:
                    up = driver.get(i)
                    if up is not None and up["name"] not in seen and up is not g:
                        seen.add(up["name"])
                        lgfi += len(up["ins"])
            ffi = 0 if g["ff"] else _best(from_ff, net, cap)
            result[f"{g['name']}.{pin}"] = (
                min(lgfi, cap),
                ffi,
                _best(to_ff, net, cap, offset=1),
                _best(from_pi, net, cap),
                _best(to_po, net, cap),
            )
    return result
