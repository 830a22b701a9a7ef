"""Synthetic RC/RLC test circuits emitted as netlist text.

The mesh generator mimics an on-chip power grid: a 2-D resistive mesh,
grounded capacitances in the picofarad range at the nodes, a few supply
pads tied to ground through small resistors (and, for RLC grids, package
inductors), and current-source ports at random nodes.
"""

import math

import numpy as np


def _fmt(x):
    return repr(float(x))


def rc_ladder(n, ports=1, R=1.0, C=1.0, R_source=1.0):
    """Uniform RC ladder of ``n`` nodes, source resistance to ground at node 1.

    Ports are spread evenly along the ladder (first and last node for two).
    """
    lines = [f"* RC ladder, {n} nodes, {ports} ports"]
    lines.append(f"RS 1 0 {_fmt(R_source)}")
    for k in range(1, n):
        lines.append(f"R{k} {k} {k + 1} {_fmt(R)}")
    for k in range(1, n + 1):
        lines.append(f"C{k} {k} 0 {_fmt(C)}")
    where = np.unique(np.round(np.linspace(1, n, ports)).astype(int))
    if len(where) != ports:
        raise ValueError(f"cannot place {ports} distinct ports on {n} nodes")
    for i, node in enumerate(where):
        lines.append(f".port P{i + 1} {node}")
    return "\n".join(lines) + "\n"


def power_grid(nodes, ports, cap_dropout=0.0, seed=0, inductors=False,
               r_segment=(1.0, 10.0), cap=(0.5e-12, 2e-12), pads=None,
               r_pad=0.1, l_pad=1e-10):
    """Random RC (or RLC) mesh netlist; reproducible for a given ``seed``.

    Parameters
    ----------
    nodes : int
        Number of grid nodes, laid out row-major on a near-square mesh.
    ports : int
        Number of current-source ports (distinct random nodes).
    cap_dropout : float
        Fraction of nodes left without capacitance (makes ``E`` singular).
    inductors : bool
        Tie pads to ground through an inductor in parallel with the pad
        resistor.
    """
    if not 0.0 <= cap_dropout < 1.0:
        raise ValueError("cap_dropout must lie in [0, 1)")
    if ports > nodes:
        raise ValueError("more ports than nodes")
    rng = np.random.default_rng(seed)
    width = math.ceil(math.sqrt(nodes))
    lines = [f"* power grid: {nodes} nodes, {ports} ports, dropout {cap_dropout}, seed {seed}"]

    def node(k):
        return str(k + 1)

    count = 0
    for k in range(nodes):
        col = k % width
        if col + 1 < width and k + 1 < nodes:
            count += 1
            lines.append(f"R{count} {node(k)} {node(k + 1)} {_fmt(rng.uniform(*r_segment))}")
        if k + width < nodes:
            count += 1
            lines.append(f"R{count} {node(k)} {node(k + width)} {_fmt(rng.uniform(*r_segment))}")

    npads = pads if pads is not None else max(1, nodes // 50)
    pad_nodes = np.sort(rng.choice(nodes, size=npads, replace=False))
    for i, k in enumerate(pad_nodes):
        lines.append(f"RP{i + 1} {node(k)} 0 {_fmt(r_pad * rng.uniform(0.8, 1.2))}")
        if inductors:
            lines.append(f"LP{i + 1} {node(k)} 0 {_fmt(l_pad * rng.uniform(0.8, 1.2))}")

    ndrop = int(round(cap_dropout * nodes))
    dropped = set(rng.choice(nodes, size=ndrop, replace=False).tolist()) if ndrop else set()
    caps = rng.uniform(*cap, size=nodes)
    for k in range(nodes):
        if k not in dropped:
            lines.append(f"C{k + 1} {node(k)} 0 {_fmt(caps[k])}")

    port_nodes = np.sort(rng.choice(nodes, size=ports, replace=False))
    for i, k in enumerate(port_nodes):
        lines.append(f".port P{i + 1} {node(k)}")
    return "\n".join(lines) + "\n"
