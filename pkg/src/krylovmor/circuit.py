"""Netlist parsing and MNA stamping of linear RLC circuits.

Netlist grammar, one statement per line::

    * comment
    R1 n+ n- value          (also: "R name n+ n- value")
    C1 n+ n- value
    L1 n+ n- value          inductive branch, current flows n+ -> n-
    I1 n+ n- value          current source, drives current into n-
    .port name in-node [out-node]

Node ``0`` is ground.  Values accept SPICE scale suffixes (``1p``, ``2.2n``).
"""

import re
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .descriptor import DescriptorSystem
from .exceptions import ParseError, UnsupportedElement
from .sparse import as_sparse

GROUND = "0"

_SUFFIXES = {"t": 1e12, "g": 1e9, "meg": 1e6, "k": 1e3, "m": 1e-3,
             "u": 1e-6, "n": 1e-9, "p": 1e-12, "f": 1e-15}
_VALUE = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(meg|[tgkmunpf])?[a-z]*$")


class FloatingNodeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Element:
    kind: str
    name: str
    node_pos: str
    node_neg: str
    value: float


@dataclass(frozen=True)
class Port:
    name: str
    input_node: str
    output_node: str


@dataclass
class Netlist:
    elements: list
    ports: list
    nodes: list = field(default_factory=list)

    @property
    def n(self):
        return len(self.nodes)

    @property
    def m(self):
        return sum(1 for e in self.elements if e.kind == "L")

    @property
    def p(self):
        return len(self.ports)

    @property
    def q(self):
        return len(self.ports)

    def node_index(self):
        return {name: i for i, name in enumerate(self.nodes)}


def parse_value(token):
    match = _VALUE.match(token.lower())
    if not match:
        raise ValueError(token)
    scale = _SUFFIXES.get(match.group(2), 1.0) if match.group(2) else 1.0
    return float(match.group(1)) * scale


def _node_key(name):
    return (0, int(name), "") if name.isdigit() else (1, 0, name)


def _parse_element(tokens, lineno):
    head = tokens[0]
    kind = head[0].upper()
    if kind == "V":
        raise UnsupportedElement(
            lineno, "voltage sources are not supported; use a Norton-equivalent current source")
    if kind not in "RCLI":
        raise UnsupportedElement(lineno, f"unsupported element {head!r}")
    if len(head) == 1 and len(tokens) == 5:
        name, rest = f"{kind}{tokens[1]}", tokens[2:]
    else:
        name, rest = head, tokens[1:]
    if len(rest) < 3:
        raise ParseError(lineno, "missing value" if len(rest) == 2 else "missing nodes")
    if len(rest) > 3:
        raise ParseError(lineno, f"unexpected trailing tokens {rest[3:]}")
    node_pos, node_neg, raw = rest
    try:
        value = parse_value(raw)
    except ValueError:
        raise ParseError(lineno, f"bad value {raw!r}") from None
    if kind in "RCL" and not value > 0:
        raise ParseError(lineno, f"{name}: value must be strictly positive")
    if node_pos == node_neg:
        raise ParseError(lineno, f"{name}: both terminals on node {node_pos}")
    return Element(kind, name.upper(), node_pos, node_neg, value)


def _parse_port(tokens, lineno):
    args = tokens[1:]
    if len(args) == 4 and args[0].lower() == "in" and args[2].lower() == "out":
        # keyword form: .port in <node> out <node>
        return Port(f"p{args[1]}", args[1], args[3])
    if len(args) not in (2, 3):
        raise ParseError(lineno, ".port expects: name in-node [out-node]")
    name, node_in = args[0], args[1]
    node_out = args[2] if len(args) == 3 else node_in
    for node in (node_in, node_out):
        if node == GROUND:
            raise ParseError(lineno, f"port {name} attached to ground")
    return Port(name, node_in, node_out)


def parse_netlist(text):
    """Parse netlist text into a validated :class:`Netlist`."""
    elements, ports, seen = [], [], {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("*"):
            continue
        tokens = line.split()
        head = tokens[0].lower()
        if head == ".end":
            break
        if head == ".port":
            ports.append(_parse_port(tokens, lineno))
            continue
        if head.startswith("."):
            raise ParseError(lineno, f"unknown directive {tokens[0]!r}")
        el = _parse_element(tokens, lineno)
        if el.name in seen:
            raise ParseError(lineno, f"duplicate element name {el.name} (first on line {seen[el.name]})")
        seen[el.name] = lineno
        elements.append(el)

    names = set()
    for e in elements:
        names.update((e.node_pos, e.node_neg))
    for prt in ports:
        names.update((prt.input_node, prt.output_node))
    names.discard(GROUND)

    if not ports:
        # no .port directive: every current source is an input, observed
        # at the node it drives
        for e in sorted((e for e in elements if e.kind == "I"), key=lambda e: e.name):
            out = e.node_neg if e.node_neg != GROUND else e.node_pos
            ports.append(Port(e.name, out, out))

    # sorting makes the assembled matrices independent of line order
    elements.sort(key=lambda e: ("RCLI".index(e.kind), e.name))
    return Netlist(elements, ports, sorted(names, key=_node_key))


def _current_source_column(netlist, e, index):
    col = np.zeros(netlist.n)
    if e.node_neg != GROUND:
        col[index[e.node_neg]] += e.value
    if e.node_pos != GROUND:
        col[index[e.node_pos]] -= e.value
    return col


def _stamp_two_terminal(rows, cols, vals, a, b, g):
    if a >= 0:
        rows.append(a); cols.append(a); vals.append(g)
    if b >= 0:
        rows.append(b); cols.append(b); vals.append(g)
    if a >= 0 and b >= 0:
        rows += [a, b]; cols += [b, a]; vals += [-g, -g]


def mna_matrices(netlist):
    """Stamp ``G, C, M, W, B1, L1`` for a netlist (ground removed)."""
    index = netlist.node_index()
    n, m = netlist.n, netlist.m

    def idx(node):
        return -1 if node == GROUND else index[node]

    g_trip, c_trip = ([], [], []), ([], [], [])
    w_rows, w_cols, w_vals, inductances = [], [], [], []
    sources = {}
    touched = np.zeros(n, dtype=bool)
    for e in netlist.elements:
        a, b = idx(e.node_pos), idx(e.node_neg)
        if e.kind == "I":
            sources[e.name] = e
            continue
        for k in (a, b):
            if k >= 0:
                touched[k] = True
        if e.kind == "R":
            _stamp_two_terminal(*g_trip, a, b, 1.0 / e.value)
        elif e.kind == "C":
            _stamp_two_terminal(*c_trip, a, b, e.value)
        else:
            j = len(inductances)
            inductances.append(e.value)
            if a >= 0:
                w_rows.append(a); w_cols.append(j); w_vals.append(1.0)
            if b >= 0:
                w_rows.append(b); w_cols.append(j); w_vals.append(-1.0)

    for k in np.flatnonzero(~touched):
        warnings.warn(f"floating node {netlist.nodes[k]}: no R, C or L element attached",
                      FloatingNodeWarning, stacklevel=2)

    G = as_sparse(sp.coo_matrix((g_trip[2], (g_trip[0], g_trip[1])), shape=(n, n)))
    C = as_sparse(sp.coo_matrix((c_trip[2], (c_trip[0], c_trip[1])), shape=(n, n)))
    M = as_sparse(sp.diags(np.asarray(inductances, dtype=float), shape=(m, m)))
    W = as_sparse(sp.coo_matrix((w_vals, (w_rows, w_cols)), shape=(n, m)))

    p = len(netlist.ports)
    B1 = np.zeros((n, p))
    L1 = np.zeros((p, n))
    for i, prt in enumerate(netlist.ports):
        if prt.name in sources and sources[prt.name].kind == "I":
            B1[:, i] = _current_source_column(netlist, sources[prt.name], index)
        else:
            B1[index[prt.input_node], i] = 1.0
        L1[i, index[prt.output_node]] = 1.0
    return G, C, M, W, B1, L1


def descriptor_from_blocks(G, C, M, W, B1, L1, D=None, input_names=None,
                           output_names=None):
    """Assemble ``A = -[[G, W], [-W^T, 0]]``, ``E = diag(C, M)``, ``B = [B1; 0]``, ``L = [L1, 0]``."""
    G, C, M, W = (as_sparse(X) for X in (G, C, M, W))
    n, m = W.shape
    A = -sp.bmat([[G, W], [-W.T, sp.csr_matrix((m, m))]], format="csr")
    E = sp.bmat([[C, sp.csr_matrix((n, m))], [sp.csr_matrix((m, n)), M]], format="csr")
    B1 = np.atleast_2d(np.asarray(B1.toarray() if sp.issparse(B1) else B1, dtype=float))
    L1 = np.atleast_2d(np.asarray(L1.toarray() if sp.issparse(L1) else L1, dtype=float))
    B = np.vstack([B1, np.zeros((m, B1.shape[1]))])
    L = np.hstack([L1, np.zeros((L1.shape[0], m))])
    return DescriptorSystem(E, A, B, L, D, n_nodes=n, input_names=input_names,
                            output_names=output_names)


def assemble_mna(netlist):
    """Build the descriptor model of a netlist (``D = 0``)."""
    G, C, M, W, B1, L1 = mna_matrices(netlist)
    names = [prt.name for prt in netlist.ports]
    return descriptor_from_blocks(G, C, M, W, B1, L1, input_names=names,
                                  output_names=names)


def detect_singularity(sys):
    """Split node states into capacitive (n1) and non-capacitive (n2) indices."""
    n = sys.n_node_states
    C = sys.E[:n, :n]
    has_row = np.diff(C.tocsr().indptr) > 0
    has_col = np.diff(C.tocsc().indptr) > 0
    capacitive = has_row | has_col
    return np.flatnonzero(capacitive), np.flatnonzero(~capacitive)
