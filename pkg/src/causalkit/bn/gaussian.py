"""Line-oriented linear-Gaussian network descriptor.

::

    # comment
    network <name>                      (optional)
    node <name> <intercept> <sigma>
    arc <parent> <child> <coefficient>

Nodes must be declared before arcs that mention them.
"""

from __future__ import annotations

from ..graph import Dag, GraphError
from .model import GaussianBn, NetworkValidationError


class GaussianParseError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


def parse_gaussian_network(text: str, name: str | None = None) -> GaussianBn:
    names, intercepts, sigmas = [], [], []
    index = {}
    arcs = {}
    net_name = name
    for lineno, raw in enumerate(text.splitlines(), start=1):
        ln = raw.split("#", 1)[0].strip()
        if not ln:
            continue
        parts = ln.split()
        kw = parts[0]
        try:
            if kw == "network" and len(parts) == 2:
                net_name = net_name or parts[1]
            elif kw == "node" and len(parts) == 4:
                nm = parts[1]
                if nm in index:
                    raise GaussianParseError(f"node {nm!r} declared twice", lineno)
                index[nm] = len(names)
                names.append(nm)
                intercepts.append(float(parts[2]))
                sigmas.append(float(parts[3]))
            elif kw == "arc" and len(parts) == 4:
                a, b = parts[1], parts[2]
                for v in (a, b):
                    if v not in index:
                        raise GaussianParseError(f"arc mentions undeclared node {v!r}", lineno)
                if (index[a], index[b]) in arcs:
                    raise GaussianParseError(f"duplicate arc {a} -> {b}", lineno)
                arcs[(index[a], index[b])] = float(parts[3])
            else:
                raise GaussianParseError(f"cannot parse {ln!r}", lineno)
        except ValueError as exc:
            if isinstance(exc, GaussianParseError):
                raise
            raise GaussianParseError(f"bad number in {ln!r}", lineno) from None
    try:
        graph = Dag(tuple(names), frozenset(arcs))
    except GraphError as exc:
        raise NetworkValidationError(str(exc)) from None
    coefs = tuple(tuple(arcs[(p, i)] for p in graph.parents[i]) for i in range(len(names)))
    return GaussianBn(graph, tuple(intercepts), coefs, tuple(sigmas), net_name or "unknown")


def write_gaussian_network(bn: GaussianBn) -> str:
    g = bn.graph
    out = [f"network {bn.name}"]
    for i, nm in enumerate(g.node_names):
        out.append(f"node {nm} {bn.intercepts[i]!r} {bn.sigmas[i]!r}")
    for i, nm in enumerate(g.node_names):
        for p, c in zip(g.parents[i], bn.coefficients[i]):
            out.append(f"arc {g.node_names[p]} {nm} {float(c)!r}")
    return "\n".join(out) + "\n"
