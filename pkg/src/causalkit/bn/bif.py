"""Reader and writer for the discrete subset of the BIF network format.

Supported blocks: ``network``, ``variable`` (``type discrete``) and
``probability`` with explicit parent-state rows, ``default`` rows or a flat
``table``. For a flat table with parents the child state varies slowest and
the declared parents follow with the last one fastest.

Published network files round CPT rows to a few digits, so rows are accepted
when they sum to 1 within ``PARSE_ROW_TOL`` and renormalized on load.
"""

from __future__ import annotations

import re
from itertools import product

import numpy as np

from ..graph import Dag, GraphError
from .model import DiscreteBn, NetworkValidationError

PARSE_ROW_TOL = 1e-6

_TOKEN = re.compile(r"//[^\n]*|/\*.*?\*/|[{}()\[\];,|]|[^\s{}()\[\];,|]+", re.S)


class BifParseError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class _Tokens:
    def __init__(self, text):
        self.toks = []
        line, last = 1, 0
        for m in _TOKEN.finditer(text):
            line += text.count("\n", last, m.start())
            last = m.start()
            tok = m.group(0)
            if tok.startswith("//") or tok.startswith("/*"):
                continue
            self.toks.append((tok, line))
        self.pos = 0

    def peek(self):
        return self.toks[self.pos][0] if self.pos < len(self.toks) else None

    @property
    def line(self):
        if self.pos < len(self.toks):
            return self.toks[self.pos][1]
        return self.toks[-1][1] if self.toks else 1

    def next(self):
        if self.pos >= len(self.toks):
            raise BifParseError("unexpected end of input", self.line)
        tok = self.toks[self.pos][0]
        self.pos += 1
        return tok

    def expect(self, tok):
        line = self.line
        got = self.next()
        if got != tok:
            raise BifParseError(f"expected {tok!r}, got {got!r}", line)

    def skip_statement(self):
        while self.next() != ";":
            pass

    def skip_block(self):
        depth = 0
        while True:
            tok = self.next()
            if tok == "{":
                depth += 1
            elif tok == "}":
                depth -= 1
                if depth == 0:
                    return


def _numbers(tokens: _Tokens):
    vals = []
    while True:
        line = tokens.line
        tok = tokens.next()
        if tok == ";":
            return vals
        if tok == ",":
            continue
        try:
            vals.append(float(tok))
        except ValueError:
            raise BifParseError(f"expected a probability, got {tok!r}", line) from None


def parse_discrete_network(text: str, name: str | None = None) -> DiscreteBn:
    """Parse BIF text into a :class:`DiscreteBn`.

    Raises
    ------
    BifParseError
        Syntax errors, with the offending line number.
    NetworkValidationError
        CPT rows that do not sum to one, shape or cardinality mismatches,
        unknown variables and cycles.
    """
    toks = _Tokens(text)
    net_name = name
    variables = {}  # name -> list of states
    var_order = []
    probs = {}  # child -> (parents, rows dict, default, table, line)
    while toks.peek() is not None:
        line = toks.line
        kw = toks.next()
        if kw == "network":
            nm = toks.next()
            if net_name is None:
                net_name = nm
            if toks.peek() != "{":
                raise BifParseError("expected '{' after network name", toks.line)
            toks.skip_block()
        elif kw == "variable":
            vname = toks.next()
            if vname in variables:
                raise BifParseError(f"variable {vname!r} declared twice", line)
            toks.expect("{")
            states = None
            while toks.peek() != "}":
                sub_line = toks.line
                sub = toks.next()
                if sub == "type":
                    kind = toks.next()
                    if kind != "discrete":
                        raise BifParseError(f"only discrete variables are supported, got {kind!r}", sub_line)
                    toks.expect("[")
                    try:
                        k = int(toks.next())
                    except ValueError:
                        raise BifParseError("expected state count", sub_line) from None
                    toks.expect("]")
                    toks.expect("{")
                    states = []
                    while True:
                        t = toks.next()
                        if t == "}":
                            break
                        if t != ",":
                            states.append(t)
                    toks.expect(";")
                    if len(states) != k:
                        raise NetworkValidationError(
                            f"variable {vname!r}: declared {k} states but listed {len(states)}"
                        )
                elif sub == "property":
                    toks.skip_statement()
                else:
                    raise BifParseError(f"unexpected {sub!r} in variable block", sub_line)
            toks.expect("}")
            if states is None:
                raise BifParseError(f"variable {vname!r} has no type declaration", line)
            variables[vname] = states
            var_order.append(vname)
        elif kw == "probability":
            toks.expect("(")
            child = toks.next()
            parents = []
            if toks.peek() == "|":
                toks.next()
                while toks.peek() != ")":
                    t = toks.next()
                    if t != ",":
                        parents.append(t)
            toks.expect(")")
            toks.expect("{")
            rows, default, table = {}, None, None
            while toks.peek() != "}":
                ent_line = toks.line
                t = toks.peek()
                if t == "(":
                    toks.next()
                    key = []
                    while True:
                        s = toks.next()
                        if s == ")":
                            break
                        if s != ",":
                            key.append(s)
                    rows[tuple(key)] = (_numbers(toks), ent_line)
                elif t == "table":
                    toks.next()
                    table = (_numbers(toks), ent_line)
                elif t == "default":
                    toks.next()
                    default = (_numbers(toks), ent_line)
                elif t == "property":
                    toks.skip_statement()
                else:
                    raise BifParseError(f"unexpected {t!r} in probability block", ent_line)
            toks.expect("}")
            if child in probs:
                raise BifParseError(f"second probability block for {child!r}", line)
            probs[child] = (parents, rows, default, table, line)
        else:
            raise BifParseError(f"unexpected {kw!r} at top level", line)

    index = {v: i for i, v in enumerate(var_order)}
    edges = set()
    for child, (parents, *_rest, line) in probs.items():
        for v in [child] + parents:
            if v not in index:
                raise NetworkValidationError(f"line {line}: unknown variable {v!r}")
        for p in parents:
            edges.add((index[p], index[child]))
    missing = [v for v in var_order if v not in probs]
    if missing:
        raise NetworkValidationError(f"no probability block for {missing[0]!r}")
    try:
        graph = Dag(tuple(var_order), frozenset(edges))
    except GraphError as exc:
        raise NetworkValidationError(str(exc)) from None

    cards = [len(variables[v]) for v in var_order]
    cpts = []
    for i, child in enumerate(var_order):
        parents, rows, default, table, line = probs[child]
        r = cards[i]
        sorted_parents = graph.parents[i]
        declared = [index[p] for p in parents]
        if len(set(declared)) != len(declared):
            raise NetworkValidationError(f"line {line}: repeated parent for {child!r}")
        q = int(np.prod([cards[p] for p in sorted_parents], dtype=np.int64))
        cpt = np.full((q, r), np.nan)
        perm = [declared.index(p) for p in sorted_parents]
        if table is not None:
            vals, tline = table
            expected = q * r
            if len(vals) != expected:
                raise NetworkValidationError(
                    f"line {tline}: node {child!r}: table has {len(vals)} entries, expected {expected}"
                )
            arr = np.array(vals).reshape([r] + [cards[p] for p in declared])
            arr = np.moveaxis(arr, 0, -1)  # declared parents..., child
            if declared:
                arr = np.transpose(arr, perm + [len(declared)])
            cpt = arr.reshape(q, r).copy()
        if default is not None:
            vals, dline = default
            if len(vals) != r:
                raise NetworkValidationError(f"line {dline}: node {child!r}: default row needs {r} entries")
            cpt[np.isnan(cpt[:, 0])] = vals
        for key, (vals, rline) in rows.items():
            if len(key) != len(declared):
                raise NetworkValidationError(
                    f"line {rline}: node {child!r}: expected {len(declared)} parent states"
                )
            if len(vals) != r:
                raise NetworkValidationError(
                    f"line {rline}: node {child!r}: row has {len(vals)} entries, expected {r}"
                )
            states = []
            for p, s in zip(declared, key):
                try:
                    states.append(variables[var_order[p]].index(s))
                except ValueError:
                    raise NetworkValidationError(
                        f"line {rline}: unknown state {s!r} of {var_order[p]!r}"
                    ) from None
            row = 0
            for p_pos in perm:
                row = row * cards[declared[p_pos]] + states[p_pos]
            cpt[row] = vals
        if np.isnan(cpt).any():
            raise NetworkValidationError(f"node {child!r}: CPT rows missing")
        sums = cpt.sum(axis=1)
        bad = np.abs(sums - 1.0) > PARSE_ROW_TOL
        if np.any(bad):
            k = int(np.argmax(bad))
            raise NetworkValidationError(f"node {child!r}: CPT row {k} sums to {sums[k]:.12g}, not 1")
        if np.any(cpt < 0):
            raise NetworkValidationError(f"node {child!r}: negative probability")
        # leave exact rows untouched so write/parse round-trips bit for bit
        renorm = np.abs(sums - 1.0) > 1e-12
        cpt[renorm] /= sums[renorm, None]
        cpts.append(cpt)
    return DiscreteBn(
        graph,
        tuple(cards),
        tuple(cpts),
        tuple(tuple(variables[v]) for v in var_order),
        net_name or "unknown",
    )


def write_discrete_network(bn: DiscreteBn) -> str:
    """Serialize with explicit parent-state rows (parents in index order)."""
    g = bn.graph
    states = bn.state_names or tuple(tuple(str(k) for k in range(c)) for c in bn.cardinalities)
    out = [f"network {bn.name} {{", "}"]
    for i, nm in enumerate(g.node_names):
        out.append(f"variable {nm} {{")
        out.append(f"  type discrete [ {bn.cardinalities[i]} ] {{ {', '.join(states[i])} }};")
        out.append("}")
    for i, nm in enumerate(g.node_names):
        pa = g.parents[i]
        cpt = bn.cpts[i]
        if not pa:
            out.append(f"probability ( {nm} ) {{")
            out.append(f"  table {', '.join(repr(float(v)) for v in cpt[0])};")
        else:
            out.append(f"probability ( {nm} | {', '.join(g.node_names[p] for p in pa)} ) {{")
            for row, combo in enumerate(product(*[range(bn.cardinalities[p]) for p in pa])):
                key = ", ".join(states[p][s] for p, s in zip(pa, combo))
                out.append(f"  ({key}) {', '.join(repr(float(v)) for v in cpt[row])};")
        out.append("}")
    return "\n".join(out) + "\n"
