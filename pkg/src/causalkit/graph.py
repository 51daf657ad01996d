"""Directed and partially directed graphs over indexed nodes.

Nodes are identified by their position in ``node_names``; names only matter
at I/O boundaries. All graph values are immutable.
"""

from __future__ import annotations

from collections import deque

import heapq
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Callable, Iterable, Optional, Sequence


class GraphError(ValueError):
    """Malformed graph input."""


class CycleError(GraphError):
    """The edge set does not admit a topological order."""


class UnknownNodeError(GraphError, KeyError):
    def __str__(self):
        return ValueError.__str__(self)


def _check_names(names: Sequence[str]) -> tuple:
    names = tuple(str(n) for n in names)
    if len(set(names)) != len(names):
        raise GraphError("node names must be unique")
    for n in names:
        if not n or any(c.isspace() for c in n):
            raise GraphError(f"invalid node name {n!r}")
    return names


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph.

    Parameters
    ----------
    node_names : sequence of str
        Unique node identifiers; a node's index is its position here.
    edges : iterable of (parent, child) index pairs
    """

    node_names: tuple
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        names = _check_names(self.node_names)
        p = len(names)
        edges = frozenset((int(a), int(b)) for a, b in self.edges)
        for a, b in edges:
            if not (0 <= a < p and 0 <= b < p):
                raise GraphError(f"edge ({a}, {b}) refers to a missing node")
            if a == b:
                raise GraphError(f"self-loop on {names[a]}")
            if (b, a) in edges:
                raise GraphError(f"both orientations present for {names[a]}-{names[b]}")
        object.__setattr__(self, "node_names", names)
        object.__setattr__(self, "edges", edges)
        topological_order(self)

    @classmethod
    def from_names(cls, node_names: Sequence[str], edges: Iterable[tuple]) -> "Dag":
        """Build from (parent_name, child_name) pairs."""
        index = {n: i for i, n in enumerate(node_names)}
        try:
            return cls(tuple(node_names), frozenset((index[a], index[b]) for a, b in edges))
        except KeyError as exc:
            raise UnknownNodeError(f"unknown node {exc.args[0]!r}") from None

    @property
    def n_nodes(self) -> int:
        return len(self.node_names)

    @cached_property
    def index(self) -> dict:
        return {n: i for i, n in enumerate(self.node_names)}

    @cached_property
    def parents(self) -> tuple:
        pa = [[] for _ in self.node_names]
        for a, b in self.edges:
            pa[b].append(a)
        return tuple(tuple(sorted(x)) for x in pa)

    @cached_property
    def children(self) -> tuple:
        ch = [[] for _ in self.node_names]
        for a, b in self.edges:
            ch[a].append(b)
        return tuple(tuple(sorted(x)) for x in ch)

    def node(self, key) -> int:
        """Resolve a node name or index to an index."""
        return _resolve(self.node_names, self.index, key)

    def adjacent(self, a: int, b: int) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def skeleton(self) -> frozenset:
        return frozenset(_pair(a, b) for a, b in self.edges)

    def v_structures(self) -> frozenset:
        """Triples (a, c, b) with a < b, a -> c <- b and a, b nonadjacent."""
        out = set()
        for c in range(self.n_nodes):
            for a, b in combinations(self.parents[c], 2):
                if not self.adjacent(a, b):
                    out.add((a, c, b))
        return frozenset(out)

    def relabel(self, perm: Sequence[int]) -> "Dag":
        """Return the graph with node ``i`` moved to position ``perm[i]``."""
        names = [None] * self.n_nodes
        for i, j in enumerate(perm):
            names[j] = self.node_names[i]
        return Dag(tuple(names), frozenset((perm[a], perm[b]) for a, b in self.edges))


@dataclass(frozen=True)
class Pdag:
    """Partially directed graph: directed (tail, head) pairs plus undirected pairs.

    Undirected pairs are stored with the smaller index first. Equality is
    structural.
    """

    node_names: tuple
    directed: frozenset = field(default_factory=frozenset)
    undirected: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        names = _check_names(self.node_names)
        p = len(names)
        directed = frozenset((int(a), int(b)) for a, b in self.directed)
        undirected = frozenset(_pair(int(a), int(b)) for a, b in self.undirected)
        seen = set()
        for a, b in list(directed) + list(undirected):
            if not (0 <= a < p and 0 <= b < p):
                raise GraphError(f"edge ({a}, {b}) refers to a missing node")
            if a == b:
                raise GraphError(f"self-loop on {names[a]}")
            key = _pair(a, b)
            if key in seen:
                raise GraphError(f"pair {names[a]}-{names[b]} appears more than once")
            seen.add(key)
        object.__setattr__(self, "node_names", names)
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "undirected", undirected)

    @classmethod
    def from_dag(cls, dag: Dag) -> "Pdag":
        return cls(dag.node_names, dag.edges, frozenset())

    @classmethod
    def from_names(cls, node_names, directed=(), undirected=()) -> "Pdag":
        index = {n: i for i, n in enumerate(node_names)}
        try:
            return cls(
                tuple(node_names),
                frozenset((index[a], index[b]) for a, b in directed),
                frozenset((index[a], index[b]) for a, b in undirected),
            )
        except KeyError as exc:
            raise UnknownNodeError(f"unknown node {exc.args[0]!r}") from None

    @property
    def n_nodes(self) -> int:
        return len(self.node_names)

    @cached_property
    def index(self) -> dict:
        return {n: i for i, n in enumerate(self.node_names)}

    def node(self, key) -> int:
        return _resolve(self.node_names, self.index, key)

    @cached_property
    def _adj(self) -> tuple:
        adj = [set() for _ in self.node_names]
        for a, b in self.directed | self.undirected:
            adj[a].add(b)
            adj[b].add(a)
        return tuple(frozenset(s) for s in adj)

    def neighbors(self, a: int) -> frozenset:
        """All nodes adjacent to ``a`` by any edge type."""
        return self._adj[a]

    def adjacent(self, a: int, b: int) -> bool:
        return b in self._adj[a]

    def skeleton(self) -> frozenset:
        return frozenset(_pair(a, b) for a, b in self.directed) | self.undirected

    def edge_state(self, a: int, b: int) -> str:
        """One of ``'->'``, ``'<-'``, ``'--'`` or ``''`` for the pair (a, b)."""
        if (a, b) in self.directed:
            return "->"
        if (b, a) in self.directed:
            return "<-"
        if _pair(a, b) in self.undirected:
            return "--"
        return ""

    def sorted_edges(self) -> tuple:
        """Canonical structural key: sorted directed then sorted undirected pairs."""
        return tuple(sorted(self.directed)), tuple(sorted(self.undirected))

    def relabel(self, perm: Sequence[int]) -> "Pdag":
        names = [None] * self.n_nodes
        for i, j in enumerate(perm):
            names[j] = self.node_names[i]
        return Pdag(
            tuple(names),
            frozenset((perm[a], perm[b]) for a, b in self.directed),
            frozenset((perm[a], perm[b]) for a, b in self.undirected),
        )

    def named_edges(self) -> tuple:
        """Edges as name triples ``(a, b, kind)``; order independent of indices."""
        n = self.node_names
        out = [(n[a], n[b], "->") for a, b in self.directed]
        out += [tuple(sorted((n[a], n[b]))) + ("--",) for a, b in self.undirected]
        return tuple(sorted(out))


@dataclass(frozen=True)
class LocalStructure:
    """Oriented neighbourhood of a target node (all members are node indices)."""

    target: int
    parents: frozenset = frozenset()
    children: frozenset = frozenset()
    undirected_neighbors: frozenset = frozenset()
    spouses: frozenset = frozenset()

    def __post_init__(self):
        sets = [frozenset(s) for s in (self.parents, self.children, self.undirected_neighbors, self.spouses)]
        for name, s in zip(("parents", "children", "undirected_neighbors", "spouses"), sets):
            object.__setattr__(self, name, s)
            if self.target in s:
                raise GraphError(f"target appears in its own {name}")
        for s1, s2 in combinations(sets, 2):
            if s1 & s2:
                raise GraphError("local structure sets must be pairwise disjoint")

    @property
    def pc(self) -> frozenset:
        return self.parents | self.children | self.undirected_neighbors

    @property
    def mb(self) -> frozenset:
        return self.pc | self.spouses


def _pair(a: int, b: int) -> tuple:
    return (a, b) if a < b else (b, a)


def _resolve(names, index, key) -> int:
    if isinstance(key, str):
        if key not in index:
            raise UnknownNodeError(f"unknown node {key!r}")
        return index[key]
    try:
        i = int(key)
    except (TypeError, ValueError):
        raise UnknownNodeError(f"unknown node {key!r}") from None
    if not 0 <= i < len(names):
        raise UnknownNodeError(f"unknown node index {key!r}")
    return i


def topological_order(g: Dag) -> list:
    """Kahn's algorithm; among available nodes the smallest index goes first.

    Raises
    ------
    CycleError
        If the edges contain a directed cycle.
    """
    p = len(g.node_names)
    indeg = [0] * p
    children = [[] for _ in range(p)]
    for a, b in g.edges:
        indeg[b] += 1
        children[a].append(b)
    heap = [i for i in range(p) if indeg[i] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, c)
    if len(order) != p:
        raise CycleError("graph contains a directed cycle")
    return order


def is_acyclic(p: int, edges: Iterable[tuple]) -> bool:
    """Cheap acyclicity check on a raw edge set over ``p`` nodes."""
    indeg = [0] * p
    children = [[] for _ in range(p)]
    for a, b in edges:
        indeg[b] += 1
        children[a].append(b)
    stack = [i for i in range(p) if indeg[i] == 0]
    seen = 0
    while stack:
        v = stack.pop()
        seen += 1
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                stack.append(c)
    return seen == p


def d_separated(g: Dag, x, y, z: Iterable = ()) -> bool:
    """Return True iff ``x`` and ``y`` are d-separated by ``z`` in ``g``.

    Reachability ("Bayes ball") over (node, direction) states, linear in the
    size of the graph.
    """
    x, y = g.node(x), g.node(y)
    zs = {g.node(v) for v in z}
    if x == y:
        raise GraphError("x and y must differ")
    if x in zs or y in zs:
        raise GraphError("x and y must not be in the conditioning set")
    return y not in _reachable(g.parents, g.children, x, zs)


def _reachable(parents, children, x: int, zs: set) -> set:
    # ancestors of the conditioning set (colliders there are open)
    anc = set()
    stack = list(zs)
    while stack:
        v = stack.pop()
        if v not in anc:
            anc.add(v)
            stack.extend(parents[v])
    # direction True: arrived from a child (moving up), False: from a parent
    visited = set()
    reach = set()
    stack = [(x, True)]
    while stack:
        v, up = stack.pop()
        if (v, up) in visited:
            continue
        visited.add((v, up))
        if v not in zs:
            reach.add(v)
        if up:
            if v not in zs:
                for p_ in parents[v]:
                    stack.append((p_, True))
                for c in children[v]:
                    stack.append((c, False))
        else:
            if v not in zs:
                for c in children[v]:
                    stack.append((c, False))
            if v in anc:
                for p_ in parents[v]:
                    stack.append((p_, True))
    return reach


def _trail_lengths(parents, children, x: int, zs: set) -> dict:
    """Length of the shortest d-connecting trail from ``x`` to each reachable node.

    Same traversal as :func:`_reachable`, breadth first.
    """
    anc = set()
    stack = list(zs)
    while stack:
        v = stack.pop()
        if v not in anc:
            anc.add(v)
            stack.extend(parents[v])
    seen = {(x, True)}
    dist = {}
    queue = deque([(x, True, 0)])
    while queue:
        v, up, d = queue.popleft()
        if v not in zs and v not in dist:
            dist[v] = d
        nxt = []
        if up:
            if v not in zs:
                nxt += [(p_, True) for p_ in parents[v]]
                nxt += [(c, False) for c in children[v]]
        else:
            if v not in zs:
                nxt += [(c, False) for c in children[v]]
            if v in anc:
                nxt += [(p_, True) for p_ in parents[v]]
        for state in nxt:
            if state not in seen:
                seen.add(state)
                queue.append((*state, d + 1))
    return dist


def true_local(g: Dag, t) -> LocalStructure:
    """Ground-truth parents, children and spouses of ``t``."""
    t = g.node(t)
    parents = frozenset(g.parents[t])
    children = frozenset(g.children[t])
    spouses = set()
    for c in children:
        spouses.update(g.parents[c])
    spouses -= {t} | parents | children
    return LocalStructure(t, parents, children, frozenset(), frozenset(spouses))


def markov_blanket(g: Dag, t) -> frozenset:
    return true_local(g, t).mb


def apply_meek_rules(p: Pdag, nonadjacent: Optional[Callable[[int, int], bool]] = None,
                     tail_ok: Optional[Callable[[int], bool]] = None) -> Pdag:
    """Close ``p`` under the four Meek orientation rules.

    Rules are evaluated in rounds against a snapshot of the graph, so the
    result does not depend on edge or node order. An edge that two rules
    would orient in opposite directions in the same round stays undirected.

    Parameters
    ----------
    nonadjacent : callable, optional
        ``nonadjacent(a, b)`` must return True only when ``a`` and ``b`` are
        known to be nonadjacent. Defaults to "not adjacent in ``p``". Local
        learners pass a stricter predicate because their graphs are partial.
    tail_ok : callable, optional
        ``tail_ok(a)`` gates rules 1, 3 and 4 when they would orient an edge
        out of ``a``. Those rules assume every collider at ``a`` is already
        oriented, which a partial graph only guarantees for fully explored
        nodes. Rule 2 (acyclicity) is never gated.
    """
    n = p.n_nodes
    directed = set(p.directed)
    undirected = set(p.undirected)
    if nonadjacent is None:
        base = p

        def nonadjacent(a, b):
            return not base.adjacent(a, b)

    while undirected:
        pa = [set() for _ in range(n)]
        ch = [set() for _ in range(n)]
        und = [set() for _ in range(n)]
        for a, b in directed:
            pa[b].add(a)
            ch[a].add(b)
        for a, b in undirected:
            und[a].add(b)
            und[b].add(a)

        def adj(a, b):
            return b in pa[a] or b in ch[a] or b in und[a]

        proposals = set()
        for a, b in undirected:
            for u, v in ((a, b), (b, a)):
                if _meek_fires(u, v, pa, ch, und, adj, nonadjacent, tail_ok):
                    proposals.add((u, v))
        if not proposals:
            break
        changed = False
        for u, v in proposals:
            if (v, u) in proposals:
                continue
            undirected.discard(_pair(u, v))
            directed.add((u, v))
            changed = True
        if not changed:
            break
    return Pdag(p.node_names, frozenset(directed), frozenset(undirected))


def _meek_fires(a, b, pa, ch, und, adj, nonadjacent, tail_ok=None) -> bool:
    # R2: a -> c -> b
    if ch[a] & pa[b]:
        return True
    if tail_ok is not None and not tail_ok(a):
        return False
    # R1: c -> a - b, c and b nonadjacent
    for c in pa[a]:
        if c != b and nonadjacent(c, b):
            return True
    # R3: a - c -> b, a - d -> b, c and d nonadjacent
    cands = sorted(und[a] & pa[b])
    for c, d in combinations(cands, 2):
        if nonadjacent(c, d):
            return True
    # R4: a - c -> d -> b, c and b nonadjacent, a adjacent to d
    for c in und[a]:
        for d in ch[c]:
            if d in pa[b] and adj(a, d) and c != b and nonadjacent(c, b):
                return True
    return False


def pattern(g: Dag) -> Pdag:
    """Skeleton of ``g`` with only its v-structures oriented."""
    directed = set()
    for a, c, b in g.v_structures():
        directed.add((a, c))
        directed.add((b, c))
    undirected = {_pair(a, b) for a, b in g.edges if (a, b) not in directed}
    return Pdag(g.node_names, frozenset(directed), frozenset(undirected))


def dag_to_cpdag(g: Dag) -> Pdag:
    """Completed PDAG of the Markov equivalence class of ``g``."""
    return apply_meek_rules(pattern(g))


def pdag_to_dag(p: Pdag) -> Dag:
    """A consistent DAG extension of ``p`` (Dor and Tarsi).

    Raises
    ------
    GraphError
        If ``p`` admits no consistent extension.
    """
    n = p.n_nodes
    pa = [set() for _ in range(n)]
    ch = [set() for _ in range(n)]
    und = [set() for _ in range(n)]
    for a, b in p.directed:
        pa[b].add(a)
        ch[a].add(b)
    for a, b in p.undirected:
        und[a].add(b)
        und[b].add(a)
    remaining = set(range(n))
    edges = set(p.directed)
    while remaining:
        chosen = None
        for x in sorted(remaining):
            if ch[x]:
                continue
            nbrs = und[x]
            adj_x = nbrs | pa[x]
            ok = True
            for y in nbrs:
                others = adj_x - {y}
                adj_y = und[y] | pa[y] | ch[y]
                if not others <= adj_y:
                    ok = False
                    break
            if ok:
                chosen = x
                break
        if chosen is None:
            raise GraphError("PDAG admits no consistent DAG extension")
        x = chosen
        for y in und[x]:
            edges.add((y, x))
            und[y].discard(x)
        for y in pa[x]:
            ch[y].discard(x)
        remaining.discard(x)
        und[x] = set()
        pa[x] = set()
    return Dag(p.node_names, frozenset(edges))


def is_consistent_extension(p: Pdag, g: Dag) -> bool:
    """True if ``g`` has ``p``'s skeleton, its directed edges and v-structures."""
    if g.skeleton() != p.skeleton() or not p.directed <= g.edges:
        return False
    return pattern(g).directed == {e for a, c, b in _pdag_v_structures(p) for e in ((a, c), (b, c))}


def _pdag_v_structures(p: Pdag) -> set:
    pa = [set() for _ in range(p.n_nodes)]
    for a, b in p.directed:
        pa[b].add(a)
    out = set()
    for c in range(p.n_nodes):
        for a, b in combinations(sorted(pa[c]), 2):
            if not p.adjacent(a, b):
                out.add((a, c, b))
    return out


def equivalent(g1: Dag, g2: Dag) -> bool:
    """Markov equivalence: same skeleton and same v-structures."""
    return g1.skeleton() == g2.skeleton() and g1.v_structures() == g2.v_structures()


# -- graph text format -------------------------------------------------------


def write_graph(g) -> str:
    """Serialize a Dag or Pdag in the line-oriented graph text format."""
    names = g.node_names
    lines = [str(len(names)), " ".join(names)]
    if isinstance(g, Dag):
        directed, undirected = sorted(g.edges), []
    else:
        directed, undirected = sorted(g.directed), sorted(g.undirected)
    lines += [f"{names[a]} {names[b]} ->" for a, b in directed]
    lines += [f"{names[a]} {names[b]} --" for a, b in undirected]
    return "\n".join(lines) + "\n"


def read_graph(text: str) -> Pdag:
    """Parse the graph text format into a Pdag."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if len(lines) < 1:
        raise GraphError("line 1: missing node count")
    try:
        n = int(lines[0])
    except ValueError:
        raise GraphError(f"line 1: expected node count, got {lines[0]!r}") from None
    names = lines[1].split() if n > 0 else []
    if n > 0 and len(lines) < 2:
        raise GraphError("line 2: missing node names")
    if len(names) != n:
        raise GraphError(f"line 2: expected {n} node names, got {len(names)}")
    index = {nm: i for i, nm in enumerate(names)}
    directed, undirected = set(), set()
    for lineno, ln in enumerate(lines[2 if n > 0 else 1:], start=3 if n > 0 else 2):
        parts = ln.split()
        if len(parts) != 3 or parts[2] not in ("->", "--"):
            raise GraphError(f"line {lineno}: expected 'parent child ->|--', got {ln!r}")
        a, b, kind = parts
        if a not in index or b not in index:
            raise GraphError(f"line {lineno}: unknown node in {ln!r}")
        (directed if kind == "->" else undirected).add((index[a], index[b]))
    return Pdag(tuple(names), frozenset(directed), frozenset(undirected))


def pdag_as_dag(p: Pdag) -> Optional[Dag]:
    """Return ``p`` as a Dag when it has no undirected edges, else None."""
    if p.undirected:
        return None
    return Dag(p.node_names, p.directed)
