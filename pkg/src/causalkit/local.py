"""Local causal-structure learners: PCD-by-PCD, MB-by-MB, CMB and LCS-FS.

All four share one expansion engine. Starting from the target, nodes are
visited breadth first (ascending index within a layer). Visiting ``v`` fixes
its PC set with the algorithm's own discovery routine; v-structures are then
read off at visited nodes and propagated with the Meek rules over the known
part of the graph. Expansion stops once every edge at the target is oriented
or no unvisited neighbour remains.

Orientation is kept sound on a partial graph by two restrictions: two nodes
count as nonadjacent only when a separating set for them is on record, and
the Meek rules that rely on complete collider information at a node (rules
1, 3 and 4) only orient edges out of visited nodes.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

from .ci import CISource
from .graph import LocalStructure, Pdag, apply_meek_rules
from .mb import _fbed, _iamb, _pc_then_spouses, canonical_name
from .pcsets import Search, _node, find_spouses, get_pcd, hiton_pc_bar, mb_to_pc, symmetric_pc

LOCAL_ALGORITHMS = ("PCD-by-PCD", "MB-by-MB", "CMB", "LCS-FS")


@dataclass(frozen=True)
class LocalResult:
    structure: LocalStructure
    algorithm: str
    n_ci_tests: int
    elapsed: float
    visited: tuple = ()
    node_names: tuple = ()

    def names(self, which: str) -> list:
        return [self.node_names[i] for i in sorted(getattr(self.structure, which))]


class _Expansion:
    def __init__(self, s: Search, t: int, algorithm: str, max_visited: Optional[int]):
        self.s = s
        self.t = t
        self.algorithm = algorithm
        self.max_visited = s.n_vars if max_visited is None else max_visited
        self.pcs = {}
        self.colliders = set()  # (a, c, b) with a < b: a -> c <- b
        self.visited = []

    # -- per-algorithm neighbourhood discovery --------------------------------

    def _from_mb(self, v: int, mb) -> list:
        s = self.s
        pc = mb_to_pc(s, v, mb)
        for u in s.others(v):
            if u not in mb and s.sepset(v, u) is None:
                s.record(v, u, mb)
        return pc

    def discover(self, v: int) -> list:
        s = self.s
        if self.algorithm == "PCD-by-PCD":
            return symmetric_pc(s, v, get_pcd)
        if self.algorithm == "MB-by-MB":
            return self._from_mb(v, _iamb(s, v))
        if self.algorithm == "LCS-FS":
            return self._from_mb(v, _fbed(s, v))
        # CMB: HITON-MB, with colliders at each child read from the dependence
        # that conditioning on the child creates between v and the spouse
        _, pc = _pc_then_spouses(s, v, hiton_pc_bar)
        sp = find_spouses(s, v, pc, lambda y: symmetric_pc(s, y, hiton_pc_bar))
        for child, partners in sp.items():
            for x in partners:
                self.colliders.add((min(v, x), child, max(v, x)))
        return pc

    # -- graph assembly --------------------------------------------------------

    def nonadjacent(self, a: int, b: int) -> bool:
        return self.s.sepset(a, b) is not None

    def edges(self) -> set:
        out = set()
        for v, pc in self.pcs.items():
            for u in pc:
                if u in self.pcs and v not in self.pcs[u]:
                    continue  # AND rule when both ends were visited
                out.add((min(u, v), max(u, v)))
        for a, c, b in self.colliders:
            out.add((min(a, c), max(a, c)))
            out.add((min(b, c), max(b, c)))
        return out

    def orient(self) -> Pdag:
        edges = self.edges()
        cols = set(self.colliders)
        for c in self.visited:
            nbrs = sorted(u for u in range(self.s.n_vars) if (min(u, c), max(u, c)) in edges)
            for a, b in combinations(nbrs, 2):
                if self.nonadjacent(a, b) and c not in self.s.sepset(a, b):
                    cols.add((a, c, b))
        arrows = set()
        for a, c, b in sorted(cols):
            if (min(a, c), max(a, c)) in edges and (min(b, c), max(b, c)) in edges:
                arrows.add((a, c))
                arrows.add((b, c))
        directed = {(a, b) for a, b in arrows if (b, a) not in arrows}
        undirected = {e for e in edges if e not in {(min(a, b), max(a, b)) for a, b in directed}}
        p = Pdag(self.s.ci.names, frozenset(directed), frozenset(undirected))
        visited = set(self.visited)
        return apply_meek_rules(p, nonadjacent=self.nonadjacent, tail_ok=visited.__contains__)

    def run(self) -> tuple:
        t = self.t
        queue = deque([t])
        queued = {t}
        p = None
        while queue and len(self.visited) < self.max_visited:
            v = queue.popleft()
            self.pcs[v] = list(self.discover(v))
            self.visited.append(v)
            for u in sorted(self.pcs[v]):
                if u not in queued:
                    queued.add(u)
                    queue.append(u)
            p = self.orient()
            if all(p.edge_state(t, u) in ("->", "<-") for u in self.pcs[t]):
                break
        return p


def _structure(p: Pdag, t: int, pc) -> LocalStructure:
    parents, children, und = set(), set(), set()
    for u in pc:
        state = p.edge_state(u, t)
        if state == "->":
            parents.add(u)
        elif state == "<-":
            children.add(u)
        else:
            und.add(u)
    spouses = set()
    for c in children:
        for a, b in p.directed:
            if b == c and a != t and a not in pc:
                spouses.add(a)
    return LocalStructure(t, frozenset(parents), frozenset(children), frozenset(und), frozenset(spouses))


def learn_local(ci: CISource, target, algorithm: str = "PCD-by-PCD", alpha: Optional[float] = None,
                max_visited: Optional[int] = None) -> LocalResult:
    """Learn the parents, children and unoriented neighbours of ``target``.

    Parameters
    ----------
    ci : CISource
    target : int or str
    algorithm : {'PCD-by-PCD', 'MB-by-MB', 'CMB', 'LCS-FS'}
        Case-insensitive.
    alpha : float, optional
        Overrides the source's significance level.
    max_visited : int, optional
        Cap on expanded nodes (default: all).
    """
    algorithm = canonical_name(algorithm, LOCAL_ALGORITHMS)
    ci = ci.with_alpha(alpha)
    t = _node(ci, target)
    s = Search(ci)
    before = ci.counter.total_tests
    t0 = time.perf_counter()
    run = _Expansion(s, t, algorithm, max_visited)
    p = run.run()
    structure = _structure(p, t, run.pcs[t])
    elapsed = time.perf_counter() - t0
    return LocalResult(structure, algorithm, ci.counter.total_tests - before, elapsed,
                       tuple(run.visited), ci.names)
