"""Global structure learners.

Constraint-based: PC, PC-stable. Blanket/PC composition: GSBN, F2SL-c.
Score-based and hybrid: GES, MMHC, F2SL-s.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

from .ci import CISource, OracleCI, make_ci
from .dataset import Dataset
from .graph import Dag, GraphError, Pdag, apply_meek_rules, dag_to_cpdag, pdag_to_dag
from .mb import _fbed, _gs, canonical_name
from .pcsets import Search, mb_to_pc, mmpc_bar, symmetric_pc
from .scores import DEFAULT_ESS, ScoreCache

log = logging.getLogger(__name__)

GLOBAL_ALGORITHMS = ("PC", "GES", "GSBN", "MMHC", "PC-stable", "F2SL-c", "F2SL-s")
SCORE_BASED = ("GES", "MMHC", "F2SL-s")


class OracleModeError(ValueError):
    """Score-based learners need data; an oracle cannot score graphs."""


@dataclass(frozen=True)
class StructureResult:
    """Learned graph with run accounting.

    ``graph`` is always a Pdag (the equivalence class for score-based runs);
    ``dag`` holds the member DAG a score-based search ended in.
    """

    graph: Pdag
    algorithm: str
    n_ci_tests: int
    n_score_evals: int
    elapsed: float
    dag: Optional[Dag] = None
    params: dict = field(default_factory=dict, compare=False)


# -- constraint-based pieces --------------------------------------------------


def _edge(a: int, b: int) -> tuple:
    return (a, b) if a < b else (b, a)


def pc_skeleton(ci: CISource, stable: bool = True, alpha: Optional[float] = None, max_cond="default") -> tuple:
    """Skeleton search from the complete graph by increasing conditioning size.

    The stable variant freezes every adjacency set for the whole of a level
    and records every separating subset of that level, which makes the
    output independent of the variable order. The plain variant keeps the
    first separating set found and updates adjacencies immediately.

    Returns
    -------
    (set of (a, b) pairs with a < b, dict)
        Edges and separating sets: ``frozenset({a, b})`` -> list of tuples.
    """
    ci = ci.with_alpha(alpha)
    cap = ci.max_cond if max_cond == "default" else max_cond
    p = ci.n_vars
    adj = [set(range(p)) - {v} for v in range(p)]
    sepsets = {}
    level = 0
    while cap is None or level <= cap:
        if not any(len(adj[v]) - 1 >= level for v in range(p)):
            break
        frozen = [frozenset(a) for a in adj]
        removed = []
        for x in range(p):
            for y in sorted(frozen[x] if stable else adj[x]):
                if y <= x or (not stable and y not in adj[x]):
                    continue
                found = []
                for a, b in ((x, y), (y, x)):
                    pool = sorted((frozen[a] if stable else adj[a]) - {b})
                    if len(pool) < level:
                        continue
                    for z in combinations(pool, level):
                        if ci.independent(x, y, z):
                            found.append(z)
                            if not stable:
                                break
                    if found and not stable:
                        break
                if found:
                    sepsets[frozenset((x, y))] = sorted(set(found))
                    if stable:
                        removed.append((x, y))
                    else:
                        adj[x].discard(y)
                        adj[y].discard(x)
        for x, y in removed:
            adj[x].discard(y)
            adj[y].discard(x)
        level += 1
    edges = {(a, b) for a in range(p) for b in adj[a] if a < b}
    return edges, sepsets


def orient_colliders(names, skeleton, sepsets: dict) -> Pdag:
    """Orient unshielded colliders, then close under the Meek rules.

    ``sepsets`` maps ``frozenset({x, y})`` to one separating tuple or a list
    of them. ``x - z - y`` becomes ``x -> z <- y`` when ``z`` lies in none of
    the recorded sets. If ``z`` lies in some but not all of them the triple
    is ambiguous and left alone. An edge that two triples would orient in
    opposite directions stays undirected. If the result has no consistent
    DAG extension, the CPDAG of a relaxed extension is returned instead.
    """
    p = len(names)
    edges = {_edge(a, b) for a, b in skeleton}
    nbrs = [set() for _ in range(p)]
    for a, b in edges:
        nbrs[a].add(b)
        nbrs[b].add(a)
    triples = []
    for z in range(p):
        for x, y in combinations(sorted(nbrs[z]), 2):
            if y in nbrs[x]:
                continue
            seps = sepsets.get(frozenset((x, y)))
            if seps is None:
                continue
            if seps and not isinstance(seps[0], (tuple, list, frozenset, set)):
                seps = [tuple(seps)]
            seps = list(seps) or [()]
            if all(z not in s for s in seps):
                triples.append((x, z, y))
            elif any(z not in s for s in seps):
                log.debug("ambiguous triple %s - %s - %s left unoriented", names[x], names[z], names[y])
    arrows = {a for x, z, y in triples for a in ((x, z), (y, z))}
    usable = set()
    for a, b in arrows:
        if (b, a) in arrows:
            log.debug("conflicting orientations on %s - %s; edge left undirected", names[a], names[b])
        else:
            usable.add((a, b))
    undirected = edges - {_edge(a, b) for a, b in usable}
    out = apply_meek_rules(Pdag(tuple(names), frozenset(usable), frozenset(undirected)))
    try:
        pdag_to_dag(out)
    except GraphError:
        # finite-sample errors (an unoriented chordless cycle, clashing
        # colliders) can leave no consistent DAG; fall back to the class of
        # a DAG found by relaxed sink elimination
        log.debug("oriented graph has no consistent extension; using relaxed extension")
        out = dag_to_cpdag(_relaxed_extension(out))
    return out


def _relaxed_extension(p: Pdag) -> Dag:
    """Sink elimination that always succeeds.

    Nodes are visited in name order so the result does not depend on column
    order. A sink meeting the usual extension condition is preferred, then
    any sink, then any node. Every edge still attached to the chosen node is
    pointed into it.
    """
    names = p.node_names
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
    remaining = sorted(range(n), key=lambda v: names[v])
    edges = set()

    def clean(x):
        adj = und[x] | pa[x]
        return all(adj - {y} <= (und[y] | pa[y] | ch[y]) for y in und[x])

    while remaining:
        sinks = [x for x in remaining if not ch[x]]
        pick = next((x for x in sinks if clean(x)), sinks[0] if sinks else remaining[0])
        for y in und[pick] | pa[pick] | ch[pick]:
            edges.add((y, pick))
            und[y].discard(pick)
            ch[y].discard(pick)
            pa[y].discard(pick)
        und[pick], pa[pick], ch[pick] = set(), set(), set()
        remaining.remove(pick)
    return Dag(names, frozenset(edges))


def _and_skeleton(s: Search, blankets: dict, pcs: Optional[dict] = None) -> tuple:
    """Edges by the AND rule plus separating sets for every nonadjacent pair.

    With ``pcs`` given, an edge needs each end in the other's PC set;
    otherwise each end must be in the other's blanket and no subset of the
    smaller blanket may separate them.
    """
    p = s.n_vars
    edges = set()
    sepsets = {}
    for x in range(p):
        for y in range(x + 1, p):
            if pcs is not None:
                if y in pcs[x] and x in pcs[y]:
                    edges.add((x, y))
                    continue
                z = s.sepset(x, y)
                if z is None:
                    z = tuple(sorted(blankets[x] - {y}))
                sepsets[frozenset((x, y))] = [tuple(z)]
                continue
            if y not in blankets[x] or x not in blankets[y]:
                z = blankets[x] if y not in blankets[x] else blankets[y]
                sepsets[frozenset((x, y))] = [tuple(sorted(z))]
                continue
            bx, by = blankets[x] - {y}, blankets[y] - {x}
            pool = bx if (len(bx), sorted(bx)) <= (len(by), sorted(by)) else by
            z = s.find_sep(x, y, pool)
            if z is None:
                edges.add((x, y))
            else:
                sepsets[frozenset((x, y))] = [z]
    return edges, sepsets


def _gsbn(s: Search) -> tuple:
    blankets = {v: set(_gs(s, v)) for v in range(s.n_vars)}
    return _and_skeleton(s, blankets)


def _f2sl_skeleton(s: Search, k: int) -> tuple:
    blankets = {v: set(_fbed(s, v, k)) for v in range(s.n_vars)}
    pcs = {v: set(mb_to_pc(s, v, blankets[v])) for v in range(s.n_vars)}
    return _and_skeleton(s, blankets, pcs)


def _mmpc_skeleton(s: Search) -> set:
    pcs = {v: set(symmetric_pc(s, v, mmpc_bar)) for v in range(s.n_vars)}
    return {(x, y) for x in range(s.n_vars) for y in pcs[x] if x < y and x in pcs[y]}


# -- score-based pieces ---------------------------------------------------------


def _tol(score: float) -> float:
    # floating-point noise level of a summed score
    return 1e-10 * (1.0 + abs(score))


def _improves(delta: float, score: float) -> bool:
    # ignore noise-level gains (e.g. reversing a covered edge)
    return delta > _tol(score)


def _better(delta: float, best: Optional[float], score: float) -> bool:
    # moves within noise of the incumbent are ties, which the earlier move wins
    return best is None or delta > best + _tol(score)


def _has_path(children, src: int, dst: int, skip: Optional[tuple] = None) -> bool:
    stack = [src]
    seen = {src}
    while stack:
        v = stack.pop()
        for c in children[v]:
            if skip is not None and (v, c) == skip:
                continue
            if c == dst:
                return True
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return False


def hill_climb_restricted(data: Dataset, skeleton, score_kind: str = "bdeu", ess: float = DEFAULT_ESS,
                          cache: Optional[ScoreCache] = None, trace=None) -> Dag:
    """Greedy add/delete/reverse search from the empty graph.

    Additions are limited to ``skeleton`` pairs. Each step applies the best
    strictly improving move; ties go to the first move in the order
    (pair, then add < delete < reverse). ``trace``, if a list, receives
    every intermediate Dag.
    """
    cache = cache or ScoreCache(data, score_kind, ess)
    p = data.n_columns
    allowed = sorted({_edge(a, b) for a, b in skeleton})
    parents = [set() for _ in range(p)]
    children = [set() for _ in range(p)]
    local = [cache.local(v, ()) for v in range(p)]
    total = math.fsum(local)

    def fam(v, pa):
        return cache.local(v, tuple(sorted(pa)))

    while True:
        best = None
        for a, b in allowed:
            for kind in ("add", "delete", "reverse"):
                for u, v in ((a, b), (b, a)):
                    if kind == "add":
                        if u in parents[v] or v in parents[u] or _has_path(children, v, u):
                            continue
                        delta = fam(v, parents[v] | {u}) - local[v]
                    elif kind == "delete":
                        if u not in parents[v]:
                            continue
                        delta = fam(v, parents[v] - {u}) - local[v]
                    else:
                        if u not in parents[v] or _has_path(children, u, v, skip=(u, v)):
                            continue
                        delta = (fam(v, parents[v] - {u}) - local[v]) + (fam(u, parents[u] | {v}) - local[u])
                    if _improves(delta, total) and _better(delta, best and best[0], total):
                        best = (delta, kind, u, v)
        if best is None:
            break
        _, kind, u, v = best
        if kind in ("delete", "reverse"):
            parents[v].discard(u)
            children[u].discard(v)
            local[v] = fam(v, parents[v])
        if kind in ("add", "reverse"):
            x, y = (u, v) if kind == "add" else (v, u)
            parents[y].add(x)
            children[x].add(y)
            local[y] = fam(y, parents[y])
        total = math.fsum(local)
        if trace is not None:
            trace.append(_dag(data, parents))
    return _dag(data, parents)


def _dag(data: Dataset, parents) -> Dag:
    return Dag(data.column_names, frozenset((u, v) for v in range(len(parents)) for u in parents[v]))


@dataclass(frozen=True)
class GesOperator:
    """``insert(x, y, T)`` or ``delete(x, y, H)`` with its score change."""

    kind: str
    x: int
    y: int
    subset: tuple
    valid: bool
    delta: float


def _pdag_sets(state: Pdag) -> tuple:
    n = state.n_nodes
    pa = [set() for _ in range(n)]
    ch = [set() for _ in range(n)]
    und = [set() for _ in range(n)]
    for a, b in state.directed:
        pa[b].add(a)
        ch[a].add(b)
    for a, b in state.undirected:
        und[a].add(b)
        und[b].add(a)
    return pa, ch, und


def _is_clique(nodes, state: Pdag) -> bool:
    return all(state.adjacent(a, b) for a, b in combinations(sorted(nodes), 2))


def _semi_directed_blocked(y: int, x: int, ch, und, block: set) -> bool:
    """True if every semi-directed path from ``y`` to ``x`` meets ``block``."""
    stack = [y]
    seen = {y}
    while stack:
        v = stack.pop()
        for w in ch[v] | und[v]:
            if w == x:
                return False
            if w not in seen and w not in block:
                seen.add(w)
                stack.append(w)
    return True


def _subsets_by_mask(items: list):
    for mask in range(1 << len(items)):
        yield mask, tuple(items[i] for i in range(len(items)) if mask >> i & 1)


def ges_operators(state: Pdag, cache: ScoreCache, phase: str = "both") -> list:
    """Insert and delete operators of greedy equivalence search at ``state``.

    Ordered by (kind, x, y, subset bitmask over the sorted candidate set).
    Each operator carries its validity and its local-score change.
    """
    pa, ch, und = _pdag_sets(state)
    n = state.n_nodes
    out = []
    if phase in ("both", "forward"):
        for x in range(n):
            for y in range(n):
                if x == y or state.adjacent(x, y):
                    continue
                na = {t for t in und[y] if state.adjacent(t, x)}
                t0 = sorted(t for t in und[y] if not state.adjacent(t, x))
                for _, t in _subsets_by_mask(t0):
                    cond = na | set(t)
                    valid = _is_clique(cond, state) and _semi_directed_blocked(y, x, ch, und, cond)
                    base = cond | pa[y]
                    delta = cache.local(y, base | {x}) - cache.local(y, base) if valid else float("nan")
                    out.append(GesOperator("insert", x, y, t, valid, delta))
    if phase in ("both", "backward"):
        for x in range(n):
            for y in range(n):
                if not (x in pa[y] or x in und[y]):
                    continue
                na = sorted(t for t in und[y] if state.adjacent(t, x))
                for _, h in _subsets_by_mask(na):
                    rest = set(na) - set(h)
                    valid = _is_clique(rest, state)
                    base = (rest | pa[y]) - {x}
                    delta = cache.local(y, base) - cache.local(y, base | {x}) if valid else float("nan")
                    out.append(GesOperator("delete", x, y, h, valid, delta))
    return out


def _apply(state: Pdag, op: GesOperator) -> Pdag:
    directed = set(state.directed)
    undirected = set(state.undirected)
    x, y = op.x, op.y
    if op.kind == "insert":
        directed.add((x, y))
        for t in op.subset:
            undirected.discard(_edge(t, y))
            directed.add((t, y))
    else:
        directed.discard((x, y))
        undirected.discard(_edge(x, y))
        for h in op.subset:
            undirected.discard(_edge(y, h))
            directed.add((y, h))
            if _edge(x, h) in undirected:
                undirected.discard(_edge(x, h))
                directed.add((x, h))
    dag = pdag_to_dag(Pdag(state.node_names, frozenset(directed), frozenset(undirected)))
    return dag_to_cpdag(dag)


def ges(data: Dataset, score_kind: str = "bdeu", ess: float = DEFAULT_ESS,
        cache: Optional[ScoreCache] = None, trace=None) -> tuple:
    """Two-phase greedy equivalence search from the empty graph.

    Returns the final CPDAG and a member DAG. ``trace``, if a list, receives
    ``(phase, score)`` after every applied operator.
    """
    cache = cache or ScoreCache(data, score_kind, ess)
    state = Pdag(data.column_names)
    score = cache.score_dag(pdag_to_dag(state))
    for phase in ("forward", "backward"):
        while True:
            best = None
            for op in ges_operators(state, cache, phase):
                if op.valid and _improves(op.delta, score) and _better(op.delta, best and best.delta, score):
                    best = op
            if best is None:
                break
            state = _apply(state, best)
            score = cache.score_dag(pdag_to_dag(state))
            if trace is not None:
                trace.append((phase, score))
    return state, pdag_to_dag(state)


# -- dispatch -------------------------------------------------------------------


def learn_global(source, algorithm: str = "PC-stable", alpha: Optional[float] = None, score: str = "bdeu",
                 ess: float = DEFAULT_ESS, max_cond="default", k: int = 1, test: str = "auto") -> StructureResult:
    """Learn a whole graph.

    Parameters
    ----------
    source : Dataset, Dag or CISource
        A Dag means oracle mode (d-separation); score-based algorithms
        (GES, MMHC, F2SL-s) then raise :class:`OracleModeError`.
    algorithm : str
        Case-insensitive name from :data:`GLOBAL_ALGORITHMS`.
    alpha : float, optional
        Significance level for CI tests (default 0.05).
    score : {'bdeu', 'bic'}
    ess : float
        BDeu equivalent sample size.
    max_cond : int, None or 'default'
        Conditioning-set cap (3 for data, none for an oracle by default).
    k : int
        Extra FBED forward runs used by F2SL-c and F2SL-s.
    """
    algorithm = canonical_name(algorithm, GLOBAL_ALGORITHMS)
    if isinstance(source, CISource):
        ci = source.with_alpha(alpha)
        if max_cond != "default":
            ci = ci.fresh()
            ci.max_cond = max_cond
    else:
        ci = make_ci(source, 0.05 if alpha is None else alpha, max_cond, test)
    data = source if isinstance(source, Dataset) else getattr(ci, "data", None)
    if algorithm in SCORE_BASED and (isinstance(ci, OracleCI) or data is None):
        raise OracleModeError(f"{algorithm} is score-based and needs a dataset, not an oracle")
    params = {"alpha": ci.alpha, "max_cond": ci.max_cond}
    if algorithm in SCORE_BASED:
        params.update(score=score, ess=ess)
    names = ci.names
    before = ci.counter.total_tests
    t0 = time.perf_counter()
    s = Search(ci)
    cache = None
    dag = None
    if ci.n_vars < 2:
        graph = Pdag(names)
        if algorithm in SCORE_BASED:
            dag = Dag(names, frozenset())
    elif algorithm in ("PC", "PC-stable"):
        edges, seps = pc_skeleton(ci, stable=algorithm == "PC-stable")
        graph = orient_colliders(names, edges, seps)
    elif algorithm in ("GSBN", "F2SL-c"):
        edges, seps = _gsbn(s) if algorithm == "GSBN" else _f2sl_skeleton(s, k)
        graph = orient_colliders(names, edges, seps)
    else:
        cache = ScoreCache(data, score, ess)
        if algorithm == "GES":
            graph, dag = ges(data, score, ess, cache)
        else:
            edges = _mmpc_skeleton(s) if algorithm == "MMHC" else _f2sl_skeleton(s, k)[0]
            dag = hill_climb_restricted(data, edges, score, ess, cache)
            graph = dag_to_cpdag(dag)
    elapsed = time.perf_counter() - t0
    return StructureResult(
        graph=graph,
        algorithm=algorithm,
        n_ci_tests=ci.counter.total_tests - before,
        n_score_evals=cache.n_evals if cache is not None else 0,
        elapsed=elapsed,
        dag=dag,
        params=params,
    )
