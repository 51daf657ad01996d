"""Markov-blanket learners.

Two families share the :class:`~causalkit.pcsets.Search` plumbing:

* grow-shrink: GS, IAMB, interIAMB, IAMBnPC, interIAMBnPC, Fast-IAMB, FBED;
* topology: MMMB, HITON-MB, PCMB, IPCMB, MBOR, STMB, BAMB, EEMB, which find
  parents and children first and spouses afterwards (or alongside).

Ties between equally associated candidates break by ascending node index.
"""

from __future__ import annotations

import time
from itertools import combinations
from dataclasses import dataclass, field
from typing import Optional

from .ci import CISource
from .pcsets import (
    Search,
    _node,
    find_spouses,
    get_pcd,
    hiton_pc_bar,
    mb_to_pc,
    mmpc_bar,
    recognize_pc,
    symmetric_pc,
)

GROW_SHRINK = ("GS", "IAMB", "interIAMB", "IAMBnPC", "interIAMBnPC", "Fast-IAMB", "FBED")
TOPOLOGY = ("MMMB", "HITON-MB", "PCMB", "IPCMB", "MBOR", "STMB", "BAMB", "EEMB")
MB_ALGORITHMS = GROW_SHRINK + TOPOLOGY
DEFAULT_FBED_K = 1


class UnknownAlgorithmError(ValueError):
    """Algorithm name not offered by this toolkit."""


def canonical_name(name: str, choices) -> str:
    """Case-insensitive lookup returning the canonical spelling."""
    table = {c.lower(): c for c in choices}
    try:
        return table[str(name).lower()]
    except KeyError:
        raise UnknownAlgorithmError(f"unknown algorithm {name!r}; expected one of: {', '.join(choices)}") from None


@dataclass(frozen=True)
class MbResult:
    """Markov blanket of ``target`` (node indices).

    ``pc`` holds the parents-and-children estimate when the algorithm
    separates it from the spouses, else the empty set.
    """

    target: int
    mb: frozenset
    pc: frozenset
    algorithm: str
    n_ci_tests: int
    elapsed: float
    node_names: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if self.target in self.mb:
            raise ValueError("target cannot belong to its own Markov blanket")
        if not self.pc <= self.mb:
            raise ValueError("pc must be a subset of mb")

    def names(self, which: str = "mb") -> list:
        return [self.node_names[i] for i in sorted(getattr(self, which))]


# -- grow-shrink family --------------------------------------------------------


def _best(s: Search, t: int, cands, z) -> int:
    return s.ranked(t, cands, z)[0]


def _grow_iamb(s: Search, t: int, pool=None) -> list:
    pool = s.others(t) if pool is None else sorted(pool)
    mb = []
    while True:
        cands = [x for x in pool if x not in mb]
        if not cands:
            return mb
        x = _best(s, t, cands, mb)
        if s.indep(t, x, mb):
            return mb
        mb.append(x)


def _gs(s: Search, t: int) -> list:
    mb = []
    changed = True
    while changed:
        changed = False
        for x in s.others(t):
            if x not in mb and not s.indep(t, x, mb):
                mb.append(x)
                changed = True
    return s.shrink(t, mb)


def _iamb(s: Search, t: int) -> list:
    return s.shrink(t, _grow_iamb(s, t))


def _inter_iamb(s: Search, t: int, pool=None) -> list:
    pool = s.others(t) if pool is None else sorted(pool)
    mb = []
    seen = set()
    while True:
        cands = [x for x in pool if x not in mb]
        if not cands:
            break
        x = _best(s, t, cands, mb)
        if s.indep(t, x, mb):
            break
        mb = s.shrink(t, mb + [x])
        state = frozenset(mb)
        if state in seen:
            # data-mode oscillation guard; cannot happen under an oracle
            break
        seen.add(state)
    return s.shrink(t, mb)


def _prune_pc_style(s: Search, t: int, cand: list) -> tuple:
    """Level-wise subset removal; returns (survivors, removed)."""
    keep = sorted(cand)
    removed = []
    k = 0
    while k <= len(keep) - 1 and (s.cap is None or k <= s.cap):
        for x in list(keep):
            rest = [m for m in keep if m != x]
            for z in combinations(rest, k):
                if s.indep(t, x, z):
                    s.record(t, x, z)
                    keep.remove(x)
                    removed.append(x)
                    break
        k += 1
    return keep, removed


def _n_pc(s: Search, t: int, grown: list) -> tuple:
    """PC-style reduction of a grown set, then spouse recovery among removed members."""
    pc, removed = _prune_pc_style(s, t, grown)
    spouses = []
    for x in sorted(removed):
        z = s.sepset(t, x)
        if any(y not in z and not s.indep(t, x, tuple(z) + (y,)) for y in pc):
            spouses.append(x)
    mb = s.shrink(t, sorted(pc + spouses))
    return mb, [x for x in pc if x in mb]


def _iamb_npc(s: Search, t: int) -> tuple:
    return _n_pc(s, t, _grow_iamb(s, t))


def _inter_iamb_npc(s: Search, t: int) -> tuple:
    return _n_pc(s, t, _inter_iamb(s, t))


def _fast_iamb(s: Search, t: int) -> list:
    mb = []
    seen = set()
    while True:
        cands = [x for x in s.others(t) if x not in mb and not s.indep(t, x, mb)]
        if not cands:
            break
        added = False
        for x in s.ranked(t, cands, mb):
            if added and not s.ci.test(t, x, mb).reliable:
                break
            mb.append(x)
            added = True
        mb = s.shrink(t, mb)
        state = frozenset(mb)
        if state in seen:
            break
        seen.add(state)
    return mb


def _fbed(s: Search, t: int, k: int = DEFAULT_FBED_K, pool=None) -> list:
    pool = s.others(t) if pool is None else sorted(pool)
    sel = []
    for run in range(k + 1):
        remaining = [x for x in pool if x not in sel]
        added = False
        while remaining:
            remaining = [x for x in remaining if not s.indep(t, x, sel)]
            if not remaining:
                break
            x = _best(s, t, remaining, sel)
            sel.append(x)
            remaining.remove(x)
            added = True
        if not added:
            break
    return s.shrink(t, sel)


# -- topology family -----------------------------------------------------------


def _pc_then_spouses(s: Search, t: int, routine) -> tuple:
    pc = symmetric_pc(s, t, routine)
    sp = find_spouses(s, t, pc, lambda y: symmetric_pc(s, y, routine))
    spouses = set().union(*sp.values()) if sp else set()
    return sorted(set(pc) | spouses), pc


def _collider_partners(s: Search, t: int, x: int, others) -> set:
    """Variables ``y`` separated from ``t`` whose dependence reappears given ``x``."""
    out = set()
    for y in others:
        z = s.sepset(t, y)
        if z is None or x in z:
            continue
        if not s.indep(t, y, tuple(z) + (x,)):
            out.add(y)
    return out


def _mbor(s: Search, t: int) -> tuple:
    # phase 1: supersets from low-order tests
    pcs = []
    for x in s.others(t):
        if s.indep(t, x, ()):
            s.record(t, x, ())
        else:
            pcs.append(x)
    for x in list(pcs):
        for y in pcs:
            if y != x and s.indep(t, x, (y,)):
                s.record(t, x, (y,))
                pcs.remove(x)
                break
    rest = [v for v in s.others(t) if v not in pcs]
    sps = set()
    for x in pcs:
        sps |= _collider_partners(s, t, x, rest)
    # phase 2: blanket inside the supersets, then PC from it
    mb0 = _inter_iamb(s, t, pool=sorted(set(pcs) | sps))
    pc = mb_to_pc(s, t, mb0)
    for y in s.others(t):
        if y not in mb0 and s.sepset(t, y) is None:
            s.record(t, y, mb0)
    # phase 3: OR rule for superset members the filter dropped
    cache = {}

    def pc_of(v):
        if v not in cache:
            cache[v] = mb_to_pc(s, v, _inter_iamb(s, v))
        return cache[v]

    for x in sorted(set(pcs) - set(pc)):
        if x in mb0 and t in pc_of(x):
            pc.append(x)
    pc = sorted(set(pc))
    # phase 4: spouses through the children found
    sp = find_spouses(s, t, pc, pc_of)
    spouses = set().union(*sp.values()) if sp else set()
    return sorted(set(pc) | spouses), pc


def _stmb(s: Search, t: int) -> tuple:
    pcs = recognize_pc(s, t)
    rest = [v for v in s.others(t) if v not in pcs]
    cand = set(pcs)
    for x in pcs:
        cand |= _collider_partners(s, t, x, rest)
    mb = s.shrink(t, sorted(cand))
    return mb, [x for x in pcs if x in mb]


def _bamb(s: Search, t: int) -> tuple:
    order = []
    for x in s.others(t):
        if s.indep(t, x, ()):
            s.record(t, x, ())
        else:
            order.append(x)
    order = s.ranked(t, order)
    nonpc = [v for v in s.others(t) if v not in order]
    cpc = []
    sp = {}
    for x in order:
        cpc.append(x)
        dropped = []
        if s.find_sep(t, x, [m for m in cpc if m != x]) is not None:
            dropped.append(x)
        else:
            for m in list(cpc):
                if m != x and s.find_sep(t, m, [w for w in cpc if w != m], must=x) is not None:
                    dropped.append(m)
        for m in dropped:
            cpc.remove(m)
            sp.pop(m, None)
            nonpc.append(m)
            for w in cpc:
                if w != x:
                    sp.setdefault(w, set()).update(_collider_partners(s, t, w, [m]))
        if x in cpc:
            sp.setdefault(x, set()).update(_collider_partners(s, t, x, nonpc))
        for w in cpc:
            sp[w] = _trim_spouses(s, t, w, sp.get(w, set()))
    cand = set(cpc).union(*sp.values()) if sp else set(cpc)
    mb = s.shrink(t, sorted(cand))
    return mb, [x for x in cpc if x in mb]


def _trim_spouses(s: Search, t: int, x: int, cands: set) -> set:
    """Drop candidates separated given ``x`` and the other candidates.

    ``x`` is always conditioned on, so a true spouse through child ``x``
    stays dependent and is never dropped.
    """
    keep = set(cands)
    for y in sorted(cands):
        z = tuple(sorted((keep - {y}) | {x}))
        if s.indep(t, y, z):
            keep.discard(y)
    return keep


def _eemb(s: Search, t: int) -> tuple:
    # PC pass: admit marginal dependents, then remove false positives together
    cpc = []
    for x in s.others(t):
        if s.indep(t, x, ()):
            s.record(t, x, ())
        else:
            cpc.append(x)
    cpc, _ = _prune_pc_style(s, t, s.ranked(t, cpc))
    rest = [v for v in s.others(t) if v not in cpc]
    # spouse pass: collider activation per PC member, then removal
    cand = set(cpc)
    for x in cpc:
        cand |= _trim_spouses(s, t, x, _collider_partners(s, t, x, rest))
    mb = s.shrink(t, sorted(cand))
    return mb, [x for x in cpc if x in mb]


_ROUTINES = {"MMMB": mmpc_bar, "HITON-MB": hiton_pc_bar, "PCMB": get_pcd, "IPCMB": recognize_pc}


def _run(s: Search, t: int, algorithm: str, k: int) -> tuple:
    if algorithm == "GS":
        return _gs(s, t), None
    if algorithm == "IAMB":
        return _iamb(s, t), None
    if algorithm == "interIAMB":
        return _inter_iamb(s, t), None
    if algorithm == "IAMBnPC":
        return _iamb_npc(s, t)
    if algorithm == "interIAMBnPC":
        return _inter_iamb_npc(s, t)
    if algorithm == "Fast-IAMB":
        return _fast_iamb(s, t), None
    if algorithm == "FBED":
        return _fbed(s, t, k), None
    if algorithm in _ROUTINES:
        return _pc_then_spouses(s, t, _ROUTINES[algorithm])
    if algorithm == "MBOR":
        return _mbor(s, t)
    if algorithm == "STMB":
        return _stmb(s, t)
    if algorithm == "BAMB":
        return _bamb(s, t)
    return _eemb(s, t)


def _learn(ci: CISource, target, algorithm: str, alpha, k: int, search: Optional[Search], choices) -> MbResult:
    algorithm = canonical_name(algorithm, choices)
    if k < 0:
        raise ValueError("FBED repeat count k must be nonnegative")
    ci = ci.with_alpha(alpha)
    t = _node(ci, target)
    s = search or Search(ci)
    before = ci.counter.total_tests
    t0 = time.perf_counter()
    mb, pc = _run(s, t, algorithm, k)
    elapsed = time.perf_counter() - t0
    return MbResult(
        target=t,
        mb=frozenset(mb),
        pc=frozenset(pc or ()),
        algorithm=algorithm,
        n_ci_tests=ci.counter.total_tests - before,
        elapsed=elapsed,
        node_names=ci.names,
    )


def learn_mb(ci: CISource, target, algorithm: str = "IAMB", alpha: Optional[float] = None,
             k: int = DEFAULT_FBED_K, search: Optional[Search] = None) -> MbResult:
    """Learn the Markov blanket of ``target`` with one of the 15 algorithms.

    Parameters
    ----------
    ci : CISource
        :class:`~causalkit.ci.DataCI` or :class:`~causalkit.ci.OracleCI`.
    target : int or str
        Column index or name.
    algorithm : str
        Case-insensitive name from :data:`MB_ALGORITHMS`.
    alpha : float, optional
        Overrides the source's significance level.
    k : int
        Extra forward runs for FBED (ignored elsewhere).
    search : Search, optional
        Reuse separating sets and PC memos across calls on the same source.
    """
    return _learn(ci, target, algorithm, alpha, k, search, MB_ALGORITHMS)


def grow_shrink_mb(ci: CISource, target, variant: str = "IAMB", alpha: Optional[float] = None,
                   k: int = DEFAULT_FBED_K) -> MbResult:
    return _learn(ci, target, variant, alpha, k, None, GROW_SHRINK)


def topology_mb(ci: CISource, target, variant: str = "MMMB", alpha: Optional[float] = None) -> MbResult:
    return _learn(ci, target, variant, alpha, DEFAULT_FBED_K, None, TOPOLOGY)


def spouses_of(ci: CISource, target, pc, alpha: Optional[float] = None, pc_variant: str = "MMPC") -> frozenset:
    """Spouses of ``target`` given its PC set, using ``pc_variant`` for PC(Y)."""
    ci = ci.with_alpha(alpha)
    s = Search(ci)
    t = _node(ci, target)
    routine = {"mmpc": mmpc_bar, "hiton-pc": hiton_pc_bar, "getpc": get_pcd}[pc_variant.lower()]
    pc = [_node(ci, v) for v in pc]
    sp = find_spouses(s, t, pc, lambda y: symmetric_pc(s, y, routine))
    return frozenset().union(*sp.values()) if sp else frozenset()
