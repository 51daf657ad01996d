"""Parents-and-children discovery shared by the MB, local and global learners.

All routines run inside a :class:`Search`, which holds the CI source, the
conditioning-set cap, the separating sets found so far and memoized PC sets
of other nodes (needed by the symmetry correction).
"""

from __future__ import annotations

from itertools import combinations
from typing import Callable, Iterable, Optional

from .ci import CISource

PC_VARIANTS = ("MMPC", "HITON-PC", "GetPC")


class Search:
    """Per-run state shared by the subroutines of one learner invocation."""

    def __init__(self, ci: CISource, max_cond="default"):
        self.ci = ci
        self.cap = ci.max_cond if max_cond == "default" else max_cond
        self.sepsets = {}
        self.memo = {}

    @property
    def n_vars(self) -> int:
        return self.ci.n_vars

    def others(self, t: int) -> list:
        return [v for v in range(self.ci.n_vars) if v != t]

    def indep(self, x: int, y: int, z: Iterable = ()) -> bool:
        return self.ci.independent(x, y, z)

    def assoc(self, x: int, y: int, z: Iterable = ()) -> tuple:
        return self.ci.association(x, y, z)

    def record(self, x: int, y: int, z: Iterable) -> None:
        self.sepsets.setdefault(frozenset((x, y)), tuple(sorted(z)))

    def sepset(self, x: int, y: int) -> Optional[tuple]:
        return self.sepsets.get(frozenset((x, y)))

    def max_size(self, pool_size: int) -> int:
        return pool_size if self.cap is None else min(pool_size, self.cap)

    def subsets(self, pool: Iterable, must: Optional[int] = None, max_size: Optional[int] = None):
        """Subsets of ``pool`` by increasing size (capped), optionally all containing ``must``."""
        pool = sorted(set(pool) - {must})
        limit = self.max_size(len(pool) + (must is not None))
        if max_size is not None:
            limit = min(limit, max_size)
        if must is None:
            for k in range(limit + 1):
                yield from combinations(pool, k)
        else:
            for k in range(1, limit + 1):
                for rest in combinations(pool, k - 1):
                    yield tuple(sorted(rest + (must,)))

    def find_sep(self, x: int, y: int, pool: Iterable, must: Optional[int] = None) -> Optional[tuple]:
        """First subset of ``pool`` that separates ``x`` and ``y`` (recorded), else None."""
        for z in self.subsets(pool, must):
            if self.indep(x, y, z):
                self.record(x, y, z)
                return z
        return None

    def ranked(self, t: int, cands: Iterable, z: Iterable = ()) -> list:
        """Candidates by decreasing association with ``t`` given ``z``; index breaks ties."""
        z = tuple(z)
        return sorted(cands, key=lambda x: (tuple(-v for v in self.assoc(t, x, z)), x))

    def shrink(self, t: int, members: list) -> list:
        """Single backward pass: drop X when ``t _||_ X | members - X``."""
        out = list(members)
        for x in sorted(members):
            rest = [m for m in out if m != x]
            if self.indep(t, x, rest):
                self.record(t, x, rest)
                out.remove(x)
        return out


# -- PC superset routines (no symmetry correction) ----------------------------


def mmpc_bar(s: Search, t: int) -> list:
    """Max-min forward selection followed by backward removal."""
    key = ("mmpc", t)
    if key in s.memo:
        return s.memo[key]
    cpc = []
    minassoc = {}
    for x in s.others(t):
        if s.indep(t, x, ()):
            s.record(t, x, ())
        else:
            minassoc[x] = s.assoc(t, x, ())
    while minassoc:
        best = min(minassoc, key=lambda x: (tuple(-v for v in minassoc[x]), x))
        del minassoc[best]
        cpc.append(best)
        for y in sorted(minassoc):
            for z in s.subsets(cpc, must=best):
                if s.indep(t, y, z):
                    s.record(t, y, z)
                    del minassoc[y]
                    break
                a = s.assoc(t, y, z)
                if a < minassoc[y]:
                    minassoc[y] = a
    for x in list(cpc):
        if s.find_sep(t, x, [m for m in cpc if m != x]) is not None:
            cpc.remove(x)
    s.memo[key] = cpc
    return cpc


def hiton_pc_bar(s: Search, t: int) -> list:
    """Admit by marginal association; after each admission eliminate separable members."""
    key = ("hiton", t)
    if key in s.memo:
        return s.memo[key]
    open_ = []
    for x in s.others(t):
        if s.indep(t, x, ()):
            s.record(t, x, ())
        else:
            open_.append(x)
    open_ = s.ranked(t, open_)
    cpc = []
    for x in open_:
        cpc.append(x)
        if s.find_sep(t, x, [m for m in cpc if m != x]) is not None:
            cpc.remove(x)
            continue
        for m in list(cpc):
            if m != x and s.find_sep(t, m, [w for w in cpc if w != m], must=x) is not None:
                cpc.remove(m)
    s.memo[key] = cpc
    return cpc


def get_pcd(s: Search, t: int) -> list:
    """Iterative max-min admission with removal after every step."""
    key = ("getpcd", t)
    if key in s.memo:
        return s.memo[key]
    pcd = []
    minassoc = {}
    for x in s.others(t):
        if s.indep(t, x, ()):
            s.record(t, x, ())
        else:
            minassoc[x] = s.assoc(t, x, ())
    while minassoc:
        best = min(minassoc, key=lambda x: (tuple(-v for v in minassoc[x]), x))
        del minassoc[best]
        pcd.append(best)
        for m in list(pcd):
            must = None if m == best else best
            if s.find_sep(t, m, [w for w in pcd if w != m], must=must) is not None:
                pcd.remove(m)
        for y in sorted(minassoc):
            if best not in pcd:
                break
            for z in s.subsets(pcd, must=best):
                if s.indep(t, y, z):
                    s.record(t, y, z)
                    del minassoc[y]
                    break
                a = s.assoc(t, y, z)
                if a < minassoc[y]:
                    minassoc[y] = a
        if best not in pcd:
            # a removal changed the conditioning pool: refresh the surviving minima
            for y in sorted(minassoc):
                for z in s.subsets(pcd):
                    if s.indep(t, y, z):
                        s.record(t, y, z)
                        del minassoc[y]
                        break
                    a = s.assoc(t, y, z)
                    if a < minassoc[y]:
                        minassoc[y] = a
    s.memo[key] = pcd
    return pcd


def recognize_pc(s: Search, t: int) -> list:
    """PC-search style removal over the whole candidate set, level by level."""
    key = ("recognize", t)
    if key in s.memo:
        return s.memo[key]
    can = s.others(t)
    k = 0
    while len(can) - 1 >= k and (s.cap is None or k <= s.cap):
        for x in list(can):
            pool = sorted(m for m in can if m != x)
            for z in combinations(pool, k):
                if s.indep(t, x, z):
                    s.record(t, x, z)
                    can.remove(x)
                    break
        k += 1
    s.memo[key] = can
    return can


_BAR = {"MMPC": mmpc_bar, "HITON-PC": hiton_pc_bar, "GetPC": get_pcd, "RecognizePC": recognize_pc}


def symmetric_pc(s: Search, t: int, routine: Callable) -> list:
    """Keep X from ``routine(t)`` only if ``t`` is in ``routine(X)`` (AND rule)."""
    key = ("sym", routine.__name__, t)
    if key in s.memo:
        return s.memo[key]
    out = []
    for x in routine(s, t):
        if t in routine(s, x):
            out.append(x)
        elif s.sepset(t, x) is None:
            s.find_sep(t, x, routine(s, x))
    s.memo[key] = out
    return out


def learn_pc_set(ci: CISource, target, variant: str = "MMPC", alpha: Optional[float] = None,
                 search: Optional[Search] = None) -> tuple:
    """Estimate the parents and children of ``target``.

    ``MMPC`` and ``GetPC`` apply the symmetry correction; ``HITON-PC`` is the
    plain interleaved procedure.

    Returns
    -------
    (frozenset, dict)
        The PC set and the separating sets recorded for rejected pairs.
    """
    canon = {v.lower(): v for v in PC_VARIANTS}
    if variant.lower() not in canon:
        raise ValueError(f"unknown PC variant {variant!r}; expected one of {PC_VARIANTS}")
    variant = canon[variant.lower()]
    ci = ci.with_alpha(alpha)
    s = search or Search(ci)
    t = _node(ci, target)
    if variant == "MMPC":
        pc = symmetric_pc(s, t, mmpc_bar)
    elif variant == "GetPC":
        pc = symmetric_pc(s, t, get_pcd)
    else:
        pc = hiton_pc_bar(s, t)
    seps = {k: v for k, v in s.sepsets.items() if t in k}
    return frozenset(pc), seps


def find_spouses(s: Search, t: int, pc: Iterable, pc_of: Callable[[int], Iterable]) -> dict:
    """Spouses of ``t`` by collider activation.

    For each ``Y`` in ``pc`` and ``X`` in ``pc_of(Y)`` outside ``pc``, ``X`` is a
    spouse when ``t _||_ X | Z`` for the recorded separating set ``Z`` (searched
    within ``pc`` if none was recorded) and ``t`` and ``X`` become dependent
    once ``Y`` joins ``Z``.

    Returns
    -------
    dict
        child ``Y`` -> set of spouses found through it.
    """
    pc = set(pc)
    out = {}
    for y in sorted(pc):
        for x in sorted(set(pc_of(y)) - pc - {t}):
            z = s.sepset(t, x)
            if z is None:
                z = s.find_sep(t, x, pc)
                if z is None:
                    continue
            if y in z:
                continue
            if not s.indep(t, x, tuple(z) + (y,)):
                out.setdefault(y, set()).add(x)
    return out


def mb_to_pc(s: Search, t: int, mb: Iterable) -> list:
    """Members of ``mb`` that no subset of the rest of ``mb`` separates from ``t``."""
    mb = sorted(mb)
    return [x for x in mb if s.find_sep(t, x, [m for m in mb if m != x]) is None]


def _node(ci: CISource, key) -> int:
    if isinstance(key, str):
        try:
            return ci.names.index(key)
        except ValueError:
            raise KeyError(f"unknown variable {key!r}") from None
    k = int(key)
    if not 0 <= k < ci.n_vars:
        raise KeyError(f"unknown variable index {key!r}")
    return k
