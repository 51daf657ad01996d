"""Conditional-independence decisions over datasets or a known DAG.

Every learner consumes a CI source: :class:`DataCI` (G-squared for discrete
data, Fisher's z for continuous data) or :class:`OracleCI` (exact
d-separation). Each source owns a :class:`CiCounter` that caches decisions
and counts distinct evaluations.
"""

from __future__ import annotations

import math
import threading
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.stats import chi2, norm

from .dataset import Dataset
from .graph import Dag, _trail_lengths

DEFAULT_ALPHA = 0.05
DEFAULT_MAX_COND = 3
MIN_SAMPLES_PER_DOF = 5
R_CLAMP = 1.0 - 1e-12
ORACLE_MEMO_LIMIT = 500_000


class CiError(ValueError):
    """Invalid CI test request."""


class DegenerateDataError(CiError):
    pass


class InsufficientSamplesError(CiError):
    pass


@dataclass(frozen=True)
class CiDecision:
    statistic: float
    p_value: float
    dof: int
    independent: bool
    reliable: bool = True


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise CiError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def _canonical(x: int, y: int, z: Iterable) -> tuple:
    z = tuple(sorted(set(map(int, z)))) if z else ()
    if type(x) is not int or type(y) is not int:
        x, y = int(x), int(y)
    if x == y:
        raise CiError("x and y must differ")
    if x in z or y in z:
        raise CiError("x and y must not be in the conditioning set")
    if x > y:
        x, y = y, x
    return x, y, z


# -- statistics ---------------------------------------------------------------


def _g2(values: np.ndarray, cards, x: int, y: int, z: tuple, alpha: float) -> CiDecision:
    n = values.shape[0]
    rx, ry = cards[x], cards[y]
    full_dof = (rx - 1) * (ry - 1)
    for v in z:
        full_dof *= cards[v]
    reliable = n >= MIN_SAMPLES_PER_DOF * full_dof
    if n == 0:
        return CiDecision(0.0, 1.0, max(1, full_dof), True, False)
    strata = np.zeros(n, dtype=np.int64)
    n_strata = 1
    for v in z:
        strata = strata * cards[v] + values[:, v]
        n_strata *= cards[v]
        if n_strata * rx * ry > 4 * n + 1024:
            strata = np.unique(strata, return_inverse=True)[1].reshape(-1)
            n_strata = int(strata.max()) + 1
    key = (strata * rx + values[:, x]) * ry + values[:, y]
    counts = np.bincount(key, minlength=n_strata * rx * ry).reshape(n_strata, rx, ry).astype(np.float64)
    nz = counts.sum(axis=(1, 2))
    counts = counts[nz > 0]
    nz = nz[nz > 0]
    nxz = counts.sum(axis=2)
    nyz = counts.sum(axis=1)
    expected = nxz[:, :, None] * nyz[:, None, :] / nz[:, None, None]
    mask = counts > 0
    obs = counts[mask]
    terms = obs * np.log(obs / expected[mask])
    stat = max(0.0, 2.0 * math.fsum(terms.tolist()))
    dof = int((((nxz > 0).sum(axis=1) - 1) * ((nyz > 0).sum(axis=1) - 1)).clip(min=0).sum())
    dof = max(1, dof)
    p = float(chi2.sf(stat, dof))
    p = min(1.0, max(0.0, p))
    if not reliable:
        return CiDecision(stat, p, dof, True, False)
    return CiDecision(stat, p, dof, p > alpha, True)


def _fisher_z(corr: np.ndarray, n: int, x: int, y: int, z: tuple, alpha: float) -> CiDecision:
    k = len(z)
    if n <= k + 3:
        raise InsufficientSamplesError(f"Fisher z needs n > |z| + 3 samples (n={n}, |z|={k})")
    if not z:
        r = corr[x, y]
    else:
        idx = [x, y, *z]
        sub = corr[np.ix_(idx, idx)]
        if not np.all(np.isfinite(sub)) or np.linalg.matrix_rank(sub) < len(idx):
            raise DegenerateDataError("singular correlation submatrix")
        prec = np.linalg.inv(sub)
        r = -prec[0, 1] / math.sqrt(prec[0, 0] * prec[1, 1])
    if not np.isfinite(r):
        raise DegenerateDataError("undefined partial correlation (constant column?)")
    r = min(R_CLAMP, max(-R_CLAMP, float(r)))
    stat = 0.5 * math.log((1 + r) / (1 - r)) * math.sqrt(n - k - 3)
    p = float(min(1.0, 2.0 * norm.sf(abs(stat))))
    return CiDecision(stat, p, n - k - 3, p > alpha, True)


def _discrete_columns(data: Dataset, cols) -> None:
    for c in cols:
        if data.cardinalities[c] is None:
            raise CiError(f"G2 test needs discrete data; column {data.column_names[c]!r} is continuous")


def g2_test(data: Dataset, x, y, z=(), alpha: float = DEFAULT_ALPHA) -> CiDecision:
    """G-squared likelihood-ratio test of ``x _||_ y | z`` on discrete data.

    Zero cells are skipped; degrees of freedom drop for empty marginal rows
    and columns within each stratum. When ``n < 5 * dof`` (dof counted over
    the full table) the test is unreliable and reports independence.
    """
    alpha = _check_alpha(alpha)
    x, y, z = _canonical(data.column(x), data.column(y), [data.column(v) for v in z])
    _discrete_columns(data, (x, y, *z))
    return _g2(data.values, data.cardinalities, x, y, z, alpha)


def fisher_z_test(data: Dataset, x, y, z=(), alpha: float = DEFAULT_ALPHA) -> CiDecision:
    """Fisher's z test on the partial correlation of ``x`` and ``y`` given ``z``."""
    alpha = _check_alpha(alpha)
    x, y, z = _canonical(data.column(x), data.column(y), [data.column(v) for v in z])
    for c in (x, y, *z):
        if data.cardinalities[c] is not None:
            raise CiError(f"Fisher z needs continuous data; column {data.column_names[c]!r} is discrete")
    return _fisher_z(_correlation(data.values), data.n, x, y, z, alpha)


def _correlation(values: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore", divide="ignore"):
        if values.shape[0] < 2:
            return np.full((values.shape[1],) * 2, np.nan)
        return np.atleast_2d(np.corrcoef(values, rowvar=False))


def oracle_ci(graph: Dag, x, y, z=()) -> CiDecision:
    """Exact decision from d-separation in ``graph``.

    Separated pairs get p-value 1 and statistic 0. Connected pairs get
    p-value 0 and statistic ``1 / L`` for the length ``L`` of the shortest
    d-connecting trail, so closer variables rank as more strongly associated.
    """
    x, y, z = _canonical(graph.node(x), graph.node(y), [graph.node(v) for v in z])
    return _oracle_decision(graph, x, y, z)


def _oracle_decision(graph: Dag, x: int, y: int, z: tuple) -> CiDecision:
    return _decision_from_length(_trail_lengths(graph.parents, graph.children, x, set(z)).get(y))


def _decision_from_length(length) -> CiDecision:
    if length is None:
        return _SEPARATED
    return CiDecision(1.0 / length, 0.0, 1, False, True)


def assoc_strength(data: Dataset, x, y, z=(), alpha: float = DEFAULT_ALPHA) -> float:
    """``1 - p`` of the matching test; 0 for an unreliable test."""
    d = DataCI(data, alpha=alpha).test(data.column(x), data.column(y), [data.column(v) for v in z])
    return _strength(d)


def _strength(d: CiDecision) -> float:
    return 0.0 if not d.reliable else 1.0 - d.p_value


# -- counted, cached sources ---------------------------------------------------


class CiCounter:
    """Per-run accounting: distinct evaluations, cache hits, conditioning-size histogram."""

    def __init__(self, cache: bool = True):
        self.use_cache = cache
        self.total_tests = 0
        self.cache_hits = 0
        self.tests_by_conditioning_size = Counter()
        self.cache = {}
        self._lock = threading.Lock()

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "total_tests": self.total_tests,
                "cache_hits": self.cache_hits,
                "tests_by_conditioning_size": {str(k): v for k, v in sorted(self.tests_by_conditioning_size.items())},
            }


class CISource:
    """Base class: caching, counting and association ranking around ``_compute``."""

    def __init__(self, names, alpha=DEFAULT_ALPHA, max_cond=None, counter=None, cache=True):
        self.names = tuple(names)
        self.alpha = _check_alpha(alpha)
        self.max_cond = max_cond
        self.counter = counter if counter is not None else CiCounter(cache)

    @property
    def n_vars(self) -> int:
        return len(self.names)

    def test(self, x: int, y: int, z: Iterable = ()) -> CiDecision:
        x, y, z = _canonical(x, y, z)
        key = (x, y, z, self.alpha)
        c = self.counter
        if c.use_cache:
            hit = c.cache.get(key)
            if hit is not None:
                c.cache_hits += 1
                return hit
        d = self._compute(x, y, z)
        with c._lock:
            c.total_tests += 1
            c.tests_by_conditioning_size[len(z)] += 1
            if c.use_cache:
                c.cache[key] = d
        return d

    def independent(self, x: int, y: int, z: Iterable = ()) -> bool:
        return self.test(x, y, z).independent

    def association(self, x: int, y: int, z: Iterable = ()) -> tuple:
        """Ranking key ``(strength, |statistic|)``; larger is stronger."""
        d = self.test(x, y, z)
        return (_strength(d), abs(d.statistic) if d.reliable else 0.0)

    def fresh(self, alpha: Optional[float] = None) -> "CISource":
        """Same source, new counter (and optionally a different alpha)."""
        out = self.__class__.__new__(self.__class__)
        out.__dict__.update(self.__dict__)
        out.alpha = self.alpha if alpha is None else _check_alpha(alpha)
        out.counter = CiCounter(self.counter.use_cache)
        return out

    def with_alpha(self, alpha: Optional[float]) -> "CISource":
        """Same source and counter at another significance level."""
        if alpha is None or float(alpha) == self.alpha:
            return self
        out = self.__class__.__new__(self.__class__)
        out.__dict__.update(self.__dict__)
        out.alpha = _check_alpha(alpha)
        return out

    def _compute(self, x, y, z) -> CiDecision:
        raise NotImplementedError


class DataCI(CISource):
    """Tests on a dataset: G-squared when all columns are discrete, Fisher z when continuous.

    Parameters
    ----------
    data : Dataset
    alpha : float
        Significance level, default 0.05.
    max_cond : int or None
        Conditioning-set cap used by learners (default 3).
    test : {'auto', 'g2', 'fisher-z'}
    """

    def __init__(self, data: Dataset, alpha=DEFAULT_ALPHA, max_cond=DEFAULT_MAX_COND, test="auto",
                 counter=None, cache=True):
        super().__init__(data.column_names, alpha, max_cond, counter, cache)
        self.data = data
        if test == "auto":
            if data.is_discrete:
                test = "g2"
            elif data.is_continuous:
                test = "fisher-z"
            else:
                raise CiError("mixed discrete/continuous data is not supported")
        if test not in ("g2", "fisher-z"):
            raise CiError(f"unknown test {test!r}")
        if test == "g2":
            _discrete_columns(data, range(data.n_columns))
            self._corr = None
        else:
            for c in range(data.n_columns):
                if data.cardinalities[c] is not None:
                    raise CiError("Fisher z needs continuous data")
            self._corr = _correlation(data.values)
        self.test_name = test

    def _compute(self, x, y, z):
        if self.test_name == "g2":
            return _g2(self.data.values, self.data.cardinalities, x, y, z, self.alpha)
        return _fisher_z(self._corr, self.data.n, x, y, z, self.alpha)


class OracleCI(CISource):
    """d-separation in a known DAG, decided as in :func:`oracle_ci`.

    Decisions are memoized in a table shared by every :meth:`fresh` copy;
    counting is still per counter.
    """

    def __init__(self, graph: Dag, max_cond=None, counter=None, cache=True, alpha=DEFAULT_ALPHA):
        super().__init__(graph.node_names, alpha, max_cond, counter, cache)
        self.graph = graph
        self._memo = {}
        # trail lengths from one endpoint answer every query sharing it and z
        self._reach = {}

    def _compute(self, x, y, z):
        key = (x, y, z)
        d = self._memo.get(key)
        if d is None:
            lengths = self._reach.get((x, z))
            if lengths is None:
                lengths = self._reach.get((y, z))
                if lengths is not None:
                    x, y = y, x
            if lengths is None:
                if len(self._reach) >= ORACLE_MEMO_LIMIT:
                    self._reach.clear()
                lengths = self._reach[(x, z)] = _trail_lengths(self.graph.parents, self.graph.children, x, set(z))
            d = _decision_from_length(lengths.get(y))
            if len(self._memo) >= ORACLE_MEMO_LIMIT:
                self._memo.clear()
            self._memo[key] = d
        return d


_SEPARATED = CiDecision(0.0, 1.0, 1, True, True)


def make_ci(source, alpha=DEFAULT_ALPHA, max_cond="default", test="auto") -> CISource:
    """Coerce a Dataset, Dag or existing source into a CI source."""
    if isinstance(source, CISource):
        return source.with_alpha(alpha)
    if isinstance(source, Dataset):
        cap = DEFAULT_MAX_COND if max_cond == "default" else max_cond
        return DataCI(source, alpha=alpha, max_cond=cap, test=test)
    if isinstance(source, Dag):
        cap = None if max_cond == "default" else max_cond
        return OracleCI(source, max_cond=cap, alpha=alpha)
    raise TypeError(f"cannot build a CI source from {type(source).__name__}")
