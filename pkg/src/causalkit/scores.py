"""Decomposable network scores: BDeu (discrete) and BIC (discrete or Gaussian).

Log-gamma comes from :func:`scipy.special.gammaln` (Cephes), which is
accurate to well under 1e-12 relative error across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import gammaln

from .ci import DegenerateDataError
from .dataset import Dataset
from .graph import Dag

DEFAULT_ESS = 1.0
SCORE_KINDS = ("bdeu", "bic")


class ScoreError(ValueError):
    pass


@dataclass(frozen=True)
class LocalScore:
    node: int
    parent_set: tuple
    value: float


def _prepare(data: Dataset, node, parents) -> tuple:
    node = data.column(node)
    parents = tuple(sorted({data.column(p) for p in parents}))
    if node in parents:
        raise ScoreError("a node cannot be its own parent")
    return node, parents


def _family_counts(data: Dataset, node: int, parents: tuple) -> tuple:
    """Observed (n_j, n_jk) counts; unobserved parent configurations are dropped."""
    vals = data.values
    r = data.cardinalities[node]
    n = data.n
    if not parents:
        njk = np.bincount(vals[:, node], minlength=r).reshape(1, r).astype(np.float64)
        return njk.sum(axis=1), njk
    cfg = np.zeros(n, dtype=np.int64)
    q = 1
    for p in parents:
        cfg = cfg * data.cardinalities[p] + vals[:, p]
        q *= data.cardinalities[p]
        if q * r > 4 * n + 1024:
            cfg = np.unique(cfg, return_inverse=True)[1].reshape(-1)
            q = int(cfg.max()) + 1 if n else 1
    njk = np.bincount(cfg * r + vals[:, node], minlength=q * r).reshape(q, r).astype(np.float64)
    nj = njk.sum(axis=1)
    keep = nj > 0
    return nj[keep], njk[keep]


def _n_configs(data: Dataset, parents: tuple) -> int:
    q = 1
    for p in parents:
        q *= data.cardinalities[p]
    return q


def _require_discrete(data: Dataset, cols) -> None:
    for c in cols:
        if data.cardinalities[c] is None:
            raise ScoreError(f"column {data.column_names[c]!r} is continuous; this score needs discrete data")


def bdeu_local(data: Dataset, node, parents: Iterable = (), ess: float = DEFAULT_ESS) -> LocalScore:
    """Log BDeu marginal likelihood of ``node`` given ``parents`` (uniform structure prior)."""
    if not ess > 0:
        raise ScoreError(f"equivalent sample size must be positive, got {ess}")
    node, parents = _prepare(data, node, parents)
    _require_discrete(data, (node, *parents))
    r = data.cardinalities[node]
    q = _n_configs(data, parents)
    a_j = ess / q
    a_jk = ess / (q * r)
    nj, njk = _family_counts(data, node, parents)
    terms = (gammaln(a_j) - gammaln(a_j + nj)).tolist()
    terms += (gammaln(a_jk + njk) - gammaln(a_jk)).ravel().tolist()
    return LocalScore(node, parents, math.fsum(terms))


def bic_local(data: Dataset, node, parents: Iterable = ()) -> LocalScore:
    """BIC: maximized log-likelihood minus ``0.5 * ln(n) * (free parameters)``."""
    node, parents = _prepare(data, node, parents)
    n = data.n
    if n < 1:
        raise ScoreError("BIC needs at least one sample")
    kinds = {data.cardinalities[c] is None for c in (node, *parents)}
    if len(kinds) > 1:
        raise ScoreError("BIC needs all-discrete or all-continuous columns")
    if data.cardinalities[node] is not None:
        r = data.cardinalities[node]
        q = _n_configs(data, parents)
        nj, njk = _family_counts(data, node, parents)
        mask = njk > 0
        ll = math.fsum((njk[mask] * np.log(njk[mask] / np.broadcast_to(nj[:, None], njk.shape)[mask])).tolist())
        return LocalScore(node, parents, ll - 0.5 * math.log(n) * (r - 1) * q)
    y = data.values[:, node]
    X = np.column_stack([np.ones(n)] + [data.values[:, p] for p in parents])
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise DegenerateDataError("singular regression design for BIC")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    rss = math.fsum((resid * resid).tolist())
    if not rss > 0:
        raise DegenerateDataError("zero residual variance")
    sigma2 = rss / n
    ll = -0.5 * n * (math.log(2 * math.pi * sigma2) + 1.0)
    return LocalScore(node, parents, ll - 0.5 * math.log(n) * (len(parents) + 2))


class ScoreCache:
    """Cached local scores for one dataset and score kind.

    ``n_evals`` counts fresh computations; ``hits`` counts cache reuse.
    """

    def __init__(self, data: Dataset, kind: str = "bdeu", ess: float = DEFAULT_ESS):
        kind = kind.lower()
        if kind not in SCORE_KINDS:
            raise ScoreError(f"unknown score {kind!r}; expected one of {SCORE_KINDS}")
        if kind == "bdeu":
            _require_discrete(data, range(data.n_columns))
            if not ess > 0:
                raise ScoreError(f"equivalent sample size must be positive, got {ess}")
        self.data = data
        self.kind = kind
        self.ess = float(ess)
        self.values = {}
        self.n_evals = 0
        self.hits = 0

    def local(self, node: int, parents: Iterable = ()) -> float:
        key = (node, tuple(sorted(parents)))
        v = self.values.get(key)
        if v is not None:
            self.hits += 1
            return v
        if self.kind == "bdeu":
            v = bdeu_local(self.data, node, key[1], self.ess).value
        else:
            v = bic_local(self.data, node, key[1]).value
        self.values[key] = v
        self.n_evals += 1
        return v

    def score_dag(self, g: Dag) -> float:
        return math.fsum(self.local(i, g.parents[i]) for i in range(g.n_nodes))


def score_dag(data: Dataset, g: Dag, score_kind: str = "bdeu", ess: float = DEFAULT_ESS, cache=None) -> float:
    """Sum of local scores over the nodes of ``g``."""
    if tuple(g.node_names) != tuple(data.column_names):
        raise ScoreError("graph nodes must match dataset columns")
    cache = cache or ScoreCache(data, score_kind, ess)
    return cache.score_dag(g)
