"""Accuracy and efficiency metrics for learned sets and graphs."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Union

from .graph import Dag, GraphError, Pdag, dag_to_cpdag

STRUCTURE_FIELDS = (
    "ar_precision", "ar_recall", "ar_f1",
    "ad_precision", "ad_recall", "ad_f1",
    "shd", "extra_edges", "missing_edges", "reversed_edges",
)
SET_FIELDS = ("precision", "recall", "f1", "distance")


@dataclass(frozen=True)
class SetMetrics:
    precision: float
    recall: float
    f1: float
    distance: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class StructureMetrics:
    """Arrowhead and adjacency precision/recall/F1 plus edge-count errors."""

    ar_precision: float
    ar_recall: float
    ar_f1: float
    ad_precision: float
    ad_recall: float
    ad_f1: float
    shd: int
    extra_edges: int
    missing_edges: int
    reversed_edges: int

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EfficiencyMetrics:
    elapsed_seconds: float
    n_ci_tests_or_score_evals: int

    def as_dict(self) -> dict:
        return asdict(self)


def _prf(learned: frozenset, truth: frozenset) -> tuple:
    hit = len(learned & truth)
    if learned:
        p = hit / len(learned)
    else:
        p = 1.0 if not truth else 0.0
    if truth:
        r = hit / len(truth)
    else:
        r = 1.0 if not learned else 0.0
    f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return p, r, f1


def compare_sets(learned: Iterable, truth: Iterable) -> SetMetrics:
    """Precision, recall, F1 and distance ``sqrt((1-p)^2 + (1-r)^2)``.

    Empty-set conventions: an empty estimate scores precision 1 when the
    truth is empty too and 0 otherwise; recall mirrors this.

    Examples
    --------
    >>> m = compare_sets({"A"}, {"A", "B"})
    >>> m.precision, m.recall, m.distance
    (1.0, 0.5, 0.5)
    """
    p, r, f1 = _prf(frozenset(learned), frozenset(truth))
    return SetMetrics(p, r, f1, math.sqrt((1 - p) ** 2 + (1 - r) ** 2))


def _as_pattern(g: Union[Dag, Pdag]) -> Pdag:
    return dag_to_cpdag(g) if isinstance(g, Dag) else g


def _edge_states(p: Pdag) -> dict:
    out = {}
    for a, b in p.directed:
        out[(min(a, b), max(a, b))] = "->" if a < b else "<-"
    for a, b in p.undirected:
        out[(a, b)] = "--"
    return out


def compare_structure(learned: Union[Dag, Pdag], truth: Dag) -> StructureMetrics:
    """Compare a learned graph with the CPDAG of ``truth``.

    A learned Dag is first converted to its CPDAG. ``reversed_edges`` counts
    pairs adjacent in both graphs whose edge states differ (reversed,
    directed versus undirected); ``shd`` is the number of single-pair edits
    (add, remove, re-orient) that turn ``learned`` into the true CPDAG.
    """
    if tuple(learned.node_names) != tuple(truth.node_names):
        raise GraphError("learned and true graphs have different node sets")
    lp = _as_pattern(learned)
    tp = dag_to_cpdag(truth)
    ls, ts = _edge_states(lp), _edge_states(tp)
    extra = len(ls.keys() - ts.keys())
    missing = len(ts.keys() - ls.keys())
    reversed_ = sum(1 for k in ls.keys() & ts.keys() if ls[k] != ts[k])
    ad = _prf(frozenset(ls), frozenset(ts))
    ar = _prf(frozenset(lp.directed), frozenset(tp.directed))
    return StructureMetrics(*ar, *ad, extra + missing + reversed_, extra, missing, reversed_)


def record_efficiency(counter, elapsed: float) -> EfficiencyMetrics:
    """Snapshot of wall time and the number of CI tests or score evaluations.

    ``counter`` may be a :class:`~causalkit.ci.CiCounter`, a
    :class:`~causalkit.scores.ScoreCache`, a learner result or a plain count.
    """
    if counter is None:
        n = 0
    elif isinstance(counter, int):
        n = counter
    elif hasattr(counter, "total_tests"):
        n = counter.total_tests
    elif hasattr(counter, "n_evals"):
        n = counter.n_evals
    elif hasattr(counter, "n_ci_tests"):
        n = counter.n_ci_tests + getattr(counter, "n_score_evals", 0)
    else:
        raise TypeError(f"cannot read a count from {type(counter).__name__}")
    if elapsed < 0 or n < 0:
        raise ValueError("efficiency values must be nonnegative")
    return EfficiencyMetrics(float(elapsed), int(n))
