"""scikit-learn style wrappers around the learners.

``StructureLearner`` fits a whole graph, ``LocalStructureLearner`` the
neighbourhood of one column, and ``MarkovBlanketSelector`` is a feature
selector keeping the Markov blanket of ``y``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_is_fitted

from .ci import DEFAULT_ALPHA, DEFAULT_MAX_COND, make_ci
from .dataset import Dataset
from .local import learn_local
from .mb import learn_mb
from .structure import learn_global

KIND_ALIASES = {
    "auto": "auto",
    "dis": "discrete",
    "discrete": "discrete",
    "con": "continuous",
    "continuous": "continuous",
}


def check_kind(kind: str) -> str:
    try:
        return KIND_ALIASES[str(kind).lower()]
    except KeyError:
        raise ValueError(f"data type must be one of {sorted(KIND_ALIASES)}, got {kind!r}") from None


def as_dataset(X, kind: str = "auto", column_names=None, cardinalities=None) -> Dataset:
    """Validate ``X`` and wrap it as a :class:`Dataset`.

    Parameters
    ----------
    X : Dataset, array-like of shape (n_samples, n_features) or DataFrame
    kind : {'auto', 'dis', 'con', 'discrete', 'continuous'}
        ``auto`` treats integer arrays as discrete and anything else as
        continuous.
    column_names : sequence of str, optional
        Defaults to the DataFrame columns or ``x0, x1, ...``.
    cardinalities : sequence of int, optional
        Discrete only; defaults to ``max + 1`` per column.
    """
    kind = check_kind(kind)
    if isinstance(X, Dataset):
        if kind == "discrete" and not X.is_discrete or kind == "continuous" and not X.is_continuous:
            raise ValueError(f"dataset is not {kind}")
        return X
    if column_names is None and hasattr(X, "columns"):
        column_names = [str(c) for c in X.columns]
    arr = np.asarray(X)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
    if arr.dtype == object:
        raise ValueError("X must be numeric")
    if column_names is None:
        column_names = [f"x{i}" for i in range(arr.shape[1])]
    if len(column_names) != arr.shape[1]:
        raise ValueError("column_names length does not match the number of columns")
    if kind == "auto":
        kind = "discrete" if np.issubdtype(arr.dtype, np.integer) or arr.dtype == bool else "continuous"
    if kind == "continuous":
        vals = arr.astype(np.float64)
        if not np.all(np.isfinite(vals)):
            raise ValueError("X contains NaN or infinite values")
        return Dataset(tuple(column_names), (None,) * arr.shape[1], vals)
    if np.issubdtype(arr.dtype, np.floating):
        if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
            raise ValueError("discrete data must hold integer category indices")
    vals = arr.astype(np.int64)
    if vals.size and vals.min() < 0:
        raise ValueError("category indices must be nonnegative")
    if cardinalities is None:
        cardinalities = [int(vals[:, j].max()) + 1 if vals.shape[0] else 1 for j in range(vals.shape[1])]
    return Dataset(tuple(column_names), tuple(int(c) for c in cardinalities), vals)


class StructureLearner(BaseEstimator):
    """Whole-graph learner.

    Parameters
    ----------
    algorithm : str
        One of PC, PC-stable, GES, GSBN, MMHC, F2SL-c, F2SL-s.
    alpha : float
    score : {'bdeu', 'bic'}
    ess : float
    max_cond : int or None
    k : int
        Extra FBED forward runs (F2SL variants).
    kind : {'auto', 'dis', 'con'}

    Attributes
    ----------
    graph_ : Pdag
    dag_ : Dag or None
    result_ : StructureResult
    feature_names_in_ : ndarray of str
    """

    def __init__(self, algorithm="PC-stable", alpha=DEFAULT_ALPHA, score="bdeu", ess=1.0,
                 max_cond=DEFAULT_MAX_COND, k=1, kind="auto"):
        self.algorithm = algorithm
        self.alpha = alpha
        self.score = score
        self.ess = ess
        self.max_cond = max_cond
        self.k = k
        self.kind = kind

    def fit(self, X, y=None):
        data = as_dataset(X, self.kind)
        self.result_ = learn_global(data, self.algorithm, alpha=self.alpha, score=self.score, ess=self.ess,
                                    max_cond=self.max_cond, k=self.k)
        self.graph_ = self.result_.graph
        self.dag_ = self.result_.dag
        self.feature_names_in_ = np.asarray(data.column_names, dtype=object)
        self.n_features_in_ = data.n_columns
        return self

    def adjacency_matrix(self) -> np.ndarray:
        """``A[i, j] = 1`` for ``i -> j``; undirected edges set both entries."""
        check_is_fitted(self, "graph_")
        p = self.n_features_in_
        A = np.zeros((p, p), dtype=np.int8)
        for a, b in self.graph_.directed:
            A[a, b] = 1
        for a, b in self.graph_.undirected:
            A[a, b] = A[b, a] = 1
        return A


class LocalStructureLearner(BaseEstimator):
    """Parents, children and unoriented neighbours of column ``target``."""

    def __init__(self, target=0, algorithm="PCD-by-PCD", alpha=DEFAULT_ALPHA, max_cond=DEFAULT_MAX_COND,
                 kind="auto"):
        self.target = target
        self.algorithm = algorithm
        self.alpha = alpha
        self.max_cond = max_cond
        self.kind = kind

    def fit(self, X, y=None):
        data = as_dataset(X, self.kind)
        ci = make_ci(data, self.alpha, self.max_cond)
        self.result_ = learn_local(ci, self.target, self.algorithm)
        self.structure_ = self.result_.structure
        self.n_features_in_ = data.n_columns
        return self


class MarkovBlanketSelector(SelectorMixin, BaseEstimator):
    """Keep the features in the Markov blanket of ``y``.

    ``y`` is appended to ``X`` as the last column and must share its kind.

    Examples
    --------
    >>> sel = MarkovBlanketSelector(algorithm="IAMB").fit(X, y)  # doctest: +SKIP
    >>> X_mb = sel.transform(X)  # doctest: +SKIP
    """

    def __init__(self, algorithm="IAMB", alpha=DEFAULT_ALPHA, max_cond=DEFAULT_MAX_COND, k=1, kind="auto"):
        self.algorithm = algorithm
        self.alpha = alpha
        self.max_cond = max_cond
        self.k = k
        self.kind = kind

    def fit(self, X, y):
        arr = np.asarray(X)
        yv = np.asarray(y).reshape(-1)
        if arr.ndim != 2 or yv.shape[0] != arr.shape[0]:
            raise ValueError("X must be 2-D with one row per entry of y")
        names = None
        if hasattr(X, "columns"):
            names = [str(c) for c in X.columns]
        names = names or [f"x{i}" for i in range(arr.shape[1])]
        data = as_dataset(np.column_stack([arr, yv]), self.kind, column_names=names + ["__target__"])
        ci = make_ci(data, self.alpha, self.max_cond)
        self.result_ = learn_mb(ci, arr.shape[1], self.algorithm, k=self.k)
        self.support_ = np.zeros(arr.shape[1], dtype=bool)
        self.support_[sorted(self.result_.mb)] = True
        self.n_features_in_ = arr.shape[1]
        if hasattr(X, "columns"):
            self.feature_names_in_ = np.asarray(names, dtype=object)
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "support_")
        return self.support_
