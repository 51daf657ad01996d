"""Parameterized Bayesian networks.

CPT layout: for a node with parents ``p_1 < p_2 < ... < p_m`` (node index
order) the row for parent states ``(s_1, ..., s_m)`` is

    row = ((s_1 * c_2 + s_2) * c_3 + s_3) ... * c_m + s_m

i.e. mixed radix with the last parent varying fastest.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..graph import Dag

ROW_SUM_TOL = 1e-9


class NetworkValidationError(ValueError):
    """A parsed or constructed network violates a model invariant."""


@dataclass(frozen=True)
class BnDescriptor:
    name: str
    node_count: int
    arc_count: int


@dataclass(frozen=True, eq=False)
class DiscreteBn:
    """Discrete network: a Dag plus one conditional probability table per node."""

    graph: Dag
    cardinalities: tuple
    cpts: tuple
    state_names: Optional[tuple] = None
    name: str = "unknown"

    def __post_init__(self):
        g = self.graph
        cards = tuple(int(c) for c in self.cardinalities)
        if len(cards) != g.n_nodes or len(self.cpts) != g.n_nodes:
            raise NetworkValidationError("one cardinality and one CPT per node required")
        cpts = []
        for i, (card, cpt) in enumerate(zip(cards, self.cpts)):
            nm = g.node_names[i]
            if card < 1:
                raise NetworkValidationError(f"node {nm!r}: cardinality must be positive")
            t = np.array(cpt, dtype=np.float64)
            rows = int(np.prod([cards[p] for p in g.parents[i]], dtype=np.int64))
            if t.ndim == 1:
                t = t.reshape(1, -1)
            if t.shape != (rows, card):
                raise NetworkValidationError(
                    f"node {nm!r}: CPT shape {t.shape} does not match ({rows}, {card})"
                )
            if np.any(t < 0) or not np.all(np.isfinite(t)):
                raise NetworkValidationError(f"node {nm!r}: CPT entries must be finite and nonnegative")
            bad = np.abs(t.sum(axis=1) - 1.0) > ROW_SUM_TOL
            if np.any(bad):
                r = int(np.argmax(bad))
                raise NetworkValidationError(
                    f"node {nm!r}: CPT row {r} sums to {t[r].sum():.12g}, not 1"
                )
            t.setflags(write=False)
            cpts.append(t)
        if self.state_names is not None:
            states = tuple(tuple(str(s) for s in st) for st in self.state_names)
            for i, st in enumerate(states):
                if len(st) != cards[i]:
                    raise NetworkValidationError(f"node {g.node_names[i]!r}: state count mismatch")
            object.__setattr__(self, "state_names", states)
        object.__setattr__(self, "cardinalities", cards)
        object.__setattr__(self, "cpts", tuple(cpts))

    @property
    def descriptor(self) -> BnDescriptor:
        return BnDescriptor(self.name, self.graph.n_nodes, len(self.graph.edges))

    @property
    def node_names(self) -> tuple:
        return self.graph.node_names

    def row_index(self, node: int, parent_states) -> int:
        """CPT row for the given parent states (ordered like ``graph.parents[node]``)."""
        row = 0
        for p, s in zip(self.graph.parents[node], parent_states):
            row = row * self.cardinalities[p] + int(s)
        return row


@dataclass(frozen=True, eq=False)
class GaussianBn:
    """Linear-Gaussian network.

    Node ``i`` is ``intercepts[i] + sum_k coefficients[i][k] * parent_k + N(0, sigmas[i]^2)``
    with parents ordered like ``graph.parents[i]``.
    """

    graph: Dag
    intercepts: tuple
    coefficients: tuple
    sigmas: tuple
    name: str = "unknown"

    def __post_init__(self):
        g = self.graph
        p = g.n_nodes
        if not (len(self.intercepts) == len(self.coefficients) == len(self.sigmas) == p):
            raise NetworkValidationError("one intercept, coefficient vector and sigma per node required")
        coefs = []
        for i in range(p):
            nm = g.node_names[i]
            s = float(self.sigmas[i])
            if not np.isfinite(s) or s <= 0:
                raise NetworkValidationError(f"node {nm!r}: noise sigma must be positive, got {s}")
            c = np.array(self.coefficients[i], dtype=np.float64).reshape(-1)
            if c.shape[0] != len(g.parents[i]):
                raise NetworkValidationError(
                    f"node {nm!r}: {c.shape[0]} coefficients for {len(g.parents[i])} parents"
                )
            c.setflags(write=False)
            coefs.append(c)
        object.__setattr__(self, "intercepts", tuple(float(v) for v in self.intercepts))
        object.__setattr__(self, "sigmas", tuple(float(v) for v in self.sigmas))
        object.__setattr__(self, "coefficients", tuple(coefs))

    @property
    def descriptor(self) -> BnDescriptor:
        return BnDescriptor(self.name, self.graph.n_nodes, len(self.graph.edges))

    @property
    def node_names(self) -> tuple:
        return self.graph.node_names
