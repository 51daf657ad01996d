"""Forward sampling and exact marginals.

Random source
-------------
Samples are driven by numpy's ``Philox`` counter-based generator keyed with
the 64-bit seed. Uniforms are drawn as one ``(n, p)`` row-major block, so row
``i`` always consumes stream positions ``[i * p, (i + 1) * p)``: the first
``m`` rows of a sample of size ``n >= m`` equal a sample of size ``m``, and
any row range can be regenerated independently by advancing the counter.
Column ``j`` of the block belongs to node ``j``. Discrete nodes invert their
CPT row's cumulative distribution; Gaussian nodes use the inverse normal CDF
of the same uniform.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

from ..dataset import Dataset
from ..graph import topological_order
from .model import DiscreteBn, GaussianBn

MAX_JOINT_STATES = 10**7
_SEED_MASK = (1 << 64) - 1


class NetworkTooLargeError(ValueError):
    pass


def _uniforms(n: int, p: int, seed: int, start_row: int = 0) -> np.ndarray:
    seed = int(seed)
    if seed < 0 or seed > _SEED_MASK:
        raise ValueError("seed must be an unsigned 64-bit integer")
    bitgen = np.random.Philox(key=seed)
    if start_row:
        # Philox advances in blocks of four 64-bit outputs
        skip = start_row * p
        bitgen.advance(skip // 4)
        gen = np.random.Generator(bitgen)
        gen.random(skip % 4)
    else:
        gen = np.random.Generator(bitgen)
    return gen.random((n, p))


def forward_sample(bn, n: int, seed: int, start_row: int = 0) -> Dataset:
    """Draw ``n`` i.i.d. samples from ``bn``; a pure function of its arguments.

    Parameters
    ----------
    bn : DiscreteBn or GaussianBn
    n : int
        Sample count, at least 1.
    seed : int
        Unsigned 64-bit key of the Philox stream.
    start_row : int
        Index of the first row to produce; lets callers generate disjoint row
        ranges of one logical sample independently.
    """
    if int(n) < 1:
        raise ValueError("n must be at least 1")
    n = int(n)
    g = bn.graph
    p = g.n_nodes
    u = _uniforms(n, p, seed, start_row)
    order = topological_order(g)
    if isinstance(bn, DiscreteBn):
        out = np.zeros((n, p), dtype=np.int64)
        for i in order:
            pa = g.parents[i]
            rows = np.zeros(n, dtype=np.int64)
            for q in pa:
                rows = rows * bn.cardinalities[q] + out[:, q]
            cum = np.cumsum(bn.cpts[i], axis=1)
            cum[:, -1] = 1.0
            vals = (u[:, i][:, None] >= cum[rows]).sum(axis=1)
            out[:, i] = np.minimum(vals, bn.cardinalities[i] - 1)
        return Dataset(g.node_names, bn.cardinalities, out)
    if isinstance(bn, GaussianBn):
        z = ndtri(u + 2.0**-54)
        out = np.zeros((n, p), dtype=np.float64)
        for i in order:
            val = bn.intercepts[i] + bn.sigmas[i] * z[:, i]
            for q, c in zip(g.parents[i], bn.coefficients[i]):
                val = val + c * out[:, q]
            out[:, i] = val
        return Dataset(g.node_names, (None,) * p, out)
    raise TypeError(f"cannot sample from {type(bn).__name__}")


def joint_distribution(bn: DiscreteBn) -> np.ndarray:
    """Full joint table with one axis per node (index order)."""
    cards = bn.cardinalities
    total = int(np.prod(cards, dtype=np.float64))
    if total > MAX_JOINT_STATES:
        raise NetworkTooLargeError(f"{total} joint states exceed the limit of {MAX_JOINT_STATES}")
    p = len(cards)
    joint = np.ones(cards, dtype=np.float64)
    for i in range(p):
        pa = bn.graph.parents[i]
        axes = list(pa) + [i]
        t = bn.cpts[i].reshape([cards[a] for a in axes])
        order = np.argsort(axes)
        t = np.transpose(t, order)
        shape = [1] * p
        for a in sorted(axes):
            shape[a] = cards[a]
        joint = joint * t.reshape(shape)
    return joint


def exact_marginal(bn: DiscreteBn, node) -> np.ndarray:
    """Marginal of ``node`` by full joint enumeration (guarded at 1e7 states)."""
    i = bn.graph.node(node)
    joint = joint_distribution(bn)
    other = tuple(a for a in range(joint.ndim) if a != i)
    return joint.sum(axis=other)
