import itertools

import numpy as np
import pytest

from causalkit.bn import (
    BifParseError,
    DiscreteBn,
    GaussianParseError,
    NetworkTooLargeError,
    NetworkValidationError,
    exact_marginal,
    forward_sample,
    joint_distribution,
    parse_discrete_network,
    parse_gaussian_network,
    write_discrete_network,
    write_gaussian_network,
)
from causalkit.graph import Dag
from causalkit.networks import TABLE, available, descriptor, load_network


@pytest.mark.parametrize("name", available())
def test_bundled_counts(name):
    bn = load_network(name)
    d = bn.descriptor
    assert (d.node_count, d.arc_count) == TABLE[name]
    assert descriptor(name).node_count == d.node_count


def test_published_counts_for_the_eight_small_networks():
    expect = {"cancer": (5, 4), "earthquake": (5, 4), "survey": (6, 6), "asia": (8, 8),
              "sachs": (11, 17), "child": (20, 25), "insurance": (27, 52), "alarm": (37, 46)}
    for name, counts in expect.items():
        g = load_network(name).graph
        assert (g.n_nodes, len(g.edges)) == counts


def test_magic_niab_descriptor():
    g = load_network("magic-niab").graph
    assert (g.n_nodes, len(g.edges)) == (44, 66)


def test_unknown_network():
    with pytest.raises(KeyError):
        load_network("nope")


# -- discrete files ----------------------------------------------------------------

TWO_NODE = """
network t {}
variable A { type discrete [ 2 ] { a0, a1 }; }
variable B { type discrete [ 2 ] { b0, b1 }; }
probability ( A ) { table 0.3, 0.7; }
probability ( B | A ) {
  (a0) 0.9, 0.1;
  (a1) %s;
}
"""


def test_bif_row_sum_error_names_node():
    with pytest.raises((NetworkValidationError, BifParseError), match="B"):
        parse_discrete_network(TWO_NODE % "0.5, 0.4")


def test_bif_roundtrip_all_discrete():
    for name in ("cancer", "asia", "child", "alarm"):
        bn = load_network(name)
        again = parse_discrete_network(write_discrete_network(bn))
        assert again.graph == bn.graph
        for a, b in zip(again.cpts, bn.cpts):
            assert np.allclose(a, b, atol=1e-12)


def test_bif_syntax_error_has_line():
    with pytest.raises(BifParseError, match="line"):
        parse_discrete_network("variable A { type discrete [ 2 ] { x, y }\n probability ( A ) { table 0.5 0.5; }")


# -- Gaussian files -------------------------------------------------------------------


def test_gaussian_read_back():
    bn = parse_gaussian_network("node A 0 1\nnode B 0 1\narc A B 2.0\n")
    b = bn.graph.node("B")
    assert bn.graph.parents[b] == (bn.graph.node("A"),)
    assert list(bn.coefficients[b]) == [2.0]
    again = parse_gaussian_network(write_gaussian_network(bn))
    assert again.graph == bn.graph and list(again.coefficients[b]) == [2.0]


def test_gaussian_zero_sigma_rejected():
    with pytest.raises((NetworkValidationError, GaussianParseError)):
        parse_gaussian_network("node A 0 0\n")


# -- sampling -----------------------------------------------------------------------------


def test_degenerate_cpt_samples_constant():
    bn = DiscreteBn(Dag(("A",)), (2,), ([0.0, 1.0],))
    data = forward_sample(bn, 10, seed=3)
    assert data.values.tolist() == [[1]] * 10


def test_forward_sample_pure():
    bn = load_network("asia")
    assert forward_sample(bn, 500, 42) == forward_sample(bn, 500, 42)
    assert forward_sample(bn, 500, 42) != forward_sample(bn, 500, 43)


def test_forward_sample_row_ranges_compose():
    bn = load_network("child")
    whole = forward_sample(bn, 300, 9)
    tail = forward_sample(bn, 100, 9, start_row=200)
    assert np.array_equal(whole.values[200:], tail.values)


def test_samples_respect_cardinalities():
    bn = load_network("alarm")
    data = forward_sample(bn, 2000, 1)
    for j, c in enumerate(bn.cardinalities):
        assert data.values[:, j].min() >= 0 and data.values[:, j].max() < c


@pytest.mark.parametrize("name", ["cancer", "earthquake", "survey"])
def test_marginals_match_exact(name):
    bn = load_network(name)
    data = forward_sample(bn, 100_000, seed=20240611)
    for j, c in enumerate(bn.cardinalities):
        emp = np.bincount(data.values[:, j], minlength=c) / data.n
        tv = 0.5 * np.abs(emp - exact_marginal(bn, j)).sum()
        assert tv <= 0.01


@pytest.mark.parametrize("name", ["cancer", "earthquake", "survey"])
def test_conditional_frequencies_match_cpts(name):
    # 0.02 holds for rows expected to see 10k samples (about 4 standard
    # errors); rarer parent configurations get a 5 standard error band
    bn = load_network(name)
    n = 200_000
    data = forward_sample(bn, n, seed=7)
    joint = joint_distribution(bn)
    g = bn.graph
    for i in range(g.n_nodes):
        pa = g.parents[i]
        other = tuple(a for a in range(g.n_nodes) if a not in pa)
        p_config = joint.sum(axis=other) if pa else np.array(1.0)
        for states in itertools.product(*[range(bn.cardinalities[p]) for p in pa]):
            mask = np.ones(data.n, dtype=bool)
            for p, s in zip(pa, states):
                mask &= data.values[:, p] == s
            m = int(mask.sum())
            if m == 0:
                continue
            emp = np.bincount(data.values[mask, i], minlength=bn.cardinalities[i]) / m
            row = bn.cpts[i][bn.row_index(i, states)]
            expected = n * float(p_config[tuple(states)] if pa else p_config)
            if expected >= 10_000:
                tol = 0.02
            else:
                tol = 5 * np.sqrt(np.maximum(row * (1 - row), 1e-4) / m).max()
            assert np.max(np.abs(emp - row)) <= tol, (name, g.node_names[i], states, m)


def test_gaussian_regression_slope():
    bn = parse_gaussian_network("node A 0 1\nnode B 0.5 1\narc A B 1.7\n")
    data = forward_sample(bn, 100_000, seed=5)
    a, b = data.values[:, 0], data.values[:, 1]
    slope, intercept = np.polyfit(a, b, 1)
    resid = b - (slope * a + intercept)
    se = np.sqrt(resid.var(ddof=2) / ((a - a.mean()) ** 2).sum())
    assert abs(slope - 1.7) < 3 * se


# -- exact inference -------------------------------------------------------------------------


def test_identity_chain_marginal():
    bn = DiscreteBn(Dag(("A", "B"), {(0, 1)}), (2, 2), ([0.7, 0.3], [[1.0, 0.0], [0.0, 1.0]]))
    assert exact_marginal(bn, "B")[1] == pytest.approx(0.3, abs=1e-12)


def test_earthquake_marginals_normalized():
    bn = load_network("earthquake")
    for j in range(bn.graph.n_nodes):
        assert abs(exact_marginal(bn, j).sum() - 1.0) < 1e-9


def test_collider_joint_by_hand():
    # A ~ (0.6, 0.4), B ~ (0.2, 0.8), P(C=1 | a, b) listed with A as the slower index
    pc1 = {(0, 0): 0.1, (0, 1): 0.5, (1, 0): 0.7, (1, 1): 0.95}
    cpt_c = [[1 - pc1[k], pc1[k]] for k in itertools.product((0, 1), (0, 1))]
    bn = DiscreteBn(Dag(("A", "B", "C"), {(0, 2), (1, 2)}), (2, 2, 2), ([0.6, 0.4], [0.2, 0.8], cpt_c))
    pa, pb = (0.6, 0.4), (0.2, 0.8)
    joint = joint_distribution(bn)
    for a, b, c in itertools.product((0, 1), repeat=3):
        want = pa[a] * pb[b] * (pc1[a, b] if c else 1 - pc1[a, b])
        assert joint[a, b, c] == pytest.approx(want, abs=1e-12)
    want_c1 = sum(pa[a] * pb[b] * pc1[a, b] for a, b in itertools.product((0, 1), (0, 1)))
    assert exact_marginal(bn, "C")[1] == pytest.approx(want_c1, abs=1e-12)


def test_joint_guard():
    with pytest.raises(NetworkTooLargeError):
        joint_distribution(load_network("alarm"))
