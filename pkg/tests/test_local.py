import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causalkit.bn import forward_sample
from causalkit.ci import DataCI, OracleCI
from causalkit.dataset import Dataset
from causalkit.graph import Dag, dag_to_cpdag, true_local
from causalkit.local import LOCAL_ALGORITHMS, learn_local
from causalkit.mb import UnknownAlgorithmError
from causalkit.networks import load_network
from causalkit.pcsets import PC_VARIANTS, Search, hiton_pc_bar, learn_pc_set, symmetric_pc

from conftest import NAMES, all_dags, dags


def check_against_cpdag(g, cp, t, st_):
    """Adjacency exact, and every orientation agrees with a compelled CPDAG edge."""
    assert st_.pc == true_local(g, t).pc
    for u in st_.parents:
        assert (u, t) in cp.directed
    for u in st_.children:
        assert (t, u) in cp.directed


# -- PC sets ---------------------------------------------------------------------------------


@pytest.mark.parametrize("variant", PC_VARIANTS)
def test_pc_set_edgeless(variant):
    g = Dag(tuple("ABCD"))
    pc, _ = learn_pc_set(OracleCI(g), "A", variant)
    assert pc == frozenset()


@pytest.mark.parametrize("variant", ["MMPC", "GetPC"])
def test_pc_set_exact_on_water(variant):
    g = load_network("water").graph
    assert (g.n_nodes, len(g.edges)) == (32, 66)
    ci = OracleCI(g)
    for t in range(g.n_nodes):
        pc, seps = learn_pc_set(ci.fresh(), t, variant)
        assert pc == true_local(g, t).pc
        for pair in seps:
            assert t in pair


def test_hiton_pc_on_water_is_a_superset_fixed_by_symmetry():
    # conditioning on a root's children opens paths through spouses, so some
    # later slices cannot be separated within PC(t) alone
    g = load_network("water").graph
    ci = OracleCI(g)
    s = Search(ci)
    loose = 0
    for t in range(g.n_nodes):
        truth = true_local(g, t).pc
        pc, _ = learn_pc_set(ci.fresh(), t, "HITON-PC")
        assert truth <= pc
        loose += pc != truth
        assert frozenset(symmetric_pc(s, t, hiton_pc_bar)) == truth
    assert loose > 0


def test_getpc_within_hiton_pc_under_cap():
    # T -> A <- S -> X and A -> X: separating T from X needs {A, S}, and S is
    # not adjacent to T, so only the symmetric variant drops X
    g = Dag.from_names(("T", "A", "B", "S", "X"),
                       [("T", "A"), ("A", "X"), ("S", "A"), ("S", "X")])
    ci = OracleCI(g, max_cond=2)
    getpc, _ = learn_pc_set(ci.fresh(), "T", "GetPC")
    hiton, _ = learn_pc_set(ci.fresh(), "T", "HITON-PC")
    assert getpc == {1} and hiton == {1, 4}
    for cap in (2, 3):
        ci = OracleCI(load_network("water").graph, max_cond=cap)
        for t in range(32):
            getpc, _ = learn_pc_set(ci.fresh(), t, "GetPC")
            hiton, _ = learn_pc_set(ci.fresh(), t, "HITON-PC")
            assert getpc <= hiton


# -- local structure --------------------------------------------------------------------------


def test_unknown_local_algorithm():
    with pytest.raises(UnknownAlgorithmError):
        learn_local(OracleCI(Dag(("A", "B"))), "A", "SCA")


@pytest.mark.parametrize("alg", LOCAL_ALGORITHMS)
def test_single_parent_is_unoriented(alg):
    g = Dag.from_names(("A", "T"), [("A", "T")])
    st_ = learn_local(OracleCI(g), "T", alg).structure
    assert st_.undirected_neighbors == {0} and not st_.parents and not st_.children


@pytest.mark.parametrize("alg", LOCAL_ALGORITHMS)
def test_collider_parents(alg):
    g = Dag.from_names(("A", "T", "B"), [("A", "T"), ("B", "T")])
    st_ = learn_local(OracleCI(g), "T", alg).structure
    assert st_.parents == {0, 2} and not st_.children and not st_.undirected_neighbors


@pytest.mark.parametrize("n", [2, 3, 4])
def test_exhaustive_small_dags(n):
    for g in all_dags(n):
        ci = OracleCI(g)
        cp = dag_to_cpdag(g)
        for t in range(n):
            for alg in LOCAL_ALGORITHMS:
                check_against_cpdag(g, cp, t, learn_local(ci.fresh(), t, alg).structure)


@pytest.mark.parametrize("alg", LOCAL_ALGORITHMS)
@pytest.mark.parametrize("name", ["asia", "sachs", "child", "alarm"])
def test_oracle_exact_on_networks(alg, name):
    g = load_network(name).graph
    cp = dag_to_cpdag(g)
    ci = OracleCI(g)
    for t in range(g.n_nodes):
        check_against_cpdag(g, cp, t, learn_local(ci.fresh(), t, alg).structure)


@pytest.mark.parametrize("alg", LOCAL_ALGORITHMS)
def test_compelled_target_edges_oriented_on_asia(alg):
    g = load_network("asia").graph
    cp = dag_to_cpdag(g)
    ci = OracleCI(g)
    for t in range(g.n_nodes):
        st_ = learn_local(ci.fresh(), t, alg).structure
        compelled = {u for u in range(g.n_nodes) if (u, t) in cp.directed or (t, u) in cp.directed}
        assert compelled == st_.parents | st_.children


@settings(max_examples=40, deadline=None)
@given(dags(min_nodes=2, max_nodes=7), st.sampled_from(LOCAL_ALGORITHMS))
def test_oracle_sound_random_dags(g, alg):
    cp = dag_to_cpdag(g)
    ci = OracleCI(g)
    for t in range(g.n_nodes):
        a = learn_local(ci.fresh(), t, alg)
        b = learn_local(ci.fresh(), t, alg)
        check_against_cpdag(g, cp, t, a.structure)
        assert a.visited == b.visited and a.visited[0] == t


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(20, 300), st.sampled_from(LOCAL_ALGORITHMS))
def test_fuzzed_outputs_disjoint(seed, n, alg):
    rng = np.random.default_rng(seed)
    vals = rng.integers(0, 2, size=(n, 5))
    vals[:, 2] = vals[:, 0] ^ vals[:, 1] ^ (rng.random(n) < 0.1)
    data = Dataset(NAMES[:5], (2,) * 5, vals)
    for t in range(5):
        st_ = learn_local(DataCI(data), t, alg).structure
        sets = [st_.parents, st_.children, st_.undirected_neighbors, st_.spouses]
        for i in range(4):
            assert t not in sets[i]
            for j in range(i + 1, 4):
                assert not sets[i] & sets[j]


def test_sampled_data_runs():
    data = forward_sample(load_network("asia"), 5000, seed=8)
    for alg in LOCAL_ALGORITHMS:
        r = learn_local(DataCI(data), "either", alg)
        assert r.n_ci_tests > 0 and r.algorithm == alg
        assert r.names("pc")
