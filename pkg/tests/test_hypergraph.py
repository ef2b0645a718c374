import itertools
from collections import Counter

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from gapforge.csp import c5_maxcut
from gapforge.errors import BudgetExceeded, ContractViolation
from gapforge.hypergraph import (Hypergraph, degree_prune, girth_repair, incidence_graph, random_hypergraph,
                                 sample_edge, sparsity_audit)
from gapforge.rng import Stream


@st.composite
def hypergraphs(draw, max_n=7, max_m=7):
    k = draw(st.sampled_from([2, 3]))
    n = draw(st.integers(k, max_n))
    m = draw(st.integers(0, max_m))
    edges = [tuple(draw(st.permutations(range(n)))[:k]) for _ in range(m)]
    return Hypergraph(n, edges, k=k)


def nx_incidence(h):
    g = nx.Graph()
    g.add_nodes_from(("v", v) for v in range(h.n))
    for i, e in enumerate(h.edges):
        for v in e:
            g.add_edge(("v", v), ("e", i))
    return g


def nx_cycle_count(h, l):
    # Berge cycles of length L are simple cycles of length 2L in the incidence graph
    return sum(1 for c in nx.simple_cycles(nx_incidence(h), length_bound=2 * l) if len(c) >= 4)


def nx_girth(h, cap):
    lens = [len(c) // 2 for c in nx.simple_cycles(nx_incidence(h), length_bound=2 * cap) if len(c) >= 4]
    return min(lens) if lens else float("inf")


@given(hypergraphs())
@settings(max_examples=80, deadline=None)
def test_cycle_count_matches_networkx(h):
    for l in (2, 3, 4):
        assert h.count_cycles_upto(l) == nx_cycle_count(h, l)
    assert h.girth(5) == nx_girth(h, 5)


def test_small_cycle_facts():
    c5 = Hypergraph.from_instance(c5_maxcut())
    assert c5.girth() == 5 and c5.count_cycles_upto(5) == 1 and c5.count_cycles_upto(4) == 0
    dup = Hypergraph(3, [(0, 1), (0, 1)])
    assert dup.girth() == 2
    tri = Hypergraph(4, [(0, 1, 2), (1, 2, 3)])
    # two 3-edges sharing two vertices: one 2-cycle
    assert tri.count_cycles_upto(2) == 1


@given(hypergraphs(), st.integers(2, 5))
@settings(max_examples=80, deadline=None)
def test_girth_repair_postcondition(h, g):
    sub, deleted = girth_repair(h, g)
    assert nx_girth(sub, g - 1) >= g or g == 2
    assert sorted(Counter(sub.ids) + Counter(deleted)) == sorted(Counter(h.ids))
    assert sub.m + len(deleted) == h.m
    # deterministic
    assert girth_repair(h, g)[1] == deleted


@given(hypergraphs(), st.integers(1, 4))
@settings(max_examples=50, deadline=None)
def test_degree_prune(h, D):
    sub, dropped = degree_prune(h, D)
    heavy = {v for v in range(h.n) if h.degree(v) > D}
    assert all(not heavy & set(e) for e in sub.edges)
    assert len(dropped) == sum(1 for e in h.edges if heavy & set(e))


@given(hypergraphs())
@settings(max_examples=60, deadline=None)
def test_distances_match_networkx(h):
    g = nx_incidence(h)
    for u in range(h.n):
        lens = nx.single_source_shortest_path_length(g, ("v", u))
        for v in range(h.n):
            ref = lens.get(("v", v))
            assert h.distance(u, v) == (float("inf") if ref is None else ref // 2)


def closure_oracle(h, S, R):
    g = nx_incidence(h)
    out = set(S)
    for a, b in itertools.combinations(sorted(set(S)), 2):
        for p in nx.all_simple_paths(g, ("v", a), ("v", b), cutoff=2 * R):
            for kind, x in p:
                if kind == "e":
                    out.update(h.edges[x])
    return frozenset(out)


@given(hypergraphs(max_n=8, max_m=8), st.data())
@settings(max_examples=80, deadline=None)
def test_closure_matches_path_enumeration(h, data):
    S = data.draw(st.sets(st.integers(0, h.n - 1), min_size=1, max_size=3))
    for R in (1, 2, 3):
        assert h.closure(S, R) == closure_oracle(h, S, R)


def test_closure_rejects_radius_zero():
    with pytest.raises(ContractViolation):
        Hypergraph(3, [(0, 1)]).closure({0, 1}, 0)


def sparse_oracle(h, eta, smax):
    for size in range(1, smax + 1):
        for S in itertools.combinations(range(h.n), size):
            ne = sum(1 for e in h.edges if set(e) <= set(S))
            if ne > size / (h.k - 1 - eta):
                return False
    return True


@given(hypergraphs(max_n=8, max_m=10), st.sampled_from([0.25, 0.5, 0.75]), st.sampled_from([0.5, 1.0]))
@settings(max_examples=60, deadline=None)
def test_sparsity_exhaustive_matches_brute_force(h, eta, tau):
    if h.k == 2:
        eta = eta / 2
    rep = sparsity_audit(h, eta, "exhaustive", tau)
    assert rep.ok == sparse_oracle(h, eta, max(1, int(tau * h.n)))
    if not rep.ok:
        assert rep.edges_in_witness == sum(1 for e in h.edges if set(e) <= set(rep.witness))


def test_sparsity_sampled_finds_dense_core():
    # a dense 3-uniform core hidden in a large sparse graph
    core = [e for e in itertools.combinations(range(6), 3)]
    st_ = Stream(1, "pad")
    pad = [tuple(st_.sample(range(6, 60), 3)) for _ in range(10)]
    h = Hypergraph(60, core + pad, k=3)
    rep = sparsity_audit(h, 0.5, "sampled", tau=0.2, seed=3)
    assert not rep.ok and set(rep.witness) <= set(range(60))
    assert rep.edges_in_witness > len(rep.witness) / 1.5
    with pytest.raises(BudgetExceeded):
        sparsity_audit(h, 0.5, "exhaustive")
    with pytest.raises(ContractViolation):
        sparsity_audit(h, 2.5)


def test_incidence_graph():
    h = Hypergraph(4, [(0, 1, 2), (1, 2, 3)])
    g = incidence_graph(h)
    assert g.n == 6 and g.m == 6
    assert g.neighbors(g.edge_node(1)) == {1, 2, 3}


def test_random_hypergraph_blocks_and_uniformity():
    h = random_hypergraph(10, 3000, 3, 2, seed=4)
    assert h.n == 30 and h.m == 3000
    assert all(e[0] < 10 <= e[1] < 20 for e in h.edges)
    cnt = Counter(v for e in h.edges for v in e if v < 10)
    chi2 = sum((c - 300) ** 2 / 300 for c in cnt.values())
    assert chi2 < 27.9  # 0.999 quantile, 9 dof
    assert random_hypergraph(10, 30, 3, 2, seed=4).edges == random_hypergraph(10, 30, 3, 2, seed=4).edges


def test_random_hypergraph_types_and_repeats():
    h = random_hypergraph(5, 500, 2, 3, types=[(1, (0, 0, 1)), (3, (0, 1, 1))], seed=2)
    kinds = Counter(tuple(v // 5 for v in e) for e in h.edges)
    assert set(kinds) == {(0, 0, 1), (0, 1, 1)}
    assert abs(kinds[(0, 1, 1)] / 500 - 0.75) < 0.07
    e = sample_edge(Stream(0, "x"), 2, (0, 0))
    assert sorted(e) == [0, 1]


def test_bad_edges():
    with pytest.raises(ContractViolation):
        Hypergraph(3, [(0, 0)])
    with pytest.raises(ContractViolation):
        Hypergraph(3, [(0, 3)])
    with pytest.raises(ContractViolation):
        Hypergraph(3, [(0, 1), (0, 1, 2)])
