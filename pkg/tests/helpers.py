"""Brute-force oracles and random generators shared by the tests."""

import itertools
from fractions import Fraction

from gapforge.distributions import LocalDistribution
from gapforge.hypergraph import Hypergraph
from gapforge.rng import Stream


def brute_opt(inst):
    """Plain-python maximum over all assignments (independent of the vectorized solver)."""
    best = -1
    for a in itertools.product(range(inst.q), repeat=inst.n):
        s = 0
        for c in inst.constraints:
            vals = tuple((a[v] + b) % inst.q for v, b in zip(c.scope, c.shift))
            s += inst.predicate(vals)
        best = max(best, s)
    return Fraction(best, inst.m)


def brute_fourier(table, k):
    out = {}
    for r in range(k + 1):
        for S in itertools.combinations(range(k), r):
            tot = 0
            for x in itertools.product((0, 1), repeat=k):
                idx = int("".join(map(str, x)), 2) if k else 0
                tot += table[idx] * (-1) ** sum(x[i] for i in S)
            out[S] = Fraction(tot, 2 ** k)
    return out


def random_tree(st: Stream, max_edges=6, arities=(2, 3)):
    """A hypertree: each new edge meets the tree in exactly one old vertex."""
    k = arities[st.randrange(len(arities))]
    nedges = 1 + st.randrange(max_edges)
    edges = [tuple(range(k))]
    nv = k
    for _ in range(nedges - 1):
        anchor = st.randrange(nv)
        e = (anchor,) + tuple(range(nv, nv + k - 1))
        nv += k - 1
        edges.append(e)
    return Hypergraph(nv, edges, k=k)


def random_rational(st: Stream, den=12, lo=1):
    return Fraction(lo + st.randrange(den - 2 * lo + 1), den)


def random_consistent_dists(st: Stream, h: Hypergraph):
    """Vertex marginals plus edge distributions that agree with them exactly.

    Edge distribution = product of its vertex marginals plus a small
    perturbation with zero single-vertex marginals on one pair of coordinates.
    """
    vd = {}
    for v in range(h.n):
        p = random_rational(st)
        vd[v] = LocalDistribution((v,), {(0,): p, (1,): 1 - p})
    ed = {}
    for e in h.edges:
        prod = {}
        for a in itertools.product((0, 1), repeat=len(e)):
            w = Fraction(1)
            for v, x in zip(e, a):
                w *= vd[v].prob((x,))
            prod[a] = w
        i, j = 0, 1
        g = {a: (-1) ** (a[i] + a[j]) * prod[a] / (vd[e[i]].prob((a[i],)) * vd[e[j]].prob((a[j],)))
             * Fraction(1, 4) for a in prod}
        # scale so everything stays nonnegative
        lim = min(prod[a] / abs(g[a]) for a in prod if g[a])
        lam = lim * Fraction(st.randrange(101), 100)
        ed[e] = LocalDistribution(e, {a: prod[a] + lam * g[a] for a in prod})
    return ed, vd


def formula_joint(h: Hypergraph, W, ed, vd):
    """Direct evaluation of prod_e D_e / prod_u D_u^(deg-1) over all 2^|W| strings."""
    W = sorted(W)
    E = [e for e in h.edges if sum(v in W for v in e) >= 2]
    deg = {v: sum(v in e for e in E) for v in W}
    out = {}
    for a in itertools.product((0, 1), repeat=len(W)):
        val = dict(zip(W, a))
        p = Fraction(1)
        for e in E:
            p *= ed[e].prob(tuple(val[v] for v in e))
        for v in W:
            d = vd[v].prob((val[v],))
            if deg[v] == 0:
                p *= d
            elif deg[v] > 1:
                if d == 0:
                    p = Fraction(0)
                    break
                p /= d ** (deg[v] - 1)
        if p:
            out[a] = p
    return LocalDistribution(tuple(W), out)
