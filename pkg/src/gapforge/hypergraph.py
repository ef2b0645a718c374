"""k-uniform hypergraphs: distances, closures, cycles, girth repair, sparsity."""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, ContractViolation
from .rng import Stream

INF = math.inf


class Hypergraph:
    """Vertices 0..n-1 and a list of k-edges (sorted tuples).

    ``ids`` carries a label per edge (the constraint index it came from) so
    sub-hypergraphs can report which original edges they dropped.
    """

    def __init__(self, n: int, edges, ids=None, blocks=None, k: int | None = None):
        self.n = int(n)
        self.edges = [tuple(sorted(int(v) for v in e)) for e in edges]
        self.k = k if k is not None else (len(self.edges[0]) if self.edges else 2)
        for e in self.edges:
            if len(e) != self.k:
                raise ContractViolation(f"edge {e} is not a {self.k}-set")
            if len(set(e)) != self.k:
                raise ContractViolation(f"edge {e} repeats a vertex")
            if e[0] < 0 or e[-1] >= self.n:
                raise ContractViolation(f"edge {e} outside [0, {self.n})")
        self.ids = list(range(len(self.edges))) if ids is None else list(ids)
        self.blocks = blocks
        self.inc = [[] for _ in range(self.n)]
        for i, e in enumerate(self.edges):
            for v in e:
                self.inc[v].append(i)

    @classmethod
    def from_instance(cls, inst, dedup: bool = False):
        """Hypergraph of an instance; with dedup, one edge per distinct scope set."""
        edges, ids, seen = [], [], set()
        for i, c in enumerate(inst.constraints):
            key = c.key
            if dedup and key in seen:
                continue
            seen.add(key)
            edges.append(key)
            ids.append(i)
        return cls(inst.n, edges, ids, inst.parts, k=inst.k)

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.inc[v])

    def degrees(self) -> np.ndarray:
        return np.array([len(x) for x in self.inc], dtype=np.int64)

    def neighbors(self, v: int):
        out = set()
        for i in self.inc[v]:
            out.update(self.edges[i])
        out.discard(v)
        return out

    def subgraph(self, keep) -> "Hypergraph":
        keep = sorted(keep)
        return Hypergraph(self.n, [self.edges[i] for i in keep], [self.ids[i] for i in keep], self.blocks, self.k)

    # -- distances --------------------------------------------------------

    def bfs(self, src: int, limit=None) -> dict:
        dist = {src: 0}
        dq = deque([src])
        while dq:
            x = dq.popleft()
            d = dist[x]
            if limit is not None and d >= limit:
                continue
            for i in self.inc[x]:
                for y in self.edges[i]:
                    if y not in dist:
                        dist[y] = d + 1
                        dq.append(y)
        return dist

    def distance(self, u: int, v: int):
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise ContractViolation("vertex out of range")
        if u == v:
            return 0
        return self.bfs(u).get(v, INF)

    def diameter_of(self, S) -> float:
        S = list(S)
        best = 0
        for i, u in enumerate(S):
            d = self.bfs(u)
            for v in S[i + 1:]:
                best = max(best, d.get(v, INF))
        return best

    # -- closure ----------------------------------------------------------

    def closure(self, S, R: int = 1, budget: int = 2_000_000) -> frozenset:
        """cl_R(S): S plus every vertex of every simple path of length <= R between two members of S."""
        if R < 1:
            raise ContractViolation("closure radius must be >= 1")
        S = sorted(set(int(v) for v in S))
        out = set(S)
        if len(S) < 2:
            return frozenset(out)
        members = set(S)
        if R == 1:
            for u in S:
                for i in self.inc[u]:
                    if sum(1 for v in self.edges[i] if v in members) >= 2:
                        out.update(self.edges[i])
            return frozenset(out)
        # distance from every vertex to the two nearest members (so one can be excluded)
        near = {}
        for s in S:
            for x, d in self.bfs(s, R).items():
                lst = near.setdefault(x, [])
                lst.append((d, s))
                lst.sort()
                del lst[2:]
        steps = [0]

        def reach(x, u):
            for d, s in near.get(x, ()):
                if s != u:
                    return d
            return INF

        def dfs(u, x, length, used_v, used_e, path_edges):
            steps[0] += 1
            if steps[0] > budget:
                raise BudgetExceeded("closure path enumeration", steps[0], budget)
            if length == R:
                return
            for i in self.inc[x]:
                if i in used_e:
                    continue
                for y in self.edges[i]:
                    if y in used_v or reach(y, u) > R - length - 1:
                        continue
                    path_edges.append(i)
                    if y in members:
                        for j in path_edges:
                            out.update(self.edges[j])
                    used_v.add(y)
                    used_e.add(i)
                    dfs(u, y, length + 1, used_v, used_e, path_edges)
                    used_v.discard(y)
                    used_e.discard(i)
                    path_edges.pop()

        for u in S:
            dfs(u, u, 0, {u}, set(), [])
        return frozenset(out)

    def edges_touching(self, U, at_least: int = 2) -> list:
        """Indices of edges with at least ``at_least`` vertices in U."""
        U = set(U)
        cand = set()
        for u in U:
            cand.update(self.inc[u])
        return sorted(i for i in cand if sum(1 for v in self.edges[i] if v in U) >= at_least)

    def edges_within(self, S) -> list:
        return self.edges_touching(S, self.k)

    # -- cycles -----------------------------------------------------------

    def _cycles_from(self, v1: int, L: int, budget: list, first_only: bool):
        """Cycles v1,e1,...,vL,eL,v1 of length exactly L whose smallest vertex is v1."""
        found = []
        used_v = {v1}
        used_e = []

        def dfs(x, depth):
            budget[0] -= 1
            if budget[0] < 0:
                raise BudgetExceeded("cycle search", budget[1], budget[1])
            for i in self.inc[x]:
                if i in used_e:
                    continue
                e = self.edges[i]
                if depth == L - 1:
                    if v1 in e:
                        found.append(list(used_e) + [i])
                        if first_only:
                            return True
                    continue
                for y in e:
                    if y <= v1 or y in used_v:
                        continue
                    used_v.add(y)
                    used_e.append(i)
                    if dfs(y, depth + 1):
                        return True
                    used_e.pop()
                    used_v.discard(y)
            return False

        dfs(v1, 0)
        return found

    def count_cycles_upto(self, l: int, budget: int = 50_000_000) -> int:
        """Number of cycles of length 2..l (each cycle counted once, not per direction)."""
        if l < 2:
            raise ContractViolation("cycle length bound must be >= 2")
        b = [budget, budget]
        total = 0
        for L in range(2, l + 1):
            seq = 0
            for v in range(self.n):
                seq += len(self._cycles_from(v, L, b, False))
            total += seq // 2
        return total

    def find_cycle(self, maxlen: int):
        """A shortest cycle of length <= maxlen, as a list of edge indices, or None."""
        b = [10**9, 10**9]
        for L in range(2, maxlen + 1):
            for v in range(self.n):
                cyc = self._cycles_from(v, L, b, True)
                if cyc:
                    return cyc[0]
        return None

    def girth(self, cap: int = 12) -> float:
        cyc = self.find_cycle(cap)
        return INF if cyc is None else len(cyc)


def _edge_key(h: Hypergraph, i: int):
    return (h.edges[i], h.ids[i])


def girth_repair(h: Hypergraph, g: int, budget: int = 50_000_000):
    """Delete edges until no cycle of length < g remains.

    Lengths are handled shortest first, start vertices in increasing order;
    each cycle found loses its lexicographically largest edge (sorted vertex
    tuple, then label).  Returns (subhypergraph, deleted labels).
    """
    if g < 2:
        raise ContractViolation("girth target must be >= 2")
    alive = set(range(h.m))
    work = Hypergraph(h.n, h.edges, list(range(h.m)), h.blocks, h.k)
    deleted = []
    b = [budget, budget]
    for L in range(2, g):
        for v in range(h.n):
            while True:
                cyc = work._cycles_from(v, L, b, True)
                if not cyc:
                    break
                victim = max(cyc[0], key=lambda i: _edge_key(h, work.ids[i]))
                orig = work.ids[victim]
                alive.discard(orig)
                deleted.append(h.ids[orig])
                work = Hypergraph(h.n, [h.edges[i] for i in sorted(alive)], sorted(alive), h.blocks, h.k)
    return h.subgraph(sorted(alive)), deleted


def degree_prune(h: Hypergraph, D: int):
    """Drop every edge that touches a vertex of degree > D. Returns (subhypergraph, deleted labels)."""
    if D < 1:
        raise ContractViolation("degree cap must be >= 1")
    deg = h.degrees()
    heavy = set(np.nonzero(deg > D)[0].tolist())
    keep = [i for i, e in enumerate(h.edges) if not heavy.intersection(e)]
    dropped = [h.ids[i] for i, e in enumerate(h.edges) if heavy.intersection(e)]
    return h.subgraph(keep), dropped


# -- sparsity ---------------------------------------------------------------


@dataclass
class SparsityReport:
    ok: bool
    mode: str
    witness: tuple | None
    edges_in_witness: int
    bound: float
    sets_checked: int


def _is_sparse(nedges: int, size: int, k: int, eta: float) -> bool:
    return nedges <= size / (k - 1 - eta)


def sparsity_audit(h: Hypergraph, eta: float, mode: str = "auto", tau: float = 1.0,
                   seed: int = 0, samples: int = 200) -> SparsityReport:
    """Search for S with |S| <= tau*|V| and |E(S)| > |S|/(k-1-eta)."""
    if not 0 < eta < h.k - 1:
        raise ContractViolation("need 0 < eta < k-1")
    smax = max(1, int(math.floor(tau * h.n + 1e-12)))
    if mode == "auto":
        mode = "exhaustive" if h.n <= 24 else "sampled"
    if mode == "exhaustive":
        if h.n > 24:
            raise BudgetExceeded("exhaustive sparsity audit vertices", h.n, 24)
        return _audit_exhaustive(h, eta, smax)
    if mode != "sampled":
        raise ContractViolation(f"unknown audit mode {mode}")
    return _audit_sampled(h, eta, smax, seed, samples)


def _audit_exhaustive(h, eta, smax):
    n, k = h.n, h.k
    masks = np.array([sum(1 << v for v in e) for e in h.edges], dtype=np.int64)
    total = 1 << n
    chunk = 1 << 18
    checked = 0
    for start in range(1, total, chunk):
        S = np.arange(start, min(total, start + chunk), dtype=np.int64)
        size = np.zeros(len(S), dtype=np.int64)
        x = S.copy()
        while np.any(x):
            size += x & 1
            x >>= 1
        cnt = np.zeros(len(S), dtype=np.int64)
        for em in masks:
            cnt += (S & em) == em
        ok = (cnt * (k - 1 - eta) <= size + 1e-12) | (size > smax)
        checked += int(np.sum(size <= smax))
        if not np.all(ok):
            j = int(np.argmin(ok))
            wit = tuple(v for v in range(n) if (int(S[j]) >> v) & 1)
            return SparsityReport(False, "exhaustive", wit, int(cnt[j]), len(wit) / (k - 1 - eta), checked)
    return SparsityReport(True, "exhaustive", None, 0, 0.0, checked)


def _audit_sampled(h, eta, smax, seed, samples):
    k = h.k
    st = Stream(seed, "sparsity-audit")
    checked = 0

    def test(S):
        nonlocal checked
        S = tuple(sorted(S))
        if not S or len(S) > smax:
            return None
        checked += 1
        ne = len(h.edges_within(S))
        if not _is_sparse(ne, len(S), k, eta):
            return SparsityReport(False, "sampled", S, ne, len(S) / (k - 1 - eta), checked)
        return None

    # random subsets of every size, grown from a random edge so they are not trivially empty
    for size in range(1, smax + 1):
        for _ in range(max(1, samples // smax)):
            if h.m and size >= k:
                S = set(h.edges[st.randrange(h.m)])
                while len(S) < size:
                    frontier = sorted(set().union(*(h.neighbors(v) for v in S)) - S)
                    S.add(st.choice(frontier) if frontier else st.randrange(h.n))
            else:
                S = set(st.sample(range(h.n), size))
            r = test(S)
            if r:
                return r
    # BFS balls
    for _ in range(samples):
        v = st.randrange(h.n)
        order = sorted(h.bfs(v).items(), key=lambda kv: (kv[1], kv[0]))
        ball = [x for x, _ in order[:smax]]
        for size in range(1, len(ball) + 1):
            r = test(ball[:size])
            if r:
                return r
    # greedy densest-subhypergraph peel
    alive = set(range(h.n))
    deg = {v: 0 for v in alive}
    live_edges = set(range(h.m))
    for i in live_edges:
        for v in h.edges[i]:
            deg[v] += 1
    while alive:
        if len(alive) <= smax:
            r = test(alive)
            if r:
                return r
        v = min(alive, key=lambda x: (deg[x], x))
        alive.discard(v)
        for i in h.inc[v]:
            if i in live_edges:
                live_edges.discard(i)
                for y in h.edges[i]:
                    deg[y] -= 1
    return SparsityReport(True, "sampled", None, 0, 0.0, checked)


# -- incidence graph ----------------------------------------------------------


class IncidenceGraph(Hypergraph):
    """Bipartite graph on V(H) followed by E(H): vertex v is node v, edge i is node n + i."""

    def __init__(self, h: Hypergraph):
        pairs = [(v, h.n + i) for i, e in enumerate(h.edges) for v in e]
        super().__init__(h.n + h.m, pairs, k=2)
        self.base = h

    def vertex_node(self, v: int) -> int:
        return v

    def edge_node(self, i: int) -> int:
        return self.base.n + i


def incidence_graph(h: Hypergraph) -> IncidenceGraph:
    return IncidenceGraph(h)


# -- random model -------------------------------------------------------------


def sample_edge(stream: Stream, n: int, blocks_type) -> tuple:
    """One vertex per type entry, uniform in its block; repeats are redrawn."""
    out = []
    for b in blocks_type:
        while True:
            v = b * n + stream.randrange(n)
            if v not in out:
                break
        out.append(v)
    return tuple(out)


def random_hypergraph(n: int, m: int, n0: int, k: int, types=None, seed: int = 0) -> Hypergraph:
    """H_k(m, n, n0, Gamma) with Gamma an explicit list of (weight, type) pairs.

    The default Gamma is the single type (0, 1, ..., k-1), so edges are
    k-partite across the first k blocks.
    """
    if types is None:
        types = [(1, tuple(range(k)))]
    weights = [int(w) for w, _ in types]
    cum = list(itertools.accumulate(weights))
    st = Stream(seed, "random-hypergraph", n, m, n0, k)
    edges = []
    for _ in range(m):
        t = types[st.weighted_index(cum)][1]
        if len(t) != k:
            raise ContractViolation("type arity differs from k")
        edges.append(sample_edge(st, n, t))
    blocks = [v // n for v in range(n * n0)]
    return Hypergraph(n * n0, edges, blocks=blocks, k=k)
