"""The damped path metrics d_mu, rho_mu and unit-sphere embeddings of small sets."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, PreconditionFailed
from .hypergraph import INF, Hypergraph

PSD_TOL = 1e-6


def d_mu_value(dh, mu: float) -> float:
    if dh == 0:
        return 0.0
    if dh == INF:
        return 1.0
    return 1.0 - (1.0 - mu) ** (2 * dh)


def rho_mu_value(dh, mu: float) -> float:
    if dh == 0:
        return 0.0
    return math.sqrt((2.0 * d_mu_value(dh, mu) + mu) / (1.0 + mu))


def delta_h_for(mu: float, delta: float = 0.5) -> int:
    """Largest graph distance d >= 1 with rho_mu(d) <= delta, or 0 if there is none.

    Solving rho(d)^2 <= delta^2 gives (1-mu)^(2d) >= (2 + mu - delta^2 (1+mu)) / 2;
    the closed form is then nudged so that the inequality holds in floating point.
    """
    x = (2.0 + mu - delta * delta * (1.0 + mu)) / 2.0
    if x <= 0:
        raise ContractViolation("delta too large: every distance qualifies")
    if x >= 1:
        return 0
    d = int(math.floor(math.log(x) / (2.0 * math.log(1.0 - mu))))
    d = max(d, 0)
    while rho_mu_value(d + 1, mu) <= delta:
        d += 1
    while d >= 1 and rho_mu_value(d, mu) > delta:
        d -= 1
    return d


class MuMetric:
    def __init__(self, h: Hypergraph, mu: float, delta: float = 0.5):
        if not 0 < mu < 1:
            raise ContractViolation("mu must lie in (0, 1)")
        self.h = h
        self.mu = float(mu)
        self.delta = delta
        self.delta_h = delta_h_for(self.mu, delta)
        self._bfs = {}

    def dist(self, u: int, v: int):
        if u == v:
            return 0
        if u not in self._bfs:
            if len(self._bfs) > 4096:
                self._bfs.clear()
            self._bfs[u] = self.h.bfs(u)
        return self._bfs[u].get(v, INF)

    def d_mu(self, u: int, v: int) -> float:
        return d_mu_value(self.dist(u, v), self.mu)

    def rho_mu(self, u: int, v: int) -> float:
        return rho_mu_value(self.dist(u, v), self.mu)

    def gram(self, S) -> np.ndarray:
        S = list(S)
        if not S:
            raise ContractViolation("empty set")
        n = len(S)
        G = np.eye(n)
        for i in range(n):
            for j in range(i + 1, n):
                r = self.rho_mu(S[i], S[j])
                G[i, j] = G[j, i] = 1.0 - r * r / 2.0
        return G


class NotEmbeddable(PreconditionFailed):
    def __init__(self, vertices, min_eig):
        super().__init__(f"Gram matrix of {tuple(vertices)} has eigenvalue {min_eig:.3e}")
        self.vertices = tuple(vertices)
        self.min_eig = float(min_eig)


@dataclass
class EmbeddedSet:
    vertices: tuple
    vectors: np.ndarray  # one row per vertex
    provenance: tuple = ("fresh",)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def index(self, v) -> int:
        return self.vertices.index(v)

    def distances(self) -> np.ndarray:
        X = self.vectors
        diff = X[:, None, :] - X[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=2))


def pivoted_cholesky(G: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rows X with X X^T = G for PSD G, pivoting on the largest residual diagonal.

    Residual diagonals below ``tol`` (including small negatives) are clamped to
    zero and their columns dropped.
    """
    n = G.shape[0]
    X = np.zeros((n, n))
    d = np.diag(G).astype(float).copy()
    done = np.zeros(n, dtype=bool)
    for c in range(n):
        cand = np.where(done, -np.inf, d)
        p = int(np.argmax(cand))
        if cand[p] <= tol:
            break
        piv = math.sqrt(cand[p])
        X[p, c] = piv
        rest = ~done
        rest[p] = False
        idx = np.nonzero(rest)[0]
        X[idx, c] = (G[idx, p] - X[idx, :c] @ X[p, :c]) / piv
        d[idx] -= X[idx, c] ** 2
        done[p] = True
    return X


def embed(metric: MuMetric, S, dim: int | None = None) -> EmbeddedSet:
    """Unit vectors realizing rho_mu on S (sorted), or NotEmbeddable."""
    S = tuple(sorted(set(S)))
    G = metric.gram(S)
    lam = float(np.linalg.eigvalsh(G)[0]) if len(S) > 1 else 1.0
    if lam < -PSD_TOL:
        raise NotEmbeddable(S, lam)
    X = pivoted_cholesky(G)
    want = len(S) if dim is None else dim
    if want < len(S):
        used = np.nonzero(np.any(X != 0.0, axis=0))[0]
        if len(used) > want:
            raise ContractViolation(f"embedding needs dimension {len(used)} > {want}")
        X = X[:, used]
    if X.shape[1] < want:
        X = np.hstack([X, np.zeros((len(S), want - X.shape[1]))])
    elif X.shape[1] > want:
        X = X[:, :want]
    return EmbeddedSet(S, X, ("fresh",))


def try_embed(metric: MuMetric, S, dim: int | None = None):
    try:
        return embed(metric, S, dim)
    except NotEmbeddable as exc:
        return exc


def restrict(parent: EmbeddedSet, T) -> EmbeddedSet:
    T = tuple(sorted(set(T)))
    pos = {v: i for i, v in enumerate(parent.vertices)}
    missing = [v for v in T if v not in pos]
    if missing:
        raise ContractViolation(f"{missing} not in the parent set")
    rows = [pos[v] for v in T]
    return EmbeddedSet(T, parent.vectors[rows].copy(), ("restricted", parent.vertices))


def embedding_error(metric: MuMetric, emb: EmbeddedSet) -> float:
    """Largest deviation of the embedded distances and norms from rho_mu and 1."""
    D = emb.distances()
    err = float(np.max(np.abs(np.linalg.norm(emb.vectors, axis=1) - 1.0)))
    S = emb.vertices
    for i in range(len(S)):
        for j in range(i + 1, len(S)):
            err = max(err, abs(D[i, j] - metric.rho_mu(S[i], S[j])))
    return err
