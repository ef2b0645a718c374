"""Ball carving with a fixed ambient ball, and consistency audits of the resulting scheme."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .embedding import EmbeddedSet, MuMetric, embed, restrict
from .errors import BudgetExceeded, ContractViolation
from .rng import Stream, ball_points_keys


@dataclass(frozen=True)
class CarveParams:
    delta: float = 0.5
    r0: float = 1.0
    seed: int = 0
    max_draws: int = 1_000_000
    tag: str = "carve"

    def __post_init__(self):
        if self.delta <= 0:
            raise ContractViolation("delta must be positive")


@dataclass(frozen=True)
class Partition:
    clusters: tuple  # tuple of sorted vertex tuples, ordered by first member
    centers: tuple  # center index that claimed each cluster, aligned with clusters
    seed: int
    trial: int

    def restrict(self, T) -> "Partition":
        T = set(T)
        pairs = []
        for cl, c in zip(self.clusters, self.centers):
            sub = tuple(v for v in cl if v in T)
            if sub:
                pairs.append((sub, c))
        pairs.sort()
        return Partition(tuple(p for p, _ in pairs), tuple(c for _, c in pairs), self.seed, self.trial)

    def splits(self, e) -> bool:
        e = set(e)
        return not any(e <= set(cl) for cl in self.clusters)

    def block_of(self) -> dict:
        return {v: i for i, cl in enumerate(self.clusters) for v in cl}

    @property
    def shape(self) -> tuple:
        return self.clusters


def _first_cover(points: np.ndarray, params: CarveParams, trials) -> np.ndarray:
    """Index of the first center within delta/2 of each point, for each trial.

    Trial r uses the centers of Stream(seed, tag, dim, r) in order.  Every
    distance is accumulated coordinate by coordinate, so a point's answer does
    not depend on which other points or trials are in the batch.  Returns an
    array of shape (len(trials), len(points)).
    """
    npts, dim = points.shape
    trials = list(trials)
    keys = np.array([Stream(params.seed, params.tag, dim, r).key for r in trials], dtype=np.uint64)
    radius = params.r0 + params.delta / 2.0
    r2 = (params.delta / 2.0) ** 2
    owner = np.full((len(trials), npts), -1, dtype=np.int64)
    active = np.arange(len(trials))
    start = 0
    batch = int(min(65536, max(256, 2 * ((radius / (params.delta / 2.0)) ** dim))))
    while len(active):
        if start >= params.max_draws:
            raise BudgetExceeded("carving center draws", start, params.max_draws)
        count = min(batch, params.max_draws - start)
        step = max(1, 4_000_000 // max(1, count * npts))
        for lo in range(0, len(active), step):
            rows = active[lo:lo + step]
            C = ball_points_keys(keys[rows], start, count, dim, radius)
            acc = np.zeros((len(rows), npts, count))
            for c in range(dim):
                diff = points[None, :, c, None] - C[:, None, :, c]
                acc += diff * diff
            hit = acc <= r2
            first = start + np.argmax(hit, axis=2)
            cur = owner[rows]
            fill = (cur < 0) & hit.any(axis=2)
            cur[fill] = first[fill]
            owner[rows] = cur
        active = active[np.any(owner[active] < 0, axis=1)]
        start += count
        batch = min(batch * 2, 65536)
    return owner


def _to_partition(vertices, owner_row, seed, trial) -> Partition:
    groups: dict = {}
    for v, o in zip(vertices, owner_row.tolist()):
        groups.setdefault(o, []).append(v)
    pairs = sorted((tuple(sorted(vs)), o) for o, vs in groups.items())
    return Partition(tuple(p for p, _ in pairs), tuple(o for _, o in pairs), seed, trial)


def _check_ball(points: EmbeddedSet, params: CarveParams):
    X = points.vectors
    norms = np.sqrt(np.sum(X * X, axis=1))
    if np.any(norms > params.r0 + 1e-9):
        raise ContractViolation("points must lie in B(0, r0)")


def carve_many(points: EmbeddedSet, params: CarveParams, trials) -> list:
    """carve() for several trial indices at once; identical results, less overhead."""
    _check_ball(points, params)
    trials = list(trials)
    owner = _first_cover(points.vectors, params, trials)
    return [_to_partition(points.vertices, owner[i], params.seed, r) for i, r in enumerate(trials)]


def carve(points: EmbeddedSet, params: CarveParams, trial: int) -> Partition:
    return carve_many(points, params, [trial])[0]


def sample_partition(metric: MuMetric, S, params: CarveParams, trial: int,
                     parent: EmbeddedSet | None = None, dim: int | None = None) -> Partition:
    """Partition of S; when ``parent`` covers S its embedding is restricted instead of recomputed."""
    if parent is not None:
        emb = restrict(parent, S)
    else:
        emb = embed(metric, S, dim)
    return carve(emb, params, trial)


def check_partition(metric: MuMetric, emb: EmbeddedSet, part: Partition, delta: float) -> list:
    """Violations of the two diameter invariants (empty list when fine)."""
    bad = []
    pos = {v: i for i, v in enumerate(emb.vertices)}
    for cl in part.clusters:
        for i, u in enumerate(cl):
            for v in cl[i + 1:]:
                d2 = float(np.linalg.norm(emb.vectors[pos[u]] - emb.vectors[pos[v]]))
                if d2 > delta + 1e-12:
                    bad.append(("l2", u, v, d2))
                dh = metric.dist(u, v)
                if dh > metric.delta_h:
                    bad.append(("graph", u, v, dh))
    return bad


def split_frequency(metric: MuMetric, e, params: CarveParams, trials: int, dim: int | None = None):
    """(splits, trials) for the edge e over trials 0..trials-1."""
    emb = embed(metric, e, dim)
    hits = sum(p.splits(e) for p in carve_many(emb, params, range(trials)))
    return hits, trials


@dataclass
class AuditReport:
    mode: str
    trials: int
    matches: int | None = None
    tv: float | None = None
    band: float | None = None
    counts_parent: dict | None = None
    counts_child: dict | None = None

    @property
    def ok(self) -> bool:
        if self.mode == "coupled":
            return self.matches == self.trials
        return self.tv <= 0.05 + self.band

    def to_json(self) -> dict:
        out = {"mode": self.mode, "trials": self.trials, "ok": self.ok}
        if self.mode == "coupled":
            out["matches"] = self.matches
        else:
            out["tv"] = self.tv
            out["band"] = self.band
            out["counts_parent"] = {_shape_key(k): v for k, v in sorted(self.counts_parent.items())}
            out["counts_child"] = {_shape_key(k): v for k, v in sorted(self.counts_child.items())}
        return out


def _shape_key(clusters) -> str:
    return "|".join(",".join(map(str, c)) for c in clusters)


def tv_band(p: dict, q: dict, n: int) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(math.sqrt((p.get(k, 0) + q.get(k, 0)) / n / n) for k in keys) + math.sqrt(math.log(1000) / n)


def scheme_consistency_audit(metric: MuMetric, S, T, trials: int, params: CarveParams,
                             mode: str = "coupled") -> AuditReport:
    S = tuple(sorted(set(S)))
    T = tuple(sorted(set(T)))
    if not set(T) <= set(S):
        raise ContractViolation("T must be a subset of S")
    embS = embed(metric, S)
    if mode == "coupled":
        embT = restrict(embS, T)
        ps = carve_many(embS, params, range(trials))
        pt = carve_many(embT, params, range(trials))
        matches = sum(a.restrict(T).clusters == b.clusters for a, b in zip(ps, pt))
        return AuditReport("coupled", trials, matches=matches)
    if mode != "independent":
        raise ContractViolation(f"unknown audit mode {mode}")
    # T embedded on its own (same ambient dimension) and carved with an unrelated center stream
    embT = embed(metric, T, dim=embS.dim)
    other = CarveParams(params.delta, params.r0, params.seed, params.max_draws, params.tag + "-independent")
    cp = Counter(p.restrict(T).clusters for p in carve_many(embS, params, range(trials)))
    cq = Counter(p.clusters for p in carve_many(embT, other, range(trials)))
    keys = set(cp) | set(cq)
    tv = 0.5 * sum(abs(cp.get(k, 0) - cq.get(k, 0)) for k in keys) / trials
    return AuditReport("independent", trials, tv=tv, band=tv_band(cp, cq, trials),
                       counts_parent=dict(cp), counts_child=dict(cq))
