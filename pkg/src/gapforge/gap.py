"""Lifting a basic-LP gap template to a random instance and building its Sherali-Adams family."""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from .certificates import (BasicCertificate, SACertificate, basic_from_lp, certificate_value,
                           verify_basic, verify_sa)
from .csp import Constraint, Instance, instance_from_dict, instance_to_dict, opt_exhaustive, opt_local_search
from .distributions import LocalDistribution, frac_str, mixture
from .embedding import MuMetric, NotEmbeddable, delta_h_for, embed, try_embed
from .errors import CertificateViolation, ContractViolation, NotATree, PreconditionFailed
from .hypergraph import Hypergraph, degree_prune, girth_repair, sample_edge
from .lp import build_basic_lp
from .partition import CarveParams, _first_cover
from .rng import Stream
from .simplex import solve_lp


# -- template ---------------------------------------------------------------


@dataclass
class Template:
    instance: Instance
    certificate: BasicCertificate
    c: Fraction
    s: Fraction
    name: str = ""

    @classmethod
    def build(cls, inst: Instance, certificate=None, s=None, name="") -> "Template":
        """Fill in a missing certificate (basic LP optimum) or soundness (exact optimum)."""
        if certificate is None:
            lp = build_basic_lp(inst)
            _, x = solve_lp(lp)
            certificate = basic_from_lp(inst, lp, x)
        rep = verify_basic(inst, certificate)
        if not rep.ok:
            raise ContractViolation(f"template certificate fails: {rep.violation}")
        if s is None:
            s = opt_exhaustive(inst)[0]
        return cls(inst, certificate, rep.value, Fraction(s), name)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "instance": instance_to_dict(self.instance),
            "certificate": self.certificate.to_json(),
            "c": frac_str(self.c),
            "s": frac_str(self.s),
        }

    @classmethod
    def from_json(cls, d: dict) -> "Template":
        if "instance" not in d:  # a bare instance file
            return cls.build(instance_from_dict(d))
        inst = instance_from_dict(d["instance"])
        cert = BasicCertificate.from_json(d["certificate"], inst.q) if d.get("certificate") else None
        s = Fraction(d["s"]) if d.get("s") is not None else None
        t = cls.build(inst, cert, s, d.get("name", ""))
        if d.get("c") is not None and t.c < Fraction(d["c"]):
            raise ContractViolation(f"certificate value {t.c} below the claimed {d['c']}")
        return t


def load_template(path) -> Template:
    with open(path) as fh:
        return Template.from_json(json.load(fh))


# -- lifting ----------------------------------------------------------------


@dataclass
class LiftedInstance:
    instance: Instance
    template: Template
    n: int  # block size
    origin: list  # template constraint index of each lifted constraint
    seed: int

    def block(self, v: int) -> int:
        return v // self.n

    def to_json(self) -> dict:
        return {
            "instance": instance_to_dict(self.instance),
            "template": self.template.to_json(),
            "block_size": self.n,
            "origin": list(self.origin),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, d: dict) -> "LiftedInstance":
        tpl = Template.from_json(d["template"])
        return cls(instance_from_dict(d["instance"]), tpl, int(d["block_size"]), list(d["origin"]), int(d["seed"]))


def lift_instance(template: Template, n: int, m: int, seed: int) -> LiftedInstance:
    """m constraints: a uniform template constraint, each variable replaced by a uniform member of its block."""
    base = template.instance
    if m < 1:
        raise ContractViolation("m must be >= 1")
    if n < base.k:
        raise ContractViolation(f"block size n={n} below arity k={base.k}")
    st = Stream(seed, "lift", n, m)
    cons, origin = [], []
    for _ in range(m):
        j = st.randrange(base.m)
        c0 = base.constraints[j]
        cons.append(Constraint(sample_edge(st, n, c0.scope), c0.shift))
        origin.append(j)
    parts = tuple(tuple(range(i * n, (i + 1) * n)) for i in range(base.n))
    inst = Instance(base.predicate, n * base.n, tuple(cons), parts)
    return LiftedInstance(inst, template, n, origin, seed)


def _relabel(dist: LocalDistribution, old_scope, new_scope, q) -> LocalDistribution:
    """Move a distribution from old_scope to new_scope position by position."""
    pos = {v: i for i, v in enumerate(dist.domain)}
    idx = [pos[u] for u in old_scope]
    probs = {tuple(a[i] for i in idx): p for a, p in dist.probs.items()}
    return LocalDistribution.from_unsorted(tuple(new_scope), probs, q)


def lift_basic_certificate(lifted: LiftedInstance) -> BasicCertificate:
    tpl = lifted.template
    base, inst = tpl.instance, lifted.instance
    if len(lifted.origin) != inst.m:
        raise ContractViolation("origin list does not match the constraints")
    pc = {}
    for c, j in zip(inst.constraints, lifted.origin):
        if c.key in pc:
            continue
        c0 = base.constraints[j]
        pc[c.key] = _relabel(tpl.certificate.per_constraint[c0.key], c0.scope, c.scope, inst.q)
    pv = {}
    for v in range(inst.n):
        d0 = tpl.certificate.per_variable[lifted.block(v)]
        pv[v] = LocalDistribution((v,), d0.probs, inst.q)
    return BasicCertificate(pc, pv)


# -- soundness --------------------------------------------------------------


@dataclass
class SoundnessReport:
    estimate: Fraction
    values: list
    method: str
    trials: int

    def to_json(self) -> dict:
        return {
            "estimate": frac_str(self.estimate),
            "values": [frac_str(v) for v in self.values],
            "method": self.method,
            "trials": self.trials,
        }


def opt_estimate(inst: Instance, seed: int, restarts: int = 20, exhaustive_budget: int = 1 << 20):
    """(value, method): exact when q^n fits the budget, otherwise local search."""
    if inst.q ** inst.n <= exhaustive_budget:
        return opt_exhaustive(inst, exhaustive_budget)[0], "exhaustive"
    return opt_local_search(inst, seed, restarts)[0], "local-search"


def soundness_estimate(template: Template, n: int, m: int, trials: int, seed: int,
                       restarts: int = 20) -> SoundnessReport:
    if trials < 1:
        raise ContractViolation("trials must be >= 1")
    values, methods = [], set()
    for r in range(trials):
        sub = Stream(seed, "soundness", r).key
        lifted = lift_instance(template, n, m, sub)
        v, how = opt_estimate(lifted.instance, sub, restarts)
        values.append(v)
        methods.add(how)
    return SoundnessReport(max(values), values, "+".join(sorted(methods)), trials)


# -- tree propagation -------------------------------------------------------


class MarginalMismatch(PreconditionFailed):
    def __init__(self, vertex, edge, left, right):
        super().__init__(f"edge {edge} has marginal {left} on vertex {vertex}, vertex distribution is {right}")
        self.vertex = vertex
        self.edge = edge
        self.left = left
        self.right = right


def _marg_str(d: LocalDistribution) -> str:
    return "{" + ", ".join(f"{a[0]}: {frac_str(p)}" for a, p in sorted(d.probs.items())) + "}"


def closure_edges(h: Hypergraph, U, radius: int):
    """(vertex set, edge indices) of the closure cl_radius(U) and the edges it spans."""
    U = set(U)
    W = set(h.closure(U, radius)) if len(U) > 1 else set(U)
    E = h.edges_touching(W, 2)
    for i in E:
        W.update(h.edges[i])
    return W, E


def _forest_check(h: Hypergraph, W, E) -> None:
    """Raise NotATree if the vertex-edge incidence graph of (W, E) has a cycle."""
    parent = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    adj = {}
    for i in E:
        for v in h.edges[i]:
            a, b = ("v", v), ("e", i)
            ra, rb = find(a), find(b)
            if ra == rb:
                raise NotATree(f"closure contains a cycle through edge {h.edges[i]}",
                               _incidence_cycle(h, adj, a, b))
            parent[ra] = rb
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)


def _incidence_cycle(h, adj, a, b):
    """Vertices and edges of the cycle closed by joining a and b (already connected)."""
    prev = {a: None}
    queue = [a]
    for x in queue:
        if x == b:
            break
        for y in adj.get(x, ()):
            if y not in prev:
                prev[y] = x
                queue.append(y)
    path = []
    x = b
    while x is not None:
        path.append(x)
        x = prev[x]
    return [v if kind == "v" else h.edges[v] for kind, v in path]


def _check_marginals(h, E, edge_dists, vertex_dists):
    for i in E:
        e = h.edges[i]
        if e not in edge_dists:
            raise ContractViolation(f"no distribution for edge {e}")
        de = edge_dists[e]
        for u in e:
            left = de.marginal((u,))
            right = vertex_dists[u]
            if left != right:
                raise MarginalMismatch(u, e, _marg_str(left), _marg_str(right))


def tree_joint(h: Hypergraph, U, edge_dists: dict, vertex_dists: dict, radius: int = 1,
               full: bool = False) -> LocalDistribution:
    """Joint on cl_radius(U) from edge and vertex distributions, marginalized to U.

    Built edge by edge along a traversal of each component: attaching edge e
    at its one already-placed vertex u multiplies by D_e / D_u, which gives
    prod_e D_e / prod_u D_u^(deg u - 1).  Vertices of U touched by no edge get
    their own distribution independently.  ``full=True`` returns the joint on
    the whole closure instead.
    """
    U = sorted(set(int(u) for u in U))
    if not U:
        raise ContractViolation("empty set")
    W, E = closure_edges(h, U, radius)
    _forest_check(h, W, E)
    _check_marginals(h, E, edge_dists, vertex_dists)
    q = vertex_dists[U[0]].q
    touched = {}
    for i in E:
        for v in h.edges[i]:
            touched.setdefault(v, []).append(i)

    pieces = []
    seen_e = set()
    for i0 in E:
        if i0 in seen_e:
            continue
        # one component: BFS over edges
        e0 = h.edges[i0]
        joint = dict(edge_dists[e0].probs)
        dom = list(e0)
        placed = set(dom)
        seen_e.add(i0)
        queue = [i0]
        for i in queue:
            for v in h.edges[i]:
                for j in touched[v]:
                    if j in seen_e:
                        continue
                    seen_e.add(j)
                    queue.append(j)
                    joint, dom = _attach(joint, dom, h.edges[j], v, edge_dists[h.edges[j]], vertex_dists[v])
                    placed.update(h.edges[j])
        pieces.append(LocalDistribution.from_unsorted(tuple(dom), joint, q))
    for v in sorted(W):
        if v not in touched:
            pieces.append(vertex_dists[v])
    acc = pieces[0]
    for p in pieces[1:]:
        acc = acc.product(p)
    return acc if full else acc.marginal(U)


def _attach(joint, dom, e, u, de, du):
    pos = dom.index(u)
    eu = e.index(u)
    new = [v for v in e if v != u]
    by_u = {}
    for b, p in de.probs.items():
        by_u.setdefault(b[eu], []).append((tuple(b[i] for i, v in enumerate(e) if v != u), p))
    out = {}
    for a, p in joint.items():
        x = a[pos]
        pu = du.prob((x,))
        for rest, r in by_u.get(x, ()):
            out[a + rest] = p * r / pu
    return out, dom + new


# -- Sherali-Adams family ---------------------------------------------------


@dataclass
class SAParams:
    t: int
    mu: float
    delta: float = 0.5
    trials: int = 256
    seed: int = 0
    degree_cap: int | None = None
    girth: int | None = None
    audit_roots: int = 20
    r0: float = 1.0
    tag: str = "carve"

    def to_json(self) -> dict:
        return {
            "t": self.t, "mu": self.mu, "delta": self.delta, "trials": self.trials, "seed": self.seed,
            "degree_cap": self.degree_cap, "girth": self.girth, "audit_roots": self.audit_roots,
            "r0": self.r0, "tag": self.tag,
        }


def default_mu(N: int, factor: float = 1.0) -> float:
    """2 lnln N / ln N times a user factor."""
    if N < 16:
        raise ContractViolation("default mu needs N >= 16")
    return factor * 2.0 * math.log(math.log(N)) / math.log(N)


def formula_level(eps: float, k: int, mu: float) -> int:
    return int(math.floor(eps * eps / (400.0 * k * k * mu)))


@dataclass
class SABuild:
    certificate: SACertificate
    params: SAParams
    delta_h: int
    girth: int
    deleted: list  # constraint indices in C_B
    roots: list  # audit roots
    audit_pairs: list
    split_counts: dict  # constraint scope -> trials (of M) in which it was split
    value: Fraction
    f_split: Fraction
    f_del: Fraction
    log_bound: Fraction
    c_lift: Fraction
    skipped_roots: int = 0
    clusters_built: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def accounting_bound(self) -> Fraction:
        return self.c_lift - self.f_split - self.f_del

    def to_json(self) -> dict:
        return {
            "params": self.params.to_json(),
            "delta_h": self.delta_h,
            "girth_target": self.girth,
            "deleted_constraints": len(self.deleted),
            "audit_roots": [list(r) for r in self.roots],
            "audit_roots_skipped": self.skipped_roots,
            "audit_pairs": len(self.audit_pairs),
            "family_size": len(self.certificate.family),
            "value": frac_str(self.value),
            "c_lift": frac_str(self.c_lift),
            "f_split": frac_str(self.f_split),
            "f_del": frac_str(self.f_del),
            "split_events": sum(self.split_counts_by_constraint()),
            "scope_trials": len(self.split_counts_by_constraint()) * self.params.trials,
            "accounting_bound": frac_str(self.accounting_bound),
            "log_bound": frac_str(self.log_bound),
        }

    def split_counts_by_constraint(self) -> list:
        return self.extra.get("per_constraint_splits", [])


def choose_audit_roots(h: Hypergraph, metric: MuMetric, size: int, count: int, seed: int,
                       attempts: int | None = None):
    """Connected vertex sets of the given size grown at random, pairwise sharing at most one vertex.

    Returns (roots, skipped) where skipped counts candidates rejected as not embeddable.
    """
    st = Stream(seed, "audit-roots", size, count)
    roots, skipped = [], 0
    attempts = attempts if attempts is not None else 50 * count
    for _ in range(attempts):
        if len(roots) >= count:
            break
        S = {st.randrange(h.n)}
        while len(S) < size:
            frontier = sorted(set().union(*(h.neighbors(v) for v in S)) - S)
            if not frontier:
                break
            S.add(st.choice(frontier))
        if len(S) < 2:
            continue
        S = tuple(sorted(S))
        if any(len(set(S) & set(R)) > 1 for R in roots):
            continue
        if isinstance(try_embed(metric, S, size), NotEmbeddable):
            skipped += 1
            continue
        roots.append(S)
    return roots, skipped


def _subsets(R):
    for r in range(1, len(R) + 1):
        yield from itertools.combinations(R, r)


def _shape(row, idx, verts):
    groups = {}
    for i in idx:
        groups.setdefault(int(row[i]), []).append(verts[i])
    return tuple(sorted(tuple(g) for g in groups.values()))


def build_sa_certificate(lifted: LiftedInstance, params: SAParams, audit_sets=None,
                         basic: BasicCertificate | None = None) -> SABuild:
    """Level-t family from shared carving trials and tree-propagated cluster distributions.

    Every audit root is embedded once and carved on trials 0..M-1; each of its
    subsets takes the restricted partitions, so along those chains the family
    is exactly consistent.  Constraint scopes outside the audit roots are roots
    of their own.  Each cluster V gets the closure-tree joint marginalized to V,
    and D_S averages the cluster products over the M trials.
    """
    inst = lifted.instance
    t = params.t
    if t < inst.k:
        raise ContractViolation(f"level t={t} below arity k={inst.k}")
    if params.trials < 1:
        raise ContractViolation("trials must be >= 1")
    basic = basic if basic is not None else lift_basic_certificate(lifted)
    rep = verify_basic(inst, basic)
    if not rep.ok:
        raise CertificateViolation(f"lifted basic certificate fails at {rep.violation}")
    c_lift = rep.value

    h = Hypergraph.from_instance(inst, dedup=True)
    removed = []
    if params.degree_cap is not None:
        h, dropped = degree_prune(h, params.degree_cap)
        removed += dropped
    dh = delta_h_for(params.mu, params.delta)
    g = params.girth if params.girth is not None else 2 * dh + 2
    h, cut = girth_repair(h, g)
    removed += cut
    gone = {inst.constraints[i].key for i in removed}
    deleted = [i for i, c in enumerate(inst.constraints) if c.key in gone]

    metric = MuMetric(h, params.mu, params.delta)
    radius = max(1, metric.delta_h)
    edge_dists = {e: basic.per_constraint[e] for e in h.edges}
    vdists = basic.per_variable
    cparams = CarveParams(params.delta, params.r0, params.seed, tag=params.tag)
    M = params.trials

    if audit_sets is None:
        roots, skipped = choose_audit_roots(h, metric, t, params.audit_roots, params.seed)
    else:
        roots, skipped = [tuple(sorted(set(int(v) for v in S))) for S in audit_sets], 0
        for i, R in enumerate(roots):
            if len(R) > t:
                raise ContractViolation(f"audit set {R} larger than t={t}")
            if any(v < 0 or v >= inst.n for v in R):
                raise ContractViolation(f"audit set {R} outside the variables")
            for R2 in roots[:i]:
                if len(set(R) & set(R2)) > 1:
                    raise ContractViolation(f"audit sets {R2} and {R} share more than one vertex")
    covered = set()
    for R in roots:
        covered.update(S for S in _subsets(R) if len(S) >= 2)
    scope_roots = sorted({c.key for c in inst.constraints} - covered)

    carve_cache = {}

    def owners(R):
        emb = embed(metric, R, dim=t)
        key = emb.vectors.tobytes()
        if key not in carve_cache:
            carve_cache[key] = _first_cover(emb.vectors, cparams, range(M))
        return carve_cache[key]

    cluster_cache = {}

    def cluster_dist(V):
        if V not in cluster_cache:
            cluster_cache[V] = tree_joint(h, V, edge_dists, vdists, radius)
        return cluster_cache[V]

    def family_member(O, verts, idx):
        shapes = Counter(_shape(row, idx, verts) for row in O)
        parts = []
        for shape in sorted(shapes):
            d = cluster_dist(shape[0])
            for V in shape[1:]:
                d = d.product(cluster_dist(V))
            parts.append((Fraction(shapes[shape], M), d))
        S = tuple(sorted(verts[i] for i in idx))
        split = sum(c for s, c in shapes.items() if len(s) > 1)
        return S, mixture(parts, S, inst.q), split

    family = {(v,): vdists[v] for v in range(inst.n)}
    splits = {}
    pairs = []
    for R in roots:
        O = owners(R)
        pos = {v: i for i, v in enumerate(R)}
        for S in _subsets(R):
            key, dist, sp = family_member(O, R, [pos[v] for v in S])
            family[key] = dist
            splits[key] = sp
        for S in _subsets(R):
            for T in _subsets(S):
                if len(T) < len(S):
                    pairs.append((T, S))
    for S in scope_roots:
        O = owners(S)
        key, dist, sp = family_member(O, S, list(range(len(S))))
        family[key] = dist
        splits[key] = sp
        for v in S:
            pairs.append(((v,), S))

    cert = SACertificate(family, t)
    value = certificate_value(inst, family)
    m = inst.m
    per_con = [splits[c.key] for c in inst.constraints]
    f_split = Fraction(sum(per_con), m * M)
    f_del = Fraction(len(deleted), m)
    dels = set(deleted)
    contrib = _template_contributions(lifted)
    log_bound = sum((Fraction(M - per_con[i], M) * contrib[i] for i in range(m) if i not in dels),
                    Fraction(0)) / m
    return SABuild(cert, params, metric.delta_h, g, deleted, roots, pairs, splits, value, f_split,
                   f_del, log_bound, c_lift, skipped, len(cluster_cache),
                   {"per_constraint_splits": per_con})


def _template_contributions(lifted: LiftedInstance) -> list:
    """Pr[constraint satisfied] under the template distribution of its origin, per lifted constraint."""
    tpl = lifted.template
    base = tpl.instance
    out = []
    memo = {}
    for j in lifted.origin:
        if j not in memo:
            c0 = base.constraints[j]
            d = tpl.certificate.per_constraint[c0.key]
            pos = {v: i for i, v in enumerate(d.domain)}
            memo[j] = sum((p for a, p in d.probs.items()
                           if base.predicate([(a[pos[v]] + b) % base.q for v, b in zip(c0.scope, c0.shift)])),
                          Fraction(0))
        out.append(memo[j])
    return out


# -- certify ----------------------------------------------------------------


@dataclass
class CertifyReport:
    ok: bool
    value: Fraction
    residual: Fraction
    worst: tuple | None
    pairs_checked: int
    estimate: Fraction
    method: str
    c: Fraction
    s: Fraction
    eps: Fraction

    def to_json(self) -> dict:
        out = {
            "pass": self.ok,
            "value": frac_str(self.value),
            "residual": frac_str(self.residual),
            "pairs_checked": self.pairs_checked,
            "soundness_estimate": frac_str(self.estimate),
            "soundness_method": self.method,
            "c": frac_str(self.c),
            "s": frac_str(self.s),
            "eps": frac_str(self.eps),
            "value_threshold": frac_str(self.c - self.eps),
            "soundness_threshold": frac_str(self.s + self.eps),
        }
        if self.worst is not None:
            out["worst_pair"] = {"T": list(self.worst[0]), "S": list(self.worst[1])}
        return out


def certify(lifted: LiftedInstance, cert: SACertificate, eps, audit_pairs=None, seed: int = 0,
            restarts: int = 20) -> CertifyReport:
    """Exact family check plus an optimum estimate, against c - eps and s + eps."""
    eps = Fraction(eps)
    rep = verify_sa(lifted.instance, cert, audit_pairs)
    est, how = opt_estimate(lifted.instance, seed, restarts)
    tpl = lifted.template
    ok = rep.residual == 0 and rep.value >= tpl.c - eps and est <= tpl.s + eps
    return CertifyReport(ok, rep.value, rep.residual, rep.worst, rep.checked, est, how, tpl.c, tpl.s, eps)
