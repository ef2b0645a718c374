"""Fourier coefficients, bias polytopes, vanishing measures and the KTW-style basic-LP gap."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .certificates import BasicCertificate
from .csp import Constraint, Instance, Predicate
from .distributions import LocalDistribution, frac_str
from .errors import BudgetExceeded, ContractViolation, Infeasible, PreconditionFailed
from .lp import LinearProgram
from .rng import Stream
from .simplex import solve_lp

MAX_PERM_K = 6


def _frac(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def _binary(pred: Predicate):
    if pred.q != 2:
        raise ContractViolation("needs a boolean predicate (q = 2)")


# -- Fourier ----------------------------------------------------------------


@dataclass
class FourierTable:
    k: int
    coeffs: dict  # sorted coordinate tuple -> Fraction
    rho: Fraction

    def __getitem__(self, S) -> Fraction:
        return self.coeffs[tuple(sorted(S))]

    def parseval(self) -> bool:
        return sum(c * c for c in self.coeffs.values()) == self.rho

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "rho": frac_str(self.rho),
            "coeffs": {",".join(map(str, S)): frac_str(c) for S, c in sorted(self.coeffs.items(),
                                                                             key=lambda kv: (len(kv[0]), kv[0]))},
        }


def _mask_set(mask: int, k: int) -> tuple:
    # bit k-1-i of a table index is coordinate i
    return tuple(i for i in range(k) if (mask >> (k - 1 - i)) & 1)


def fourier(pred: Predicate) -> FourierTable:
    """f^(S) = E_x[f(x) (-1)^(sum_{i in S} x_i)] by a fast Walsh-Hadamard transform."""
    _binary(pred)
    k = pred.k
    a = pred.table_array().copy()
    h = 1
    while h < len(a):
        a = a.reshape(-1, 2, h)
        a = np.stack([a[:, 0] + a[:, 1], a[:, 0] - a[:, 1]], axis=1).reshape(-1)
        h *= 2
    size = 1 << k
    coeffs = {_mask_set(mask, k): Fraction(int(a[mask]), size) for mask in range(size)}
    return FourierTable(k, coeffs, Fraction(sum(pred.table), size))


# -- the bias polytope C(f) ---------------------------------------------------


def biases(dist: dict, k: int) -> tuple:
    """(E[(-1)^a_1], ..., E[(-1)^a_k]) of a distribution {assignment: probability}."""
    out = [Fraction(0)] * k
    for a, p in dist.items():
        for i in range(k):
            out[i] += p if a[i] == 0 else -p
    return tuple(out)


def polytope_membership(pred: Predicate, zeta):
    """Exact witness distribution on f^-1(1) with biases zeta, or None when zeta is not in C(f)."""
    _binary(pred)
    zeta = tuple(_frac(z) for z in zeta)
    if len(zeta) != pred.k:
        raise ContractViolation(f"point has {len(zeta)} coordinates, predicate has k={pred.k}")
    if any(abs(z) > 1 for z in zeta):
        return None
    sat = pred.satisfying()
    lp = LinearProgram()
    for a in sat:
        lp.add_var("w_" + "".join(map(str, a)))
    lp.add_row("sum", {j: Fraction(1) for j in range(len(sat))}, "=", Fraction(1))
    for i in range(pred.k):
        lp.add_row(f"bias_{i}", {j: Fraction(1 if a[i] == 0 else -1) for j, a in enumerate(sat)}, "=", zeta[i])
    try:
        _, x = solve_lp(lp)
    except Infeasible:
        return None
    return {a: x[j] for j, a in enumerate(sat) if x[j] != 0}


@dataclass
class Atom:
    zeta: tuple
    weight: Fraction
    witness: dict  # satisfying assignment -> probability


class AtomicMeasure:
    """Finitely many points of C(f) with positive weights summing to 1, each with a witness."""

    def __init__(self, pred: Predicate, atoms):
        _binary(pred)
        self.pred = pred
        self.atoms = [Atom(tuple(_frac(z) for z in a.zeta), _frac(a.weight),
                           {tuple(int(x) for x in k): _frac(p) for k, p in a.witness.items()}) for a in atoms]
        self.validate()

    def validate(self) -> None:
        k = self.pred.k
        if not self.atoms:
            raise ContractViolation("measure has no atoms")
        if sum(a.weight for a in self.atoms) != 1:
            raise ContractViolation("atom weights must sum to 1")
        for a in self.atoms:
            if a.weight <= 0:
                raise ContractViolation("atom weights must be positive")
            if len(a.zeta) != k:
                raise ContractViolation(f"atom {a.zeta} has the wrong dimension")
            if any(p < 0 for p in a.witness.values()) or sum(a.witness.values()) != 1:
                raise ContractViolation(f"witness of {a.zeta} is not a distribution")
            if any(not self.pred(x) for x, p in a.witness.items() if p):
                raise ContractViolation(f"witness of {a.zeta} leaves f^-1(1)")
            if biases(a.witness, k) != a.zeta:
                raise ContractViolation(f"witness biases {biases(a.witness, k)} differ from {a.zeta}")

    @classmethod
    def from_points(cls, pred: Predicate, points) -> "AtomicMeasure":
        """points = [(zeta, weight)]; witnesses come from the membership LP."""
        atoms = []
        for zeta, w in points:
            wit = polytope_membership(pred, zeta)
            if wit is None:
                raise PreconditionFailed(f"{tuple(zeta)} is not in C(f)")
            atoms.append(Atom(tuple(zeta), w, wit))
        return cls(pred, atoms)

    @classmethod
    def delta0(cls, pred: Predicate) -> "AtomicMeasure":
        return cls.from_points(pred, [((0,) * pred.k, 1)])

    def to_json(self) -> dict:
        return {
            "k": self.pred.k,
            "atoms": [{
                "zeta": [frac_str(z) for z in a.zeta],
                "weight": frac_str(a.weight),
                "witness": {",".join(map(str, x)): frac_str(p) for x, p in sorted(a.witness.items())},
            } for a in self.atoms],
        }

    @classmethod
    def from_json(cls, pred: Predicate, d: dict) -> "AtomicMeasure":
        if int(d.get("k", pred.k)) != pred.k:
            raise ContractViolation("measure dimension differs from the predicate arity")
        atoms = []
        for item in d["atoms"]:
            wit = {tuple(int(x) for x in key.split(",")): Fraction(p) for key, p in item["witness"].items()}
            atoms.append(Atom(tuple(Fraction(z) for z in item["zeta"]), Fraction(item["weight"]), wit))
        return cls(pred, atoms)


# -- vanishing measures -----------------------------------------------------


def _pushforward(zeta, t: int, fhat: FourierTable) -> dict:
    """Signed mass that a unit atom at zeta sends to each point of R^t at level t."""
    k = fhat.k
    if k > MAX_PERM_K:
        raise BudgetExceeded("permutation enumeration arity", k, MAX_PERM_K)
    norm = math.comb(k, t) * math.factorial(t) * (1 << t)
    out = {}
    for S in itertools.combinations(range(k), t):
        c = fhat[S]
        if c == 0:
            continue
        for perm in itertools.permutations(range(t)):
            for b in itertools.product((0, 1), repeat=t):
                sign = -1 if sum(b) % 2 else 1
                pt = tuple(-zeta[S[perm[i]]] if b[perm[i]] else zeta[S[perm[i]]] for i in range(t))
                out[pt] = out.get(pt, 0) + sign * c / norm
    return {p: v for p, v in out.items() if v != 0}


@dataclass
class VanishingReport:
    residuals: dict  # level t -> total absolute leftover mass
    tol: Fraction = Fraction(0)

    @property
    def vanishing(self) -> bool:
        return all(r <= self.tol for r in self.residuals.values())

    def to_json(self) -> dict:
        return {"vanishing": self.vanishing,
                "residuals": {str(t): frac_str(r) for t, r in sorted(self.residuals.items())}}


def vanishing_check(pred: Predicate, measure: AtomicMeasure, tol=0) -> VanishingReport:
    fhat = fourier(pred)
    res = {}
    for t in range(1, pred.k + 1):
        acc = {}
        for a in measure.atoms:
            for p, v in _pushforward(a.zeta, t, fhat).items():
                acc[p] = acc.get(p, 0) + a.weight * v
        res[t] = sum((abs(v) for v in acc.values()), Fraction(0))
    return VanishingReport(res, _frac(tol))


def find_vanishing_measure(pred: Predicate, grid):
    """Exact LP over weights on the grid points; None means grid-infeasible (not non-existence)."""
    grid = [tuple(_frac(z) for z in p) for p in grid]
    if not grid:
        raise ContractViolation("empty grid")
    witnesses = []
    for p in grid:
        w = polytope_membership(pred, p)
        if w is None:
            raise ContractViolation(f"grid point {p} is not in C(f)")
        witnesses.append(w)
    fhat = fourier(pred)
    lp = LinearProgram()
    for j in range(len(grid)):
        lp.add_var(f"lam_{j}")
    lp.add_row("sum", {j: Fraction(1) for j in range(len(grid))}, "=", Fraction(1))
    for t in range(1, pred.k + 1):
        rows = {}
        for j, p in enumerate(grid):
            for pt, v in _pushforward(p, t, fhat).items():
                rows.setdefault(pt, {})[j] = v
        for r, pt in enumerate(sorted(rows)):
            lp.add_row(f"cancel_{t}_{r}", rows[pt], "=", Fraction(0))
    try:
        _, x = solve_lp(lp)
    except Infeasible:
        return None
    atoms = [Atom(grid[j], x[j], witnesses[j]) for j in range(len(grid)) if x[j] > 0]
    return AtomicMeasure(pred, atoms)


# -- KTW instances ------------------------------------------------------------


def interval_index(z: Fraction, n0: int) -> int:
    """i with |z| in I_i, where I_0 = {0} and I_i = ((i-1)/n0, i/n0]."""
    z = abs(z)
    if z > 1:
        raise ContractViolation(f"coordinate {z} outside [-1, 1]")
    return math.ceil(z * n0)


def default_delta(eps: Fraction) -> Fraction:
    """A rational close to sqrt(eps)."""
    return Fraction(math.sqrt(eps)).limit_denominator(1000)


@dataclass
class KTWInstance:
    instance: Instance
    measure: AtomicMeasure
    eps: Fraction
    delta: Fraction
    n0: int
    n: int
    trace: list  # atom index per constraint
    seed: int
    extra: dict = field(default_factory=dict)

    def scaled(self, j: int) -> tuple:
        return tuple((1 - self.delta) * z for z in self.measure.atoms[j].zeta)

    def to_json(self) -> dict:
        from .csp import instance_to_dict
        return {
            "instance": instance_to_dict(self.instance),
            "measure": self.measure.to_json(),
            "eps": frac_str(self.eps),
            "delta": frac_str(self.delta),
            "n0": self.n0,
            "block_size": self.n,
            "trace": list(self.trace),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, d: dict) -> "KTWInstance":
        from .csp import instance_from_dict
        inst = instance_from_dict(d["instance"])
        meas = AtomicMeasure.from_json(inst.predicate, d["measure"])
        return cls(inst, meas, Fraction(d["eps"]), Fraction(d["delta"]), int(d["n0"]), int(d["block_size"]),
                   list(d["trace"]), int(d["seed"]))


def ktw_generate(pred: Predicate, measure: AtomicMeasure, eps, n: int, m: int, seed: int,
                 delta=None) -> KTWInstance:
    """m constraints from atoms scaled by (1 - delta); coordinate j goes to the block of |zeta_j|."""
    _binary(pred)
    eps = _frac(eps)
    if not 0 < eps <= 1:
        raise ContractViolation("eps must lie in (0, 1]")
    delta = default_delta(eps) if delta is None else _frac(delta)
    if not 0 <= delta < 1:
        raise ContractViolation("delta must lie in [0, 1)")
    if m < 1 or n < pred.k:
        raise ContractViolation("need m >= 1 and n >= k")
    n0 = math.ceil(1 / eps)
    den = math.lcm(*(a.weight.denominator for a in measure.atoms))
    cum = list(itertools.accumulate(int(a.weight * den) for a in measure.atoms))
    st = Stream(seed, "ktw", n, m)
    cons, trace = [], []
    for _ in range(m):
        j = st.weighted_index(cum)
        zeta = tuple((1 - delta) * z for z in measure.atoms[j].zeta)
        scope, shift = [], []
        for z in zeta:
            blk = interval_index(z, n0)
            while True:
                v = blk * n + st.randrange(n)
                if v not in scope:
                    break
            scope.append(v)
            shift.append(1 if z < 0 else (st.randrange(2) if z == 0 else 0))
        cons.append(Constraint(tuple(scope), tuple(shift)))
        trace.append(j)
    parts = tuple(tuple(range(i * n, (i + 1) * n)) for i in range(n0 + 1))
    inst = Instance(pred, (n0 + 1) * n, tuple(cons), parts)
    return KTWInstance(inst, measure, eps, delta, n0, n, trace, seed)


@dataclass
class RoundResult:
    dist: dict
    l1: Fraction
    taus: dict  # coordinate -> mixing weight


def bias_round(nu: dict, zeta, targets, delta) -> RoundResult:
    """Hybrid rounding: coordinate by coordinate, mix with a product distribution pinning that bit.

    The new biases are sign(zeta_j) * targets_j exactly (sign(0) taken as +).
    """
    zeta = [_frac(z) for z in zeta]
    targets = [_frac(x) for x in targets]
    delta = _frac(delta)
    k = len(zeta)
    if len(targets) != k:
        raise ContractViolation("targets and biases differ in length")
    nu = {tuple(a): _frac(p) for a, p in nu.items() if p}
    if biases(nu, k) != tuple(zeta):
        raise ContractViolation("zeta is not the bias vector of nu")
    for j in range(k):
        gap = abs(targets[j] - abs(zeta[j]))
        if gap and gap >= delta / 2:
            raise PreconditionFailed(f"coordinate {j}: |t - |zeta|| = {gap} is not below delta/2 = {delta / 2}")
    cur = dict(nu)
    bias = list(zeta)
    taus = {}
    for j in range(k):
        r = targets[j] if zeta[j] >= 0 else -targets[j]
        if r == bias[j]:
            continue
        s = 1 if r > bias[j] else -1
        tau = (r - bias[j]) / (s - bias[j])
        bit = 0 if s == 1 else 1
        pinned = {}
        for a in itertools.product((0, 1), repeat=k):
            if a[j] != bit:
                continue
            p = Fraction(1)
            for i in range(k):
                if i != j:
                    p *= (1 + bias[i]) / 2 if a[i] == 0 else (1 - bias[i]) / 2
            if p:
                pinned[a] = p
        nxt = {a: (1 - tau) * p for a, p in cur.items()}
        for a, p in pinned.items():
            nxt[a] = nxt.get(a, 0) + tau * p
        cur = {a: p for a, p in nxt.items() if p}
        bias[j] = r
        taus[j] = tau
    keys = set(nu) | set(cur)
    l1 = sum((abs(nu.get(a, 0) - cur.get(a, 0)) for a in keys), Fraction(0))
    return RoundResult(cur, l1, taus)


@dataclass
class KTWCertificate:
    certificate: BasicCertificate
    max_l1: Fraction
    collisions: int
    rounds: int


def ktw_basic_certificate(ktw: KTWInstance) -> KTWCertificate:
    """Blocks get their interval's right endpoint as bias; constraints get rounded witnesses, shifted."""
    inst = ktw.instance
    k, n0, delta = inst.k, ktw.n0, ktw.delta
    if len(ktw.trace) != inst.m:
        raise ContractViolation("trace does not match the constraints")
    pv = {}
    for v in range(inst.n):
        i = v // ktw.n
        pv[v] = LocalDistribution((v,), {(0,): Fraction(n0 + i, 2 * n0), (1,): Fraction(n0 - i, 2 * n0)})
    uniform = Fraction(1, 1 << k)
    memo = {}
    pc = {}
    collisions = 0
    max_l1 = Fraction(0)
    for c, j in zip(inst.constraints, ktw.trace):
        targets = tuple(Fraction(v // ktw.n, n0) for v in c.scope)
        if (j, targets) not in memo:
            atom = ktw.measure.atoms[j]
            zeta = tuple((1 - delta) * z for z in atom.zeta)
            nu = {a: (1 - delta) * atom.witness.get(a, 0) + delta * uniform
                  for a in itertools.product((0, 1), repeat=k)}
            memo[(j, targets)] = bias_round(nu, zeta, targets, delta)
        rr = memo[(j, targets)]
        max_l1 = max(max_l1, rr.l1)
        # D(y) = nu'(y + b) on the scope
        dist = LocalDistribution.from_unsorted(
            c.scope, {tuple((x + b) % 2 for x, b in zip(a, c.shift)): p for a, p in rr.dist.items()})
        if c.key in pc:
            if pc[c.key] != dist:
                collisions += 1
            continue
        pc[c.key] = dist
    return KTWCertificate(BasicCertificate(pc, pv), max_l1, collisions, len(memo))

