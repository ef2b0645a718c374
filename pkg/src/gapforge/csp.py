"""Predicates, constraints and instances of MAX k-CSP_q(f).

Truth tables are stored row-major with the last coordinate fastest, so the
tuple (a_0, ..., a_{k-1}) sits at index sum_j a_j * q**(k-1-j).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, ContractViolation
from .rng import Stream


def tuple_index(values: Sequence[int], q: int) -> int:
    idx = 0
    for a in values:
        idx = idx * q + a
    return idx


def index_tuple(idx: int, q: int, k: int) -> tuple:
    out = [0] * k
    for j in range(k - 1, -1, -1):
        idx, out[j] = divmod(idx, q)
    return tuple(out)


@dataclass(frozen=True)
class Predicate:
    q: int
    k: int
    table: tuple

    def __post_init__(self):
        if self.q < 2 or self.k < 2:
            raise ContractViolation("need q >= 2 and k >= 2")
        tab = tuple(int(b) for b in self.table)
        if len(tab) != self.q ** self.k:
            raise ContractViolation(f"table has {len(tab)} entries, expected {self.q ** self.k}")
        if any(b not in (0, 1) for b in tab):
            raise ContractViolation("table entries must be 0/1")
        if not any(tab) or all(tab):
            raise ContractViolation("predicate must have both satisfying and unsatisfying entries")
        object.__setattr__(self, "table", tab)

    @classmethod
    def from_bits(cls, bits: str, q: int = 2, k: int | None = None) -> "Predicate":
        if k is None:
            k = round(np.log(len(bits)) / np.log(q))
        return cls(q, k, tuple(int(c) for c in bits))

    @classmethod
    def from_function(cls, fn, q: int, k: int) -> "Predicate":
        return cls(q, k, tuple(int(bool(fn(index_tuple(i, q, k)))) for i in range(q ** k)))

    def bits(self) -> str:
        return "".join(str(b) for b in self.table)

    def __call__(self, values: Sequence[int]) -> int:
        return self.table[tuple_index(values, self.q)]

    def satisfying(self) -> list:
        return [index_tuple(i, self.q, self.k) for i, b in enumerate(self.table) if b]

    def table_array(self) -> np.ndarray:
        return np.asarray(self.table, dtype=np.int64)


def xor2() -> Predicate:
    return Predicate(2, 2, (0, 1, 1, 0))


def parity(k: int, odd: bool = True) -> Predicate:
    return Predicate.from_function(lambda a: (sum(a) % 2 == 1) == odd, 2, k)


@dataclass(frozen=True)
class Constraint:
    scope: tuple
    shift: tuple

    def __post_init__(self):
        object.__setattr__(self, "scope", tuple(int(v) for v in self.scope))
        object.__setattr__(self, "shift", tuple(int(b) for b in self.shift))
        if len(self.scope) != len(self.shift):
            raise ContractViolation("scope and shift lengths differ")
        if len(set(self.scope)) != len(self.scope):
            raise ContractViolation(f"scope {self.scope} repeats a variable")

    @property
    def key(self) -> tuple:
        """Sorted scope, the variable set the constraint lives on."""
        return tuple(sorted(self.scope))


@dataclass(frozen=True)
class Instance:
    predicate: Predicate
    n: int
    constraints: tuple
    parts: tuple | None = field(default=None)

    def __post_init__(self):
        p = self.predicate
        cons = tuple(self.constraints)
        object.__setattr__(self, "constraints", cons)
        for c in cons:
            if len(c.scope) != p.k:
                raise ContractViolation(f"constraint arity {len(c.scope)} != k={p.k}")
            if any(v < 0 or v >= self.n for v in c.scope):
                raise ContractViolation(f"scope {c.scope} outside [0, {self.n})")
            if any(b < 0 or b >= p.q for b in c.shift):
                raise ContractViolation(f"shift {c.shift} outside [0, {p.q})")
        if self.parts is not None:
            parts = tuple(tuple(int(v) for v in blk) for blk in self.parts)
            seen = sorted(v for blk in parts for v in blk)
            if seen != list(range(self.n)):
                raise ContractViolation("parts must be disjoint and cover all variables")
            object.__setattr__(self, "parts", parts)

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def q(self) -> int:
        return self.predicate.q

    @property
    def k(self) -> int:
        return self.predicate.k

    def scopes_array(self) -> np.ndarray:
        return np.asarray([c.scope for c in self.constraints], dtype=np.int64).reshape(-1, self.k)

    def shifts_array(self) -> np.ndarray:
        return np.asarray([c.shift for c in self.constraints], dtype=np.int64).reshape(-1, self.k)

    def with_constraints(self, constraints) -> "Instance":
        return Instance(self.predicate, self.n, tuple(constraints), self.parts)


def check_assignment(inst: Instance, a: Sequence[int]) -> tuple:
    a = tuple(int(x) for x in a)
    if len(a) != inst.n:
        raise ContractViolation(f"assignment has {len(a)} values, instance has n={inst.n}")
    if any(x < 0 or x >= inst.q for x in a):
        raise ContractViolation("assignment value outside alphabet")
    return a


def eval_constraint(pred: Predicate, c: Constraint, a: Sequence[int]) -> int:
    if len(c.scope) != pred.k:
        raise ContractViolation("constraint arity does not match predicate")
    if any(b < 0 or b >= pred.q for b in c.shift):
        raise ContractViolation("shift outside alphabet")
    vals = []
    for v, b in zip(c.scope, c.shift):
        x = a[v]
        if x < 0 or x >= pred.q:
            raise ContractViolation("assignment value outside alphabet")
        vals.append((x + b) % pred.q)
    return pred(vals)


def sat_count(inst: Instance, a: Sequence[int]) -> int:
    return sum(eval_constraint(inst.predicate, c, a) for c in inst.constraints)


def sat_fraction(inst: Instance, a: Sequence[int]) -> Fraction:
    if inst.m == 0:
        raise ContractViolation("empty instance")
    a = check_assignment(inst, a)
    return Fraction(sat_count(inst, a), inst.m)


# -- optimum --------------------------------------------------------------


def _batch_sat(inst: Instance, A: np.ndarray) -> np.ndarray:
    """Satisfied-constraint counts for each row of the assignment batch A."""
    q, k = inst.q, inst.k
    pw = q ** np.arange(k - 1, -1, -1, dtype=np.int64)
    X = (A[:, inst.scopes_array()] + inst.shifts_array()[None]) % q
    return inst.predicate.table_array()[X @ pw].sum(axis=1)


def opt_exhaustive(inst: Instance, budget: int = 1 << 20):
    """Exact optimum by enumeration; returns (value, first maximizer).

    Assignments are enumerated with variable 0 most significant.
    """
    if inst.m == 0:
        raise ContractViolation("empty instance")
    q, n = inst.q, inst.n
    total = q ** n
    if total > budget:
        raise BudgetExceeded("opt_exhaustive", total, budget)
    chunk = max(1, min(total, 4_000_000 // max(1, inst.m * inst.k)))
    digits_pw = q ** np.arange(n - 1, -1, -1, dtype=np.int64)
    best, best_idx = -1, 0
    for start in range(0, total, chunk):
        ids = np.arange(start, min(total, start + chunk), dtype=np.int64)
        A = (ids[:, None] // digits_pw[None, :]) % q
        s = _batch_sat(inst, A)
        j = int(np.argmax(s))
        if s[j] > best:
            best, best_idx = int(s[j]), int(ids[j])
    return Fraction(best, inst.m), index_tuple(best_idx, q, n)


def _climb(inst: Instance, a: np.ndarray, scopes, shifts, table, pw) -> np.ndarray:
    q, k, n = inst.q, inst.k, inst.n
    while True:
        X = (a[scopes] + shifts) % q
        idx = X @ pw
        sat = table[idx]
        gain = np.zeros((n, q), dtype=np.int64)
        for j in range(k):
            for b in range(q):
                moved = idx + (((b + shifts[:, j]) % q) - X[:, j]) * pw[j]
                gain[:, b] += np.bincount(scopes[:, j], weights=table[moved] - sat, minlength=n).astype(np.int64)
        flat = int(np.argmax(gain))
        if gain.flat[flat] <= 0:
            return a
        v, b = divmod(flat, q)
        a[v] = b


def opt_local_search(inst: Instance, seed: int, restarts: int = 20):
    """Best-improvement single-variable hill climbing from random starts.

    Restart r starts from Stream(seed, "local-search", r), so a run with more
    restarts sees a superset of the starts of a shorter run.
    """
    if inst.m == 0:
        raise ContractViolation("empty instance")
    if restarts < 1:
        raise ContractViolation("restarts must be >= 1")
    q, k = inst.q, inst.k
    scopes, shifts = inst.scopes_array(), inst.shifts_array()
    table = inst.predicate.table_array()
    pw = q ** np.arange(k - 1, -1, -1, dtype=np.int64)
    best, best_a = -1, None
    for r in range(restarts):
        u = Stream(seed, "local-search", r).uniforms(0, inst.n)
        a = np.minimum((u * q).astype(np.int64), q - 1)
        a = _climb(inst, a, scopes, shifts, table, pw)
        s = int(table[((a[scopes] + shifts) % q) @ pw].sum())
        if s > best:
            best, best_a = s, tuple(int(x) for x in a)
    return Fraction(best, inst.m), best_a


# -- files ----------------------------------------------------------------


def _parts_to_json(parts):
    out = []
    for blk in parts:
        if blk and list(blk) == list(range(blk[0], blk[-1] + 1)):
            out.append([blk[0], blk[-1] + 1])
        else:
            raise ContractViolation("only contiguous parts can be serialized")
    return out


def instance_to_dict(inst: Instance) -> dict:
    d = {
        "q": inst.q,
        "k": inst.k,
        "table": inst.predicate.bits(),
        "n": inst.n,
        "constraints": [{"scope": list(c.scope), "shift": list(c.shift)} for c in inst.constraints],
    }
    if inst.parts is not None:
        d["parts"] = _parts_to_json(inst.parts)
    return d


def instance_from_dict(d: dict) -> Instance:
    pred = Predicate(int(d["q"]), int(d["k"]), tuple(int(c) for c in d["table"]))
    parts = None
    if d.get("parts") is not None:
        parts = tuple(tuple(range(lo, hi)) for lo, hi in d["parts"])
    cons = tuple(Constraint(c["scope"], c["shift"]) for c in d["constraints"])
    return Instance(pred, int(d["n"]), cons, parts)


def dumps_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), sort_keys=True)


def loads_instance(text: str) -> Instance:
    return instance_from_dict(json.loads(text))


def cycle_maxcut(n: int) -> Instance:
    cons = [Constraint((i, (i + 1) % n), (0, 0)) for i in range(n)]
    return Instance(xor2(), n, tuple(cons))


def c5_maxcut() -> Instance:
    return cycle_maxcut(5)


def k3_maxcut() -> Instance:
    return cycle_maxcut(3)
