"""Exact LP models: the basic relaxation and the level-t Sherali-Adams relaxation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

from .csp import Instance
from .errors import BudgetExceeded, ContractViolation

SENSES = ("<=", ">=", "=")


@dataclass
class Row:
    name: str
    coeffs: dict  # var index -> Fraction
    sense: str
    rhs: Fraction


@dataclass
class LinearProgram:
    names: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    bounds: list = field(default_factory=list)  # (lo, hi); None means infinite
    sense: str = "max"
    index: dict = field(default_factory=dict)

    def add_var(self, name: str, lo=Fraction(0), hi=None, obj=0) -> int:
        if name in self.index:
            raise ContractViolation(f"duplicate variable {name}")
        j = len(self.names)
        self.names.append(name)
        self.index[name] = j
        self.bounds.append((None if lo is None else Fraction(lo), None if hi is None else Fraction(hi)))
        if obj:
            self.objective[j] = Fraction(obj)
        return j

    def add_obj(self, j: int, c) -> None:
        c = self.objective.get(j, Fraction(0)) + Fraction(c)
        if c:
            self.objective[j] = c
        else:
            self.objective.pop(j, None)

    def add_row(self, name: str, coeffs: dict, sense: str, rhs) -> None:
        if sense not in SENSES:
            raise ContractViolation(f"unknown sense {sense}")
        clean = {}
        for j, a in coeffs.items():
            a = Fraction(a)
            if not 0 <= j < len(self.names):
                raise ContractViolation(f"row {name} references unknown column {j}")
            if a:
                clean[j] = clean.get(j, Fraction(0)) + a
        self.rows.append(Row(name, {j: a for j, a in clean.items() if a}, sense, Fraction(rhs)))

    @property
    def num_vars(self) -> int:
        return len(self.names)

    def objective_value(self, x) -> Fraction:
        return sum((c * x[j] for j, c in self.objective.items()), Fraction(0))

    def check_point(self, x):
        """Exact feasibility check; returns (ok, first violated row name or bound)."""
        for j, (lo, hi) in enumerate(self.bounds):
            if lo is not None and x[j] < lo:
                return False, f"bound {self.names[j]} >= {lo}"
            if hi is not None and x[j] > hi:
                return False, f"bound {self.names[j]} <= {hi}"
        for r in self.rows:
            lhs = sum((a * x[j] for j, a in r.coeffs.items()), Fraction(0))
            if (r.sense == "=" and lhs != r.rhs) or (r.sense == "<=" and lhs > r.rhs) or (
                r.sense == ">=" and lhs < r.rhs
            ):
                return False, r.name
        return True, None


def _set_name(S, alpha) -> str:
    return "x_" + "_".join(map(str, S)) + "__" + "_".join(map(str, alpha))


def var_name(S, alpha) -> str:
    S = tuple(S)
    if not S:
        return "x_empty"
    return _set_name(S, alpha)


def constraint_blocks(inst: Instance) -> dict:
    """Constraints grouped by scope set: sorted scope -> list of constraint indices."""
    blocks: dict = {}
    for i, c in enumerate(inst.constraints):
        blocks.setdefault(c.key, []).append(i)
    return blocks


def objective_table(inst: Instance) -> dict:
    """For each scope set S: map alpha (aligned with S) -> summed payoff / m."""
    q, m = inst.q, inst.m
    pred = inst.predicate
    out: dict = {}
    for c in inst.constraints:
        S = c.key
        pos = [S.index(v) for v in c.scope]
        tab = out.setdefault(S, {})
        for alpha in itertools.product(range(q), repeat=len(S)):
            val = pred([(alpha[p] + b) % q for p, b in zip(pos, c.shift)])
            if val:
                tab[alpha] = tab.get(alpha, Fraction(0)) + Fraction(val, m)
    return out


def build_basic_lp(inst: Instance) -> LinearProgram:
    if inst.m == 0:
        raise ContractViolation("empty instance")
    q = inst.q
    lp = LinearProgram()
    for i in range(inst.n):
        for b in range(q):
            lp.add_var(var_name((i,), (b,)))
    obj = objective_table(inst)
    for S in constraint_blocks(inst):
        for alpha in itertools.product(range(q), repeat=len(S)):
            lp.add_var(var_name(S, alpha), obj=obj[S].get(alpha, 0))
    for i in range(inst.n):
        lp.add_row(f"norm_{i}", {lp.index[var_name((i,), (b,))]: 1 for b in range(q)}, "=", 1)
    for S in constraint_blocks(inst):
        for p, i in enumerate(S):
            for b in range(q):
                coeffs = {
                    lp.index[var_name(S, alpha)]: 1
                    for alpha in itertools.product(range(q), repeat=len(S))
                    if alpha[p] == b
                }
                coeffs[lp.index[var_name((i,), (b,))]] = -1
                lp.add_row("marg_" + "_".join(map(str, S)) + f"__{i}_{b}", coeffs, "=", 0)
    return lp


def sa_size(n: int, q: int, t: int) -> int:
    return sum(comb(n, s) * q ** s for s in range(1, t + 1))


def build_sa_lp(inst: Instance, t: int, budget: int = 20000) -> LinearProgram:
    """Level-t SA LP; only consistency rows with |S \\ T| = 1 are emitted."""
    q, k = inst.q, inst.k
    if t < k:
        raise ContractViolation(f"level t={t} below arity k={k}")
    if t > inst.n:
        t = inst.n
    size = sa_size(inst.n, q, t)
    if size > budget:
        raise BudgetExceeded("sherali-adams variables", size, budget)
    lp = LinearProgram()
    unit = lp.add_var("x_empty", lo=1, hi=1)
    obj = objective_table(inst)
    sets = [S for s in range(1, t + 1) for S in itertools.combinations(range(inst.n), s)]
    for S in sets:
        for alpha in itertools.product(range(q), repeat=len(S)):
            lp.add_var(var_name(S, alpha), obj=obj.get(S, {}).get(alpha, 0))
    for S in sets:
        for p in range(len(S)):
            T = S[:p] + S[p + 1:]
            for beta in itertools.product(range(q), repeat=len(T)):
                coeffs = {}
                for b in range(q):
                    alpha = beta[:p] + (b,) + beta[p:]
                    coeffs[lp.index[var_name(S, alpha)]] = 1
                coeffs[unit if not T else lp.index[var_name(T, beta)]] = -1
                lp.add_row("cons_" + "_".join(map(str, S)) + f"__drop{S[p]}__" + "_".join(map(str, beta)), coeffs, "=", 0)
    return lp


def solution_distributions(lp: LinearProgram, x, q: int = 2) -> dict:
    """Group an LP point into {S: {alpha: value}} by parsing variable names."""
    out: dict = {}
    for j, name in enumerate(lp.names):
        if name == "x_empty" or x[j] == 0:
            continue
        body = name[2:]
        s_part, a_part = body.split("__")
        S = tuple(int(v) for v in s_part.split("_"))
        alpha = tuple(int(v) for v in a_part.split("_"))
        out.setdefault(S, {})[alpha] = x[j]
    return out
