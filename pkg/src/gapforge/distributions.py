"""Exact local distributions over assignments to small variable sets."""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable

from .errors import ContractViolation


class LocalDistribution:
    """Sparse rational distribution on [q]^domain.

    ``domain`` is a sorted tuple of variable indices and ``probs`` maps value
    tuples (aligned with ``domain``) to positive Fractions summing to 1.
    Zero entries are dropped, so two equal distributions compare equal.
    """

    __slots__ = ("domain", "probs", "q")

    def __init__(self, domain: Iterable[int], probs: dict, q: int = 2, check: bool = True):
        dom = tuple(int(v) for v in domain)
        if check:
            if not dom:
                raise ContractViolation("empty domain")
            if list(dom) != sorted(set(dom)):
                raise ContractViolation(f"domain {dom} must be sorted and distinct")
        clean = {}
        for a, p in probs.items():
            p = Fraction(p)
            if p == 0:
                continue
            a = tuple(int(x) for x in a)
            if check:
                if p < 0:
                    raise ContractViolation(f"negative probability {p} at {a}")
                if len(a) != len(dom) or any(x < 0 or x >= q for x in a):
                    raise ContractViolation(f"bad assignment {a} for domain {dom}")
            clean[a] = clean.get(a, 0) + p
        if check and sum(clean.values()) != 1:
            raise ContractViolation(f"probabilities sum to {sum(clean.values())}")
        self.domain = dom
        self.probs = clean
        self.q = q

    # constructors

    @classmethod
    def point(cls, domain, values, q=2):
        return cls(domain, {tuple(values): Fraction(1)}, q)

    @classmethod
    def uniform(cls, domain, support, q=2):
        support = [tuple(a) for a in support]
        w = Fraction(1, len(support))
        probs = {}
        for a in support:
            probs[a] = probs.get(a, 0) + w
        return cls(domain, probs, q)

    @classmethod
    def from_unsorted(cls, scope, probs, q=2):
        """Reorder a distribution given on an arbitrary-order scope."""
        order = sorted(range(len(scope)), key=lambda i: scope[i])
        dom = tuple(scope[i] for i in order)
        return cls(dom, {tuple(a[i] for i in order): p for a, p in probs.items()}, q)

    # queries

    def __eq__(self, other):
        return (
            isinstance(other, LocalDistribution)
            and self.domain == other.domain
            and self.probs == other.probs
        )

    def __hash__(self):
        return hash((self.domain, frozenset(self.probs.items())))

    def __repr__(self):
        return f"LocalDistribution({self.domain}, {len(self.probs)} atoms)"

    def prob(self, values) -> Fraction:
        return self.probs.get(tuple(values), Fraction(0))

    def marginal(self, sub: Iterable[int]) -> "LocalDistribution":
        sub = tuple(sorted(set(int(v) for v in sub)))
        pos = {v: i for i, v in enumerate(self.domain)}
        try:
            idx = [pos[v] for v in sub]
        except KeyError as exc:
            raise ContractViolation(f"{sub} is not a subset of {self.domain}") from exc
        out = {}
        for a, p in self.probs.items():
            key = tuple(a[i] for i in idx)
            out[key] = out.get(key, 0) + p
        return LocalDistribution(sub, out, self.q, check=False)

    def marginal_diff(self, other: "LocalDistribution") -> Fraction:
        """Largest absolute entrywise gap between this distribution's marginal and ``other``."""
        m = self.marginal(other.domain)
        keys = set(m.probs) | set(other.probs)
        return max((abs(m.prob(a) - other.prob(a)) for a in keys), default=Fraction(0))

    def product(self, other: "LocalDistribution") -> "LocalDistribution":
        """Independent product on disjoint domains."""
        if set(self.domain) & set(other.domain):
            raise ContractViolation("product needs disjoint domains")
        dom = tuple(sorted(self.domain + other.domain))
        pos = {v: i for i, v in enumerate(dom)}
        ia = [pos[v] for v in self.domain]
        ib = [pos[v] for v in other.domain]
        out = {}
        for a, p in self.probs.items():
            for b, r in other.probs.items():
                vals = [0] * len(dom)
                for i, x in zip(ia, a):
                    vals[i] = x
                for i, x in zip(ib, b):
                    vals[i] = x
                out[tuple(vals)] = p * r
        return LocalDistribution(dom, out, self.q, check=False)

    def expectation(self, fn) -> Fraction:
        return sum((p * fn(a) for a, p in self.probs.items()), Fraction(0))

    def bias(self, var: int) -> Fraction:
        """E[(-1)^x_var] for a binary variable."""
        m = self.marginal([var])
        return m.prob((0,)) - m.prob((1,))

    def dense(self):
        """All q^|domain| probabilities, row-major."""
        return [self.prob(a) for a in itertools.product(range(self.q), repeat=len(self.domain))]

    # serialization

    def to_json(self) -> dict:
        probs = {",".join(map(str, a)): _frac_str(p) for a, p in sorted(self.probs.items())}
        return {"domain": list(self.domain), "probs": probs}

    @classmethod
    def from_json(cls, d: dict, q: int = 2) -> "LocalDistribution":
        probs = {}
        for key, val in d["probs"].items():
            a = tuple(int(x) for x in key.split(",")) if key else ()
            probs[a] = Fraction(val)
        return cls(d["domain"], probs, q)


def mixture(parts, domain=None, q=2) -> LocalDistribution:
    """Convex combination of distributions on a common domain; parts = [(weight, dist)]."""
    out = {}
    dom = domain
    for w, dist in parts:
        w = Fraction(w)
        if dom is None:
            dom = dist.domain
        elif dist.domain != tuple(dom):
            raise ContractViolation("mixture over different domains")
        for a, p in dist.probs.items():
            out[a] = out.get(a, 0) + w * p
    return LocalDistribution(dom, out, q)


def product_all(dists, q=2) -> LocalDistribution:
    it = iter(dists)
    acc = next(it)
    for d in it:
        acc = acc.product(d)
    return acc


def _frac_str(p: Fraction) -> str:
    return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


frac_str = _frac_str
