"""Basic-LP and Sherali-Adams certificates and their exact verifiers."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .csp import Instance, check_assignment
from .distributions import LocalDistribution, frac_str
from .errors import StructuralError
from .lp import constraint_blocks, objective_table


@dataclass
class BasicCertificate:
    per_constraint: dict  # sorted scope -> LocalDistribution
    per_variable: dict  # variable -> LocalDistribution on (variable,)

    def to_json(self) -> dict:
        return {
            "kind": "basic",
            "per_constraint": [self.per_constraint[S].to_json() for S in sorted(self.per_constraint)],
            "per_variable": [self.per_variable[v].to_json() for v in sorted(self.per_variable)],
        }

    @classmethod
    def from_json(cls, d: dict, q: int = 2) -> "BasicCertificate":
        pc = {}
        for item in d["per_constraint"]:
            dist = LocalDistribution.from_json(item, q)
            pc[dist.domain] = dist
        pv = {}
        for item in d["per_variable"]:
            dist = LocalDistribution.from_json(item, q)
            pv[dist.domain[0]] = dist
        return cls(pc, pv)


@dataclass
class SACertificate:
    family: dict  # sorted tuple -> LocalDistribution
    t: int

    def __getitem__(self, S):
        return self.family[tuple(sorted(S))]

    def __contains__(self, S):
        return tuple(sorted(S)) in self.family

    def stored_pairs(self):
        """All (T, S) with T a proper subset of S, both stored."""
        keys = sorted(self.family, key=lambda s: (len(s), s))
        out = []
        for S in keys:
            sset = set(S)
            for T in keys:
                if len(T) < len(S) and sset.issuperset(T):
                    out.append((T, S))
        return out

    def to_json(self) -> dict:
        return {
            "kind": "sherali-adams",
            "t": self.t,
            "family": [self.family[S].to_json() for S in sorted(self.family, key=lambda s: (len(s), s))],
        }

    @classmethod
    def from_json(cls, d: dict, q: int = 2) -> "SACertificate":
        fam = {}
        for item in d["family"]:
            dist = LocalDistribution.from_json(item, q)
            fam[dist.domain] = dist
        return cls(fam, int(d["t"]))


@dataclass
class BasicReport:
    ok: bool
    value: Fraction | None
    violation: dict | None = None

    def to_json(self) -> dict:
        out = {"ok": self.ok, "value": None if self.value is None else frac_str(self.value)}
        if self.violation is not None:
            out["violation"] = {k: (frac_str(v) if isinstance(v, Fraction) else v) for k, v in self.violation.items()}
        return out


@dataclass
class SAReport:
    value: Fraction
    residual: Fraction
    worst: tuple | None = None
    checked: int = 0
    per_pair: list = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return self.residual == 0

    def to_json(self) -> dict:
        out = {
            "value": frac_str(self.value),
            "residual": frac_str(self.residual),
            "pairs_checked": self.checked,
        }
        if self.worst is not None:
            out["worst_pair"] = {"T": list(self.worst[0]), "S": list(self.worst[1])}
        return out


def certificate_value(inst: Instance, dists: dict) -> Fraction:
    """Objective E_C Pr_{D_{S_C}}[C satisfied], exact."""
    total = Fraction(0)
    for S, tab in objective_table(inst).items():
        if S not in dists:
            raise StructuralError(f"no distribution for constraint scope {S}")
        d = dists[S]
        for alpha, w in tab.items():
            total += w * d.prob(alpha)
    return total


def verify_basic(inst: Instance, cert: BasicCertificate) -> BasicReport:
    for v in range(inst.n):
        if v not in cert.per_variable:
            raise StructuralError(f"no singleton distribution for variable {v}")
    blocks = constraint_blocks(inst)
    for S in blocks:
        if S not in cert.per_constraint:
            raise StructuralError(f"no distribution for constraint scope {S}")
    for S in blocks:
        dS = cert.per_constraint[S]
        for i in S:
            lhs = dS.marginal((i,))
            rhs = cert.per_variable[i]
            for b in range(inst.q):
                if lhs.prob((b,)) != rhs.prob((b,)):
                    return BasicReport(False, None, {
                        "row": "marg_" + "_".join(map(str, S)) + f"__{i}_{b}",
                        "scope": list(S), "variable": i, "value": b,
                        "lhs": lhs.prob((b,)), "rhs": rhs.prob((b,)),
                    })
    return BasicReport(True, certificate_value(inst, cert.per_constraint))


def point_basic_certificate(inst: Instance, a) -> BasicCertificate:
    a = check_assignment(inst, a)
    pc = {S: LocalDistribution.point(S, [a[v] for v in S], inst.q) for S in constraint_blocks(inst)}
    pv = {v: LocalDistribution.point((v,), (a[v],), inst.q) for v in range(inst.n)}
    return BasicCertificate(pc, pv)


def basic_from_lp(inst: Instance, lp, x) -> BasicCertificate:
    """Read a basic-LP solution vector back into a certificate."""
    from .lp import solution_distributions

    groups = solution_distributions(lp, x, inst.q)
    pc = {S: LocalDistribution(S, groups[S], inst.q) for S in constraint_blocks(inst)}
    pv = {v: LocalDistribution((v,), groups[(v,)], inst.q) for v in range(inst.n)}
    return BasicCertificate(pc, pv)


def verify_sa(inst: Instance, cert: SACertificate, audit_pairs=None) -> SAReport:
    """Exact objective plus the largest marginal residual over the audited (T, S) pairs.

    With ``audit_pairs=None`` every stored pair is audited.
    """
    pairs = cert.stored_pairs() if audit_pairs is None else audit_pairs
    value = certificate_value(inst, cert.family)
    residual = Fraction(0)
    worst = None
    n = 0
    for T, S in pairs:
        T, S = tuple(sorted(T)), tuple(sorted(S))
        if S not in cert.family or T not in cert.family:
            raise StructuralError(f"audited set {S if S not in cert.family else T} missing from family")
        if not set(T) <= set(S):
            raise StructuralError(f"{T} is not a subset of {S}")
        r = cert.family[S].marginal_diff(cert.family[T])
        n += 1
        if r > residual:
            residual, worst = r, (T, S)
    return SAReport(value, residual, worst, n)


def global_family(inst: Instance, joint: dict, sets, t: int) -> SACertificate:
    """Marginalize one global distribution over full assignments to the given sets."""
    fam = {}
    for S in sets:
        S = tuple(sorted(S))
        probs = {}
        for a, p in joint.items():
            key = tuple(a[v] for v in S)
            probs[key] = probs.get(key, 0) + p
        fam[S] = LocalDistribution(S, probs, inst.q)
    return SACertificate(fam, t)
