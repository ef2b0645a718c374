import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from gapforge.certificates import (BasicCertificate, SACertificate, basic_from_lp, certificate_value,
                                   global_family, point_basic_certificate, verify_basic, verify_sa)
from gapforge.csp import Constraint, Instance, c5_maxcut, k3_maxcut, parity, sat_fraction
from gapforge.distributions import LocalDistribution
from gapforge.errors import StructuralError
from gapforge.lp import build_basic_lp, build_sa_lp, solution_distributions
from gapforge.simplex import solve_lp


def test_point_certificate_value_is_sat_fraction():
    inst = c5_maxcut()
    for a in itertools.product((0, 1), repeat=5):
        rep = verify_basic(inst, point_basic_certificate(inst, a))
        assert rep.ok and rep.value == sat_fraction(inst, a)


def test_lp_certificate_roundtrip():
    inst = c5_maxcut()
    lp = build_basic_lp(inst)
    val, x = solve_lp(lp)
    cert = basic_from_lp(inst, lp, x)
    rep = verify_basic(inst, cert)
    assert rep.ok and rep.value == val == 1
    back = BasicCertificate.from_json(cert.to_json())
    assert verify_basic(inst, back).value == 1


def test_tampered_basic_certificate_located():
    inst = c5_maxcut()
    cert = point_basic_certificate(inst, (0, 1, 0, 1, 0))
    cert.per_variable[2] = LocalDistribution.point((2,), (1,))
    rep = verify_basic(inst, cert)
    assert not rep.ok
    assert rep.violation["variable"] == 2 and rep.violation["scope"] in ([1, 2], [2, 3])
    del cert.per_constraint[(0, 4)]
    with pytest.raises(StructuralError):
        verify_basic(inst, cert)


def test_duplicate_scopes_share_a_distribution():
    # two constraints on the same pair with different shifts
    from gapforge.csp import xor2
    inst = Instance(xor2(), 2, (Constraint((0, 1), (0, 0)), Constraint((1, 0), (1, 0))))
    cert = point_basic_certificate(inst, (0, 1))
    assert verify_basic(inst, cert).value == Fraction(1, 2)


@given(st.integers(0, 10 ** 6))
@settings(max_examples=30, deadline=None)
def test_global_family_consistent(seed):
    from gapforge.rng import Stream
    s = Stream(seed, "gf")
    inst = k3_maxcut()
    joint = {}
    w = [1 + s.randrange(5) for _ in range(8)]
    for a, x in zip(itertools.product((0, 1), repeat=3), w):
        joint[a] = Fraction(x, sum(w))
    sets = [S for r in (1, 2, 3) for S in itertools.combinations(range(3), r)]
    cert = global_family(inst, joint, sets, 3)
    rep = verify_sa(inst, cert)
    assert rep.residual == 0 and rep.checked == len(cert.stored_pairs())
    ref = sum(p * sat_fraction(inst, a) for a, p in joint.items())
    assert rep.value == ref


def test_sa_lp_solution_is_consistent_family():
    inst = k3_maxcut()
    lp = build_sa_lp(inst, 3)
    val, x = solve_lp(lp)
    groups = solution_distributions(lp, x)
    fam = {S: LocalDistribution(S, probs) for S, probs in groups.items()}
    cert = SACertificate(fam, 3)
    rep = verify_sa(inst, cert)
    assert rep.residual == 0 and rep.value == val == Fraction(2, 3)


def test_tampered_sa_certificate_located():
    inst = k3_maxcut()
    joint = {(0, 1, 0): Fraction(1, 2), (1, 0, 1): Fraction(1, 2)}
    sets = [(0,), (1,), (2,), (0, 1), (1, 2), (0, 2), (0, 1, 2)]
    cert = global_family(inst, joint, sets, 3)
    cert.family[(1, 2)] = LocalDistribution((1, 2), {(0, 0): Fraction(1, 2), (1, 1): Fraction(1, 2)})
    rep = verify_sa(inst, cert)
    assert rep.residual == Fraction(1, 2)
    assert (1, 2) in rep.worst
    back = SACertificate.from_json(cert.to_json())
    assert verify_sa(inst, back).residual == Fraction(1, 2)
    with pytest.raises(StructuralError):
        verify_sa(inst, cert, [((0,), (0, 3))])
    with pytest.raises(StructuralError):
        certificate_value(inst, {(0, 1): cert.family[(0, 1)]})
