import math

import pytest

from weylcoef.errors import BetaNonzero, InvalidParameters
from weylcoef.hamiltonian_core import identity, piecewise_constant
from weylcoef.tails import (DIVERGENT, FINITE, ComparisonFunction, at0_check, classify_trend,
                            mu_tilde, power_function, split_off_linear_term, stieltjes_inversion,
                            y74_quantity)


def test_split_off_linear_term():
    m = piecewise_constant([0, 2], [(3, 0, 0), (1, 1, 0)])
    beta, rest = split_off_linear_term(m)
    assert beta == pytest.approx(6.0, rel=1e-9)
    assert rest.a == pytest.approx(2.0)
    assert split_off_linear_term(identity())[0] == 0.0


def test_y74_identity_is_one():
    seq = y74_quantity(identity(), power_function(1.0), [2.0 ** -k for k in range(1, 30)])
    assert max(abs(v - 1.0) for v in seq.values) < 1e-12
    assert seq.classification == "finite"


def test_y74_rejects_linear_term():
    m = piecewise_constant([0, 1], [(1, 0, 0), (1, 1, 0)])
    with pytest.raises(BetaNonzero):
        y74_quantity(m, power_function(1.0), [1.5])


def test_stieltjes_identity_measure():
    # q = i for H = I: mu is Lebesgue / pi
    res = stieltjes_inversion(identity(), -1.0, 1.0, (0.1, 0.05))
    assert res.extrapolated == pytest.approx(2 / math.pi, rel=1e-6)
    assert mu_tilde(identity(), 10.0) == pytest.approx(20 / math.pi, rel=0.02)


def test_stieltjes_validation():
    with pytest.raises(InvalidParameters):
        stieltjes_inversion(identity(), 1.0, -1.0)
    with pytest.raises(InvalidParameters):
        stieltjes_inversion(identity(), -1.0, 1.0, (0.1, 0.2))


@pytest.mark.parametrize("exponent, want", [(0.0, FINITE), (2.0, DIVERGENT)])
def test_at0_identity_classification(exponent, want):
    out = at0_check(identity(), power_function(exponent), 1.0)
    assert out.rhs_verdict == want and out.lhs_verdict == want and out.agree


def test_comparison_function_checks():
    with pytest.raises(InvalidParameters):
        ComparisonFunction(lambda r: -1.0).spot_check()
    with pytest.raises(InvalidParameters):
        ComparisonFunction(lambda r: 1.0 / r).spot_check()
    with pytest.raises(InvalidParameters):
        power_function(3.0).spot_check()


def test_classify_trend():
    assert classify_trend(0.5) == "infinite"
    assert classify_trend(-0.5) == "zero"
    assert classify_trend(0.01) == "finite"
