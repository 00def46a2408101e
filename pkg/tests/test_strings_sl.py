import math

import pytest

from weylcoef.errors import MalformedString, OutOfDomain
from weylcoef.strings_sl import (KreinString, SLProblem, delta_of, dual_mass, free_problem,
                                 gram_t_hat, sl_solutions, string_det_identity,
                                 string_to_hamiltonian, tau_hat_and_f, theorem_a41_check,
                                 theorem_t9_check, uniform_string, weyl_m)
from weylcoef.weyl_engine import eval_q

TWO_ATOM = KreinString(0.0, 1.0, ((1.0, 1.0), (2.0, 2.0)))


def test_uniform_string_delta():
    # delta(t) = t^4 / 12 for the uniform string
    assert delta_of(uniform_string(), 2.0) == pytest.approx(4.0 / 3.0)


@pytest.mark.parametrize("r", [0.1, 10.0, 1e3])
def test_uniform_string_scale(r):
    sc = tau_hat_and_f(uniform_string(), r)
    assert sc.tau_hat ** 4 / 12 == pytest.approx(1 / r ** 2, rel=1e-12)


@pytest.mark.parametrize("t", [0.5, 1.5, 2.5, 7.0])
def test_det_identity_at_continuity_points(t):
    for string in (uniform_string(), TWO_ATOM, KreinString(2.0, 0.5, ((1.0, 0.3),))):
        d, det = string_det_identity(string, t)
        assert det == pytest.approx(d, rel=1e-9, abs=1e-14)


def test_dual_mass():
    assert dual_mass(TWO_ATOM, 0.5) == 1.0
    assert dual_mass(TWO_ATOM, 2.5) == 2.0
    assert dual_mass(uniform_string(), 3.0) == pytest.approx(3.0)
    with pytest.raises(OutOfDomain):
        dual_mass(TWO_ATOM, 10.0)


def test_malformed_strings():
    with pytest.raises(MalformedString):
        KreinString(0.0, 1.0, ())
    with pytest.raises(MalformedString):
        KreinString(1.0, 1.0, ((1.0, -1.0),))
    with pytest.raises(MalformedString):
        KreinString(1.0, 1.0, (), length=2.0)


def test_uniform_string_ratio_constant():
    rep = theorem_a41_check(uniform_string(), [0.1, 1.0, 10.0, 100.0])
    oracle = 12 ** 0.25 / math.sqrt(2.0)
    assert all(x.ratio == pytest.approx(oracle, rel=1e-6) for x in rep.records)


def test_two_atom_string_q_is_rational_at_3i():
    # massless string with atoms: q is a rational function of z
    assert eval_q(string_to_hamiltonian(TWO_ATOM), 3j).value == pytest.approx(49 / 45 + 13j / 45)


def test_free_sl_solutions():
    sol = sl_solutions(free_problem())
    for t in (0.5, 2.0, 5.0):
        assert sol.c(t) == pytest.approx(1.0, abs=1e-9)
        assert sol.s(t) == pytest.approx(t, rel=1e-9)
        assert sol.wronskian(t) == pytest.approx(1.0, abs=1e-9)
    # gram determinant of (1, t) on [0, t] is t^4 / 12
    assert sol.gram_det(2.0) == pytest.approx(16 / 12, rel=1e-8)
    assert gram_t_hat(sol, 10.0) == pytest.approx((12 / 100) ** 0.25, rel=1e-8)


def test_free_sl_m_function():
    # m(z) = i sqrt(z) for -y'' on the half line with Dirichlet condition
    assert weyl_m(free_problem(), 4j, 1e-9) == pytest.approx(1j * (4j) ** 0.5, rel=1e-8)


def test_sl_ratio_band():
    rep = theorem_t9_check(free_problem(), [1.0, 100.0, 1e4])
    assert rep.spread_s == pytest.approx(1.0, abs=1e-6)
    assert rep.spread_c == pytest.approx(1.0, abs=1e-6)


def test_sl_problem_validation():
    with pytest.raises(OutOfDomain):
        SLProblem(lambda t: 1.0, lambda t: 0.0, lambda t: -1.0)
