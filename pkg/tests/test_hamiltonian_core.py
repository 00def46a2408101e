import math

import pytest

from weylcoef.errors import NonPSD, OutOfDomain
from weylcoef.hamiltonian_core import (constant, det_omega, diagonal, diagonal_part, eval_density,
                                       identity, indivisible_info, omega, omega_increment,
                                       omega_quad, piecewise_constant, rank_one_direction, restrict,
                                       table, check_invariants, HamiltonianModel)


def test_identity_omega_is_t_times_identity():
    w = omega(identity(), 3.0)
    assert (w.omega1, w.omega2, w.omega3) == (3.0, 3.0, 0.0)
    assert det_omega(identity(), 3.0) == 9.0


def test_constant_with_offdiagonal():
    m = constant(2.0, 1.0, 0.5)
    w = omega(m, 2.0)
    assert w.omega3 == pytest.approx(1.0)
    assert w.det == pytest.approx(4.0 * (2.0 - 0.25))


def test_piecewise_omega_and_increment():
    m = piecewise_constant([0, 1, 2.5], [(2, 1, 0.5), (1, 0, 0), (4, 1, 0)])
    w = omega(m, 3.0)
    assert (w.omega1, w.omega2, w.omega3) == pytest.approx((2 + 1.5 + 2, 1 + 0.5, 0.5))
    inc = omega_increment(m, 0.5, 2.0)
    assert inc == pytest.approx((1.0 + 1.0, 0.5, 0.25))


def test_quadrature_agrees_with_primitive():
    m = table([[0, 1, 2, 0.5], [1, 3, 1, -1], [2, 1, 1, 0]])
    w = omega(m, 1.7)
    q = omega_quad(m, 1.7)
    assert (q.omega1, q.omega2, q.omega3) == pytest.approx((w.omega1, w.omega2, w.omega3), rel=1e-9)


def test_indivisible_prefix_located():
    m = piecewise_constant([0, 1], [(1, 0, 0), (1, 1, 0)])
    info = indivisible_info(m)
    assert info.a_ring == pytest.approx(1.0, abs=1e-9)
    assert info.a_hat == pytest.approx(1.0, abs=1e-9)
    assert info.leading_type == pytest.approx(math.pi / 2)


def test_definite_model_has_trivial_prefix():
    info = indivisible_info(diagonal(4, 1))
    assert info.a_ring == 0.0 and info.a_hat == 0.0 and info.leading_type is None


def test_rank_one_direction():
    c, s = rank_one_direction(1.0, 4.0, -2.0)
    assert (c, s) == pytest.approx((1 / math.sqrt(5), -2 / math.sqrt(5)))
    assert rank_one_direction(1.0, 1.0, 0.0) is None
    assert rank_one_direction(0.0, 0.0, 0.0) is None


def test_piecewise_direction_only_on_rank_one_pieces():
    m = piecewise_constant([0, 1], [(1, 0, 0), (1, 1, 0)])
    assert m.direction(0.1, 0.9) == pytest.approx((1.0, 0.0))
    assert m.direction(1.1, 2.0) is None


def test_non_psd_density_rejected():
    with pytest.raises(NonPSD):
        constant(1.0, 1.0, 2.0)
    m = HamiltonianModel(0.0, math.inf, lambda t: (1.0, -1.0, 0.0), primitive=lambda t: (t, -t, 0.0))
    with pytest.raises(NonPSD):
        eval_density(m, 0.5)


def test_out_of_domain():
    with pytest.raises(OutOfDomain):
        omega(identity(), -1.0)


def test_diagonal_part_and_restrict():
    m = constant(2.0, 1.0, 0.5)
    d = diagonal_part(m)
    assert omega(d, 1.0).omega3 == 0.0
    r = restrict(m, 1.0)
    assert r.a == 1.0
    assert omega(r, 2.0).omega1 == pytest.approx(2.0)


def test_check_invariants_passes_and_fails():
    check_invariants(identity(), [0.1, 0.5, 1.0])
    bad = HamiltonianModel(0.0, math.inf, lambda t: (1.0, 1.0, 0.0),
                           primitive=lambda t: (-t, t, 0.0))
    with pytest.raises(NonPSD):
        check_invariants(bad, [0.5, 1.0])
