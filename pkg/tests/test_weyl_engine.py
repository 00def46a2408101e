import cmath
import pytest

from weylcoef.errors import DegenerateDisk, OutOfDomain
from weylcoef.hamiltonian_core import diagonal, identity, piecewise_constant
from weylcoef.strings_sl import KreinString, free_schrodinger, string_to_hamiltonian, uniform_string
from weylcoef.weyl_engine import (TransferMatrix, circumcircle, eval_q, propagate, q_value,
                                  segment_exponential, weyl_disk)
from weylcoef.model_zoo import HplParams, make_hpl

from conftest import mp_mobius, mp_transfer

Z_VALUES = [1j, 0.7 + 1.3j, -3 + 0.2j, 40j, 1e-3j]


@pytest.mark.parametrize("z", Z_VALUES)
def test_constant_models(z):
    assert abs(eval_q(identity(), z).value - 1j) < 1e-10
    assert abs(eval_q(diagonal(4, 1), z).value - 2j) < 1e-10


@pytest.mark.parametrize("r", [1e-2, 1.0, 1e3])
def test_free_and_uniform_string(r):
    z = 1j * r
    want = 1j * cmath.sqrt(z)
    assert abs(eval_q(free_schrodinger(), z, 1e-9 * abs(want)).value - want) < 1e-8 * abs(want)
    # uniform string: q = i / sqrt(z) on the imaginary axis
    want = 1j / cmath.sqrt(z)
    ev = eval_q(string_to_hamiltonian(uniform_string()), z, 1e-9 * abs(want))
    assert abs(ev.value - want) < 1e-8 * abs(want)


def test_segment_exponential_matches_mpmath():
    z = 0.4 + 2.1j
    w = segment_exponential(2.0, 1.0, 0.5, 0.8, z)
    ref = mp_transfer([((2.0, 1.0, 0.5), 0.8)], z)
    got = [w.w11, w.w12, w.w21, w.w22]
    want = [complex(ref[0, 0]), complex(ref[0, 1]), complex(ref[1, 0]), complex(ref[1, 1])]
    assert max(abs(g - x) for g, x in zip(got, want)) < 1e-13
    assert abs(w.det - 1) < 1e-13


PIECES = [((2, 1, 0.5), 1.0), ((1, 0, 0), 1.5)]
PIECEWISE = piecewise_constant([0, 1, 2.5], [(2, 1, 0.5), (1, 0, 0), (4, 1, 0)])


@pytest.mark.parametrize("z", [0.7 + 1.3j, -2 + 0.5j, 10j])
def test_propagate_matches_mpmath(z):
    ref = mp_transfer(PIECES, z)
    w = propagate(PIECEWISE, 2.5, z)
    for got, want in zip((w.w11, w.w12, w.w21, w.w22), (ref[0, 0], ref[0, 1], ref[1, 0], ref[1, 1])):
        assert abs(got - complex(want)) < 1e-11 * max(1.0, abs(complex(want)))


@pytest.mark.parametrize("z", [0.7 + 1.3j, -2 + 0.5j, 10j, 300 + 30j])
def test_eval_q_matches_mpmath_oracle(z):
    # tail diag(4,1) contributes q = 2i
    want = mp_mobius(mp_transfer(PIECES, z), 2j)
    ev = eval_q(PIECEWISE, z, 1e-10)
    assert abs(ev.value - want) <= max(ev.error_radius, 1e-12) + 1e-12 * abs(want)
    assert ev.error_radius <= 1e-10


@pytest.mark.parametrize("z", [3j, 0.5 + 0.1j, 1e4j])
def test_rank_one_cells_exact_for_atoms(z):
    # atoms of mass 1 and 2 at x = 1, 2 on a massless string; the Hamiltonian is rank one
    # everywhere and ends in diag(1, 0), so q = w11 / w21 of the exact product
    s = KreinString(0.0, 1.0, ((1.0, 1.0), (2.0, 2.0)))
    ev = eval_q(string_to_hamiltonian(s), z, 1e-10)
    w = mp_transfer([((1, 1, 1), 1.0), ((4, 1, 2), 2.0)], z)
    want = complex(w[0, 0] / w[1, 0])
    assert abs(ev.value - want) <= 1e-12 * max(1.0, abs(want))
    assert ev.t_used <= 3.0


def test_hpl_deep_evaluation_is_certified():
    m = make_hpl(HplParams(0.5, 0.5))
    ev = eval_q(m, 1e12j, 1e-3 * 1e6)
    assert ev.value.imag > 0
    assert ev.error_radius <= 1e3


def test_weyl_disk_matches_circumcircle():
    w = propagate(PIECEWISE, 2.0, 0.7 + 1.3j)
    disk = weyl_disk(w)
    pts = [w.mobius(x) for x in (0.0, 1.0, -2.0)]
    ref = circumcircle(*pts)
    assert abs(disk.center - ref.center) < 1e-10 * (1 + abs(ref.center))
    assert disk.radius == pytest.approx(ref.radius, rel=1e-9)


def test_weyl_disk_degenerate_at_start():
    w = TransferMatrix(1, 0, 0, 1, 0.0, 1j)
    with pytest.raises(DegenerateDisk):
        weyl_disk(w)


def test_eval_q_rejects_real_z():
    with pytest.raises(OutOfDomain):
        eval_q(identity(), 1.0)


def test_q_value_shortcut():
    assert q_value(identity(), 2j) == pytest.approx(1j)
