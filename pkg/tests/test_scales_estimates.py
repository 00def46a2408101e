import math

import pytest

from weylcoef.errors import InsufficientSpan, InvalidParameters, OutOfDomain
from weylcoef.estimates import (BAND_ETA, band_constants, certified_band, cor_t5_check,
                                estimate_record, optimal_band_eta, point_tolerance,
                                positive_increase_diagnostic, prop_a4_record, slow_variation,
                                spread, theorem1_report)
from weylcoef.hamiltonian_core import diagonal, identity, piecewise_constant
from weylcoef.scales import envelopes, log_r_hat, log_r_ring, r_hat, r_ring, t_hat, t_ring
from weylcoef.strings_sl import free_schrodinger
from weylcoef.acceptance import rounding_margin


@pytest.mark.parametrize("r", [1e-3, 1.0, 10.0, 1e5])
def test_identity_scales(r):
    assert t_hat(identity(), r) == pytest.approx(1 / r, rel=1e-14)
    assert t_ring(identity(), r) == pytest.approx(1 / r, rel=1e-14)
    env = envelopes(identity(), r)
    assert env.A == pytest.approx(1.0) and env.L == pytest.approx(1.0)


def test_diagonal_scales():
    # omega1 omega2 = 4 t^2 = 1/r^2
    assert t_ring(diagonal(4, 1), 10.0) == pytest.approx(0.05)
    env = envelopes(diagonal(4, 1), 10.0)
    assert env.A == pytest.approx(2.0)


def test_scale_inverses():
    m = piecewise_constant([0, 1], [(1, 2, 0.5), (3, 1, -0.5)])
    for r in (0.1, 1.0, 7.0):
        assert r_hat(m, t_hat(m, r)) == pytest.approx(r, rel=1e-12)
        assert r_ring(m, t_ring(m, r)) == pytest.approx(r, rel=1e-12)
        assert log_r_hat(m, t_hat(m, r)) == pytest.approx(math.log(r), abs=1e-12)
        assert log_r_ring(m, t_ring(m, r)) == pytest.approx(math.log(r), abs=1e-12)


def test_t_hat_skips_indivisible_prefix():
    m = piecewise_constant([0, 1], [(1, 0, 0), (1, 1, 0)])
    th = t_hat(m, 100.0)
    assert th > 1.0
    with pytest.raises(OutOfDomain):
        r_hat(m, 0.5)


def test_scale_rejects_nonpositive_r():
    with pytest.raises(ValueError):
        t_hat(identity(), 0.0)


def test_estimate_record_constant_model():
    rec = estimate_record(diagonal(4, 1), 3.0)
    assert rec.q == pytest.approx(2j, abs=1e-8)
    assert rec.ratio_im == pytest.approx(1.0, rel=1e-6)
    assert rec.ratio_inv == pytest.approx(1.0, rel=1e-6)


def test_theorem1_report_grid_checked():
    with pytest.raises(InvalidParameters):
        theorem1_report(identity(), [1.0, 1.0])


def test_point_tolerance():
    assert point_tolerance(2.0, 1.0) == pytest.approx(2e-4)
    assert point_tolerance(2.0, 1e-3) == pytest.approx(1e-6)


def test_spread():
    assert spread([1.0, 2.0, 4.0]) == 4.0
    with pytest.raises(ValueError):
        spread([1.0, 0.0])


def test_band_constants_match_quoted_values():
    const = band_constants(BAND_ETA)
    assert rounding_margin(const.ratio, 675.772) >= 0
    assert rounding_margin(const.scaled_plus, 1.568) >= 0
    assert rounding_margin(const.scaled_minus, 0.00232) >= 0


def test_optimal_eta_minimises_ratio():
    eta = optimal_band_eta()
    best = band_constants(eta).ratio
    assert best <= band_constants(BAND_ETA).ratio
    assert best <= band_constants(eta * 1.05).ratio and best <= band_constants(eta * 0.95).ratio


def test_certified_band_identity():
    rep = certified_band(identity(), [1.0, 10.0], math.pi / 3)
    assert rep.passed and rep.worst_margin > 0


def test_prop_a4_record_identity():
    rec = prop_a4_record(identity(), 10.0)
    assert rec.tangent_ratio == pytest.approx(1.0, rel=1e-8)


def test_cor_t5_free_is_scale_invariant():
    rep = cor_t5_check(free_schrodinger(), [1.0, 10.0, 100.0], 2.0)
    assert rep.spread_im_dist == pytest.approx(1.0, abs=1e-8)
    assert rep.spread_dist == pytest.approx(1.0, abs=1e-8)


def test_slow_variation_constant_model():
    rows = slow_variation(identity(), 2.0, [10.0, 100.0])
    assert all(abs(row.deviation) < 1e-8 for row in rows)


def test_positive_increase_diagnostic():
    r = [10.0 ** k for k in range(0, 9)]
    grow = positive_increase_diagnostic(r, [x ** 0.5 for x in r])
    assert grow.verdict == "positively_increasing"
    flat = positive_increase_diagnostic(r, [1.0 for _ in r])
    assert flat.verdict == "inconclusive"
    with pytest.raises(InsufficientSpan):
        positive_increase_diagnostic(r[:4], [1.0] * 4)
    with pytest.raises(InvalidParameters):
        positive_increase_diagnostic(r[:3], [1.0] * 3)
