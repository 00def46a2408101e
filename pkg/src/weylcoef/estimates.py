"""Reports comparing computed Weyl coefficients with the scale-function estimates.

Everything here is a thin layer over ``eval_q`` and ``scales``: each report
evaluates q at a grid of points, pairs it with Omega at the matching scale
and returns plain dataclass records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from .errors import HypothesisViolated, InsufficientSpan, InvalidParameters
from .hamiltonian_core import HamiltonianModel, det_omega, omega, omega1_omega2
from .numerics import fit_slope, parallel_map
from .scales import DEFAULT_ETA, envelopes, log_r_hat, log_r_ring, t_hat
from .weyl_engine import QEvaluation, eval_q

BAND_ETA = 0.13833
ETA_MAX = 1.0 - 1.0 / math.sqrt(2.0)


# ---------------------------------------------------------------------------
# explicit band constants

@dataclass(frozen=True)
class BandConstants:
    eta: float
    theta: float
    sigma: float
    c_minus: float
    c_plus: float

    @property
    def ratio(self) -> float:
        return self.c_plus / self.c_minus

    @property
    def scaled_minus(self) -> float:
        """c_minus * eta/2: the prefactor of 1/(r omega2(t_hat_eta)) in the lower bound."""
        return 0.5 * self.eta * self.c_minus

    @property
    def scaled_plus(self) -> float:
        return 0.5 * self.eta * self.c_plus


def band_constants(eta: float = BAND_ETA, theta: float = math.pi / 2) -> BandConstants:
    if not 0 < eta < ETA_MAX:
        raise InvalidParameters(f"eta must lie in (0, 1 - 1/sqrt 2), got {eta!r}")
    if not 0 < theta < math.pi:
        raise InvalidParameters(f"theta must lie in (0, pi), got {theta!r}")
    sigma = (1.0 - eta) ** -2 - 1.0
    s = math.sin(theta)
    c_minus = eta * s / (2.0 * (1.0 + abs(math.cos(theta)))) * (1.0 - sigma) / (1.0 + sigma)
    c_plus = (sigma + 2.0 / (eta * s)) / (1.0 - sigma)
    return BandConstants(eta, theta, sigma, c_minus, c_plus)


def optimal_band_eta(theta: float = math.pi / 2) -> float:
    """The eta minimising c_plus/c_minus."""
    res = optimize.minimize_scalar(lambda e: band_constants(e, theta).ratio,
                                   bounds=(1e-6, ETA_MAX - 1e-9), method="bounded",
                                   options={"xatol": 1e-10})
    return float(res.x)


# ---------------------------------------------------------------------------
# per-point records

@dataclass(frozen=True)
class EstimateRecord:
    r: float
    q: complex
    im_q: float
    abs_q: float
    A: float
    L: float
    t_ring: float
    t_hat: float
    omega1_hat: float
    omega2_hat: float
    omega3_hat: float
    ratio_im: float
    ratio_inv: float
    ratio_center: float
    tangent: float
    tangent_pred: float


def point_tolerance(big_a: float, big_l: float, tol_factor: float = 1e-4) -> float:
    """eval_q tolerance: tol_factor * A, and never above 1e-3 * L (a lower proxy for Im q)."""
    return min(tol_factor * big_a, 1e-3 * big_l)


def estimate_record(model: HamiltonianModel, r: float, eta: float = DEFAULT_ETA,
                    tol_factor: float = 1e-4) -> EstimateRecord:
    env = envelopes(model, r, eta)
    ev = eval_q(model, 1j * r, point_tolerance(env.A, env.L, tol_factor))
    q = ev.value
    w = omega(model, env.t_hat)
    tangent_pred = math.sqrt(det_omega(model, env.t_hat) / omega1_omega2(model, env.t_hat))
    abs_q = abs(q)
    return EstimateRecord(
        r=r, q=q, im_q=q.imag, abs_q=abs_q, A=env.A, L=env.L, t_ring=env.t_ring,
        t_hat=env.t_hat, omega1_hat=w.omega1, omega2_hat=w.omega2, omega3_hat=w.omega3,
        ratio_im=q.imag * r * w.omega2, ratio_inv=q.imag / abs_q ** 2 * r * w.omega1,
        ratio_center=abs(q - w.omega3 / w.omega2) * r * w.omega2,
        tangent=q.imag / abs_q, tangent_pred=tangent_pred)


def theorem1_report(model: HamiltonianModel, r_grid: Sequence[float], eta: float = DEFAULT_ETA,
                    tol_factor: float = 1e-4, workers: int | None = None) -> list[EstimateRecord]:
    grid = _check_grid(r_grid)
    return parallel_map(lambda r: estimate_record(model, r, eta, tol_factor), grid, workers)


def spread(values: Sequence[float]) -> float:
    """max/min of a positive sequence."""
    v = np.asarray(values, float)
    if v.size == 0 or not np.all(v > 0):
        raise ValueError("spread needs positive values")
    return float(v.max() / v.min())


def _check_grid(r_grid: Sequence[float]) -> list[float]:
    grid = [float(r) for r in r_grid]
    if not grid or any(r <= 0 for r in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidParameters("r grid must be positive and strictly increasing")
    return grid


# ---------------------------------------------------------------------------
# certified band off the imaginary axis

@dataclass(frozen=True)
class BandPoint:
    r: float
    theta: float
    im_q: float
    error_radius: float
    lower: float
    upper: float
    margin: float          # log-distance to the nearer bound, certificate included


@dataclass(frozen=True)
class BandReport:
    constants: BandConstants
    points: list[BandPoint]

    @property
    def passed(self) -> bool:
        return all(p.margin >= 0 for p in self.points)

    @property
    def worst_margin(self) -> float:
        return min(p.margin for p in self.points)


def band_point(model: HamiltonianModel, r: float, const: BandConstants) -> BandPoint:
    th = t_hat(model, r, const.eta)
    unit = 1.0 / (r * omega(model, th).omega2)
    lower, upper = const.scaled_minus * unit, const.scaled_plus * unit
    ev = eval_q(model, r * complex(math.cos(const.theta), math.sin(const.theta)), 1e-3 * lower)
    im = ev.value.imag
    hi, lo = im + ev.error_radius, im - ev.error_radius
    margin = min(math.log(hi / lower), math.log(upper / lo) if lo > 0 else math.inf)
    return BandPoint(r, const.theta, im, ev.error_radius, lower, upper, margin)


def certified_band(model: HamiltonianModel, r_grid: Sequence[float], theta: float = math.pi / 2,
                   eta: float = BAND_ETA, workers: int | None = None) -> BandReport:
    """Check c_-(eta/2)/(r omega2(t_hat_eta)) <= Im q(r e^{i theta}) <= c_+(eta/2)/(...).

    A point fails only if it lies outside the band by more than its eval_q certificate.
    """
    const = band_constants(eta, theta)
    grid = _check_grid(r_grid)
    return BandReport(const, parallel_map(lambda r: band_point(model, r, const), grid, workers))


# ---------------------------------------------------------------------------
# tangential behaviour

def _q(model: HamiltonianModel, z: complex, rel: float = 1e-7) -> QEvaluation:
    """q(z) with a certificate relative to a first rough value.

    The rough value starts from a huge tolerance and is tightened until its
    disk is small against its own imaginary part.
    """
    tol = 1e300
    for _ in range(40):
        rough = eval_q(model, z, tol)
        scale = max(rough.value.imag, 1e-3 * abs(rough.value))
        if scale > 0 and rough.error_radius <= 0.1 * scale:
            break
        tol = 1e-2 * min(tol, max(rough.error_radius, 1e-300))
    return eval_q(model, z, max(rel * scale, 1e-300))


@dataclass(frozen=True)
class TangentRecord:
    r: float
    tangent: float
    tangent_pred: float
    tangent_ratio: float
    modulus_ratio: float


def prop_a4_record(model: HamiltonianModel, r: float) -> TangentRecord:
    th = t_hat(model, r)
    q = _q(model, 1j * r).value
    r2 = math.exp(log_r_ring(model, th))
    q2 = _q(model, 1j * r2).value
    tangent = q.imag / abs(q)
    pred = math.sqrt(det_omega(model, th) / omega1_omega2(model, th))
    return TangentRecord(r, tangent, pred, tangent / pred, abs(q2) / abs(q))


def prop_a4_report(model: HamiltonianModel, r_grid: Sequence[float],
                   workers: int | None = None) -> list[TangentRecord]:
    grid = _check_grid(r_grid)
    return parallel_map(lambda r: prop_a4_record(model, r), grid, workers)


@dataclass(frozen=True)
class CenterRecord:
    r: float
    k: float
    im_q_kr: float
    dist_kr: float          # |q(ikr) - omega3/omega2 (t_hat(r))|
    dist_r: float           # |q(ir) - omega3/omega2 (t_hat(r))|
    ratio_im_dist: float    # Im q(ikr) / dist_kr
    ratio_dist: float       # dist_kr / dist_r
    center_normalised: float  # dist_r * r * omega2(t_hat(r))


@dataclass(frozen=True)
class CenterReport:
    records: list[CenterRecord]
    spread_im_dist: float
    spread_dist: float
    spread_center: float


def cor_t5_check(model: HamiltonianModel, r_grid: Sequence[float], k: float,
                 workers: int | None = None) -> CenterReport:
    if not k > 0:
        raise InvalidParameters("k must be positive")
    grid = _check_grid(r_grid)

    def one(r: float) -> CenterRecord:
        th = t_hat(model, r)
        w = omega(model, th)
        c = w.omega3 / w.omega2
        qr = _q(model, 1j * r).value
        qk = qr if k == 1 else _q(model, 1j * k * r).value
        dk, dr = abs(qk - c), abs(qr - c)
        return CenterRecord(r, k, qk.imag, dk, dr, qk.imag / dk, dk / dr, dr * r * w.omega2)

    recs = parallel_map(one, grid, workers)
    return CenterReport(recs, spread([x.ratio_im_dist for x in recs]),
                        spread([x.ratio_dist for x in recs]),
                        spread([x.center_normalised for x in recs]))


@dataclass(frozen=True)
class SlowVariationRecord:
    r: float
    k: float
    deviation: float         # |q(ikr)/q(ir) - 1|
    deviation_delta0: float  # |q(ir tangent^0)/q(ir) - 1|
    deviation_delta_half: float  # |q(ir tangent^(1/2))/q(ir) - 1|


def slow_variation(model: HamiltonianModel, k: float, r_grid: Sequence[float],
                   workers: int | None = None) -> list[SlowVariationRecord]:
    if not k > 0:
        raise InvalidParameters("k must be positive")
    grid = _check_grid(r_grid)

    def one(r: float) -> SlowVariationRecord:
        qr = _q(model, 1j * r, 1e-9).value
        qk = qr if k == 1 else _q(model, 1j * k * r, 1e-9).value
        tangent = qr.imag / abs(qr)
        devs = []
        for delta in (0.0, 0.5):
            s = r * tangent ** delta
            qs = qr if s == r else _q(model, 1j * s, 1e-9).value
            devs.append(abs(qs / qr - 1.0))
        return SlowVariationRecord(r, k, abs(qk / qr - 1.0), devs[0], devs[1])

    return parallel_map(one, grid, workers)


# ---------------------------------------------------------------------------
# off-diagonal monotonicity

@dataclass(frozen=True)
class OffdiagRecord:
    t: float
    r: float
    im_q_a: float
    im_q_b: float
    ratio: float


@dataclass(frozen=True)
class OffdiagReport:
    records: list[OffdiagRecord]
    constant: float          # max of Im q_A / Im q_B over the grid
    trend: float             # slope of log ratio against log(1/t)
    passed: bool


def offdiag_monotonicity_check(model_a: HamiltonianModel, model_b: HamiltonianModel,
                               t_grid: Sequence[float], trend_tol: float = 0.1,
                               workers: int | None = None) -> OffdiagReport:
    """Compare Im q_A and Im q_B at r = r_hat_A(t) when |omega3^A| >= |omega3^B|.

    Passes if the ratio shows no growth trend as t decreases (slope of
    log ratio against log(1/t) at most ``trend_tol``).
    """
    ts = sorted(float(t) for t in t_grid)
    for t in ts:
        wa, wb = omega(model_a, t), omega(model_b, t)
        for x, y, what in ((wa.omega1, wb.omega1, "omega1"), (wa.omega2, wb.omega2, "omega2")):
            if abs(x - y) > 1e-8 * max(abs(x), abs(y)):
                raise HypothesisViolated(f"{what} differs between the models at t = {t!r}")
        if abs(wa.omega3) < abs(wb.omega3) * (1.0 - 1e-10):
            raise HypothesisViolated(f"|omega3_A| < |omega3_B| at t = {t!r}")

    def one(t: float) -> OffdiagRecord:
        r = math.exp(log_r_hat(model_a, t))
        qa = _q(model_a, 1j * r).value
        qb = qa if model_b is model_a else _q(model_b, 1j * r).value
        return OffdiagRecord(t, r, qa.imag, qb.imag, qa.imag / qb.imag)

    recs = parallel_map(one, ts, workers)
    ratios = [x.ratio for x in recs]
    trend = fit_slope([-math.log(x.t) for x in recs], np.log(ratios)) if len(recs) > 1 else 0.0
    return OffdiagReport(recs, max(ratios), trend, bool(trend <= trend_tol))


# ---------------------------------------------------------------------------
# positive increase

@dataclass(frozen=True)
class PositiveIncreaseVerdict:
    verdict: str                      # "positively_increasing" or "inconclusive"
    max_ratios: dict[float, float]    # lambda -> max |q(i lambda r)|/|q(ir)| over the top half


def positive_increase_diagnostic(r: Sequence[float], abs_q: Sequence[float],
                                 lambdas: Sequence[float] = (0.5, 0.25, 0.125),
                                 threshold: float = 0.95) -> PositiveIncreaseVerdict:
    """Empirical limsup test of |q(i lambda r)|/|q(ir)| < 1 on log-spaced samples.

    Values at lambda r are interpolated linearly in (log r, log|q|).
    """
    x = np.log(np.asarray(r, float))
    y = np.log(np.asarray(abs_q, float))
    if x.size < 4 or np.any(np.diff(x) <= 0):
        raise InvalidParameters("need at least 4 increasing sample points")
    if (x[-1] - x[0]) / math.log(10.0) < 4.0 - 1e-9:
        raise InsufficientSpan("samples must span at least 4 decades")
    mid = 0.5 * (x[0] + x[-1])
    ratios = {}
    for lam in lambdas:
        keep = (x >= mid) & (x + math.log(lam) >= x[0])
        if not np.any(keep):
            continue
        shifted = np.interp(x[keep] + math.log(lam), x, y)
        ratios[float(lam)] = float(np.exp(shifted - y[keep]).max())
    ok = any(v <= threshold for v in ratios.values())
    return PositiveIncreaseVerdict("positively_increasing" if ok else "inconclusive", ratios)


def abs_q_samples(model: HamiltonianModel, r_grid: Sequence[float],
                  workers: int | None = None) -> list[float]:
    grid = _check_grid(r_grid)
    return parallel_map(lambda r: abs(_q(model, 1j * r).value), grid, workers)

