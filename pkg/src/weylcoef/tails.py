"""Tails of the spectral measure: linear term, Stieltjes inversion and growth criteria.

All integrability verdicts here are desk-scale heuristics: an improper
integral is reported as divergent-looking if its dyadic block sums keep
growing (see ``numerics.looks_divergent``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import BetaNonzero, InvalidParameters
from .hamiltonian_core import (HamiltonianModel, det_omega, eval_density, indivisible_info, omega,
                               restrict)
from .numerics import fit_slope, looks_divergent, parallel_map
from .weyl_engine import eval_q

FINITE = "finite-looking"
DIVERGENT = "divergent-looking"


@dataclass(frozen=True)
class ComparisonFunction:
    func: Callable[[float], float]
    derivative: Callable[[float], float] | None = None
    index: float | None = None      # declared index of regular variation
    name: str = "f"

    def __call__(self, r: float) -> float:
        return self.func(r)

    def spot_check(self, nondecreasing: bool = True) -> None:
        grid = [2.0 ** k for k in range(-10, 41)]
        vals = [self.func(r) for r in grid]
        if any(v < 0 or not math.isfinite(v) for v in vals):
            raise InvalidParameters(f"{self.name} must be finite and nonnegative")
        if nondecreasing and any(b < a * (1 - 1e-12) for a, b in zip(vals, vals[1:])):
            raise InvalidParameters(f"{self.name} must be nondecreasing")
        if self.index is not None and not 0 <= self.index <= 2:
            raise InvalidParameters("declared index must lie in [0, 2]")


def power_function(exponent: float, coef: float = 1.0) -> ComparisonFunction:
    deriv = (lambda r: coef * exponent * r ** (exponent - 1)) if exponent != 0 else (lambda r: 0.0)
    return ComparisonFunction(lambda r: coef * r ** exponent, deriv, exponent,
                              f"{coef:g}*r^{exponent:g}")


# ---------------------------------------------------------------------------
# linear term

def split_off_linear_term(model: HamiltonianModel) -> tuple[float, HamiltonianModel]:
    """(beta, H_-) with q_{H_-}(z) = q_H(z) - beta z.

    beta > 0 exactly when H starts with a piece diag(h1, 0) on (a, a_ring);
    then beta = omega1(a_ring) and H_- is the restriction to [a_ring, b).
    """
    info = indivisible_info(model)
    if info.leading_type == math.pi / 2 and info.a_ring > model.a:
        return omega(model, info.a_ring).omega1, restrict(model, info.a_ring)
    return 0.0, model


# ---------------------------------------------------------------------------
# Stieltjes inversion

@dataclass(frozen=True)
class StieltjesResult:
    x1: float
    x2: float
    eps: tuple[float, ...]
    values: tuple[float, ...]
    extrapolated: float


def _smeared_mass(model: HamiltonianModel, x1: float, x2: float, eps: float,
                  rtol: float) -> float:
    def im_q(x: float) -> float:
        rough = eval_q(model, complex(x, eps), 1e-3)
        return eval_q(model, complex(x, eps), max(1e-2 * rtol * abs(rough.value), 1e-300)).value.imag

    val, _ = integrate.quad(im_q, x1, x2, epsrel=rtol, epsabs=0.0, limit=200)
    return val / math.pi


def stieltjes_inversion(model: HamiltonianModel, x1: float, x2: float,
                        eps_sequence: Sequence[float] = (1e-2, 5e-3, 1e-3),
                        rtol: float = 1e-6) -> StieltjesResult:
    """(1/pi) int_{x1}^{x2} Im q(x + i eps) dx for each eps, and a linear extrapolation
    to eps = 0 from the two smallest eps."""
    if x2 < x1:
        raise InvalidParameters("need x1 <= x2")
    eps = tuple(float(e) for e in eps_sequence)
    if not eps or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise InvalidParameters("eps_sequence must be positive and decreasing")
    if x1 == x2:
        return StieltjesResult(x1, x2, eps, tuple(0.0 for _ in eps), 0.0)
    vals = tuple(_smeared_mass(model, x1, x2, e, rtol) for e in eps)
    if len(eps) == 1:
        extra = vals[0]
    else:
        e1, e2, v1, v2 = eps[-2], eps[-1], vals[-2], vals[-1]
        extra = (e1 * v2 - e2 * v1) / (e1 - e2)
    return StieltjesResult(x1, x2, eps, vals, extra)


def mu_tilde(model: HamiltonianModel, r: float, rel_eps: Sequence[float] = (0.02, 0.01),
             rtol: float = 1e-6) -> float:
    """mu((-r, r)) from Stieltjes inversion with eps proportional to r.

    The eval_q cost grows like |x|/eps, so eps scales with the interval.
    """
    return stieltjes_inversion(model, -r, r, [e * r for e in rel_eps], rtol).extrapolated


# ---------------------------------------------------------------------------
# integrability criterion

@dataclass(frozen=True)
class At0Result:
    lhs: float
    rhs: float
    lhs_verdict: str
    rhs_verdict: str
    lhs_partials: tuple[float, ...]
    rhs_partials: tuple[float, ...]
    lhs_truncated_at: float
    diff_rhs: float | None = None
    diff_verdict: str | None = None

    @property
    def agree(self) -> bool:
        return self.lhs_verdict == self.rhs_verdict


def _verdict(partials: Sequence[float]) -> str:
    return DIVERGENT if looks_divergent(partials) else FINITE


def _dyadic_partials(integrand: Callable[[float], float], lo: float, hi: float, blocks: int,
                     toward_left: bool, rtol: float = 1e-8) -> list[float]:
    """Cumulative integrals over dyadic blocks approaching lo (toward_left) or growing from lo."""
    out, total = [], 0.0
    for k in range(blocks):
        if toward_left:
            u, v = lo + (hi - lo) * 2.0 ** (-k - 1), lo + (hi - lo) * 2.0 ** (-k)
        else:
            u, v = lo * 2.0 ** k, lo * 2.0 ** (k + 1)
        val, _ = integrate.quad(integrand, u, v, epsrel=rtol, epsabs=0.0, limit=200)
        total += val
        out.append(total)
    return out


def _rhs_integrand(model: HamiltonianModel, f: Callable[[float], float]) -> Callable[[float], float]:
    def integrand(t: float) -> float:
        h1, h2, h3 = eval_density(model, t)
        w = omega(model, t)
        d = det_omega(model, t)
        if d <= 0:
            return 0.0
        form = (w.omega2 ** 2 * h1 - 2 * w.omega2 * w.omega3 * h3 + w.omega3 ** 2 * h2) / w.omega2 ** 2
        return form * f(d ** -0.5)
    return integrand


def _diff_integrand(model: HamiltonianModel, fp: Callable[[float], float]) -> Callable[[float], float]:
    def integrand(t: float) -> float:
        h1, h2, h3 = eval_density(model, t)
        w = omega(model, t)
        d = det_omega(model, t)
        if d <= 0:
            return 0.0
        dd = h1 * w.omega2 + w.omega1 * h2 - 2 * h3 * w.omega3
        return dd / (w.omega2 * math.sqrt(d)) * fp(d ** -0.5)
    return integrand


def at0_check(model: HamiltonianModel, f: ComparisonFunction, a_prime: float,
              blocks: int = 40, lhs_blocks: int = 14,
              rel_eps: Sequence[float] = (0.02, 0.01), rtol: float = 1e-6) -> At0Result:
    """Both sides of the integrability equivalence, each with a finiteness verdict.

    rhs: int_{a_hat}^{a'} (1/omega2^2) (omega2, -omega3) H (omega2, -omega3)^T f(det Omega^{-1/2}) dt
    lhs: int_1^R mu((-r, r)) f(r) / r^3 dr with R = 2^lhs_blocks.
    """
    beta, _ = split_off_linear_term(model)
    if beta > 0:
        raise BetaNonzero(f"model has a linear term beta = {beta:g}; split it off first")
    f.spot_check()
    a_hat = indivisible_info(model).a_hat
    if not a_prime > a_hat:
        raise InvalidParameters("a' must exceed a_hat")
    rhs_p = _dyadic_partials(_rhs_integrand(model, f.func), a_hat, a_prime, blocks, True)
    diff_rhs = diff_verdict = None
    if f.derivative is not None:
        dp = _dyadic_partials(_diff_integrand(model, f.derivative), a_hat, a_prime, blocks, True)
        diff_rhs, diff_verdict = dp[-1], _verdict(dp)

    nodes = [2.0 ** k for k in range(lhs_blocks + 1)]
    mus = parallel_map(lambda r: mu_tilde(model, r, rel_eps, rtol), nodes)
    lhs_p, total = [], 0.0
    for k in range(lhs_blocks):
        u, v, mu_u, mu_v = nodes[k], nodes[k + 1], mus[k], mus[k + 1]

        def block(r, u=u, v=v, mu_u=mu_u, mu_v=mu_v):
            mu = mu_u + (mu_v - mu_u) * (r - u) / (v - u)
            return mu * f(r) / r ** 3

        val, _ = integrate.quad(block, u, v, epsrel=1e-8, limit=200)
        total += val
        lhs_p.append(total)
    return At0Result(lhs_p[-1], rhs_p[-1], _verdict(lhs_p), _verdict(rhs_p), tuple(lhs_p),
                     tuple(rhs_p), nodes[-1], diff_rhs, diff_verdict)


# ---------------------------------------------------------------------------
# growth of the tails relative to a comparison function

@dataclass(frozen=True)
class GrowthSequence:
    points: tuple[float, ...]
    values: tuple[float, ...]
    limsup: float
    trend: float
    classification: str        # "zero", "finite" or "infinite"


def classify_trend(slope: float, tol: float = 0.1) -> str:
    if slope > tol:
        return "infinite"
    if slope < -tol:
        return "zero"
    return "finite"


def _growth(points: Sequence[float], values: Sequence[float], log_x: Sequence[float]) -> GrowthSequence:
    vals = np.asarray(values, float)
    tail = vals[len(vals) * 2 // 3:]
    slope = fit_slope(log_x, np.log(vals))
    return GrowthSequence(tuple(points), tuple(float(v) for v in vals), float(tail.max()),
                          slope, classify_trend(slope))


def y74_quantity(model: HamiltonianModel, g: ComparisonFunction,
                 t_grid: Sequence[float]) -> GrowthSequence:
    """1/(omega2(t) g(det Omega(t)^{-1/2})) along t_grid (ordered toward a_hat)."""
    beta, _ = split_off_linear_term(model)
    if beta > 0:
        raise BetaNonzero(f"model has a linear term beta = {beta:g}; split it off first")
    g.spot_check()
    ts = sorted((float(t) for t in t_grid), reverse=True)
    vals = [1.0 / (omega(model, t).omega2 * g(det_omega(model, t) ** -0.5)) for t in ts]
    return _growth(ts, vals, [-math.log(t - indivisible_info(model).a_hat) for t in ts])


def mu_tilde_ratio(model: HamiltonianModel, g: ComparisonFunction, r_grid: Sequence[float],
                   rel_eps: Sequence[float] = (0.02, 0.01)) -> GrowthSequence:
    """mu((-r, r))/g(r) along an increasing r grid."""
    rs = sorted(float(r) for r in r_grid)
    mus = parallel_map(lambda r: mu_tilde(model, r, rel_eps), rs)
    return _growth(rs, [m / g(r) for m, r in zip(mus, rs)], [math.log(r) for r in rs])
