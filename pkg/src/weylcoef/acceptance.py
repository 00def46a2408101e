"""The acceptance suite: one function per criterion, each returning a CriterionResult.

Margins are signed: ``tolerance - observed`` in the units of the check
(positive means pass), so the worst margin of a criterion is the smallest
over its sub-checks.
"""

from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import WeylError
from .estimates import (_q, band_constants, certified_band, estimate_record, offdiag_monotonicity_check,
                        prop_a4_record, slow_variation, spread, theorem1_report)
from .hamiltonian_core import HamiltonianModel, diagonal_part, identity, omega
from .model_zoo import HplParams, hpl_predict, make_hpl
from .numerics import fit_slope, log_grid
from .scales import envelopes, log_r_hat, log_r_ring, t_hat
from .specfile import zoo_model
from .strings_sl import (KreinString, free_problem, sl_to_hamiltonian, theorem_a41_check,
                         theorem_t9_check, uniform_string)
from .tails import at0_check, mu_tilde, power_function, y74_quantity, DIVERGENT, FINITE
from .weyl_engine import eval_q, propagate, weyl_disk

PROPERTY_SEED = 20240607
PROPERTY_CASES = 200
REGIME_C = 10.0


@dataclass
class SubCheck:
    name: str
    passed: bool
    margin: float
    observed: float | str = ""


@dataclass
class CriterionResult:
    number: int
    name: str
    checks: list[SubCheck] = field(default_factory=list)
    seconds: float = 0.0
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def margin(self) -> float:
        return min((c.margin for c in self.checks), default=float("nan"))

    def add(self, name: str, observed: float, limit: float, *, upper: bool = True) -> SubCheck:
        """Record observed <= limit (upper) or observed >= limit."""
        margin = limit - observed if upper else observed - limit
        chk = SubCheck(name, bool(margin >= 0), float(margin), observed)
        self.checks.append(chk)
        return chk

    def summary_line(self) -> str:
        m = "nan" if math.isnan(self.margin) else f"{self.margin:.6g}"
        return f"CHECK {self.number:02d}_{self.name} {'PASS' if self.passed else 'FAIL'} margin={m}"


def _hpl_sets() -> list[HplParams]:
    return [HplParams(0.5, 0.5), HplParams(1.0 / 3.0, 2.0 / 3.0)]


def _tag(p: HplParams) -> str:
    return f"p{p.p:.3g}_l{p.l:.3g}"


def rounding_margin(value: float, quoted: float, digits: int = 3) -> float:
    """Half a unit in the last compared digit minus |value - quoted|.

    Digits are compared up to ``digits`` significant ones, or every digit
    quoted if fewer; a nonnegative result means value rounds to quoted.
    """
    text = f"{abs(quoted):.15g}".replace(".", "").lstrip("0")
    d = min(digits, len(text.rstrip("0")) or 1)
    exponent = math.floor(math.log10(abs(quoted)))
    return 0.5 * 10.0 ** (exponent - d + 1) - abs(value - quoted)


# ---------------------------------------------------------------------------

def criterion_1() -> CriterionResult:
    res = CriterionResult(1, "constant_models")
    grid = list(np.logspace(-3, 3, 30))
    for model, exact in ((identity(), 1j), (zoo_model("diag41"), 2j)):
        err = max(abs(eval_q(model, 1j * r, 1e-10).value - exact) for r in grid)
        res.add(f"{model.name}_q_error", err, 1e-8)
        recs = theorem1_report(model, grid, tol_factor=1e-8)
        res.add(f"{model.name}_ratio_im_error", max(abs(x.ratio_im - 1.0) for x in recs), 1e-6)
    return res


BAND_MODELS = (("powerlog", 1e2), ("hpl", 1e2), ("r3", 1e2), ("identity", 1e-3), ("free", 1e-3))


def criterion_2() -> CriterionResult:
    res = CriterionResult(2, "explicit_band")
    c = band_constants()
    for label, value, quoted in (("c_plus", c.scaled_plus, 1.568), ("c_minus", c.scaled_minus, 0.002),
                                 ("ratio", c.ratio, 675.772)):
        m = rounding_margin(value, quoted)
        res.checks.append(SubCheck(f"{label}_vs_quoted", m >= 0, m, value))
    for name, lo in BAND_MODELS:
        model = zoo_model(name)
        for theta in (math.pi / 2, math.pi / 4, 3 * math.pi / 4):
            rep = certified_band(model, log_grid(lo, lo * 1e6, 3), theta)
            res.add(f"{name}_theta{theta:.4f}", -rep.worst_margin, 0.0)
    return res


def powerlog_exponents(r_min: float = 1e4, r_max: float = 1e12, per_decade: int = 2
                       ) -> dict[str, float]:
    model = zoo_model("powerlog")
    recs = theorem1_report(model, log_grid(r_min, r_max, per_decade))
    x = [math.log(math.log(rec.r)) for rec in recs]
    return {"im_q": fit_slope(x, [math.log(rec.im_q) for rec in recs]),
            "A": fit_slope(x, [math.log(rec.A) for rec in recs]),
            "L": fit_slope(x, [math.log(rec.L) for rec in recs])}


def criterion_3() -> CriterionResult:
    res = CriterionResult(3, "powerlog_exponents")
    fits = powerlog_exponents()
    for key, target, tol in (("im_q", -2.0, 0.2), ("A", -1.0, 0.15), ("L", -3.0, 0.25)):
        res.add(f"{key}_exponent", abs(fits[key] - target), tol).observed = fits[key]
    return res


def scale_formula_deviations(params: HplParams, n_values=range(3, 13)) -> dict[str, list[float]]:
    model = make_hpl(params)
    ring, hat = [], []
    for n in n_values:
        t = params.t_node(n)
        ring.append(log_r_ring(model, t) - hpl_predict(params, "r_ring_t", n))
        hat.append(log_r_hat(model, t) - hpl_predict(params, "r_hat_t", n))
    return {"ring": ring, "hat": hat}


def criterion_4() -> CriterionResult:
    res = CriterionResult(4, "scale_formulas")
    ns = list(range(3, 13))
    for params in _hpl_sets():
        dev = scale_formula_deviations(params, ns)
        for key in ("ring", "hat"):
            slope = fit_slope(ns, dev[key])
            res.add(f"{_tag(params)}_{key}_slope", abs(slope), 0.1).observed = slope
    return res


def regime_ratios(params: HplParams, n_values=range(2, 11)) -> dict[str, list[float]]:
    """Im q/A at r_ring(t_n), Im q/L and Im q/A at r_hat(t_n)."""
    model = make_hpl(params)
    ring_a, hat_l, hat_a = [], [], []
    for n in n_values:
        t = params.t_node(n)
        r = math.exp(log_r_ring(model, t))
        w = omega(model, t)
        big_a = 1.0 / (r * w.omega2)
        ring_a.append(_q(model, 1j * r).value.imag / big_a)
        r = math.exp(log_r_hat(model, t))
        env = envelopes(model, r)
        im = _q(model, 1j * r).value.imag
        hat_l.append(im / env.L)
        hat_a.append(im / env.A)
    return {"ring_a": ring_a, "hat_l": hat_l, "hat_a": hat_a}


def criterion_5() -> CriterionResult:
    res = CriterionResult(5, "hpl_regimes")
    ns = list(range(2, 11))
    for params in _hpl_sets():
        rr = regime_ratios(params, ns)
        tag = _tag(params)
        for key in ("ring_a", "hat_l"):
            worst = max(max(rr[key]), 1.0 / min(rr[key]))
            res.add(f"{tag}_{key}_band", worst, REGIME_C)
        drops = [a / b for n, a, b in zip(ns, rr["hat_a"], rr["hat_a"][1:]) if n >= 5]
        res.add(f"{tag}_hat_a_decay", min(drops), 1.2, upper=False)
    return res


def growth_ratios(params: HplParams, n_values=range(3, 11)) -> list[float]:
    """|q(i r_ring(xi_n))| / r_ring(xi_n)^delta."""
    model = make_hpl(params)
    out = []
    for n in n_values:
        lr = log_r_ring(model, params.xi_node(n))
        r = math.exp(lr)
        q = _q(model, 1j * r).value
        out.append(math.exp(math.log(abs(q)) - params.delta * lr))
    return out


def criterion_6() -> CriterionResult:
    res = CriterionResult(6, "hpl_growth_exponent")
    for params in _hpl_sets():
        vals = growth_ratios(params)
        res.add(f"{_tag(params)}_band", max(max(vals), 1.0 / min(vals)), REGIME_C)
    return res


def criterion_7() -> CriterionResult:
    res = CriterionResult(7, "sturm_liouville_free")
    problem = free_problem(0.0)
    model = sl_to_hamiltonian(problem)
    grid = log_grid(1.0, 1e4, 2)
    err = 0.0
    for r in grid:
        exact = 1j * cmath.sqrt(1j * r)
        m = eval_q(model, 1j * r, 1e-9 * abs(exact)).value
        err = max(err, abs(m - exact) / abs(exact))
    res.add("m_relative_error", err, 1e-6)
    rep = theorem_t9_check(problem, grid)
    res.add("ratio_s_spread", rep.spread_s - 1.0, 0.01)
    res.add("ratio_c_spread", rep.spread_c - 1.0, 0.01)
    return res


def criterion_8() -> CriterionResult:
    res = CriterionResult(8, "krein_strings")
    rep = theorem_a41_check(uniform_string(), log_grid(1e-2, 1e4, 2))
    res.add("uniform_spread", rep.spread - 1.0, 0.01)
    oracle = 12 ** 0.25 / math.sqrt(2.0)
    res.add("uniform_vs_oracle", max(abs(x.ratio - oracle) for x in rep.records), 1e-3)
    two = KreinString(0.0, 1.0, ((1.0, 1.0), (2.0, 2.0)), name="two-atom")
    rep2 = theorem_a41_check(two, log_grid(1.0, 1e4, 2))
    res.add("two_atom_spread", rep2.spread, 10.0)
    return res


# ---------------------------------------------------------------------------
# randomised properties

PROPERTY_MODELS = {"identity": (1e-2, 1e4), "diag41": (1e-2, 1e4), "free": (1e-2, 1e4),
                   "string": (1e-2, 1e4), "powerlog": (1e2, 1e10), "hpl": (1e2, 1e10),
                   "r3": (1e2, 1e10)}


def property_cases(seed: int = PROPERTY_SEED, cases: int = PROPERTY_CASES):
    rng = np.random.default_rng(seed)
    names = sorted(PROPERTY_MODELS)
    for _ in range(cases):
        name = names[int(rng.integers(len(names)))]
        lo, hi = PROPERTY_MODELS[name]
        r = float(10 ** rng.uniform(math.log10(lo), math.log10(hi)))
        phi = float(rng.uniform(0.1, math.pi - 0.1))
        u = sorted(float(x) for x in rng.uniform(0.3, 3.0, 2))
        yield name, r, phi, u


def _monotone_ok(values: list[tuple[float, float]]) -> float:
    """Worst violation of a nondecreasing sequence of (value, certificate) pairs."""
    worst = -math.inf
    for (a, ea), (b, eb) in zip(values, values[1:]):
        worst = max(worst, a - b - ea - eb)
    return worst


def criterion_9(seed: int = PROPERTY_SEED, cases: int = PROPERTY_CASES) -> CriterionResult:
    res = CriterionResult(9, "property_suites")
    models = {name: zoo_model(name) for name in PROPERTY_MODELS}
    nest_excess = loewner = mono = -math.inf
    det_err = 0.0
    tangent_ratios: dict[str, list[float]] = {name: [] for name in models}
    for name, r, phi, (u1, u2) in property_cases(seed, cases):
        model = models[name]
        th = t_hat(model, r)
        t1 = model.a + (th - model.a) * u1
        t2 = model.a + (th - model.a) * u2
        z = r * complex(math.cos(phi), math.sin(phi))
        w1, w2 = propagate(model, t1, z), propagate(model, t2, z)
        # det evaluated in floating point carries rounding of size eps * |w11 w22|
        for w in (w1, w2):
            size = max(1.0, abs(w.w11 * w.w22), abs(w.w12 * w.w21))
            det_err = max(det_err, abs(w.det - 1.0) / size)
        d1, d2 = weyl_disk(w1), weyl_disk(w2)
        nest_excess = max(nest_excess, (abs(d2.center - d1.center) + d2.radius - d1.radius)
                          / max(d1.radius, 1e-300) - 1e-6)
        o1, o2 = omega(model, t1), omega(model, t2)
        a1, a2, a3 = o2.omega1 - o1.omega1, o2.omega2 - o1.omega2, o2.omega3 - o1.omega3
        scale = max(o2.omega1, o2.omega2, 1e-300)
        loewner = max(loewner, -min(a1, a2) / scale, -(a1 * a2 - a3 * a3) / scale ** 2 - 1e-9)
        seq_im, seq_inv = [], []
        for s in (r, 1.5 * r, 2.25 * r):
            rough = eval_q(model, 1j * s, 1e-3).value
            ev = eval_q(model, 1j * s, 1e-8 * max(rough.imag, 1e-300))
            q = ev.value
            seq_im.append((s * q.imag, s * ev.error_radius))
            inv = -1.0 / q
            seq_inv.append((s * inv.imag, s * 2 * ev.error_radius / abs(q) ** 2))
        mono = max(mono, _monotone_ok(seq_im) / max(seq_im[0][0], 1e-300),
                   _monotone_ok(seq_inv) / max(seq_inv[0][0], 1e-300))
        rec = prop_a4_record(model, r)
        tangent_ratios[name].append(rec.tangent_ratio)
    res.add("det_W_equals_1", det_err, 1e-10)
    res.add("disk_nesting", nest_excess, 0.0)
    res.add("loewner_monotone", loewner, 0.0)
    res.add("r_im_q_nondecreasing", mono, 0.0)
    worst_band = max(spread(v) for v in tangent_ratios.values() if v)
    res.add("tangent_ratio_band", worst_band, REGIME_C ** 2)
    for label, (ma, mb, ts) in offdiag_pairs().items():
        rep = offdiag_monotonicity_check(ma, mb, ts)
        res.add(f"offdiag_{label}", rep.trend, 0.1)
    return res


def offdiag_pairs() -> dict[str, tuple[HamiltonianModel, HamiltonianModel, list[float]]]:
    pl = zoo_model("powerlog")
    hpl = zoo_model("hpl")
    hpl_ts = [HplParams(0.5, 0.5).t_node(n) for n in range(2, 9)]
    return {"same_model": (pl, pl, [10.0 ** -k for k in range(2, 9)]),
            "powerlog_vs_diagonal": (pl, diagonal_part(pl), [10.0 ** -k for k in range(2, 9)]),
            "hpl_vs_diagonal": (hpl, diagonal_part(hpl), hpl_ts)}


def criterion_10() -> CriterionResult:
    res = CriterionResult(10, "tails")
    one = identity()
    y = y74_quantity(one, power_function(1.0), [2.0 ** -k for k in range(1, 40)])
    res.add("y74_identity_error", max(abs(v - 1.0) for v in y.values), 1e-12)
    worst = max(abs(mu_tilde(one, r) / (2 * r / math.pi) - 1.0) for r in (1.0, 10.0, 100.0))
    res.add("mu_tilde_relative_error", worst, 0.02)
    truth = ((power_function(0.0), FINITE), (power_function(2.0), DIVERGENT),
             (power_function(0.0, 0.0), FINITE))
    for f, expected in truth:
        out = at0_check(one, f, 1.0)
        ok = out.lhs_verdict == expected and out.rhs_verdict == expected
        res.checks.append(SubCheck(f"at0_{f.name}", ok, 1.0 if ok else -1.0,
                                   f"{out.lhs_verdict}/{out.rhs_verdict}"))
    return res


def criterion_11() -> CriterionResult:
    res = CriterionResult(11, "slow_variation")
    pl = zoo_model("powerlog")
    recs = slow_variation(pl, 2.0, log_grid(1e7, 1e8, 4))
    res.add("powerlog_deviation_at_1e8", recs[-1].deviation, 0.1)
    slope = fit_slope([math.log(x.r) for x in recs], [x.deviation for x in recs])
    res.add("powerlog_deviation_trend", slope, 0.0)
    hpl_recs = slow_variation(zoo_model("hpl"), 2.0, log_grid(1e7, 1e8, 8))
    res.add("hpl_top_decade_max", max(x.deviation for x in hpl_recs), 0.2, upper=False)
    return res


CRITERIA: dict[int, Callable[[], CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
    11: criterion_11,
}


def run_criterion(number: int) -> CriterionResult:
    start = time.perf_counter()
    try:
        res = CRITERIA[number]()
    except WeylError as exc:
        res = CriterionResult(number, CRITERIA[number].__name__, error=f"{type(exc).__name__}: {exc}")
    res.seconds = time.perf_counter() - start
    return res


def run_all(numbers=None) -> list[CriterionResult]:
    return [run_criterion(n) for n in (numbers or sorted(CRITERIA))]
