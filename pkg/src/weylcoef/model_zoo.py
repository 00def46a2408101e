"""Example Hamiltonians with closed-form (log-domain) primitives.

* power-log:  H(t) = t^(alpha-1) [[L^b1, L^b3], [L^b3, L^b2]],  L = -log t,
  b3 = (b1 + b2)/2, on (0, t_max] followed by a diag(1, 0) tail.
* H_{p,l}:   prescribed angle f = omega3/sqrt(omega1 omega2) oscillating
  between 1 - p^n at t_n and l^n at xi_n, linear in between.
* r3 variant: as H_{p,l} with f(xi_n) = 1 - l^(n-1).
* prescribed angle: omega_i = exp(c - int_t^b alpha_i) for a user-supplied
  f and g = alpha1 + alpha2.

All of them carry a ``log_primitive`` so that det Omega is available as
(omega1 omega2)(1 - f^2) without cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidParameters, OutOfDomain, SplitOutOfRange
from .hamiltonian_core import HamiltonianModel, LogOmega
from .numerics import RightTailIntegral, looks_divergent

_LAGUERRE_NODES = 60
_lag_x, _lag_w = np.polynomial.laguerre.laggauss(_LAGUERRE_NODES)


# ---------------------------------------------------------------------------
# shared tail

def _with_tail(core_log: Callable[[float], LogOmega], core_density, a: float, t_end: float,
               *, name: str, singular_left: bool, segments: Sequence[float] = (),
               spec: dict | None = None, exact_increment: bool = False,
               core_direction: Callable[[float, float], tuple[float, float] | None] | None = None
               ) -> HamiltonianModel:
    """Continue a model defined on (a, t_end] by H = diag(1, 0) on (t_end, inf)."""
    end = core_log(t_end)
    w1e, w2e = math.exp(end.log_omega1), math.exp(end.log_omega2)
    det_e = w1e * w2e * end.gap
    w3e = math.sqrt(w1e * w2e) * end.f

    def log_primitive(t: float) -> LogOmega:
        if t <= t_end:
            return core_log(t)
        w1 = w1e + (t - t_end)
        prod = w1 * w2e
        return LogOmega(math.log(w1), end.log_omega2, w3e / math.sqrt(prod),
                        (det_e + (t - t_end) * w2e) / prod)

    def density(t: float):
        if t <= t_end:
            return core_density(t)
        return (1.0, 0.0, 0.0)

    def omega_at(t: float):
        if t <= a:
            return 0.0, 0.0, 0.0
        lp = log_primitive(t)
        root = math.exp(0.5 * (lp.log_omega1 + lp.log_omega2))
        return math.exp(lp.log_omega1), math.exp(lp.log_omega2), root * lp.f

    def increment(t0: float, t1: float):
        # omega1, omega2 via expm1 of log differences: exact zeros where a log primitive is flat
        if t0 <= a:
            return omega_at(t1)
        lp0, lp1 = log_primitive(t0), log_primitive(t1)
        d1 = -math.exp(lp1.log_omega1) * math.expm1(lp0.log_omega1 - lp1.log_omega1)
        d2 = -math.exp(lp1.log_omega2) * math.expm1(lp0.log_omega2 - lp1.log_omega2)
        return (d1, d2, omega_at(t1)[2] - omega_at(t0)[2])

    def direction(t0: float, t1: float):
        if t0 >= t_end:
            return 1.0, 0.0
        if t1 <= t_end and core_direction is not None:
            return core_direction(t0, t1)
        return None

    return HamiltonianModel(a=a, b=math.inf, density=density, log_primitive=log_primitive,
                            segments=tuple(segments) + (t_end,), singular_left=singular_left,
                            name=name, tail_start=t_end, spec=spec or {},
                            increment=increment if exact_increment else None,
                            direction=direction)


# ---------------------------------------------------------------------------
# power-log family

@dataclass(frozen=True)
class PowerLogParams:
    alpha: float
    beta1: float
    beta2: float
    t_max: float = 0.5

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidParameters("power-log model needs alpha > 0")
        if self.beta1 == self.beta2:
            raise InvalidParameters("power-log model needs beta1 != beta2")
        if not 0 < self.t_max < 1:
            raise InvalidParameters("power-log model needs 0 < t_max < 1")

    @property
    def beta3(self) -> float:
        return 0.5 * (self.beta1 + self.beta2)


def _powerlog_log_primitive(params: PowerLogParams) -> Callable[[float], LogOmega]:
    """omega_i(t) = t^alpha L^b_i K_i(L) with K_i(L) = int_0^inf e^(-alpha v)(1 + v/L)^b_i dv.

    The determinant factor K1 K2 - K3^2 is the symmetrised double integral
    of 4 e^(b3 (x1 + x2)) sinh^2(d (x1 - x2)/2), x = log(1 + v/L), d = (b1 - b2)/2,
    which has no cancellation.
    """
    al, b1, b2, b3 = params.alpha, params.beta1, params.beta2, params.beta3
    d = 0.5 * (b1 - b2)
    x, w = _lag_x, _lag_w

    def log_primitive(t: float) -> LogOmega:
        if not 0 < t:
            raise OutOfDomain("power-log log primitive needs t > 0")
        big_l = -math.log(t)
        xs = np.log1p(x / (al * big_l))
        k1 = float(w @ np.exp(b1 * xs)) / al
        k2 = float(w @ np.exp(b2 * xs)) / al
        k3 = float(w @ np.exp(b3 * xs)) / al
        e3 = np.exp(b3 * xs)
        diff = xs[:, None] - xs[None, :]
        kern = (w * e3)[:, None] * (w * e3)[None, :] * 4.0 * np.sinh(0.5 * d * diff) ** 2
        det_k = 0.5 * float(kern.sum()) / (al * al)
        log_l = math.log(big_l)
        lw1 = al * math.log(t) + b1 * log_l + math.log(k1)
        lw2 = al * math.log(t) + b2 * log_l + math.log(k2)
        return LogOmega(lw1, lw2, k3 / math.sqrt(k1 * k2), det_k / (k1 * k2))

    return log_primitive


def make_powerlog(params: PowerLogParams) -> HamiltonianModel:
    al, b1, b2, b3 = params.alpha, params.beta1, params.beta2, params.beta3

    def density(t: float):
        big_l = -math.log(t)
        s = t ** (al - 1.0)
        return (s * big_l ** b1, s * big_l ** b2, s * big_l ** b3)

    spec = {"kind": "powerlog", "alpha": al, "beta1": b1, "beta2": b2, "t_max": params.t_max}
    return _with_tail(_powerlog_log_primitive(params), density, 0.0, params.t_max,
                      name=f"powerlog({al:g},{b1:g},{b2:g})", singular_left=True, spec=spec)


def powerlog_omega_oracle(params: PowerLogParams, t: float) -> tuple[float, float, float]:
    """omega_i(t) = alpha^(-b-1) Gamma(b + 1, alpha L) (needs b > -1); independent of the
    Laguerre rule used by the model."""
    from scipy.special import gamma, gammaincc
    big_l = -math.log(t)
    out = []
    for b in (params.beta1, params.beta2, params.beta3):
        if not b > -1:
            raise InvalidParameters("oracle needs beta > -1")
        out.append(params.alpha ** (-b - 1) * gamma(b + 1) * gammaincc(b + 1, params.alpha * big_l))
    return tuple(out)


@dataclass(frozen=True)
class PowerLogPrediction:
    r: float
    t_ring: float
    t_hat: float
    A: float
    L: float
    im_q_scale: float
    exponents: tuple[float, float, float]   # of (Im q, A, L) in log r


def _solve_leading(c: float, a: float, b: float, log_s: float) -> float:
    """Solve c t^a (-log t)^b = s for small t (fixed point in log t); returns -log t."""
    big_l = max(-log_s / a, 1.0)
    for _ in range(200):
        new = (math.log(c) + b * math.log(big_l) - log_s) / a
        if abs(new - big_l) <= 1e-15 * new:
            big_l = new
            break
        big_l = new
    return big_l


def powerlog_predict(params: PowerLogParams, r: float, eta: float = 2.0) -> PowerLogPrediction:
    """Leading-order asymptotics as r -> infinity.

    omega_i ~ t^alpha L^b_i / alpha and det Omega ~ ((b1-b2)/(2 alpha))^2 t^(2 alpha) L^(2 b3 - 2) / alpha^2;
    the scale equations are solved exactly at this order.
    """
    al, b1, b2, b3 = params.alpha, params.beta1, params.beta2, params.beta3
    log_s = 2.0 * math.log(eta / 2.0) - 2.0 * math.log(r)
    kappa = ((b1 - b2) / (2.0 * al)) ** 2
    lr = _solve_leading(al ** -2, 2 * al, 2 * b3, log_s)
    lh = _solve_leading(kappa * al ** -2, 2 * al, 2 * b3 - 2, log_s)
    tr, th = math.exp(-lr), math.exp(-lh)
    big_a = lr ** ((b1 - b2) / 2.0)
    big_l = big_a * kappa * lr ** -2
    # eta / (2 r omega2(t_hat)) with omega2 ~ t^alpha L^b2 / alpha, in logs
    im_scale = math.exp(math.log(eta / 2.0) - math.log(r) + al * lh - b2 * math.log(lh) + math.log(al))
    d = (b1 - b2) / 2.0
    return PowerLogPrediction(r, tr, th, big_a, big_l, im_scale, (d - 1.0, d, d - 2.0))


# ---------------------------------------------------------------------------
# H_{p,l} and the r3 variant

_N_CAP = 400


@dataclass(frozen=True)
class HplParams:
    p: float
    l: float
    xi_base: float = 0.25
    t_frac: float = 0.5
    n_max: int = 14
    variant: str = "hpl"

    def __post_init__(self):
        if not (0 < self.p < 1 and 0 < self.l < 1):
            raise InvalidParameters("H_{p,l} needs p, l in (0, 1)")
        if not (0 < self.xi_base < 1 and self.xi_base < self.t_frac < 1):
            raise InvalidParameters("sequences must interleave: xi_{n+1} < t_n < xi_n")
        if self.variant not in ("hpl", "r3"):
            raise InvalidParameters(f"unknown variant {self.variant!r}")
        if self.variant == "r3" and not self.l ** 2 > self.p:
            raise InvalidParameters("r3 variant needs l^2 > p")
        if self.n_max < 1:
            raise InvalidParameters("n_max must be positive")

    @property
    def delta(self) -> float:
        return math.log(self.l) / math.log(self.p * self.l)

    def t_node(self, n: int) -> float:
        return self.t_frac * self.xi_base ** n

    def xi_node(self, n: int) -> float:
        return self.xi_base ** n

    def f_at_t(self, n: int) -> tuple[float, float]:
        """(f, 1 - f) at t_n."""
        u = self.p ** n
        return 1.0 - u, u

    def f_at_xi(self, n: int) -> tuple[float, float]:
        if self.variant == "hpl":
            f = self.l ** n
            return f, -math.expm1(n * math.log(self.l))
        u = self.l ** (n - 1)
        return 1.0 - u, u


class _HplCore:
    """Closed forms of H_{p,l} on (0, t_1]."""

    def __init__(self, params: HplParams):
        self.P = params
        lq = math.log(params.xi_base)
        self.log_base = lq
        n_cap = _N_CAP
        # S_i at t_n and xi_n (S_i(t) = int_t^{t_1} alpha_i)
        s1_t = [0.0] * (n_cap + 2)
        s2_t = [0.0] * (n_cap + 2)
        s1_x = [0.0] * (n_cap + 2)
        s2_x = [0.0] * (n_cap + 2)
        for n in range(1, n_cap + 1):
            ft, ut = params.f_at_t(n)
            fx, ux = params.f_at_xi(n + 1)
            rise = math.log(ux) - math.log(ut)
            s1_x[n + 1] = s1_t[n] + rise
            s2_x[n + 1] = s2_t[n] + rise
            ft2, _ = params.f_at_t(n + 1)
            s1_t[n + 1] = s1_x[n + 1]
            s2_t[n + 1] = s2_x[n + 1] + 2.0 * (math.log(ft2) - math.log(fx))
        self.s1_t, self.s2_t, self.s1_x, self.s2_x = s1_t, s2_t, s1_x, s2_x
        self.n_cap = n_cap

    def locate(self, t: float) -> tuple[str, int]:
        """('rise', n) for t in (xi_{n+1}, t_n], ('fall', n) for t in (t_n, xi_n]."""
        P = self.P
        if not 0 < t <= P.t_node(1):
            raise OutOfDomain(f"t = {t!r} outside (0, t_1]")
        n = max(int(math.floor(math.log(t) / self.log_base)), 1)
        while n > 1 and t > P.xi_node(n):
            n -= 1
        while t <= P.xi_node(n + 1):
            n += 1
        if n > self.n_cap:
            raise OutOfDomain(f"t = {t!r} below the tabulated depth of H_{{p,l}}")
        return ("rise", n) if t <= P.t_node(n) else ("fall", n)

    def piece(self, t: float):
        """Linear data on the piece containing t: f, u = 1 - f, f'."""
        kind, n = self.locate(t)
        P = self.P
        if kind == "rise":
            x0, x1 = P.xi_node(n + 1), P.t_node(n)
            (f0, u0), (f1, u1) = P.f_at_xi(n + 1), P.f_at_t(n)
        else:
            x0, x1 = P.t_node(n), P.xi_node(n)
            (f0, u0), (f1, u1) = P.f_at_t(n), P.f_at_xi(n)
        lam = (t - x0) / (x1 - x0)
        f = f0 + lam * (f1 - f0)
        u = u0 + lam * (u1 - u0)
        slope = (f1 - f0) / (x1 - x0)
        return kind, n, f, u, slope

    def log_primitive(self, t: float) -> LogOmega:
        kind, n, f, u, _ = self.piece(t)
        if kind == "rise":
            _, ut = self.P.f_at_t(n)
            extra = math.log(u) - math.log(ut)
            s1 = self.s1_t[n] + extra
            s2 = self.s2_t[n] + extra
        else:
            fx, _ = self.P.f_at_xi(n)
            s1 = self.s1_x[n]
            s2 = self.s2_x[n] + 2.0 * (math.log(f) - math.log(fx))
        return LogOmega(-s1, -s2, f, u * (2.0 - u))

    def alphas(self, t: float) -> tuple[float, float, float, float]:
        """(alpha1, alpha2, f, f')."""
        kind, n, f, u, slope = self.piece(t)
        if kind == "rise":
            a = slope / u
            return a, a, f, slope
        return 0.0, -2.0 * slope / f, f, slope

    def direction(self, t0: float, t1: float) -> tuple[float, float]:
        """Rise pieces keep omega1/omega2 fixed and have det H = 0; fall pieces have h1 = 0."""
        kind, _ = self.locate(0.5 * (t0 + t1))
        if kind == "fall":
            return 0.0, 1.0
        lp = self.log_primitive(0.5 * (t0 + t1))
        x = math.exp(0.5 * (lp.log_omega2 - lp.log_omega1))
        norm = math.hypot(1.0, x)
        return 1.0 / norm, x / norm

    def density(self, t: float):
        a1, a2, f, slope = self.alphas(t)
        lp = self.log_primitive(t)
        w1, w2 = math.exp(lp.log_omega1), math.exp(lp.log_omega2)
        root = math.exp(0.5 * (lp.log_omega1 + lp.log_omega2))
        return (a1 * w1, a2 * w2, root * (slope + 0.5 * (a1 + a2) * f))


def make_hpl(params: HplParams) -> HamiltonianModel:
    core = _HplCore(params)
    nodes = []
    for n in range(1, min(core.n_cap, 200)):
        nodes += [params.t_node(n), params.xi_node(n + 1)]
    spec = {"kind": "hpl" if params.variant == "hpl" else "r3", "p": params.p, "l": params.l,
            "xi_base": params.xi_base, "t_frac": params.t_frac, "n_max": params.n_max}
    label = "H" if params.variant == "hpl" else "R3"
    model = _with_tail(core.log_primitive, core.density, 0.0, params.t_node(1),
                       name=f"{label}_{{{params.p:g},{params.l:g}}}", singular_left=True,
                       segments=nodes, spec=spec, exact_increment=True,
                       core_direction=core.direction)
    object.__setattr__(model, "_core", core)
    return model


def make_r3_variant(params: HplParams) -> HamiltonianModel:
    if params.variant != "r3":
        params = HplParams(params.p, params.l, params.xi_base, params.t_frac, params.n_max, "r3")
    return make_hpl(params)


def hpl_f(model: HamiltonianModel, t: float) -> float:
    """The prescribed angle function f of an H_{p,l}-type model."""
    return model._core.piece(t)[2]


def hpl_predict(params: HplParams, which: str, n: int | None = None, t: float | None = None) -> float:
    """Leading-order log scale values, up to an additive term bounded in n and t.

    which: r_ring_t, r_hat_t, r_ring_xi, r_hat_xi (need n), or
    log_r_ring_of_t, log_r_hat_of_t (need t in (0, t_1]).
    """
    lpl = math.log(params.p * params.l)
    lr = math.log(params.l / params.p)
    if which in ("r_ring_t", "r_hat_t", "r_ring_xi", "r_hat_xi"):
        if n is None or n < 1:
            raise InvalidParameters("n >= 1 required")
        base = -n * n * lpl / 2.0
        if which == "r_ring_t":
            return base - n * lr / 2.0
        if which == "r_hat_t":
            return base - n * math.log(params.l) / 2.0
        return base + n * lpl / 2.0
    if which in ("log_r_ring_of_t", "log_r_hat_of_t"):
        if t is None:
            raise InvalidParameters("t required")
        core = _HplCore.__new__(_HplCore)
        core.P = params
        core.log_base = math.log(params.xi_base)
        core.n_cap = _N_CAP
        kind, n, f, u, _ = core.piece(t)
        base = -n * n * lpl / 2.0
        if kind == "fall":
            val = base - n * lr / 2.0 + math.log(f)
            return val if which == "log_r_ring_of_t" else val - 0.5 * math.log(u)
        val = base - n * lpl / 2.0
        return val + math.log(u) if which == "log_r_ring_of_t" else val + 0.5 * math.log(u)
    raise InvalidParameters(f"unknown prediction {which!r}")


# ---------------------------------------------------------------------------
# prescribed angle

@dataclass(frozen=True)
class PrescribedAngleSpec:
    f: Callable[[float], float]
    f_prime: Callable[[float], float]
    g: Callable[[float], float]
    a: float = 0.0
    b: float = 1.0
    c: float = 0.0
    alpha1: Callable[[float], float] | None = None
    one_minus_f: Callable[[float], float] | None = None
    breakpoints: tuple[float, ...] = ()
    name: str = "prescribed_angle"
    check_grid: tuple[float, ...] = field(default=())


def angle_bound(f: float, f_prime: float) -> float:
    """Delta(f) = 2|f'| / (1 - sgn(f') f)."""
    if f_prime == 0:
        return 0.0
    return 2.0 * abs(f_prime) / (1.0 - math.copysign(1.0, f_prime) * f)


def _default_grid(a: float, b: float) -> list[float]:
    return [a + (b - a) * 2.0 ** (-k / 4.0) for k in range(0, 120)]


def make_prescribed_angle(spec: PrescribedAngleSpec) -> HamiltonianModel:
    a, b = spec.a, spec.b
    if not b > a:
        raise InvalidParameters("prescribed angle needs a < b")
    grid = list(spec.check_grid) or _default_grid(a, b)
    bps = sorted(spec.breakpoints)
    # shift grid points off the breakpoints (one-sided data)
    grid = [x for x in grid if a < x <= b and all(abs(x - p) > 1e-12 * max(abs(p), 1.0) for p in bps)]
    for x in grid:
        fx, fp, gx = spec.f(x), spec.f_prime(x), spec.g(x)
        if not -1 < fx < 1:
            raise InvalidParameters(f"|f| < 1 violated at t = {x!r}")
        bound = angle_bound(fx, fp)
        if gx < bound * (1 - 1e-10) - 1e-300:
            raise InvalidParameters(f"g >= Delta(f) violated at t = {x!r}: {gx!r} < {bound!r}")
        if spec.alpha1 is not None:
            k = fp + 0.5 * gx * fx
            rad = math.sqrt(max(0.25 * gx * gx - k * k, 0.0))
            a1 = spec.alpha1(x)
            slack = 1e-9 * max(gx, 1e-300)
            if not (0.5 * gx - rad - slack <= a1 <= 0.5 * gx + rad + slack):
                raise SplitOutOfRange(f"alpha1({x!r}) = {a1!r} outside "
                                      f"[{0.5 * gx - rad!r}, {0.5 * gx + rad!r}]")
    big_g = RightTailIntegral(spec.g, a, b, bps)
    if not looks_divergent(big_g.dyadic_partials(40)):
        raise InvalidParameters("g must not be integrable near a")
    big_a1 = RightTailIntegral(spec.alpha1, a, b, bps) if spec.alpha1 is not None else None

    def log_primitive(t: float) -> LogOmega:
        if not a < t <= b:
            raise OutOfDomain(f"t = {t!r} outside (a, b]")
        gt = big_g(t)
        i1 = big_a1(t) if big_a1 is not None else 0.5 * gt
        fx = spec.f(t)
        u = spec.one_minus_f(t) if spec.one_minus_f is not None else 1.0 - fx
        return LogOmega(spec.c - i1, spec.c - (gt - i1), fx, u * (1.0 + fx))

    def density(t: float):
        lp = log_primitive(t)
        gx = spec.g(t)
        a1 = spec.alpha1(t) if spec.alpha1 is not None else 0.5 * gx
        a2 = gx - a1
        w1, w2 = math.exp(lp.log_omega1), math.exp(lp.log_omega2)
        root = math.exp(0.5 * (lp.log_omega1 + lp.log_omega2))
        return (a1 * w1, a2 * w2, root * (spec.f_prime(t) + 0.5 * gx * lp.f))

    return _with_tail(log_primitive, density, a, b, name=spec.name, singular_left=True,
                      segments=bps, spec={"kind": "prescribed_angle"})


def hpl_as_prescribed_angle(params: HplParams) -> PrescribedAngleSpec:
    """The (f, g, split) data that reproduce H_{p,l} on (0, t_1]."""
    core = _HplCore(params)
    nodes = []
    for n in range(1, 60):
        nodes += [params.t_node(n), params.xi_node(n + 1)]

    def g(t):
        a1, a2, _, _ = core.alphas(t)
        return a1 + a2

    return PrescribedAngleSpec(
        f=lambda t: core.piece(t)[2], f_prime=lambda t: core.piece(t)[4], g=g,
        a=0.0, b=params.t_node(1), c=0.0, alpha1=lambda t: core.alphas(t)[0],
        one_minus_f=lambda t: core.piece(t)[3], breakpoints=tuple(nodes),
        name="prescribed(H_pl)")


ZOO_NAMES = ("identity", "diag41", "powerlog", "hpl", "hpl_13_23", "r3", "free", "string")
