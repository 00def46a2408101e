"""Hamiltonians of two-dimensional canonical systems and their primitives.

A model stores the density ``t -> (h1, h2, h3)`` of

    H(t) = [[h1, h3],
            [h3, h2]]

on ``[a, b)`` together with whatever closed forms are known for
``Omega(t) = int_a^t H``.  Everything downstream (scales, Weyl disks,
estimates) only ever talks to a model through ``omega``, ``det_omega``,
``omega_increment`` and ``eval_density``.
"""

from __future__ import annotations

import bisect
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate

from .errors import DegenerateModel, NonPSD, OutOfDomain, QuadratureFailure

Triple = tuple[float, float, float]

DEFAULT_QUAD_RTOL = 1e-10
DEFAULT_INDIVISIBLE_RTOL = 1e-12
PSD_TOL = 1e-9


class OmegaMatrix(NamedTuple):
    omega1: float
    omega2: float
    omega3: float
    t: float

    @property
    def det(self) -> float:
        return max(self.omega1 * self.omega2 - self.omega3 ** 2, 0.0)


class LogOmega(NamedTuple):
    """Log-domain primitive: log omega1, log omega2, f = omega3/sqrt(omega1 omega2)
    and ``gap = 1 - f**2`` evaluated without cancellation."""
    log_omega1: float
    log_omega2: float
    f: float
    gap: float


class IndivisibleInfo(NamedTuple):
    a_ring: float
    a_hat: float
    # angle phi of the kernel direction (cos phi, sin phi) of an indivisible
    # prefix; pi/2 means h2 = 0 there, 0 means h1 = 0; None if there is no prefix
    leading_type: float | None


@dataclass(frozen=True, eq=False)
class HamiltonianModel:
    a: float
    b: float
    density: Callable[[float], Triple]
    primitive: Callable[[float], Triple] | None = None
    log_primitive: Callable[[float], LogOmega] | None = None
    segments: tuple[float, ...] = ()
    singular_left: bool = False
    name: str = "custom"
    limit_point: bool = True
    # accurate Omega(t1) - Omega(t0); falls back to primitive differences
    increment: Callable[[float, float], Triple] | None = None
    # start of a terminal diag(1,0) (or other constant) piece, if any
    tail_start: float | None = None
    spec: dict = field(default_factory=dict, repr=False)
    # unit vector (c, s) with H = h (c, s)^T (c, s) on all of [t0, t1], or None;
    # only asked for intervals inside one segment
    direction: Callable[[float, float], tuple[float, float] | None] | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("need a < b")
        object.__setattr__(self, "segments",
                           tuple(sorted(s for s in self.segments if self.a < s < self.b)))

    def breakpoints_between(self, lo: float, hi: float) -> list[float]:
        i = bisect.bisect_right(self.segments, lo)
        j = bisect.bisect_left(self.segments, hi)
        return list(self.segments[i:j])

    def with_name(self, name: str) -> "HamiltonianModel":
        return HamiltonianModel(self.a, self.b, self.density, self.primitive, self.log_primitive,
                                self.segments, self.singular_left, name, self.limit_point,
                                self.increment, self.tail_start, dict(self.spec),
                                direction=self.direction)


def _check_domain(model: HamiltonianModel, t: float) -> None:
    if not (model.a <= t < model.b):
        raise OutOfDomain(f"t = {t!r} outside [{model.a!r}, {model.b!r}) for model {model.name}")


def eval_density(model: HamiltonianModel, t: float) -> Triple:
    """Density triple (h1, h2, h3) at t, checked for positive semidefiniteness."""
    _check_domain(model, t)
    h1, h2, h3 = model.density(t)
    scale = abs(h1 * h2) + h3 * h3
    if h1 < -PSD_TOL * (abs(h1) + abs(h2)) or h2 < -PSD_TOL * (abs(h1) + abs(h2)) \
            or h1 * h2 - h3 * h3 < -PSD_TOL * scale - 1e-300:
        raise NonPSD(f"H({t!r}) = ({h1!r}, {h2!r}, {h3!r}) is not positive semidefinite")
    return float(h1), float(h2), float(h3)


# ---------------------------------------------------------------------------
# Omega by quadrature

def _quad_piece(model: HamiltonianModel, lo: float, hi: float, rtol: float,
                abs_floor: float = 0.0) -> np.ndarray:
    if hi <= lo:
        return np.zeros(3)
    pts = model.breakpoints_between(lo, hi)
    edges = [lo, *pts, hi]
    total = np.zeros(3)
    for u, v in zip(edges[:-1], edges[1:]):
        if v <= u:
            continue
        # nudge off the breakpoints: densities are only one-sided there
        eps = 1e-15 * max(abs(u), abs(v), 1e-300)
        uu, vv = u + eps if v - u > 4 * eps else u, v - eps if v - u > 4 * eps else v
        val, err = integrate.quad_vec(lambda s: np.asarray(model.density(s), dtype=float),
                                      uu, vv, epsrel=rtol, epsabs=abs_floor, limit=400)
        if not np.all(np.isfinite(val)):
            raise QuadratureFailure(f"non-finite integral on [{u}, {v}]")
        if err > max(100 * rtol * np.abs(val).max(), abs_floor, 1e-300):
            raise QuadratureFailure(f"tolerance {rtol} not met on [{u}, {v}] (err {err:.2e})")
        total += val
    return total


def _quad_from_left(model: HamiltonianModel, t: float, rtol: float) -> np.ndarray:
    """Integral over [a, t] on the geometric subdivision a + (t-a) 2^-k."""
    a = model.a
    width = t - a
    pieces = []
    running = np.zeros(3)
    quiet = 0
    k = 0
    while True:
        hi = a + width * 2.0 ** (-k)
        lo = a + width * 2.0 ** (-k - 1)
        if lo <= a or lo == hi:
            break
        floor = 1e-3 * rtol * np.abs(running).max()
        piece = _quad_piece(model, lo, hi, rtol, floor)
        pieces.append(piece)
        running = running + piece
        if np.abs(piece).max() <= 1e-17 * max(np.abs(running).max(), 1e-300):
            quiet += 1
            if quiet >= 4:
                break
        else:
            quiet = 0
        k += 1
        if k > 1100:
            break
    total = np.zeros(3)
    for piece in reversed(pieces):
        total += piece
    return total


def omega_quad(model: HamiltonianModel, t: float, rtol: float = DEFAULT_QUAD_RTOL) -> OmegaMatrix:
    """Omega(t) from the density alone (never uses closed forms)."""
    _check_domain(model, t)
    if t == model.a:
        return OmegaMatrix(0.0, 0.0, 0.0, t)
    key = ("quad", rtol)
    with model._lock:
        nodes = model._cache.setdefault(key, ([], []))
        ts, vals = nodes
        i = bisect.bisect_right(ts, t)
        if i > 0 and ts[i - 1] == t:
            v = vals[i - 1]
            return OmegaMatrix(float(v[0]), float(v[1]), float(v[2]), t)
        base_t, base_v = (ts[i - 1], vals[i - 1]) if i > 0 else (None, None)
    if base_t is None or (model.singular_left and base_t - model.a < 1e-3 * (t - model.a)):
        v = _quad_from_left(model, t, rtol)
    else:
        v = base_v + _quad_piece(model, base_t, t, rtol)
    with model._lock:
        ts, vals = model._cache[key]
        j = bisect.bisect_right(ts, t)
        if not (j > 0 and ts[j - 1] == t):
            ts.insert(j, t)
            vals.insert(j, v)
    return OmegaMatrix(float(v[0]), float(v[1]), float(v[2]), t)


# ---------------------------------------------------------------------------
# public primitives

def omega(model: HamiltonianModel, t: float, rtol: float = DEFAULT_QUAD_RTOL) -> OmegaMatrix:
    """Omega(t) = int_a^t H, closed form if the model has one, else quadrature."""
    _check_domain(model, t)
    if model.primitive is not None:
        w1, w2, w3 = model.primitive(t)
        return OmegaMatrix(float(w1), float(w2), float(w3), t)
    if model.log_primitive is not None:
        if t == model.a:
            return OmegaMatrix(0.0, 0.0, 0.0, t)
        lp = model.log_primitive(t)
        w1 = math.exp(lp.log_omega1)
        w2 = math.exp(lp.log_omega2)
        return OmegaMatrix(w1, w2, math.exp(0.5 * (lp.log_omega1 + lp.log_omega2)) * lp.f, t)
    return omega_quad(model, t, rtol)


def omega1_omega2(model: HamiltonianModel, t: float) -> float:
    _check_domain(model, t)
    if model.log_primitive is not None and model.primitive is None:
        if t == model.a:
            return 0.0
        lp = model.log_primitive(t)
        return math.exp(lp.log_omega1 + lp.log_omega2)
    w = omega(model, t)
    return w.omega1 * w.omega2


def det_omega(model: HamiltonianModel, t: float) -> float:
    """det Omega(t) >= 0, via (omega1 omega2)(1 - f^2) when a log primitive exists."""
    _check_domain(model, t)
    if model.log_primitive is not None:
        if t == model.a:
            return 0.0
        lp = model.log_primitive(t)
        return math.exp(lp.log_omega1 + lp.log_omega2) * max(lp.gap, 0.0)
    return omega(model, t).det


def omega_increment(model: HamiltonianModel, t0: float, t1: float) -> Triple:
    """Omega(t1) - Omega(t0) for t0 <= t1."""
    if model.increment is not None:
        return model.increment(t0, t1)
    if model.primitive is not None or model.log_primitive is not None:
        w0 = omega(model, t0)
        w1 = omega(model, t1)
        return (w1.omega1 - w0.omega1, w1.omega2 - w0.omega2, w1.omega3 - w0.omega3)
    v = _quad_piece(model, t0, t1, DEFAULT_QUAD_RTOL)
    return float(v[0]), float(v[1]), float(v[2])


def _reference_point(model: HamiltonianModel) -> float:
    span = 1.0 if math.isinf(model.b) else min(1.0, 0.5 * (model.b - model.a))
    return model.a + span


def _first_positive(model: HamiltonianModel, positive: Callable[[float], bool], what: str) -> float:
    ref = _reference_point(model)
    while not positive(ref):
        nxt = model.a + 2.0 * (ref - model.a)
        if nxt >= model.b:
            nxt = model.b - (model.b - ref) * 1e-6
            if nxt <= ref or not positive(nxt):
                raise DegenerateModel(f"{what} vanishes on the whole sampled domain of {model.name}")
            ref = nxt
            break
        ref = nxt
        if ref - model.a > 1e300:
            raise DegenerateModel(f"{what} vanishes on the whole sampled domain of {model.name}")
    tol = DEFAULT_INDIVISIBLE_RTOL * (ref - model.a)
    if positive(model.a + tol):
        return model.a
    found = _bisect_abs(lambda t: 1.0 if positive(t) else 0.0, model.a + tol, ref, tol)
    # snap to a breakpoint of the model within the bisection tolerance
    near = model.breakpoints_between(found - 4 * tol, found + 4 * tol)
    return near[0] if near else found


def _bisect_abs(step: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if step(mid) >= 0.5:
            hi = mid
        else:
            lo = mid
    return hi


def _det_positive(model: HamiltonianModel, t: float) -> bool:
    if model.log_primitive is not None:
        return t > model.a and model.log_primitive(t).gap > 0.0
    w = omega(model, t)
    return w.det > 1e-13 * w.omega1 * w.omega2


def indivisible_info(model: HamiltonianModel) -> IndivisibleInfo:
    """Locate a_ring (end of a type-0/pi-2 prefix) and a_hat (end of any indivisible prefix)."""
    with model._lock:
        hit = model._cache.get("info")
    if hit is not None:
        return hit
    info = _indivisible_info(model)
    with model._lock:
        model._cache["info"] = info
    return info


def _indivisible_info(model: HamiltonianModel) -> IndivisibleInfo:
    a_ring = _first_positive(model, lambda t: omega1_omega2(model, t) > 0.0, "omega1*omega2")
    a_hat = _first_positive(model, lambda t: _det_positive(model, t), "det Omega")
    a_hat = max(a_hat, a_ring)
    leading = None
    if a_ring > model.a:
        # a_ring is only located to a tolerance: classify the prefix from its midpoint
        w = omega(model, model.a + 0.5 * (a_ring - model.a))
        leading = math.pi / 2 if w.omega2 <= 1e-13 * max(w.omega1, 1e-300) else 0.0
    elif a_hat > model.a:
        w = omega(model, model.a + 0.5 * (a_hat - model.a))
        # angle of the kernel direction of the rank-one prefix
        rng = 0.5 * math.atan2(2.0 * w.omega3, w.omega1 - w.omega2)
        leading = (rng + math.pi / 2) % math.pi
    return IndivisibleInfo(a_ring, a_hat, leading)


def check_invariants(model: HamiltonianModel, grid: Sequence[float]) -> None:
    """Spot-check PSD, definiteness and Loewner monotonicity on a sample grid."""
    prev = None
    for t in sorted(grid):
        eval_density(model, t)
        w = omega(model, t)
        if prev is not None:
            d1, d2, d3 = w.omega1 - prev.omega1, w.omega2 - prev.omega2, w.omega3 - prev.omega3
            scale = max(abs(w.omega1), abs(w.omega2), 1e-300)
            if d1 < -1e-9 * scale or d2 < -1e-9 * scale or d1 * d2 - d3 * d3 < -1e-8 * scale ** 2:
                raise NonPSD(f"Omega not Loewner monotone between {prev.t} and {t}")
        prev = w


# ---------------------------------------------------------------------------
# elementary constructors

def rank_one_direction(h1: float, h2: float, h3: float) -> tuple[float, float] | None:
    """Unit vector spanning the range of a rank-one PSD triple, None if the rank is not one."""
    if h1 + h2 <= 0 or abs(h1 * h2 - h3 * h3) > 4e-16 * (h1 * h2 + h3 * h3):
        return None
    norm = math.sqrt(h1 + h2)
    return math.sqrt(h1) / norm, math.copysign(math.sqrt(h2), h3) / norm


def piecewise_constant(breaks: Sequence[float], values: Sequence[Triple], *, name: str = "piecewise",
                       b: float = math.inf, spec: dict | None = None) -> HamiltonianModel:
    """H = values[i] on [breaks[i], breaks[i+1]); the last value runs up to b."""
    breaks = [float(x) for x in breaks]
    vals = [tuple(float(v) for v in val) for val in values]
    if len(breaks) != len(vals) or not breaks:
        raise ValueError("need one value per break")
    if any(y <= x for x, y in zip(breaks, breaks[1:])):
        raise ValueError("breaks must be strictly increasing")
    for h1, h2, h3 in vals:
        if h1 < 0 or h2 < 0 or h1 * h2 - h3 * h3 < -PSD_TOL * (h1 * h2 + h3 * h3):
            raise NonPSD(f"piece ({h1}, {h2}, {h3}) is not positive semidefinite")
    a = breaks[0]
    cum = [(0.0, 0.0, 0.0)]
    for i in range(len(breaks) - 1):
        dt = breaks[i + 1] - breaks[i]
        c = cum[-1]
        cum.append(tuple(c[k] + dt * vals[i][k] for k in range(3)))

    def piece(t):
        return max(bisect.bisect_right(breaks, t) - 1, 0)

    def density(t):
        return vals[piece(t)]

    def primitive(t):
        i = piece(t)
        dt = t - breaks[i]
        c = cum[i]
        return (c[0] + dt * vals[i][0], c[1] + dt * vals[i][1], c[2] + dt * vals[i][2])

    def increment(t0, t1):
        i0, i1 = piece(t0), piece(t1)
        if i0 == i1:
            dt = t1 - t0
            v = vals[i0]
            return (dt * v[0], dt * v[1], dt * v[2])
        w0, w1 = primitive(t0), primitive(t1)
        return (w1[0] - w0[0], w1[1] - w0[1], w1[2] - w0[2])

    angles = [rank_one_direction(*v) for v in vals]

    def direction(t0, t1):
        i = piece(0.5 * (t0 + t1))
        return angles[i] if breaks[i] <= t0 and (i + 1 == len(breaks) or t1 <= breaks[i + 1]) else None

    last = vals[-1]
    lp = math.isinf(b) and (last[0] + last[1]) > 0
    return HamiltonianModel(a=a, b=b, density=density, primitive=primitive,
                            segments=tuple(breaks[1:]), name=name, limit_point=lp,
                            increment=increment, tail_start=breaks[-1], spec=spec or {},
                            direction=direction if any(x is not None for x in angles) else None)


def constant(h1: float, h2: float, h3: float = 0.0, a: float = 0.0, *, name: str | None = None
             ) -> HamiltonianModel:
    spec = {"kind": "constant", "h": [h1, h2, h3], "a": a}
    return piecewise_constant([a], [(h1, h2, h3)], name=name or f"const({h1:g},{h2:g},{h3:g})",
                              spec=spec)


def identity(a: float = 0.0) -> HamiltonianModel:
    return constant(1.0, 1.0, 0.0, a, name="identity")


def diagonal(h1: float, h2: float, a: float = 0.0) -> HamiltonianModel:
    m = constant(h1, h2, 0.0, a, name=f"diag({h1:g},{h2:g})")
    m.spec.update({"kind": "diagonal", "h1": h1, "h2": h2})
    return m


def table(rows: Sequence[Sequence[float]], *, name: str = "table") -> HamiltonianModel:
    """Rows (t, h1, h2, h3) read as a piecewise-constant density."""
    rows = sorted((tuple(float(x) for x in row) for row in rows), key=lambda r: r[0])
    spec = {"kind": "table", "rows": [list(r) for r in rows]}
    return piecewise_constant([r[0] for r in rows], [r[1:4] for r in rows], name=name, spec=spec)


def diagonal_part(model: HamiltonianModel) -> HamiltonianModel:
    """The model with h3 set to zero (same h1, h2)."""
    def density(t):
        h1, h2, _ = model.density(t)
        return (h1, h2, 0.0)

    primitive = log_primitive = increment = None
    if model.primitive is not None:
        def primitive(t):
            w1, w2, _ = model.primitive(t)
            return (w1, w2, 0.0)
    if model.log_primitive is not None:
        def log_primitive(t):
            lp = model.log_primitive(t)
            return LogOmega(lp.log_omega1, lp.log_omega2, 0.0, 1.0)
    if model.increment is not None:
        def increment(t0, t1):
            d1, d2, _ = model.increment(t0, t1)
            return (d1, d2, 0.0)
    direction = None
    if model.direction is not None:
        def direction(t0, t1):
            xi = model.direction(t0, t1)
            return xi if xi is not None and 0.0 in xi else None
    return HamiltonianModel(model.a, model.b, density, primitive, log_primitive, model.segments,
                            model.singular_left, f"diag-part({model.name})", model.limit_point,
                            increment, model.tail_start,
                            {"kind": "diagonal_part", "of": dict(model.spec)}, direction=direction)


def restrict(model: HamiltonianModel, a_new: float) -> HamiltonianModel:
    """The model on [a_new, b), with primitives re-based at a_new."""
    if not model.a <= a_new < model.b:
        raise OutOfDomain(f"restriction point {a_new!r} outside [{model.a!r}, {model.b!r})")
    if a_new == model.a:
        return model
    base = omega(model, a_new)
    primitive = None
    if model.primitive is not None or model.log_primitive is not None:
        def primitive(t):
            w = omega(model, t)
            return (w.omega1 - base.omega1, w.omega2 - base.omega2, w.omega3 - base.omega3)
    increment = model.increment
    return HamiltonianModel(a_new, model.b, model.density, primitive, None,
                            model.segments, False, f"{model.name}|[{a_new:g},b)",
                            model.limit_point, increment, model.tail_start,
                            {"kind": "restriction", "a": a_new, "of": dict(model.spec)},
                            direction=model.direction)
