"""Fundamental solution, Weyl disks and certified values of q_H(z).

Conventions: the system is y' = z J H y with J = [[0, -1], [1, 0]] and the
boundary condition (1, 0) y(a) = 0.  The fundamental solution is carried
as a row-propagated matrix, W' J = z W H, W(a) = I, so W' = W (-z H J).
Its Weyl disk is the image of the closed upper half-plane under

    tau -> (w11 tau + w12) / (w21 tau + w22),

and q_H(z) is the point the disks shrink to as t -> b.

Stepping uses a fourth-order Magnus step built from the cell moments
int H and int (s - mid) H (three Gauss points per half cell).  Every
propagator is the exponential of a traceless 2x2 matrix, evaluated in
closed form, so det W = 1 up to rounding.  Local error is controlled by
comparing one full step with two half steps; the full-step and half-step
products are both carried to the end, and the distance between their
disk centres is added to the error radius.

eval_q does not read the disk off the forward product, which loses all
accuracy once W is badly conditioned (nearly indivisible stretches at
large |z|).  It stores the cell propagators and pulls the half-plane
back through them from the right, as a Hermitian form whose determinant
is tracked separately; each step is a contraction, so rounding stays at
the level of the individual cells.
"""

from __future__ import annotations

import cmath
import math
import random
from typing import NamedTuple

from .errors import (BracketFailure, DegenerateDisk, NestingViolation, NoConvergence,
                     OutOfDomain, StepUnderflow)
from .hamiltonian_core import HamiltonianModel, omega
from .rootfind import solve_increasing
from .scales import t_hat

Mat = tuple[complex, complex, complex, complex]

_IDENTITY: Mat = (1 + 0j, 0j, 0j, 1 + 0j)
_GL_X = math.sqrt(0.6) / 2.0
_GL_W = (5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0)
_GROWTH_CAP = 30.0
_RESCALE_AT = 1e120
_EPS = 2.0 ** -52
_JITTER = 4.0 * _EPS


class _TooLarge(Exception):
    """A cell exponent would overflow; the caller shortens the step."""


class TransferMatrix(NamedTuple):
    w11: complex
    w12: complex
    w21: complex
    w22: complex
    t: float
    z: complex

    @property
    def det(self) -> complex:
        return self.w11 * self.w22 - self.w12 * self.w21

    def mobius(self, tau: complex) -> complex:
        if cmath.isinf(tau):
            return self.w11 / self.w21
        return (self.w11 * tau + self.w12) / (self.w21 * tau + self.w22)


class WeylDisk(NamedTuple):
    center: complex
    radius: float


class QEvaluation(NamedTuple):
    value: complex
    error_radius: float
    t_used: float
    z: complex


# ---------------------------------------------------------------------------
# 2x2 kernels on plain complex scalars

def _mul(x: Mat, y: Mat) -> Mat:
    a, b, c, d = x
    e, f, g, h = y
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def _expm_traceless(x11: complex, x12: complex, x21: complex, capped: bool = False) -> Mat:
    """exp of [[x11, x12], [x21, -x11]] via X^2 = nu I."""
    nu = x11 * x11 + x12 * x21
    if capped and abs(nu) > _GROWTH_CAP * _GROWTH_CAP:
        raise _TooLarge
    if abs(nu) < 1e-3:
        ch = 1 + nu * (1 / 2 + nu * (1 / 24 + nu * (1 / 720 + nu / 40320)))
        sh = 1 + nu * (1 / 6 + nu * (1 / 120 + nu * (1 / 5040 + nu / 362880)))
    else:
        root = cmath.sqrt(nu)
        ch = cmath.cosh(root)
        sh = cmath.sinh(root) / root
    return (ch + sh * x11, sh * x12, sh * x21, ch - sh * x11)


def _magnus_exp(m0: tuple, m1: tuple, z: complex, capped: bool = False) -> Mat:
    """Fourth-order Magnus propagator from the moments of H over one cell.

    m0 = int H, m1 = (1/h) int (s - mid) H, both as (h1, h2, h3) triples.
    """
    p1, p2, p3 = m0
    q1, q2, q3 = m1
    # P = m0 J, Q = m1 J; Omega_4 = -z P + z^2 [P, Q]
    c = p2 * q1 - p1 * q2
    d = 2.0 * (p1 * q3 - p3 * q1)
    e = 2.0 * (p2 * q3 - p3 * q2)
    zz = z * z
    return _expm_traceless(-z * p3 + zz * c, z * p1 + zz * d, -z * p2 + zz * e, capped)


def segment_exponential(h1: float, h2: float, h3: float, dt: float, z: complex) -> TransferMatrix:
    """exp(-z dt H J) for a constant density H on a segment of length dt."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if h1 < 0 or h2 < 0 or h1 * h2 - h3 * h3 < -1e-12 * (abs(h1 * h2) + h3 * h3):
        from .errors import NonPSD
        raise NonPSD(f"({h1}, {h2}, {h3}) is not positive semidefinite")
    z = complex(z)
    m = _magnus_exp((h1 * dt, h2 * dt, h3 * dt), (0.0, 0.0, 0.0), z)
    return TransferMatrix(*m, t=dt, z=z)


def _gl(density, u: float, v: float):
    """Three-point Gauss rule for int H and (1/h) int (s - mid) H over [u, v]."""
    h = v - u
    mid = 0.5 * (u + v)
    off = _GL_X * h
    s0 = s1 = s2 = 0.0
    f0 = f1 = f2 = 0.0
    for w, x in zip(_GL_W, (mid - off, mid, mid + off)):
        a, b, c = density(x)
        s0 += w * a
        s1 += w * b
        s2 += w * c
        y = w * (x - mid)
        f0 += y * a
        f1 += y * b
        f2 += y * c
    return (h * s0, h * s1, h * s2), (f0, f1, f2)


def _cell(model: HamiltonianModel, u: float, v: float, z: complex):
    """Full-step propagator, product of the two half steps, and a quadrature error.

    When the model has exact increments of Omega they replace the Gauss
    value of int H; otherwise the full-cell Gauss value is compared with the
    sum over the halves, since for commuting (fixed-direction) densities
    the Magnus comparison alone cannot see quadrature error.
    """
    density = model.density
    mid = 0.5 * (u + v)
    ma0, ma1 = _gl(density, u, mid)
    mb0, mb1 = _gl(density, mid, v)
    qerr = 0.0
    if model.increment is not None:
        ma0 = model.increment(u, mid)
        mb0 = model.increment(mid, v)
    else:
        whole, _ = _gl(density, u, v)
        qerr = abs(z) * max(abs(whole[i] - ma0[i] - mb0[i]) for i in range(3))
    m0 = (ma0[0] + mb0[0], ma0[1] + mb0[1], ma0[2] + mb0[2])
    m1 = tuple(0.5 * (ma1[i] + mb1[i]) + 0.25 * (mb0[i] - ma0[i]) for i in range(3))
    full = _magnus_exp(m0, m1, z, True)
    fine = _mul(_magnus_exp(ma0, ma1, z, True), _magnus_exp(mb0, mb1, z, True))
    return full, fine, qerr


def _rotation(xi: tuple[float, float]) -> tuple[Mat, Mat]:
    c, s = xi
    return (c, -s, s, c), (c, s, -s, c)


def _rank_one_matrix(xi: tuple[float, float], w: complex) -> Mat:
    """exp(-w xi xi^T J) = R [[1, w], [0, 1]] R^T, R the rotation taking (1, 0) to xi."""
    rot, rot_t = _rotation(xi)
    return _mul(_mul(rot, (1 + 0j, w, 0j, 1 + 0j)), rot_t)


class _Stepper:
    """Carries the full-step (coarse) and half-step (fine) products side by side."""

    def __init__(self, model: HamiltonianModel, z: complex, step_tol: float,
                 t0: float, w0: Mat, h0: float, record: bool = False):
        self.model = model
        self.w0 = w0
        self.cells: list[tuple[Mat, Mat, tuple | None]] | None = [] if record else None
        self.z = z
        self.tol = step_tol
        self.t = t0
        self.fine = w0
        self.coarse = w0
        self.log_scale = 0.0
        self.h = h0
        self.steps = 0

    def advance(self, target: float) -> None:
        model, z = self.model, self.z
        while self.t < target:
            t = self.t
            stops = model.breakpoints_between(t, target)
            stop = stops[0] if stops else target
            if model.direction is not None:
                xi = model.direction(t, stop)
                if xi is not None:
                    self._rank_one_step(t, stop, xi)
                    continue
            h = min(self.h, stop - t)
            v = t + h if h < stop - t else stop
            if v <= t:
                raise StepUnderflow(f"step underflow at t = {t!r}")
            try:
                full, fine, qerr = _cell(model, t, v, z)
            except _TooLarge:
                self.h = 0.25 * h
                continue
            size = max(1.0, max(abs(x) for x in fine))
            err = max(max(abs(full[i] - fine[i]) for i in range(4)), qerr * size)
            if err > self.tol * size:
                fac = max(0.1, 0.9 * (self.tol * size / err) ** 0.2)
                self.h = h * fac
                if self.h <= 1e-15 * max(abs(t), 1e-300):
                    raise StepUnderflow(f"step underflow at t = {t!r}")
                continue
            self._append(fine, full, None)
            self.t = v
            self.steps += 1
            fac = 4.0 if err == 0.0 else min(4.0, max(0.2, 0.9 * (self.tol * size / err) ** 0.2))
            if v == stop and h < self.h:
                fac = max(fac, 1.0)
                h = self.h
            self.h = h * fac

    def _append(self, fine: Mat, full: Mat, rank_one) -> None:
        self.fine = _mul(self.fine, fine)
        self.coarse = _mul(self.coarse, full)
        if self.cells is not None:
            self.cells.append((fine, full, rank_one))
        big = max(abs(x) for x in self.fine)
        if big > _RESCALE_AT:
            self.fine = tuple(x / big for x in self.fine)
            self.coarse = tuple(x / big for x in self.coarse)
            self.log_scale += math.log(big)

    def _rank_one_step(self, t: float, v: float, xi: tuple[float, float]) -> None:
        """Exact propagator over [t, v] when H keeps the direction xi."""
        model = self.model
        if model.increment is not None:
            d = model.increment(t, v)
            mass = d[0] + d[1]
        else:
            (m1, m2, _), _ = _gl(model.density, t, v)
            mass = m1 + m2
        w = self.z * max(mass, 0.0)
        m = _rank_one_matrix(xi, w)
        self._append(m, m, (xi, w))
        self.t = v
        self.steps += 1

    def matrix(self, which: str = "fine", rescaled: bool = False) -> TransferMatrix:
        """W itself, or W divided by exp(log_scale) (same Moebius map) if ``rescaled``."""
        m = self.fine if which == "fine" else self.coarse
        if self.log_scale and not rescaled:
            s = math.exp(self.log_scale)
            m = tuple(x * s for x in m)
        return TransferMatrix(*m, t=self.t, z=self.z)


def _start_state(model: HamiltonianModel, z: complex, scale_t: float) -> tuple[float, Mat, float]:
    """Starting point, W there, and an initial step."""
    a = model.a
    if z == 0:
        return a, _IDENTITY, scale_t - a
    if not model.singular_left:
        return a, _IDENTITY, 0.01 * (scale_t - a)
    absz = abs(z)
    try:
        t0 = solve_increasing(lambda t: absz * (lambda w: w.omega1 + w.omega2)(omega(model, t)),
                              1e-8, a, scale_t, model.b, rel_width=1e-6)
    except BracketFailure:
        t0 = a + 1e-300
    w = omega(model, t0)
    w0 = _magnus_exp((w.omega1, w.omega2, w.omega3), (0.0, 0.0, 0.0), z)
    return t0, w0, 0.05 * (t0 - a)


def _scale(model: HamiltonianModel, z: complex) -> float:
    try:
        return t_hat(model, abs(z))
    except BracketFailure:
        return model.a + (1.0 if math.isinf(model.b) else 0.5 * (model.b - model.a))


def propagate(model: HamiltonianModel, t: float, z: complex, tol: float = 1e-12) -> TransferMatrix:
    """W(t, z), right-multiplying cell propagators over an adaptive partition of [a, t]."""
    if not (model.a <= t < model.b):
        raise OutOfDomain(f"t = {t!r} outside the domain of {model.name}")
    z = complex(z)
    if z == 0 or t == model.a:
        return TransferMatrix(*_IDENTITY, t=t, z=z)
    scale_t = min(_scale(model, z), t) if t > model.a else t
    t0, w0, h0 = _start_state(model, z, max(scale_t, model.a + 1e-300))
    if t0 >= t:
        w = omega(model, t)
        return TransferMatrix(*_magnus_exp((w.omega1, w.omega2, w.omega3), (0, 0, 0), z), t=t, z=z)
    stepper = _Stepper(model, z, tol, t0, w0, max(h0, 1e-300))
    stepper.advance(t)
    return stepper.matrix()


def weyl_disk(w: TransferMatrix, rtol: float = 1e-13) -> WeylDisk:
    """Centre and radius of the image of the closed upper half-plane."""
    w11, w12, w21, w22 = w.w11, w.w12, w.w21, w.w22
    den = w21 * w22.conjugate() - w21.conjugate() * w22
    if abs(den) <= rtol * abs(w21) * abs(w22) or den == 0:
        raise DegenerateDisk("disk is numerically a half-plane (t too close to a_hat)")
    center = (w11 * w22.conjugate() - w12 * w21.conjugate()) / den
    radius = abs(w11 * w22 - w12 * w21) / abs(den)
    return WeylDisk(center, radius)


def circumcircle(p1: complex, p2: complex, p3: complex) -> WeylDisk:
    """Circle through three points (used as an independent check of weyl_disk)."""
    ax, ay, bx, by, cx, cy = p1.real, p1.imag, p2.real, p2.imag, p3.real, p3.imag
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0:
        raise DegenerateDisk("collinear points")
    ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay)
          + (cx * cx + cy * cy) * (ay - by)) / d
    uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx)
          + (cx * cx + cy * cy) * (bx - ax)) / d
    c = complex(ux, uy)
    return WeylDisk(c, abs(p1 - c))



# ---------------------------------------------------------------------------
# right-to-left pull-back of the upper half-plane

# The region {w : [w, 1]^* K [w, 1] <= 0} for Hermitian K = (k11, k12, k22), k21 = conj(k12).
# The closed upper half-plane is k11 = 0, k12 = -i/2, k22 = 0, with det K = -1/4.
_HALF_PLANE = (0.0, -0.5j, 0.0)


def _pull_form(m: Mat, form: tuple) -> tuple:
    """Form of m(region) from the form of region: N^* K N with N = adj(m)."""
    a, b, c, d = m
    k11, k12, k22 = form
    n11, n12, n21, n22 = d, -b, -c, a
    # K N
    x11 = k11 * n11 + k12 * n21
    x12 = k11 * n12 + k12 * n22
    x21 = k12.conjugate() * n11 + k22 * n21
    x22 = k12.conjugate() * n12 + k22 * n22
    r11 = (n11.conjugate() * x11 + n21.conjugate() * x21).real
    r12 = n11.conjugate() * x12 + n21.conjugate() * x22
    r22 = (n12.conjugate() * x12 + n22.conjugate() * x22).real
    return r11, r12, r22


def _pulled_disk(cells: list, w0: Mat, which: int) -> WeylDisk:
    """Disk of w0 * cell_1 * ... * cell_n applied to the upper half-plane.

    Every factor has determinant one (exponentials of traceless matrices), so
    det K changes only through the normalisations; the radius is read off
    from it rather than from the cancelling entries of K.
    """
    form = _HALF_PLANE
    log_negdet = math.log(0.25)
    for cell in reversed(cells):
        if cell[2] is not None:
            xi, w = cell[2]
            rot, rot_t = _rotation(xi)
            for m in (rot_t, (1.0, w, 0.0, 1.0), rot):
                form = _pull_form(m, form)
        else:
            form = _pull_form(cell[which], form)
        big = max(abs(form[0]), abs(form[1]), abs(form[2]))
        if big > 1e50 or big < 1e-50:
            form = (form[0] / big, form[1] / big, form[2] / big)
            log_negdet -= 2.0 * math.log(big)
    form = _pull_form(w0, form)
    k11, k12, _ = form
    if not k11 > 0:
        raise DegenerateDisk("disk is numerically a half-plane (t too close to a_hat)")
    return WeylDisk(-k12 / k11, math.exp(0.5 * log_negdet - math.log(k11)))


def _jittered(cells: list, w0: Mat, seed: int = 7) -> tuple[list, Mat]:
    """Cells and start matrix with every datum moved by a few ulps (sensitivity probe)."""
    rng = random.Random(seed)

    def nudge(x: complex) -> complex:
        return x * (1.0 + _JITTER * complex(rng.uniform(-1, 1), rng.uniform(-1, 1)))

    out = []
    for fine, full, rank_one in cells:
        if rank_one is not None:
            (c, s), w = rank_one
            c *= 1.0 + _JITTER * rng.uniform(-1, 1)
            s *= 1.0 + _JITTER * rng.uniform(-1, 1)
            norm = math.hypot(c, s)
            out.append((fine, full, ((c / norm, s / norm), nudge(w))))
        else:
            m = tuple(nudge(x) for x in fine)
            out.append((m, m, None))
    return out, tuple(nudge(x) for x in w0)


def _pulled_point(cells: list, w0: Mat, which: int) -> complex:
    """w0 * cell_1 * ... * cell_n applied to the point at infinity."""
    maps: list[Mat] = []
    for cell in reversed(cells):
        if cell[2] is not None:
            rot, rot_t = _rotation(cell[2][0])
            maps += [rot_t, (1.0, cell[2][1], 0.0, 1.0), rot]
        else:
            maps.append(cell[which])
    x: complex | None = None
    for a, b, c, d in maps + [w0]:
        if x is None:
            x = None if c == 0 else a / c
        else:
            den = c * x + d
            x = None if den == 0 else (a * x + b) / den
    if x is None:
        raise DegenerateDisk("boundary value is the point at infinity")
    return x


def _rank_one_tail(model: HamiltonianModel) -> bool:
    """True if the model ends in a constant diag(h1, 0) piece."""
    ts = model.tail_start
    if ts is None or not math.isinf(model.b):
        return False
    h1, h2, h3 = model.density(ts)
    return h1 > 0 and h2 == 0 and h3 == 0


def eval_q(model: HamiltonianModel, z: complex, tol: float = 1e-10, *,
           step_tol: float | None = None, max_doublings: int = 200,
           monitor_nesting: bool = True) -> QEvaluation:
    """q_H(z) with |true value - value| <= error_radius <= tol.

    Disks are examined at t_k = a + (t_hat(|z|) - a) 2^k.  The error radius is
    the disk radius plus the distance between the half-step and full-step
    disk centres.  If the latter dominates, the run is repeated with a
    tighter step tolerance.  A second pull-back through cell data moved by a
    few ulps measures the conditioning of the result; the shift it causes is
    also added to the error radius.
    """
    z = complex(z)
    if not z.imag > 0:
        raise OutOfDomain("eval_q needs Im z > 0")
    if not tol > 0:
        raise ValueError("tol must be positive")
    scale_t = _scale(model, z)
    tail = _rank_one_tail(model)
    a = model.a
    st = step_tol if step_tol is not None else 1e-10
    last_err = None
    while True:
        t0, w0, h0 = _start_state(model, z, scale_t)
        stepper = _Stepper(model, z, st, t0, w0, max(h0, 1e-300), record=True)
        prev: tuple[WeylDisk, float] | None = None
        outcome = None
        for k in range(max_doublings):
            tk = a + (scale_t - a) * 2.0 ** k
            if tk <= t0:
                continue
            if tail and tk >= model.tail_start:
                stepper.advance(model.tail_start)
                value = _pulled_point(stepper.cells, stepper.w0, 0)
                perr = abs(value - _pulled_point(stepper.cells, stepper.w0, 1))
                perr += _EPS * len(stepper.cells) * abs(value)
                if prev is not None and monitor_nesting:
                    _check_nested(prev, WeylDisk(value, 0.0), perr)
                if perr <= tol:
                    cells, w0j = _jittered(stepper.cells, stepper.w0)
                    perr += abs(_pulled_point(cells, w0j, 0) - value)
                if perr <= tol:
                    return QEvaluation(value, perr + 1e-16 * abs(value), model.tail_start, z)
                outcome = perr
                break
            if tk >= model.b:
                raise NoConvergence(f"reached the end of the domain of {model.name}")
            stepper.advance(tk)
            try:
                disk_f = _pulled_disk(stepper.cells, stepper.w0, 0)
                disk_c = _pulled_disk(stepper.cells, stepper.w0, 1)
            except DegenerateDisk:
                continue
            perr = abs(disk_f.center - disk_c.center) + _EPS * len(stepper.cells) * abs(disk_f.center)
            if prev is not None and monitor_nesting:
                _check_nested(prev, disk_f, perr)
            prev = (disk_f, perr)
            if disk_f.radius <= 0.5 * tol:
                if perr <= 0.5 * tol:
                    cells, w0j = _jittered(stepper.cells, stepper.w0)
                    try:
                        perr += abs(_pulled_disk(cells, w0j, 0).center - disk_f.center)
                    except DegenerateDisk:
                        perr = math.inf
                if perr <= 0.5 * tol:
                    return QEvaluation(disk_f.center, disk_f.radius + perr, tk, z)
                outcome = perr
                break
        else:
            raise NoConvergence(f"disk radius above {tol:g} after {max_doublings} doublings")
        last_err = outcome
        if st <= 1e-14:
            raise NoConvergence(f"propagation error {last_err:.3e} exceeds tol {tol:.3e}")
        st = max(st / 30.0, 1e-14)


def _check_nested(prev: tuple[WeylDisk, float], new: WeylDisk, perr: float) -> None:
    old, old_err = prev
    lhs = abs(new.center - old.center) + new.radius
    slack = 1e-9 * old.radius + perr + old_err + 1e-10 * abs(old.center)
    if lhs > old.radius + slack:
        raise NestingViolation(
            f"disk at radius {new.radius:.3e} leaves its predecessor "
            f"(excess {lhs - old.radius:.3e}, slack {slack:.3e})")


def q_value(model: HamiltonianModel, z: complex, tol: float = 1e-10) -> complex:
    return eval_q(model, z, tol).value
