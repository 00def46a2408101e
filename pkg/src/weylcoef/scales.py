"""Scale functions and the two-sided envelopes for Im q(ir).

With a normalisation parameter eta (default 2):

    det Omega(t_hat(r))      = eta**2 / (4 r**2)
    (omega1 omega2)(t_ring(r)) = eta**2 / (4 r**2)

r_hat and r_ring are the inverse maps.  The envelopes are

    A(r) = eta / (2 r omega2(t_ring(r)))
    L(r) = A(r) * det Omega(t_ring(r)) / (omega1 omega2)(t_ring(r)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import OutOfDomain
from .hamiltonian_core import (HamiltonianModel, det_omega, indivisible_info, omega, omega1_omega2)
from .rootfind import solve_increasing

DEFAULT_ETA = 2.0


@dataclass(frozen=True)
class Envelopes:
    r: float
    t_ring: float
    t_hat: float
    A: float
    L: float


def _target(r: float, eta: float) -> float:
    if not (r > 0 and eta > 0):
        raise ValueError("r and eta must be positive")
    return eta * eta / (4.0 * r * r)


def _start(model: HamiltonianModel, origin: float) -> float:
    span = 1.0 if math.isinf(model.b) else 0.5 * (model.b - origin)
    return origin + span


def t_hat(model: HamiltonianModel, r: float, eta: float = DEFAULT_ETA) -> float:
    """The t > a_hat with det Omega(t) = eta^2/(4 r^2) (leftmost on flat stretches)."""
    target = _target(r, eta)
    origin = indivisible_info(model).a_hat
    return solve_increasing(lambda t: det_omega(model, t), target, origin,
                            _start(model, origin), model.b)


def t_ring(model: HamiltonianModel, r: float, eta: float = DEFAULT_ETA) -> float:
    """The t > a_ring with (omega1 omega2)(t) = eta^2/(4 r^2)."""
    target = _target(r, eta)
    origin = indivisible_info(model).a_ring
    return solve_increasing(lambda t: omega1_omega2(model, t), target, origin,
                            _start(model, origin), model.b)


def r_hat(model: HamiltonianModel, t: float, eta: float = DEFAULT_ETA) -> float:
    if t <= indivisible_info(model).a_hat:
        raise OutOfDomain(f"r_hat needs t > a_hat, got {t!r}")
    return eta / (2.0 * math.sqrt(det_omega(model, t)))


def r_ring(model: HamiltonianModel, t: float, eta: float = DEFAULT_ETA) -> float:
    if t <= indivisible_info(model).a_ring:
        raise OutOfDomain(f"r_ring needs t > a_ring, got {t!r}")
    return eta / (2.0 * math.sqrt(omega1_omega2(model, t)))


def log_r_hat(model: HamiltonianModel, t: float, eta: float = DEFAULT_ETA) -> float:
    """log r_hat(t), usable where det Omega underflows relative to r."""
    if model.log_primitive is not None and t > model.a:
        lp = model.log_primitive(t)
        return math.log(eta / 2.0) - 0.5 * (lp.log_omega1 + lp.log_omega2 + math.log(lp.gap))
    return math.log(r_hat(model, t, eta))


def log_r_ring(model: HamiltonianModel, t: float, eta: float = DEFAULT_ETA) -> float:
    if model.log_primitive is not None and t > model.a:
        lp = model.log_primitive(t)
        return math.log(eta / 2.0) - 0.5 * (lp.log_omega1 + lp.log_omega2)
    return math.log(r_ring(model, t, eta))


def envelopes(model: HamiltonianModel, r: float, eta: float = DEFAULT_ETA) -> Envelopes:
    tr = t_ring(model, r, eta)
    th = t_hat(model, r, eta)
    w = omega(model, tr)
    big_a = eta / (2.0 * r * w.omega2)
    if model.log_primitive is not None:
        ratio = model.log_primitive(tr).gap
    else:
        ratio = w.det / (w.omega1 * w.omega2)
    return Envelopes(r=r, t_ring=tr, t_hat=th, A=big_a, L=big_a * ratio)
