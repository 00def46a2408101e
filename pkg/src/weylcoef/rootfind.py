"""Bracketed bisection for nondecreasing scalar maps.

Every scale function in this package is the inverse of a monotone map
(det Omega, omega1*omega2, delta, ...), so plain bisection is all we need.
Bisection runs in log(x - origin) whenever possible because the roots of
interest routinely sit at 1e-10 or 1e-40 above the left endpoint.
"""

from __future__ import annotations

import math
from typing import Callable

from .errors import BracketFailure

_TINY = 1e-300


def bracket_increasing(func: Callable[[float], float], target: float, origin: float,
                       start: float, upper: float = math.inf,
                       max_doublings: int = 2100) -> tuple[float, float]:
    """Find lo < hi with func(lo) < target <= func(hi).

    The search moves geometrically in ``x - origin``, starting from ``start``.
    ``upper`` is an exclusive bound for the domain.
    """
    if not start > origin:
        raise ValueError("start must exceed origin")
    x = start
    if func(x) >= target:
        hi = x
        for _ in range(max_doublings):
            lo = origin + (hi - origin) * 0.5
            if lo - origin <= _TINY * max(1.0, abs(origin)) or lo == hi:
                raise BracketFailure(
                    f"root of f(x) = {target:.3e} underflows towards {origin!r}")
            if func(lo) < target:
                return lo, hi
            hi = lo
        raise BracketFailure("lower bracket not found")
    lo = x
    for _ in range(max_doublings):
        hi = origin + (lo - origin) * 2.0
        if hi >= upper:
            # one last probe just below the end of the domain
            hi = upper - (upper - lo) * 1e-9 if math.isfinite(upper) else math.inf
            if not math.isfinite(hi) or hi <= lo or func(hi) < target:
                raise BracketFailure(
                    f"f(x) = {target:.3e} not reached below x = {upper!r}")
            return lo, hi
        if not math.isfinite(hi):
            break
        if func(hi) >= target:
            return lo, hi
        lo = hi
    raise BracketFailure(f"f(x) = {target:.3e} not reached (f bounded?)")


def bisect_increasing(func: Callable[[float], float], target: float, lo: float, hi: float,
                      origin: float | None = None, rel_width: float = 4e-16,
                      max_iter: int = 2000) -> float:
    """Leftmost x in (lo, hi] with func(x) >= target, to relative width ``rel_width``.

    Requires func(lo) < target <= func(hi).  On a flat stretch at the target
    level the left end of the stretch is returned.
    """
    geometric = origin is not None and lo > origin
    for _ in range(max_iter):
        if geometric:
            scale = hi - origin
            if hi - lo <= rel_width * scale:
                break
            mid = origin + math.sqrt((lo - origin) * (hi - origin))
        else:
            if hi - lo <= rel_width * max(abs(hi), abs(lo)) or hi - lo <= _TINY:
                break
            mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if func(mid) >= target:
            hi = mid
        else:
            lo = mid
            if origin is not None and not geometric and lo > origin:
                geometric = True
    return hi


def solve_increasing(func: Callable[[float], float], target: float, origin: float,
                     start: float, upper: float = math.inf, rel_width: float = 4e-16) -> float:
    """inf{x > origin : func(x) >= target} for a nondecreasing ``func``."""
    lo, hi = bracket_increasing(func, target, origin, start, upper)
    return bisect_increasing(func, target, lo, hi, origin=origin, rel_width=rel_width)
