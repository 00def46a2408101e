"""Small numerical helpers shared by the zoo and the tail diagnostics."""

from __future__ import annotations

import bisect
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import QuadratureFailure


def looks_divergent(partials: Sequence[float], window: int = 5, factor: float = 1.1) -> bool:
    """Dyadic-block growth test for an improper integral.

    ``partials`` are cumulative integrals over growing dyadic blocks.  The
    integral looks divergent if the last partial exceeds the one ``window``
    blocks earlier by at least ``factor``.
    """
    if len(partials) <= window:
        raise ValueError("not enough blocks for the growth test")
    last, earlier = abs(partials[-1]), abs(partials[-1 - window])
    if last == 0.0:
        return False
    if earlier == 0.0:
        return True
    return last / earlier >= factor


def quad(func: Callable[[float], float], lo: float, hi: float, rtol: float = 1e-11,
         points: Sequence[float] = ()) -> float:
    if hi <= lo:
        return 0.0
    pts = [p for p in points if lo < p < hi]
    val, err = integrate.quad(func, lo, hi, epsrel=rtol, epsabs=0.0, limit=500,
                              points=pts or None)
    if not math.isfinite(val) or err > 1e3 * rtol * max(abs(val), 1e-300):
        raise QuadratureFailure(f"quadrature on [{lo}, {hi}] failed (err {err:.2e})")
    return val


class RightTailIntegral:
    """G(t) = int_t^b g for t in (a, b], cached on the grid a + (b - a) 2^-k.

    ``g`` may be non-integrable at a; G(t) is then finite for every t > a.
    """

    def __init__(self, g: Callable[[float], float], a: float, b: float,
                 breakpoints: Sequence[float] = (), rtol: float = 1e-11):
        self.g, self.a, self.b, self.rtol = g, a, b, rtol
        self.points = sorted(p for p in breakpoints if a < p < b)
        self._nodes = [b]          # decreasing
        self._values = [0.0]
        self._lock = threading.Lock()

    def _node(self, k: int) -> float:
        return self.a + (self.b - self.a) * 2.0 ** (-k)

    def _pieces(self, lo: float, hi: float) -> float:
        i = bisect.bisect_right(self.points, lo)
        j = bisect.bisect_left(self.points, hi)
        edges = [lo, *self.points[i:j], hi]
        return sum(quad(self.g, u, v, self.rtol) for u, v in zip(edges[:-1], edges[1:]))

    def __call__(self, t: float) -> float:
        if not (self.a < t <= self.b):
            raise ValueError(f"t = {t!r} outside (a, b]")
        with self._lock:
            while self._nodes[-1] > t:
                k = len(self._nodes)
                nxt = self._node(k)
                if nxt <= self.a:
                    break
                self._values.append(self._values[-1] + self._pieces(nxt, self._nodes[-1]))
                self._nodes.append(nxt)
            # nodes decrease: find the smallest node >= t
            lo, hi = 0, len(self._nodes) - 1
            while lo < hi:
                mid = (lo + hi + 1) // 2
                if self._nodes[mid] >= t:
                    lo = mid
                else:
                    hi = mid - 1
            node, value = self._nodes[lo], self._values[lo]
        return value + self._pieces(t, node)

    def dyadic_partials(self, blocks: int = 40) -> list[float]:
        """G at the first ``blocks`` grid nodes (for divergence checks near a)."""
        return [self(self._node(k)) for k in range(1, blocks + 1)]


WORKERS_ENV = "WEYLCOEF_WORKERS"


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(n, 1)


def parallel_map(func: Callable, items: Sequence, workers: int | None = None) -> list:
    """``[func(x) for x in items]``, on a thread pool if more than one worker is configured.

    Results come back in input order whatever the completion order was.
    """
    items = list(items)
    n = worker_count() if workers is None else max(int(workers), 1)
    if n == 1 or len(items) < 2:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))


def log_grid(lo: float, hi: float, per_decade: int = 8) -> list[float]:
    """Log-spaced points from lo to hi inclusive."""
    if not (0 < lo <= hi):
        raise ValueError("need 0 < lo <= hi")
    if lo == hi:
        return [float(lo)]
    n = max(int(round(math.log10(hi / lo) * per_decade)), 1)
    pts = [float(x) for x in np.logspace(math.log10(lo), math.log10(hi), n + 1)]
    pts[0], pts[-1] = float(lo), float(hi)
    return pts


def fit_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of y against x."""
    return float(np.polyfit(np.asarray(x, float), np.asarray(y, float), 1)[0])
