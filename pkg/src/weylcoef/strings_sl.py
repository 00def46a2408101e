"""Krein strings and Sturm-Liouville equations as canonical systems.

Strings: the mass function m(t) = mass([0, t)) is a power law c t^gamma
plus finitely many point masses.  The associated Hamiltonian lives on the
dual (mass) axis: H = [[mhat^2, mhat], [mhat, 1]] with mhat the generalised
inverse of m, followed by diag(1, 0) when the dual length and int mhat^2
are both finite.

Sturm-Liouville: -(p y')' + q y = z w y on [a, b) with fundamental
solutions c, s normalised at a.  The Hamiltonian
H = w [[c^2, -s c], [-s c, s^2]] (solutions at the shift xi) reproduces
m(z) = q_H(z - xi).
"""

from __future__ import annotations

import bisect
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BracketFailure, MalformedString, OutOfDomain, StepUnderflow
from .estimates import spread
from .hamiltonian_core import HamiltonianModel, det_omega, piecewise_constant
from .numerics import parallel_map
from .rootfind import solve_increasing
from .weyl_engine import eval_q

# ---------------------------------------------------------------------------
# strings


@dataclass(frozen=True)
class KreinString:
    """String of infinite length with mass m(t) = coef t^exponent + sum of atoms below t."""
    coef: float = 1.0
    exponent: float = 1.0
    atoms: tuple[tuple[float, float], ...] = ()
    length: float = math.inf
    name: str = "string"

    def __post_init__(self):
        if not self.length > 0:
            raise MalformedString("string length must be positive")
        if not math.isinf(self.length):
            raise MalformedString("only strings of infinite length are supported")
        if self.coef < 0 or not self.exponent > 0:
            raise MalformedString("need coef >= 0 and exponent > 0")
        atoms = tuple(sorted((float(x), float(m)) for x, m in self.atoms))
        if any(x < 0 or m <= 0 for x, m in atoms):
            raise MalformedString("atoms need positions >= 0 and positive masses")
        if any(b[0] == a[0] for a, b in zip(atoms, atoms[1:])):
            raise MalformedString("atom positions must be distinct")
        if self.coef == 0 and not atoms:
            raise MalformedString("string carries no mass")
        object.__setattr__(self, "atoms", atoms)

    @property
    def total_mass(self) -> float:
        return math.inf if self.coef > 0 else sum(m for _, m in self.atoms)

    def _atoms_below(self, t: float, inclusive: bool) -> list[tuple[float, float]]:
        xs = [x for x, _ in self.atoms]
        k = bisect.bisect_right(xs, t) if inclusive else bisect.bisect_left(xs, t)
        return list(self.atoms[:k])

    def moments(self, t: float, inclusive: bool = False) -> tuple[float, float, float]:
        """int x^k dm over [0, t) (or [0, t] if ``inclusive``) for k = 0, 1, 2."""
        if t < 0:
            raise OutOfDomain("t must be >= 0")
        g, c = self.exponent, self.coef
        out = [c * g * t ** (g + k) / (g + k) if t > 0 else 0.0 for k in range(3)]
        for x, m in self._atoms_below(t, inclusive):
            out[0] += m
            out[1] += m * x
            out[2] += m * x * x
        return out[0], out[1], out[2]

    def mass(self, t: float, inclusive: bool = False) -> float:
        return self.moments(t, inclusive)[0]


def uniform_string() -> KreinString:
    return KreinString(1.0, 1.0, (), name="uniform")


def delta_of(string: KreinString, t: float, inclusive: bool = False) -> float:
    """M0 M2 - M1^2 over [0, t), written as (1/2) int int (x - y)^2 to avoid cancellation.

    ``inclusive`` gives the right limit delta(t+).
    """
    if not 0 <= t < string.length:
        raise OutOfDomain(f"t = {t!r} outside [0, L)")
    g, c = string.exponent, string.coef
    cont = c * c * g * t ** (2 * g + 2) / ((g + 2) * (g + 1) ** 2) if t > 0 and c > 0 else 0.0
    atoms = string._atoms_below(t, inclusive)
    pairs = 0.0
    for i, (xi, mi) in enumerate(atoms):
        for xj, mj in atoms[i + 1:]:
            pairs += mi * mj * (xj - xi) ** 2
    cross = 0.0
    if c > 0 and t > 0:
        for x, m in atoms:
            # int (y - x)^2 c g y^(g-1) dy over [0, t]
            val = c * g * (t ** (g + 2) / (g + 2) - 2 * x * t ** (g + 1) / (g + 1)
                           + x * x * t ** g / g)
            cross += m * max(val, 0.0)
    return max(cont + pairs + cross, 0.0)


@dataclass(frozen=True)
class StringScales:
    r: float
    tau_hat: float
    f_r: float
    delta_at_tau: float


def tau_hat_and_f(string: KreinString, r: float) -> StringScales:
    if not r > 0:
        raise OutOfDomain("r must be positive")
    target = 1.0 / (r * r)
    # a jump of delta across an atom that straddles the target
    for x, m in string.atoms:
        lo, hi = delta_of(string, x), delta_of(string, x, inclusive=True)
        if lo < target <= hi:
            if hi > lo:
                f = string.mass(x) + m * (target - lo) / (hi - lo)
            else:
                f = string.mass(x)
            return StringScales(r, x, f, lo)
    if string.coef == 0:
        raise BracketFailure(f"1/r^2 = {target:g} exceeds sup delta; r is below range")
    tau = solve_increasing(lambda t: delta_of(string, t), target, 0.0, 1.0)
    return StringScales(r, tau, string.mass(tau), delta_of(string, tau))


def dual_mass(string: KreinString, xi: float) -> float:
    """mhat(xi) = inf{t > 0 : xi <= m(t)}."""
    if xi < 0:
        raise OutOfDomain("xi must be >= 0")
    if xi == 0:
        return 0.0
    c, g = string.coef, string.exponent
    below = 0.0
    prev_x = 0.0
    for x, m in string.atoms:
        m_at = below + (c * x ** g if c > 0 else 0.0)
        if xi <= m_at:
            break
        if xi <= m_at + m:
            return x
        below += m
        prev_x = x
    else:
        if c == 0:
            raise OutOfDomain(f"xi = {xi!r} exceeds the total mass")
    t = ((xi - below) / c) ** (1.0 / g)
    return max(t, prev_x)


def _dual_pieces(string: KreinString) -> list[tuple[float, float, str, float]]:
    """Pieces (xi_lo, xi_hi, kind, data) of mhat on the dual axis.

    kind "flat": mhat = data; kind "power": mhat = ((xi - data)/c)^(1/gamma).
    """
    c, g = string.coef, string.exponent
    pieces = []
    below = 0.0
    xi = 0.0
    for x, m in string.atoms:
        m_at = below + (c * x ** g if c > 0 else 0.0)
        if m_at > xi:
            pieces.append((xi, m_at, "power", below))
        pieces.append((m_at, m_at + m, "flat", x))
        xi = m_at + m
        below += m
    if c > 0:
        pieces.append((xi, math.inf, "power", below))
    return pieces


def string_to_hamiltonian(string: KreinString) -> HamiltonianModel:
    c, g = string.coef, string.exponent
    pieces = _dual_pieces(string)
    spec = {"kind": "string", "coef": c, "exponent": g, "atoms": [list(a) for a in string.atoms]}
    if c == 0:
        # piecewise constant directions, then the indivisible tail
        breaks = [p[0] for p in pieces] + [pieces[-1][1]]
        values = [(p[3] ** 2, 1.0, p[3]) for p in pieces] + [(1.0, 0.0, 0.0)]
        model = piecewise_constant(breaks, values, name=string.name, spec=spec)
        return model
    starts = [p[0] for p in pieces]

    def locate(t: float):
        return pieces[max(bisect.bisect_right(starts, t) - 1, 0)]

    def mhat(t: float) -> float:
        lo, hi, kind, data = locate(t)
        if kind == "flat":
            return data
        return ((t - data) / c) ** (1.0 / g)

    def density(t: float):
        m = mhat(t)
        return (m * m, 1.0, m)

    def piece_integral(lo: float, hi: float, kind: str, data: float, u: float, v: float):
        """(int mhat^2, int 1, int mhat) over [u, v] inside one piece."""
        if kind == "flat":
            return (data * data * (v - u), v - u, data * (v - u))
        out = []
        for k in (2, 1):
            e = k / g + 1.0
            out.append(c * (((v - data) / c) ** e - ((u - data) / c) ** e) / e)
        return (out[0], v - u, out[1])

    cum = [(0.0, 0.0, 0.0)]
    for lo, hi, kind, data in pieces[:-1]:
        d = piece_integral(lo, hi, kind, data, lo, hi)
        prev = cum[-1]
        cum.append((prev[0] + d[0], prev[1] + d[1], prev[2] + d[2]))

    def primitive(t: float):
        i = max(bisect.bisect_right(starts, t) - 1, 0)
        lo, hi, kind, data = pieces[i]
        d = piece_integral(lo, hi, kind, data, lo, t)
        base = cum[i]
        return (base[0] + d[0], base[1] + d[1], base[2] + d[2])

    def increment(t0: float, t1: float):
        i0 = max(bisect.bisect_right(starts, t0) - 1, 0)
        i1 = max(bisect.bisect_right(starts, t1) - 1, 0)
        if i0 == i1:
            lo, hi, kind, data = pieces[i0]
            return piece_integral(lo, hi, kind, data, t0, t1)
        w0, w1 = primitive(t0), primitive(t1)
        return (w1[0] - w0[0], w1[1] - w0[1], w1[2] - w0[2])

    return HamiltonianModel(0.0, math.inf, density, primitive, None, tuple(starts[1:]),
                            False, string.name, True, increment, None, spec)


@dataclass(frozen=True)
class StringRatioRecord:
    r: float
    tau_hat: float
    f_r: float
    im_q: float
    ratio: float          # Im q_S(ir) r f(r)


@dataclass(frozen=True)
class StringRatioReport:
    records: list[StringRatioRecord]
    spread: float


def theorem_a41_check(string: KreinString, r_grid: Sequence[float], rel_tol: float = 1e-8,
                      workers: int | None = None) -> StringRatioReport:
    model = string_to_hamiltonian(string)

    def one(r: float) -> StringRatioRecord:
        sc = tau_hat_and_f(string, r)
        guess = 1.0 / (r * sc.f_r)
        q = eval_q(model, 1j * r, rel_tol * guess).value
        return StringRatioRecord(r, sc.tau_hat, sc.f_r, q.imag, q.imag * r * sc.f_r)

    recs = parallel_map(one, list(r_grid), workers)
    return StringRatioReport(recs, spread([x.ratio for x in recs]))


# ---------------------------------------------------------------------------
# Sturm-Liouville


Coefficient = Callable[[float], float]


@dataclass(frozen=True)
class SLProblem:
    p: Coefficient
    q: Coefficient
    w: Coefficient
    a: float = 0.0
    b: float = math.inf
    xi: float = 0.0
    name: str = "sturm-liouville"
    spec: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.b > self.a:
            raise OutOfDomain("need a < b")
        span = 1.0 if math.isinf(self.b) else self.b - self.a
        for k in range(1, 9):
            t = self.a + span * k / 9.0
            if not self.w(t) > 0:
                raise OutOfDomain(f"weight must be positive, w({t!r}) = {self.w(t)!r}")
            if self.p(t) == 0:
                raise OutOfDomain(f"p vanishes at {t!r}")


def free_problem(xi: float = 0.0) -> SLProblem:
    one = lambda t: 1.0  # noqa: E731
    return SLProblem(one, lambda t: 0.0, one, 0.0, math.inf, xi, name=f"free(xi={xi:g})",
                     spec={"kind": "free", "xi": xi})


class SLSolution:
    """c, s, p c', p s' and the Gram integrals, integrated lazily on growing chunks.

    State vector: (c, p c', s, p s', int c^2 w, int s^2 w, int c s w).
    """

    def __init__(self, problem: SLProblem, xi: float | None = None, rtol: float = 1e-12,
                 atol: float = 1e-22):
        self.problem = problem
        self.xi = problem.xi if xi is None else float(xi)
        self.rtol, self.atol = rtol, atol
        self._starts: list[float] = []
        self._sols: list = []
        self._end = problem.a
        self._state = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0])
        self._lock = threading.Lock()

    def _rhs(self, t: float, y: np.ndarray) -> list[float]:
        pr = self.problem
        c, pc, s, ps = y[:4]
        pt, wt = pr.p(t), pr.w(t)
        k = pr.q(t) - self.xi * wt
        return [pc / pt, k * c, ps / pt, k * s, c * c * wt, s * s * wt, c * s * wt]

    def _extend(self, t: float) -> None:
        a, b = self.problem.a, self.problem.b
        while self._end < t:
            width = max(1.0, self._end - a)
            stop = min(self._end + width, b)
            if stop <= self._end:
                raise OutOfDomain(f"t = {t!r} beyond the right endpoint")
            sol = solve_ivp(self._rhs, (self._end, stop), self._state, method="DOP853",
                            rtol=self.rtol, atol=self.atol, dense_output=True)
            if not sol.success:
                raise StepUnderflow(f"integration failed on [{self._end}, {stop}]: {sol.message}")
            self._starts.append(self._end)
            self._sols.append(sol.sol)
            self._state = sol.y[:, -1]
            self._end = stop

    def state(self, t: float) -> np.ndarray:
        if not self.problem.a <= t < self.problem.b:
            raise OutOfDomain(f"t = {t!r} outside [a, b)")
        if t == self.problem.a:
            return np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0])
        with self._lock:
            if t > self._end:
                self._extend(t)
            i = max(bisect.bisect_right(self._starts, t) - 1, 0)
            sol = self._sols[i]
        return sol(t)

    def c(self, t: float) -> float:
        return float(self.state(t)[0])

    def s(self, t: float) -> float:
        return float(self.state(t)[2])

    def pc(self, t: float) -> float:
        return float(self.state(t)[1])

    def ps(self, t: float) -> float:
        return float(self.state(t)[3])

    def wronskian(self, t: float) -> float:
        y = self.state(t)
        return float(y[0] * y[3] - y[1] * y[2])

    def gram(self, t: float) -> tuple[float, float, float]:
        """(||c||^2, ||s||^2, (c, s)) on [a, t]."""
        y = self.state(t)
        return float(y[4]), float(y[5]), float(y[6])

    def gram_det(self, t: float) -> float:
        n_c, n_s, cs = self.gram(t)
        return max(n_c * n_s - cs * cs, 0.0)


def sl_solutions(problem: SLProblem, xi: float | None = None) -> SLSolution:
    return SLSolution(problem, xi)


def sl_to_hamiltonian(problem: SLProblem, solution: SLSolution | None = None) -> HamiltonianModel:
    sol = solution or SLSolution(problem)
    w = problem.w

    def density(t: float):
        y = sol.state(t)
        c, s, wt = y[0], y[2], w(t)
        return (wt * c * c, wt * s * s, -wt * s * c)

    def primitive(t: float):
        n_c, n_s, cs = sol.gram(t)
        return (n_c, n_s, -cs)

    model = HamiltonianModel(problem.a, problem.b, density, primitive, None, (), False,
                             f"H[{problem.name}]", True, None, None,
                             {"kind": "sl", "of": dict(problem.spec)})
    object.__setattr__(model, "_solution", sol)
    return model


def free_schrodinger() -> HamiltonianModel:
    """Closed form of the free case at xi = 0: H = [[1, -t], [-t, t^2]]."""
    def density(t):
        return (1.0, t * t, -t)

    def primitive(t):
        return (t, t ** 3 / 3.0, -t * t / 2.0)

    def increment(t0, t1):
        return (t1 - t0, (t1 ** 3 - t0 ** 3) / 3.0, -(t1 * t1 - t0 * t0) / 2.0)

    return HamiltonianModel(0.0, math.inf, density, primitive, None, (), False, "free",
                            True, increment, None, {"kind": "free"})


@dataclass(frozen=True)
class SLRatioRecord:
    r: float
    t_hat: float
    gram_det: float
    norm_c: float
    norm_s: float
    m: complex
    ratio_s: float      # Im m(xi + ir) r ||s||^2
    ratio_c: float      # (Im m/|m|^2) r ||c||^2


@dataclass(frozen=True)
class SLRatioReport:
    records: list[SLRatioRecord]
    spread_s: float
    spread_c: float


def gram_t_hat(solution: SLSolution, r: float) -> float:
    """t with Gram determinant 1/r^2."""
    a = solution.problem.a
    b = solution.problem.b
    start = a + (1.0 if math.isinf(b) else 0.5 * (b - a))
    return solve_increasing(solution.gram_det, 1.0 / (r * r), a, start, b)


def theorem_t9_check(problem: SLProblem, r_grid: Sequence[float], rel_tol: float = 1e-8,
                     workers: int | None = None) -> SLRatioReport:
    sol = SLSolution(problem)
    model = sl_to_hamiltonian(problem, sol)

    def one(r: float) -> SLRatioRecord:
        th = gram_t_hat(sol, r)
        n_c, n_s, _ = sol.gram(th)
        guess = 1.0 / (r * n_s)
        m = eval_q(model, 1j * r, rel_tol * guess).value
        return SLRatioRecord(r, th, sol.gram_det(th), n_c, n_s, m,
                             m.imag * r * n_s, m.imag / abs(m) ** 2 * r * n_c)

    recs = parallel_map(one, list(r_grid), workers)
    return SLRatioReport(recs, spread([x.ratio_s for x in recs]), spread([x.ratio_c for x in recs]))


def weyl_m(problem: SLProblem, z: complex, tol: float = 1e-10,
           model: HamiltonianModel | None = None) -> complex:
    """m(z) = q_H(z - xi) for the Hamiltonian built at the problem's shift."""
    model = model or sl_to_hamiltonian(problem)
    return eval_q(model, complex(z) - problem.xi, tol).value


def string_det_identity(string: KreinString, t: float) -> tuple[float, float]:
    """(delta(t), det Omega_H(m(t))): equal at continuity points of delta."""
    model = string_to_hamiltonian(string)
    return delta_of(string, t), det_omega(model, string.mass(t))
