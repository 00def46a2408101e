"""Command line interface: ``weylcoef <command> [options]``.

Every command writes a CSV (to --out, or stdout) and one or more summary
lines ``CHECK <name> PASS|FAIL margin=<v>``.  The summary goes to stdout
after the CSV when --out is given and to stderr otherwise, so that stdout
stays a clean CSV.  The exit status is 0 iff every check passes, 1 if a
check fails and 2 on an error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from typing import Callable, Sequence

from . import acceptance
from .errors import WeylError
from .estimates import (BAND_ETA, band_constants, certified_band, cor_t5_check, estimate_record,
                        prop_a4_record, slow_variation, spread)
from .hamiltonian_core import HamiltonianModel, check_invariants, indivisible_info, omega
from .model_zoo import ZOO_NAMES
from .numerics import parallel_map
from .report import check_line, write_csv
from .scales import envelopes
from .specfile import RunConfig, build_model, build_sl, build_string, load_json, parse_config
from .strings_sl import free_problem, theorem_a41_check, theorem_t9_check, uniform_string
from .tails import at0_check, power_function, split_off_linear_term, y74_quantity
from .weyl_engine import eval_q

COMMANDS = ("q", "envelopes", "theorem1", "band", "prop24", "cor25", "slowvar", "zoo", "string",
            "sl", "tails", "verify-all")


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    margin: float


@dataclass(frozen=True)
class QRow:
    r: float
    theta: float
    z: complex
    q: complex
    error_radius: float
    t_used: float


@dataclass(frozen=True)
class OmegaRow:
    t: float
    omega1: float
    omega2: float
    omega3: float
    det: float


@dataclass(frozen=True)
class Y74Row:
    t: float
    value: float
    classification: str
    beta: float


@dataclass(frozen=True)
class CriterionRow:
    number: int
    name: str
    passed: bool
    margin: float
    seconds: float
    detail: str


class CommandError(Exception):
    pass


def _at_points(model: HamiltonianModel, func: Callable[[float], object], grid: Sequence[float],
               label: str = "r") -> list:
    """Map func over grid, naming the model and the point in any error."""
    def one(x: float):
        try:
            return func(x)
        except WeylError as exc:
            raise CommandError(f"{model.name}, {label} = {x:.6g}: {type(exc).__name__}: {exc}") from exc

    return parallel_map(one, list(grid))


def _band_check(name: str, values: Sequence[float], limit: float) -> Check:
    s = spread(values)
    return Check(name, s <= limit, limit - s)


# ---------------------------------------------------------------------------
# commands; each returns (records, checks)

def cmd_q(model: HamiltonianModel, cfg: RunConfig):
    direction = complex(math.cos(cfg.theta), math.sin(cfg.theta))

    def one(r: float) -> QRow:
        ev = eval_q(model, r * direction, cfg.tol)
        return QRow(r, cfg.theta, ev.z, ev.value, ev.error_radius, ev.t_used)

    rows = _at_points(model, one, cfg.r_grid)
    worst = max(x.error_radius for x in rows)
    return rows, [Check("q_certified", worst <= cfg.tol, cfg.tol - worst)]


def cmd_envelopes(model: HamiltonianModel, cfg: RunConfig):
    rows = _at_points(model, lambda r: envelopes(model, r, cfg.eta), cfg.r_grid)
    ok = all(0 < x.L and 0 < x.A and math.isfinite(x.A) for x in rows)
    return rows, [Check("envelopes_positive", ok, 1.0 if ok else -1.0)]


def cmd_theorem1(model: HamiltonianModel, cfg: RunConfig):
    rows = _at_points(model, lambda r: estimate_record(model, r, cfg.eta, cfg.tol_factor),
                      cfg.r_grid)
    limit = band_constants().ratio
    return rows, [_band_check("theorem1_ratio_im", [x.ratio_im for x in rows], limit),
                  _band_check("theorem1_ratio_inv", [x.ratio_inv for x in rows], limit)]


def cmd_band(model: HamiltonianModel, cfg: RunConfig):
    eta = cfg.extra.get("band_eta", BAND_ETA)
    try:
        rep = certified_band(model, cfg.r_grid, cfg.theta, eta)
    except WeylError as exc:
        raise CommandError(f"{model.name}: {type(exc).__name__}: {exc}") from exc
    return rep.points, [Check("band", rep.passed, rep.worst_margin)]


def cmd_prop24(model: HamiltonianModel, cfg: RunConfig):
    rows = _at_points(model, lambda r: prop_a4_record(model, r), cfg.r_grid)
    limit = cfg.extra.get("band", acceptance.REGIME_C ** 2)
    return rows, [_band_check("prop24_tangent_ratio", [x.tangent_ratio for x in rows], limit)]


def cmd_cor25(model: HamiltonianModel, cfg: RunConfig):
    try:
        rep = cor_t5_check(model, cfg.r_grid, cfg.k)
    except WeylError as exc:
        raise CommandError(f"{model.name}: {type(exc).__name__}: {exc}") from exc
    limit = cfg.extra.get("band", acceptance.REGIME_C ** 2)
    return rep.records, [Check("cor25_im_over_dist", rep.spread_im_dist <= limit,
                               limit - rep.spread_im_dist),
                         Check("cor25_dist_ratio", rep.spread_dist <= limit,
                               limit - rep.spread_dist)]


def cmd_slowvar(model: HamiltonianModel, cfg: RunConfig):
    try:
        rows = slow_variation(model, cfg.k, cfg.r_grid)
    except WeylError as exc:
        raise CommandError(f"{model.name}: {type(exc).__name__}: {exc}") from exc
    limit = cfg.extra.get("deviation", 0.1)
    top = rows[-1].deviation
    return rows, [Check("slowvar_top_deviation", top <= limit, limit - top)]


def cmd_zoo(model: HamiltonianModel, cfg: RunConfig):
    info = indivisible_info(model)
    lo = max(info.a_hat, model.a) + 1e-6
    hi = lo + 10.0 if math.isinf(model.b) else model.b - 1e-9 * (model.b - model.a)
    grid = [lo + (hi - lo) * k / 63 for k in range(64)]
    try:
        check_invariants(model, grid)
        ok, margin = True, 1.0
    except WeylError:
        ok, margin = False, -1.0
    rows = []
    for t in grid:
        w = omega(model, t)
        rows.append(OmegaRow(t, w.omega1, w.omega2, w.omega3, w.det))
    return rows, [Check(f"zoo_{model.name}_invariants", ok, margin)]


def cmd_string(cfg: RunConfig, spec: dict | None):
    string = build_string(spec) if spec is not None else uniform_string()
    try:
        rep = theorem_a41_check(string, cfg.r_grid)
    except WeylError as exc:
        raise CommandError(f"{string.name}: {type(exc).__name__}: {exc}") from exc
    limit = cfg.extra.get("band", 10.0)
    return rep.records, [Check("string_ratio_band", rep.spread <= limit, limit - rep.spread)]


def cmd_sl(cfg: RunConfig, spec: dict | None):
    problem = build_sl(spec) if spec is not None else free_problem(cfg.extra.get("xi", 0.0))
    try:
        rep = theorem_t9_check(problem, cfg.r_grid)
    except WeylError as exc:
        raise CommandError(f"{problem.name}: {type(exc).__name__}: {exc}") from exc
    limit = cfg.extra.get("band", 10.0)
    return rep.records, [Check("sl_ratio_s", rep.spread_s <= limit, limit - rep.spread_s),
                         Check("sl_ratio_c", rep.spread_c <= limit, limit - rep.spread_c)]


def cmd_tails(model: HamiltonianModel, cfg: RunConfig):
    beta, reduced = split_off_linear_term(model)
    g = power_function(cfg.exponent)
    a_hat = indivisible_info(reduced).a_hat
    a_prime = cfg.extra.get("a_prime", a_hat + 1.0)
    grid = [a_hat + (a_prime - a_hat) * 2.0 ** -k for k in range(1, 30)]
    try:
        seq = y74_quantity(reduced, g, grid)
        at0 = at0_check(reduced, g, a_prime, lhs_blocks=int(cfg.extra.get("lhs_blocks", 6)),
                        rtol=cfg.extra.get("rtol", 1e-3))
    except WeylError as exc:
        raise CommandError(f"{model.name}: {type(exc).__name__}: {exc}") from exc
    rows = [Y74Row(t, v, seq.classification, beta) for t, v in zip(seq.points, seq.values)]
    return rows, [Check("tails_at0_sides_agree", at0.agree, 1.0 if at0.agree else -1.0)]


def cmd_verify_all(cfg: RunConfig):
    numbers = cfg.extra.get("criteria")
    results = acceptance.run_all(numbers)
    rows = []
    checks = []
    for res in results:
        detail = res.error or "; ".join(f"{c.name}={c.observed}" for c in res.checks)
        rows.append(CriterionRow(res.number, res.name, res.passed, res.margin, res.seconds, detail))
        checks.append(Check(f"{res.number:02d}_{res.name}", res.passed, res.margin))
    return rows, checks


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weylcoef",
                                     description="Weyl coefficients of canonical systems.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("name", nargs="?", help="zoo model name (for the zoo command)")
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--model", help="JSON model spec file")
    parser.add_argument("--zoo", choices=ZOO_NAMES, help="use a built-in model")
    parser.add_argument("--rmin", type=float)
    parser.add_argument("--rmax", type=float)
    parser.add_argument("--per-decade", type=int)
    parser.add_argument("--eta", type=float)
    parser.add_argument("--theta", type=float)
    parser.add_argument("--k", type=float)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--exponent", type=float, help="comparison exponent for tails")
    parser.add_argument("--out", help="CSV output path (default: stdout)")
    return parser


def _merge(args: argparse.Namespace) -> tuple[RunConfig, dict | None]:
    data = load_json(args.config) if args.config else {}
    data = dict(data)
    data["command"] = args.command
    grid = dict(data.get("r_grid", {}))
    for key, src in (("min", args.rmin), ("max", args.rmax), ("per_decade", args.per_decade)):
        if src is not None:
            grid[key] = src
    if grid:
        data["r_grid"] = grid
    for key in ("eta", "theta", "k", "tol", "exponent"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    if args.out is not None:
        data["output"] = args.out
    if args.model:
        data["model"] = load_json(args.model)
    if args.zoo:
        data["model"] = {"kind": "zoo", "name": args.zoo}
    if args.command == "zoo":
        if not args.name:
            raise CommandError(f"zoo needs a model name: {', '.join(ZOO_NAMES)}")
        data["model"] = {"kind": "zoo", "name": args.name}
    model_spec = data.get("model")
    return parse_config(data), model_spec


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        cfg, spec = _merge(args)
        if args.command == "verify-all":
            rows, checks = cmd_verify_all(cfg)
        elif args.command == "string":
            rows, checks = cmd_string(cfg, spec if spec and spec.get("kind") in ("string", "from_string") else None)
        elif args.command == "sl":
            rows, checks = cmd_sl(cfg, spec if spec and spec.get("kind") in ("sl", "from_sl") else None)
        else:
            model = build_model(spec or {"kind": "identity"})
            handler = {"q": cmd_q, "envelopes": cmd_envelopes, "theorem1": cmd_theorem1,
                       "band": cmd_band, "prop24": cmd_prop24, "cor25": cmd_cor25,
                       "slowvar": cmd_slowvar, "zoo": cmd_zoo, "tails": cmd_tails}[args.command]
            rows, checks = handler(model, cfg)
    except (CommandError, WeylError) as exc:
        print(f"error: {exc}", file=stderr)
        return 2

    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            write_csv(rows, fh)
        summary = stdout
    else:
        write_csv(rows, stdout)
        summary = stderr
    for chk in checks:
        print(check_line(chk.name, chk.passed, chk.margin), file=summary)
    worst = min((c.margin for c in checks), default=float("nan"))
    passed = all(c.passed for c in checks)
    print(f"SUMMARY {'PASS' if passed else 'FAIL'} checks={len(checks)} worst_margin={worst:.6g}",
          file=summary)
    return 0 if passed else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
