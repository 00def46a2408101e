import io
import json
import math
from dataclasses import dataclass

import pytest

from weylcoef.errors import BracketFailure, ConfigError, QuadratureFailure
from weylcoef.hamiltonian_core import omega
from weylcoef.numerics import (RightTailIntegral, fit_slope, log_grid, looks_divergent,
                               parallel_map, quad)
from weylcoef.report import check_line, csv_text, format_value
from weylcoef.rootfind import bisect_increasing, solve_increasing
from weylcoef.specfile import build_model, build_sl, build_string, load_json, parse_config


def test_log_grid_and_slope():
    g = log_grid(1.0, 1e4, 2)
    assert len(g) == 9 and g[0] == 1.0 and g[-1] == pytest.approx(1e4)
    assert fit_slope([0, 1, 2], [1, 3, 5]) == pytest.approx(2.0)


def test_parallel_map_preserves_order():
    assert parallel_map(lambda x: x * x, [3, 1, 2]) == [9, 1, 4]


def test_looks_divergent():
    assert looks_divergent([float(k) for k in range(1, 12)])
    assert not looks_divergent([1.0 - 2.0 ** -k for k in range(1, 12)])


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_quad_and_failure():
    assert quad(math.sin, 0.0, math.pi) == pytest.approx(2.0)
    with pytest.raises(QuadratureFailure):
        quad(lambda x: math.sin(1.0 / x) / x ** 2, 1e-6, 1.0, rtol=1e-12)


def test_right_tail_integral():
    tail = RightTailIntegral(lambda t: 1.0 / t, 0.0, 1.0)
    parts = tail.dyadic_partials(10)
    assert parts[-1] == pytest.approx(10 * math.log(2.0), rel=1e-9)


def test_rootfind():
    assert solve_increasing(lambda x: x ** 3, 8.0, 0.0, 1.0) == pytest.approx(2.0, rel=1e-14)
    # leftmost point on a flat stretch
    f = lambda x: min(max(x, 1.0), 2.0) if x < 3.0 else x  # noqa: E731
    assert bisect_increasing(f, 2.0, 0.5, 2.5) == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(BracketFailure):
        solve_increasing(lambda x: 1.0, 2.0, 0.0, 1.0, upper=10.0)


@dataclass
class Row:
    x: float
    z: complex
    ok: bool


def test_report_formats():
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(1 + 2j) == "1+2j"
    assert csv_text([Row(1.5, 1j, True)]) == "x,z,ok\n1.5,0+1j,true\n"
    assert check_line("a", False, -0.25) == "CHECK a FAIL margin=-0.25"


@pytest.mark.parametrize("spec, t, want", [
    ({"kind": "identity"}, 2.0, (2.0, 2.0, 0.0)),
    ({"kind": "constant", "h": [2, 1, 0.5]}, 1.0, (2.0, 1.0, 0.5)),
    ({"kind": "diagonal", "h1": 4, "h2": 1}, 1.0, (4.0, 1.0, 0.0)),
    ({"kind": "table", "rows": [[0, 1, 1, 0], [1, 2, 1, 0]]}, 2.0, (3.0, 2.0, 0.0)),
])
def test_build_model(spec, t, want):
    w = omega(build_model(spec), t)
    assert (w.omega1, w.omega2, w.omega3) == pytest.approx(want)


def test_build_zoo_string_sl():
    assert build_model({"kind": "zoo", "name": "hpl"}).name
    s = build_string({"coef": 1, "exponent": 2, "atoms": [[1, 0.5]]})
    assert s.atoms == ((1.0, 0.5),)
    sl = build_sl({"p": 1, "q": {"kind": "power", "coef": 2, "exponent": 1},
                   "w": {"kind": "polynomial", "coefs": [1, 1]}})
    assert sl.q(3.0) == 6.0 and sl.w(2.0) == 3.0


@pytest.mark.parametrize("spec, msg", [
    ({"kind": "nope"}, "unknown model kind"),
    ({"kind": "diagonal", "h1": 1}, "missing key 'h2'"),
    ({"kind": "diagonal", "h1": "x", "h2": 1}, "must be a number"),
    ({"kind": "identity", "extra": 1}, "unknown key 'extra'"),
    ({"kind": "constant", "h": [1, 2]}, "h1, h2, h3"),
])
def test_build_model_errors(spec, msg):
    with pytest.raises(ConfigError, match=msg):
        build_model(spec)


def test_parse_config():
    cfg = parse_config({"command": "q", "r_grid": {"min": 1, "max": 100, "per_decade": 1},
                        "theta": 1.0, "extra": {"band": 3}})
    assert cfg.r_grid == pytest.approx([1.0, 10.0, 100.0])
    assert cfg.theta == 1.0 and cfg.extra == {"band": 3}
    for bad in ({"bogus": 1}, {"r_grid": {"min": 0}}, {"theta": 4.0}, {"tol": -1}):
        with pytest.raises(ConfigError):
            parse_config(bad)


def test_load_json(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"command": "q"}))
    assert load_json(p) == {"command": "q"}
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_json(p)
    with pytest.raises(ConfigError):
        load_json(tmp_path / "missing.json")


def test_prescribed_angle_and_aliases():
    # f = 0, g = 2/t on (0, 1]: omega1 = omega2 = t and q = i
    m = build_model({"kind": "prescribed_angle", "g": {"kind": "power", "coef": 2, "exponent": -1}})
    w = omega(m, 0.5)
    assert (w.omega1, w.omega2, w.omega3) == pytest.approx((0.5, 0.5, 0.0))
    s = build_model({"kind": "from_string", "coef": 1, "exponent": 1})
    assert omega(s, 1.0).omega1 > 0
    sl = build_model({"kind": "from_sl"})
    assert (omega(sl, 1.0).omega1, omega(sl, 1.0).omega2) == pytest.approx((1.0, 1 / 3))
