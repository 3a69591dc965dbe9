import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hardylab.errors import DomainError
from hardylab.io import fmt, read_csv, to_json, write_csv
from hardylab.params import ProblemParams, neumann_constant, sphere_area


def test_defaults_and_derived():
    p = ProblemParams()
    assert p.k == p.N == 3
    assert p.p == 0.5
    assert p.hardy_k == 0.25
    assert p.half_gap == 1.0
    assert p.c_s == pytest.approx(1.0, abs=1e-15)
    assert p.area == pytest.approx(4.0 * math.pi, rel=1e-15)


@pytest.mark.parametrize("kw", [
    dict(N=2), dict(k=2), dict(N=3, k=4), dict(s=0.0), dict(s=1.0),
    dict(alpha=0.25), dict(g_amp=-1.0), dict(g_eps=0.0), dict(r0=1.0), dict(modes=0),
])
def test_invalid_params_rejected(kw):
    with pytest.raises(DomainError):
        ProblemParams(**kw)


def test_coercivity_margin():
    p = ProblemParams(alpha=0.0, g_amp=1.0, g_eps=0.5, r0=0.25)
    assert p.coercivity_margin() == pytest.approx(0.5)
    assert p.coercivity_margin(2.0) == pytest.approx(0.0, abs=1e-15)


def test_sphere_area_values():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert sphere_area(4) == pytest.approx(2 * math.pi ** 2)


def test_neumann_constant_values():
    assert neumann_constant(0.5) == pytest.approx(1.0, abs=1e-15)
    assert neumann_constant(0.25) == pytest.approx(
        2 ** 0.5 * math.gamma(0.75) / math.gamma(0.25), rel=1e-14)
    assert neumann_constant(0.25) == pytest.approx(0.478, abs=1e-3)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trip(x):
    assert float(fmt(x)) == x


def test_csv_round_trip(tmp_path):
    rows = [(1, 0.1, 1e-300), (2, math.pi, -2.5)]
    path = write_csv(tmp_path / "a" / "t.csv", ["i", "x", "y"], rows)
    header, back = read_csv(path)
    assert header == ["i", "x", "y"]
    assert back == [list(map(float, r)) for r in rows]


def test_json_is_deterministic():
    d = {"b": np.float64(1.0), "a": [np.int64(2), np.inf, float("nan")], "c": np.array([1.5])}
    assert to_json(d) == to_json(dict(reversed(list(d.items()))))
    assert '"inf"' in to_json(d) and '"nan"' in to_json(d)
