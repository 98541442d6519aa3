from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from axmhd.config import ConfigError, InitialSpec, RunConfig, compile_expression, parse_config
from axmhd.grid_fields import Parity

from conftest import strip_grid

MINIMAL = """\
[grid]
Nr = 32
Nz = 64
r_max = 4.0
z_len = 8.0

[run]
t_end = 0.5
"""


def test_minimal_defaults():
    c = parse_config(MINIMAL)
    assert c.params.nu == 1.0 and c.params.cfl == 0.5 and c.lp_N == 64
    assert c.t_end == 0.5 and c.initial.preset == "ring+gauss"


def test_roundtrip_text():
    c = parse_config(MINIMAL + "[initial]\nPi0 = exp(-r^2)\n[tolerances]\nk_embed_baseline = 2.5\n")
    assert parse_config(c.to_text()) == c


def test_comments_and_blank_lines():
    c = parse_config("# header\n" + MINIMAL.replace("[run]", "; note\n[run]"))
    assert c.grid.Nr == 32


def _err(text):
    with pytest.raises(ConfigError) as ei:
        parse_config(text)
    return ei.value


def test_cfl_out_of_range():
    e = _err(MINIMAL + "[params]\ncfl = 1.5\n")
    assert e.line == 10 and "cfl" in str(e)


def test_duplicate_key_reports_both_lines():
    e = _err(MINIMAL.replace("Nz = 64", "Nz = 64\nNz = 128"))
    assert e.line == 4 and "line 3" in str(e)


def test_unknown_key_and_section():
    assert _err(MINIMAL + "bogus = 1\n").line == 9
    assert _err("[nope]\n").line == 1


def test_type_mismatch():
    e = _err(MINIMAL.replace("Nr = 32", "Nr = thirty"))
    assert e.line == 2


def test_missing_required():
    e = _err("[grid]\nNr = 32\n")
    assert e.line is None and "Nz" in str(e)


@pytest.mark.parametrize(
    "extra,line",
    [
        ("[run]\ndiag_every = 0\n", 10),
        ("[initial]\npreset = swirl\n", 10),
        ("[initial]\nOmega0 = __import__('os')\n", 10),
    ],
)
def test_invariants(extra, line):
    text = MINIMAL.replace("[run]\nt_end = 0.5\n", "") + "[run]\nt_end = 0.5\n" + extra
    e = _err(text)
    assert e.line is not None


def test_negative_t_end():
    assert _err(MINIMAL.replace("t_end = 0.5", "t_end = -1")).line == 8


def test_grid_power_of_two():
    assert _err(MINIMAL.replace("Nz = 64", "Nz = 60")).line is not None


def test_expression_grammar():
    f = compile_expression("2*exp(-r^2 - z^2) + sin(z)/4 - cos(r)")
    r, z = np.array([0.5]), np.array([0.25])
    np.testing.assert_allclose(f(r, z), 2 * np.exp(-0.3125) + np.sin(0.25) / 4 - np.cos(0.5))
    for bad in ("r.real", "log(r)", "r if z else 1", "x", "'a'", "exp(r, z)"):
        with pytest.raises(ValueError):
            compile_expression(bad)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-10, 10), b=st.floats(0.1, 3))
def test_expression_matches_numpy(a, b):
    f = compile_expression(f"{a!r} * exp(-r^2 / {b!r}) + z")
    r = np.linspace(0, 2, 5)
    np.testing.assert_allclose(f(r, r), a * np.exp(-r**2 / b) + r, rtol=1e-12, atol=1e-12)


def test_expression_overrides_preset():
    g = strip_grid(16)
    P, O = InitialSpec(preset="zero", Pi0="exp(-r^2-z^2)").fields(g)
    assert P.parity is Parity.EVEN and P.values.max() > 0.9 and not np.any(O.values)


@pytest.mark.parametrize("preset", ["ring+gauss", "ring", "gauss", "hill", "zero"])
def test_presets_sample(preset):
    P, O = InitialSpec(preset=preset).fields(strip_grid(16))
    assert np.all(np.isfinite(P.values)) and np.all(np.isfinite(O.values))
