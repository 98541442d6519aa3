from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from axmhd.grid_fields import Parity, sample
from axmhd.interp import interpolate

from conftest import gauss, strip_grid


@pytest.mark.parametrize("method", ["linear", "cubic", "monotone-cubic"])
def test_reproduces_nodes(method):
    g = strip_grid(16)
    f = sample(gauss, g, Parity.EVEN).values
    R, Z = g.mesh()
    np.testing.assert_allclose(interpolate(f, Parity.EVEN, g, R, Z, method), f, atol=1e-14)


def test_linear_exact_on_bilinear_interior():
    g = strip_grid(16)
    R, Z = g.mesh()
    f = 1 + 2 * R + 3 * Z + R * Z
    rq = np.array([1.1, 2.3]); zq = np.array([0.2, -1.7])
    np.testing.assert_allclose(
        interpolate(f, Parity.EVEN, g, rq, zq, "linear"), 1 + 2 * rq + 3 * zq + rq * zq, atol=1e-12
    )


def test_cubic_exact_on_cubic_polynomial_in_r():
    g = strip_grid(16)
    R, _ = g.mesh()
    f = R**3 - R
    rq = np.array([1.05, 2.71])
    np.testing.assert_allclose(
        interpolate(f, Parity.ODD, g, rq, np.zeros(2), "cubic"), rq**3 - rq, atol=1e-12
    )


def test_negative_radius_uses_parity():
    g = strip_grid(16)
    f = sample(gauss, g, Parity.EVEN).values
    a = interpolate(f, Parity.EVEN, g, np.array([0.3]), np.array([0.1]))
    b = interpolate(f, Parity.EVEN, g, np.array([-0.3]), np.array([0.1]))
    assert a == pytest.approx(b)
    h = f * g.r_col
    c = interpolate(h, Parity.ODD, g, np.array([0.3]), np.array([0.1]))
    d = interpolate(h, Parity.ODD, g, np.array([-0.3]), np.array([0.1]))
    assert d == pytest.approx(-c)


def test_z_is_periodic():
    g = strip_grid(16)
    f = sample(lambda R, Z: np.cos(np.pi * Z / 4) * gauss(R, 0 * Z), g, Parity.EVEN).values
    a = interpolate(f, Parity.EVEN, g, np.array([1.0]), np.array([0.3]))
    b = interpolate(f, Parity.EVEN, g, np.array([1.0]), np.array([0.3 + 8.0]))
    assert a == pytest.approx(b, abs=1e-13)


def test_zero_outer_extension():
    g = strip_grid(16)
    f = np.ones(g.shape)
    assert interpolate(f, Parity.EVEN, g, np.array([4.5]), np.array([0.0]), outer="zero")[0] == 0.0


def test_unknown_method():
    g = strip_grid(16)
    with pytest.raises(ValueError):
        interpolate(np.zeros(g.shape), Parity.EVEN, g, 0.0, 0.0, "spline")


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_monotone_cubic_bracket(seed):
    """Result lies in the local bracket widened by a quarter of the local curvature."""
    rng = np.random.default_rng(seed)
    g = strip_grid(8)
    f = rng.standard_normal(g.shape)
    rq = rng.uniform(0, 4.0, 50)
    zq = rng.uniform(-4, 4, 50)
    out = interpolate(f, Parity.EVEN, g, rq, zq, "monotone-cubic")
    spread = f.max() - f.min()
    assert np.all(out <= f.max() + spread) and np.all(out >= f.min() - spread)
    lin = interpolate(f, Parity.EVEN, g, rq, zq, "linear")
    assert np.all(np.isfinite(out)) and np.all(np.isfinite(lin))
