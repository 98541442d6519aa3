from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from axmhd.grid_fields import (
    CylGrid,
    GridSizeError,
    Parity,
    ParityError,
    ScalarField,
    ddr,
    ddr_array,
    ddz,
    divergence,
    linf_norm,
    lp_norm,
    make_grid,
    sample,
    zeros,
)

from conftest import GAUSS_L2, gauss, strip_grid


def test_cell_centred_nodes():
    g = make_grid(4, 8, 2.0, 4.0)
    np.testing.assert_allclose(g.r, [0.25, 0.75, 1.25, 1.75])
    assert g.z[0] == -2.0 and g.dz == 0.5
    assert g.shape == (4, 8)
    R, Z = g.mesh()
    assert R.shape == Z.shape == (4, 8)


@pytest.mark.parametrize(
    "args",
    [(0, 8, 1.0, 1.0), (4, 6, 1.0, 1.0), (4, 8, -1.0, 1.0), (4, 8, 1.0, 0.0)],
)
def test_grid_validation(args):
    with pytest.raises(GridSizeError):
        CylGrid(*args)


def test_refine_halves_spacing():
    g = strip_grid(16).refine()
    assert (g.Nr, g.Nz) == (32, 64) and g.dr == 0.125


def test_parity_sign_and_flip():
    assert Parity.EVEN.sign == 1 and Parity.ODD.sign == -1
    assert Parity.EVEN.flip() is Parity.ODD


def test_field_is_readonly_copy(grid64):
    v = np.ones(grid64.shape)
    f = ScalarField(grid64, Parity.EVEN, v)
    v[0, 0] = 5.0
    assert f.values[0, 0] == 1.0
    with pytest.raises(ValueError):
        f.values[0, 0] = 2.0


def test_nonfinite_sample_reports_node(grid64):
    with pytest.raises(ValueError, match="node"):
        sample(lambda R, Z: 1.0 / (R - grid64.r[3]), grid64, Parity.EVEN)


def test_field_arithmetic_checks_parity(grid64):
    a = zeros(grid64, Parity.EVEN)
    b = zeros(grid64, Parity.ODD)
    with pytest.raises(ParityError):
        a + b
    assert a.times_r().parity is Parity.ODD
    assert b.over_r().parity is Parity.EVEN


def test_gaussian_l2_oracle(gauss_field):
    assert lp_norm(gauss_field, 2) == pytest.approx(GAUSS_L2, rel=1e-3)


@pytest.mark.parametrize("p", [4, 6])
def test_gaussian_lp_oracle(gauss_field, p):
    # int exp(-p rho^2) d^3x = (pi/p)^{3/2}
    assert lp_norm(gauss_field, p) == pytest.approx((math.pi / p) ** (1.5 / p), rel=1e-3)


def test_linf(gauss_field):
    assert linf_norm(gauss_field) == pytest.approx(1.0, abs=5e-3)


def test_unsupported_p(gauss_field):
    with pytest.raises(ValueError):
        lp_norm(gauss_field, 3)


def test_derivatives_second_order():
    errs = []
    for n in (32, 64, 128):
        g = strip_grid(n)
        f = sample(gauss, g, Parity.EVEN)
        R, Z = g.mesh()
        er = np.abs(ddr(f).values - (-2 * R * gauss(R, Z))).max()
        ez = np.abs(ddz(f).values - (-2 * Z * gauss(R, Z))).max()
        errs.append(max(er, ez))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders > 1.8)


def test_derivative_parities(gauss_field):
    assert ddr(gauss_field).parity is Parity.ODD
    assert ddz(gauss_field).parity is Parity.EVEN


def test_divergence_of_solenoidal_field():
    # u = curl of (psi/r) e_theta with psi = r^2 exp(-r^2 - z^2)
    errs = []
    for n in (32, 64):
        g = strip_grid(n)
        ur = sample(lambda R, Z: 2 * R * Z * gauss(R, Z), g, Parity.ODD)
        uz = sample(lambda R, Z: (2 - 2 * R * R) * gauss(R, Z), g, Parity.EVEN)
        errs.append(np.abs(divergence(ur, uz).values).max())
    assert errs[1] < 0.3 * errs[0] and errs[1] < 1e-2


def test_divergence_parity_check(grid64):
    with pytest.raises(ParityError):
        divergence(zeros(grid64, Parity.EVEN), zeros(grid64, Parity.EVEN))


@settings(max_examples=25, deadline=None)
@given(a=st.floats(1e-3, 5) | st.floats(-5, -1e-3) | st.just(0.0), p=st.sampled_from([2, 4, 6]))
def test_norm_homogeneity(a, p):
    g = strip_grid(16)
    f = sample(gauss, g, Parity.EVEN)
    assert lp_norm(f.scaled(a), p) == pytest.approx(abs(a) * lp_norm(f, p), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_ddr_ghost_parity(seed):
    # an even field with f[0] = f[1] has a ghost equal to f[0]: derivative at node 0 is (f1 - f0)/(2dr)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((8, 4))
    d_even = ddr_array(v, Parity.EVEN, 0.5)
    d_odd = ddr_array(v, Parity.ODD, 0.5)
    np.testing.assert_allclose(d_even[0], (v[1] - v[0]) / 1.0)
    np.testing.assert_allclose(d_odd[0], (v[1] + v[0]) / 1.0)
