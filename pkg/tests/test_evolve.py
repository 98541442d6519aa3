from __future__ import annotations

import numpy as np
import pytest

from axmhd.config import InitialSpec
from axmhd.elliptic import zero_flow
from axmhd.evolve import (
    BlowUpError,
    PrimitiveState,
    State,
    StepParams,
    advect_sl,
    cfl_dt,
    evolve_omega_primitive,
    flow_of,
    initial_state,
    run_until,
    source_omega,
    step,
)
from axmhd.grid_fields import Parity, ParityError, lp_norm, lp_norm_array, sample, zeros

from conftest import gauss, strip_grid


def ref_state(n=32):
    g = strip_grid(n)
    return initial_state(*InitialSpec().fields(g))


@pytest.mark.parametrize("kw", [dict(cfl=1.5), dict(nu=-1), dict(dt_max=0), dict(interpolation="x")])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        StepParams(**kw)


def test_state_requires_even():
    g = strip_grid(8)
    with pytest.raises(ParityError):
        State(0.0, zeros(g, Parity.ODD), zeros(g, Parity.EVEN))


def test_zero_state_stays_zero():
    g = strip_grid(16)
    s = initial_state(zeros(g, Parity.EVEN), zeros(g, Parity.EVEN))
    s = run_until(s, StepParams(), 0.05)
    assert not np.any(s.Pi.values) and not np.any(s.Omega.values)
    assert s.t == pytest.approx(0.05)


def test_maximum_principle_and_lp_drift():
    s = ref_state(32)
    lo, hi = s.Pi.values.min(), s.Pi.values.max()
    n0 = lp_norm(s.Pi, 2)
    for _ in range(10):
        s = step(s, StepParams(dt_max=0.02))
        assert s.Pi.values.min() >= lo and s.Pi.values.max() <= hi
    assert abs(lp_norm(s.Pi, 2) / n0 - 1) < 1e-3


def test_zero_flow_transport_is_identity():
    s = ref_state(16)
    out = advect_sl(s.Pi, zero_flow(s.grid), 0.1)
    np.testing.assert_array_equal(out.values, s.Pi.values)


def test_cfl_limit():
    s = ref_state(32)
    fl = flow_of(s)
    p = StepParams(cfl=0.5, dt_max=10.0)
    umax = max(np.abs(fl.ur.values).max(), np.abs(fl.uz.values).max())
    assert cfl_dt(fl, p) == pytest.approx(0.5 * s.grid.dr / umax)


def test_source_sign():
    g = strip_grid(64)
    Pi = sample(gauss, g, Parity.EVEN)
    R, Z = g.mesh()
    # -d_z exp(-2 r^2 - 2 z^2) = 4 z exp(...)
    ex = 4 * Z * np.exp(-2 * R * R - 2 * Z * Z)
    assert np.abs(source_omega(Pi).values - ex).max() < 1e-2


def test_pure_diffusion_decays_omega():
    g = strip_grid(32)
    s = initial_state(zeros(g, Parity.EVEN), sample(gauss, g, Parity.EVEN))
    n = [lp_norm(s.Omega, 2)]
    for _ in range(5):
        s = step(s, StepParams(dt_max=0.02))
        n.append(lp_norm(s.Omega, 2))
    assert np.all(np.diff(n) < 0)


def test_blowup_guard():
    g = strip_grid(16)
    s = State(0.0, zeros(g, Parity.EVEN), sample(gauss, g, Parity.EVEN).scaled(1e8), omega_linf0=1.0)
    with pytest.raises(BlowUpError) as ei:
        step(s, StepParams())
    assert ei.value.limit == pytest.approx(1e6)


def test_primitive_path_agrees():
    s = ref_state(64)
    ps = PrimitiveState.from_reduced(s)
    p = StepParams()
    for _ in range(5):
        s = step(s, p, dt=0.02)
        ps = evolve_omega_primitive(ps, p, dt=0.02)
    g = s.grid
    rel = lp_norm_array(s.omega_theta.values - ps.omega_theta.values, g, 2) / lp_norm(ps.omega_theta, 2)
    assert rel < 5e-3


def test_step_is_deterministic():
    a = step(ref_state(32), StepParams())
    b = step(ref_state(32), StepParams())
    assert a.Omega.values.tobytes() == b.Omega.values.tobytes()
    assert a.Pi.values.tobytes() == b.Pi.values.tobytes()
