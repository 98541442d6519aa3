"""
Time integration of the reduced (Pi, Omega) system

    d_t Pi    + u . grad Pi    = 0
    d_t Omega + u . grad Omega = (Delta + (2/r) d_r) Omega - d_z Pi^2

with the velocity recovered from ``omega_theta = r Omega`` at the start of
each step.  One step is a Lie splitting: semi-Lagrangian transport of both
unknowns, explicit source, backward-Euler diffusion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .elliptic import (
    FlowField,
    biot_savart,
    solve_diffusion,
    solve_diffusion_theta,
)
from .grid_fields import (
    CylGrid,
    Parity,
    ParityError,
    ScalarField,
    ddz_array,
    linf_norm,
)
from .interp import interpolate

CFL_EPS = 1e-12
BLOWUP_FACTOR = 1e6  # arbitrary guard level

Forcing = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


class StepError(RuntimeError):
    """A sub-step produced unusable data (e.g. non-finite characteristic feet)."""


class BlowUpError(RuntimeError):
    """The Omega sup-norm left the guard band."""

    def __init__(self, t: float, omega_linf: float, limit: float):
        super().__init__(
            f"divergence at t={t:.6g}: |Omega|_inf={omega_linf:.4g} exceeds guard {limit:.4g}"
        )
        self.t = t
        self.omega_linf = omega_linf
        self.limit = limit


@dataclass(frozen=True)
class StepParams:
    nu: float = 1.0
    cfl: float = 0.5
    dt_max: float = 0.01
    interpolation: str = "monotone-cubic"

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.nu < 0:
            raise ValueError(f"nu must be non-negative, got {self.nu}")
        if not self.dt_max > 0:
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")
        if self.interpolation not in ("monotone-cubic", "linear"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")


@dataclass(frozen=True, eq=False)
class State:
    """Reduced unknowns ``Pi = B^theta / r`` and ``Omega = omega^theta / r``.

    ``omega_linf0`` is the blow-up guard reference (initial sup of Omega,
    floored at 1 so that Omega_0 = 0 runs are not aborted at once).
    """

    t: float
    Pi: ScalarField
    Omega: ScalarField
    omega_linf0: float = 1.0

    def __post_init__(self):
        if self.Pi.parity is not Parity.EVEN or self.Omega.parity is not Parity.EVEN:
            raise ParityError("Pi and Omega must be EVEN")
        if self.Pi.grid != self.Omega.grid:
            raise ValueError("Pi and Omega live on different grids")

    @property
    def grid(self) -> CylGrid:
        return self.Pi.grid

    @property
    def b_theta(self) -> ScalarField:
        return self.Pi.times_r()

    @property
    def omega_theta(self) -> ScalarField:
        return self.Omega.times_r()


def initial_state(Pi: ScalarField, Omega: ScalarField, t: float = 0.0) -> State:
    return State(t, Pi, Omega, max(linf_norm(Omega), 1.0))


def flow_of(state: State) -> FlowField:
    return biot_savart(state.omega_theta)


# ---------------------------------------------------------------------------
# sub-steps
# ---------------------------------------------------------------------------


def departure_points(flow: FlowField, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Feet of the characteristics through every node (explicit midpoint rule)."""
    g = flow.grid
    R, Z = g.mesh()
    ur = flow.ur.values
    uz = flow.uz.values
    r_mid = R - 0.5 * dt * ur
    z_mid = Z - 0.5 * dt * uz
    ur_mid = interpolate(ur, Parity.ODD, g, r_mid, z_mid, "linear")
    uz_mid = interpolate(uz, Parity.EVEN, g, r_mid, z_mid, "linear")
    rf = R - dt * ur_mid
    zf = Z - dt * uz_mid
    if not (np.all(np.isfinite(rf)) and np.all(np.isfinite(zf))):
        raise StepError("non-finite characteristic foot")
    return rf, zf


def advect_sl(
    field: ScalarField,
    flow: FlowField,
    dt: float,
    interpolation: str = "monotone-cubic",
    feet: tuple[np.ndarray, np.ndarray] | None = None,
) -> ScalarField:
    """Semi-Lagrangian transport of ``field`` by ``flow`` over ``dt``.

    The result stays inside ``[min field, max field]`` pointwise.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    v = field.values
    if not (np.any(flow.ur.values) or np.any(flow.uz.values)):
        return field.with_values(v)
    rf, zf = feet if feet is not None else departure_points(flow, dt)
    out = interpolate(v, field.parity, field.grid, rf, zf, interpolation, outer="constant")
    out = np.clip(out, v.min(), v.max())
    return field.with_values(out)


def source_omega(Pi: ScalarField) -> ScalarField:
    """``-d_z (Pi^2)``."""
    return Pi.with_values(-ddz_array(Pi.values**2, Pi.grid.dz))


def cfl_dt(state_or_flow: State | FlowField, params: StepParams) -> float:
    flow = state_or_flow if isinstance(state_or_flow, FlowField) else flow_of(state_or_flow)
    g = flow.grid
    umax = max(linf_norm(flow.ur), linf_norm(flow.uz), CFL_EPS)
    return min(params.dt_max, params.cfl * min(g.dr, g.dz) / umax)


def _guard(state: State) -> State:
    lim = BLOWUP_FACTOR * state.omega_linf0
    w = linf_norm(state.Omega)
    if not w <= lim:
        raise BlowUpError(state.t, w, lim)
    return state


def step(
    state: State,
    params: StepParams,
    dt: float | None = None,
    flow: FlowField | None = None,
) -> State:
    """Advance one Lie-split step.

    ``flow`` freezes the transporting velocity (used by verification cases);
    by default it is recovered from ``r Omega``.  ``dt`` defaults to
    :func:`cfl_dt`.
    """
    return step_forced(state, params, None, None, dt=dt, flow=flow)


def step_forced(
    state: State,
    params: StepParams,
    forcing_Pi: Forcing | None,
    forcing_Omega: Forcing | None,
    dt: float | None = None,
    flow: FlowField | None = None,
    include_source: bool = True,
) -> State:
    """As :func:`step`, with ``dt * forcing(r, z, t + dt)`` added after the
    transport of each unknown."""
    if flow is None:
        flow = flow_of(state)
    if dt is None:
        dt = cfl_dt(flow, params)
    g = state.grid
    t1 = state.t + dt
    feet = None
    if np.any(flow.ur.values) or np.any(flow.uz.values):
        feet = departure_points(flow, dt)
    Pi = advect_sl(state.Pi, flow, dt, params.interpolation, feet)
    if forcing_Pi is not None:
        R, Z = g.mesh()
        Pi = Pi.with_values(Pi.values + dt * forcing_Pi(R, Z, t1))
    Om = advect_sl(state.Omega, flow, dt, params.interpolation, feet)
    rhs = Om.values
    if include_source:
        rhs = rhs + dt * source_omega(Pi).values
    if forcing_Omega is not None:
        R, Z = g.mesh()
        rhs = rhs + dt * forcing_Omega(R, Z, t1)
    Om = solve_diffusion(Om.with_values(rhs), dt, params.nu)
    return _guard(State(t1, Pi, Om, state.omega_linf0))


# ---------------------------------------------------------------------------
# primitive cross-check path
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PrimitiveState:
    """``(B^theta, omega^theta)``, both ODD."""

    t: float
    b_theta: ScalarField
    omega_theta: ScalarField

    @classmethod
    def from_reduced(cls, state: State) -> "PrimitiveState":
        return cls(state.t, state.b_theta, state.omega_theta)


def evolve_omega_primitive(
    pstate: PrimitiveState, params: StepParams, dt: float | None = None
) -> PrimitiveState:
    """One step of the azimuthal vorticity equation

        d_t w + u . grad w - (Delta - 1/r^2) w - (u^r/r) w = -d_z (B^theta)^2 / r

    together with ``d_t B + u . grad B = (u^r/r) B`` for the field, using the
    same splitting as :func:`step` (transport, explicit stretching and
    source, implicit diffusion).
    """
    b, w = pstate.b_theta, pstate.omega_theta
    if b.parity is not Parity.ODD or w.parity is not Parity.ODD:
        raise ParityError("primitive unknowns must be ODD")
    flow = biot_savart(w)
    if dt is None:
        dt = cfl_dt(flow, params)
    feet = None
    if np.any(flow.ur.values) or np.any(flow.uz.values):
        feet = departure_points(flow, dt)
    ur_r = flow.ur_over_r.values
    b_adv = advect_sl(b, flow, dt, params.interpolation, feet)
    b_new = b_adv.with_values(b_adv.values * (1.0 + dt * ur_r))
    w_adv = advect_sl(w, flow, dt, params.interpolation, feet)
    g = w.grid
    src = -ddz_array(b_new.values**2 / g.r_col, g.dz)
    rhs = w_adv.values + dt * (ur_r * w_adv.values + src)
    w_new = solve_diffusion_theta(w_adv.with_values(rhs), dt, params.nu)
    return PrimitiveState(pstate.t + dt, b_new, w_new)


def run_until(
    state: State,
    params: StepParams,
    t_end: float,
    callback: Callable[[State, FlowField, float], None] | None = None,
) -> State:
    """Step until ``t_end`` (last step shortened to land on it)."""
    while state.t < t_end * (1 - 1e-14):
        flow = flow_of(state)
        dt = min(cfl_dt(flow, params), t_end - state.t)
        if callback is not None:
            callback(state, flow, dt)
        state = step(state, params, dt=dt, flow=flow)
    return state


__all__ = [
    "BlowUpError",
    "PrimitiveState",
    "State",
    "StepError",
    "StepParams",
    "advect_sl",
    "cfl_dt",
    "departure_points",
    "evolve_omega_primitive",
    "flow_of",
    "initial_state",
    "run_until",
    "source_omega",
    "step",
    "step_forced",
]
