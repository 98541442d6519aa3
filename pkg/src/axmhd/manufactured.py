"""
Manufactured solutions and grid-refinement studies for the stepper.

Each case fixes closed-form ``Pi*``, ``Omega*`` (and, where the flow is not
frozen, a stream function ``phi*`` with ``Omega* = -L phi*``), derives the
forcings symbolically and runs :func:`axmhd.evolve.step_forced` at three
resolutions with ``dt`` tied to ``h``.

Here ``L = d_r^2 + (3/r) d_r + d_z^2`` and the unknowns obey

    d_t Pi    + u . grad Pi    = f_Pi
    d_t Omega + u . grad Omega = nu L Omega - d_z Pi^2 + f_Omega
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
import sympy as sp

from .elliptic import FlowField, zero_flow
from .evolve import State, StepParams, step_forced
from .grid_fields import CylGrid, Parity, ScalarField, lp_norm_array, make_grid, sample

CASES = ("diffusion", "advection", "full")
THRESHOLDS = {"diffusion": 1.7, "advection": 1.7, "full": 0.9}

_r, _z, _t = sp.symbols("r z t", real=True)
Expr3 = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


def _L(f: sp.Expr) -> sp.Expr:
    return sp.diff(f, _r, 2) + 3 / _r * sp.diff(f, _r) + sp.diff(f, _z, 2)


def _fn(expr: sp.Expr) -> Expr3:
    f = sp.lambdify((_r, _z, _t), sp.simplify(expr), "numpy")

    def call(R, Z, t):
        return np.broadcast_to(np.asarray(f(R, Z, t), dtype=float), np.shape(R)).copy()

    return call


@dataclass(frozen=True)
class Manufactured:
    """Exact fields and forcings of one manufactured case."""

    name: str
    Pi: Expr3
    Omega: Expr3
    forcing_Pi: Expr3 | None
    forcing_Omega: Expr3 | None
    nu: float
    include_source: bool
    frozen_flow: str | None  # "zero", "uniform-z" or None (recovered from Omega)


@lru_cache(maxsize=None)
def build_case(name: str, nu: float = 1.0) -> Manufactured:
    """Symbolic set-up of ``name`` in :data:`CASES`."""
    g2 = sp.exp(-(_r**2) - _z**2)
    if name == "diffusion":
        Pi = sp.exp(-_t) * g2
        Om = sp.exp(-_t) * (1 - _r**2) * g2
        fPi = sp.diff(Pi, _t)
        fOm = sp.diff(Om, _t) - nu * _L(Om) + sp.diff(Pi**2, _z)
        return Manufactured(name, _fn(Pi), _fn(Om), _fn(fPi), _fn(fOm), nu, True, "zero")
    if name == "advection":
        # transport by u = e_z on the periodic strip; exact solution is a
        # shifted profile (periodic images summed in exact_fields)
        return Manufactured(
            name,
            _fn(g2),
            _fn((1 - _r**2) * g2),
            None,
            None,
            0.0,
            False,
            "uniform-z",
        )
    if name == "full":
        phi = sp.Rational(1, 2) * sp.cos(_t) * sp.exp(-(_r**2) - (_z - sp.Rational(1, 2)) ** 2)
        Om = sp.simplify(-_L(phi))
        ur = -_r * sp.diff(phi, _z)
        uz = 2 * phi + _r * sp.diff(phi, _r)
        Pi = (1 + _t / 2) * g2

        def adv(f):
            return sp.diff(f, _t) + ur * sp.diff(f, _r) + uz * sp.diff(f, _z)

        fPi = adv(Pi)
        fOm = adv(Om) - nu * _L(Om) + sp.diff(Pi**2, _z)
        return Manufactured(name, _fn(Pi), _fn(Om), _fn(fPi), _fn(fOm), nu, True, None)
    raise ValueError(f"unknown manufactured case {name!r}; expected one of {CASES}")


def uniform_z_flow(grid: CylGrid, speed: float = 1.0) -> FlowField:
    z = np.zeros(grid.shape)
    return FlowField(
        ScalarField(grid, Parity.ODD, z),
        ScalarField(grid, Parity.EVEN, np.full(grid.shape, speed)),
        ScalarField(grid, Parity.EVEN, z),
    )


def exact_fields(case: Manufactured, grid: CylGrid, t: float) -> tuple[ScalarField, ScalarField]:
    if case.frozen_flow == "uniform-z":
        L = grid.z_len

        def images(f):
            return lambda R, Z: sum(f(R, Z - t + k * L, 0.0) for k in (-1, 0, 1))

        return sample(images(case.Pi), grid, Parity.EVEN), sample(images(case.Omega), grid, Parity.EVEN)
    return (
        sample(lambda R, Z: case.Pi(R, Z, t), grid, Parity.EVEN),
        sample(lambda R, Z: case.Omega(R, Z, t), grid, Parity.EVEN),
    )


@dataclass(frozen=True)
class StudySetup:
    """Resolutions and time stepping of a refinement study."""

    Nr: tuple[int, ...] = (32, 64, 128)
    r_max: float = 4.0
    z_len: float = 8.0
    t_end: float = 0.5
    dt0: float = 0.05  # time step at the coarsest resolution
    dt_power: int = 1  # dt scales like h ** dt_power


DEFAULT_SETUPS = {
    "diffusion": StudySetup(t_end=0.2, dt0=0.02, dt_power=2),
    "advection": StudySetup(t_end=1.0, dt0=0.0625, dt_power=1),
    "full": StudySetup(t_end=0.5, dt0=0.05, dt_power=1),
}


@dataclass
class ConvergenceResult:
    case: str
    Nr: list[int]
    dt: list[float]
    errors: dict[str, list[float]]
    orders: dict[str, list[float]]
    threshold: float
    monotone: bool
    details: dict = field(default_factory=dict)

    @property
    def observed_order(self) -> float:
        return min(min(v) for v in self.orders.values())

    @property
    def passed(self) -> bool:
        return self.monotone and self.observed_order >= self.threshold

    def table(self) -> str:
        lines = [f"case {self.case}  (threshold order {self.threshold})"]
        lines.append(f"{'Nr':>6} {'dt':>10} {'err Pi':>12} {'err Omega':>12} {'ord Pi':>7} {'ord Om':>7}")
        for k, n in enumerate(self.Nr):
            oP = f"{self.orders['Pi'][k - 1]:7.3f}" if k else " " * 7
            oO = f"{self.orders['Omega'][k - 1]:7.3f}" if k else " " * 7
            lines.append(
                f"{n:>6} {self.dt[k]:>10.3e} {self.errors['Pi'][k]:>12.4e} "
                f"{self.errors['Omega'][k]:>12.4e} {oP} {oO}"
            )
        flag = "" if self.monotone else "  [non-monotone error sequence]"
        lines.append(f"observed order {self.observed_order:.3f} -> {'PASS' if self.passed else 'FAIL'}{flag}")
        return "\n".join(lines)


def _relative_error(num: ScalarField, ex: ScalarField) -> float:
    g = num.grid
    ref = lp_norm_array(ex.values, g, 2)
    err = lp_norm_array(num.values - ex.values, g, 2)
    return err / ref if ref > 0 else err


def run_case(
    case: Manufactured, grid: CylGrid, t_end: float, dt: float, interpolation: str = "monotone-cubic"
) -> tuple[float, float]:
    """Relative L^2 errors of ``(Pi, Omega)`` at ``t_end``."""
    nsteps = max(1, int(round(t_end / dt)))
    dt = t_end / nsteps
    Pi0, Om0 = exact_fields(case, grid, 0.0)
    state = State(0.0, Pi0, Om0, omega_linf0=1e300)
    params = StepParams(nu=case.nu, cfl=1.0, dt_max=dt, interpolation=interpolation)
    if case.frozen_flow == "zero":
        flow = zero_flow(grid)
    elif case.frozen_flow == "uniform-z":
        flow = uniform_z_flow(grid)
    else:
        flow = None
    for k in range(nsteps):
        state = step_forced(
            state,
            params,
            case.forcing_Pi,
            case.forcing_Omega,
            dt=dt,
            flow=flow,
            include_source=case.include_source,
        )
    state = State(t_end, state.Pi, state.Omega, state.omega_linf0)
    PiE, OmE = exact_fields(case, grid, t_end)
    return _relative_error(state.Pi, PiE), _relative_error(state.Omega, OmE)


def convergence_study(
    name: str, setup: StudySetup | None = None, nu: float = 1.0, threshold: float | None = None
) -> ConvergenceResult:
    case = build_case(name, nu)
    setup = setup if setup is not None else DEFAULT_SETUPS[name]
    if len(setup.Nr) < 2:
        raise ValueError("need at least two resolutions")
    n0 = setup.Nr[0]
    errs: dict[str, list[float]] = {"Pi": [], "Omega": []}
    dts = []
    for n in setup.Nr:
        g = make_grid(n, 2 * n, setup.r_max, setup.z_len)
        dt = setup.dt0 * (n0 / n) ** setup.dt_power
        eP, eO = run_case(case, g, setup.t_end, dt)
        errs["Pi"].append(eP)
        errs["Omega"].append(eO)
        dts.append(dt)
    orders = {k: [math.log2(v[i] / v[i + 1]) for i in range(len(v) - 1)] for k, v in errs.items()}
    monotone = all(all(a > b for a, b in zip(v, v[1:])) for v in errs.values())
    return ConvergenceResult(
        name,
        list(setup.Nr),
        dts,
        errs,
        orders,
        THRESHOLDS[name] if threshold is None else threshold,
        monotone,
    )
