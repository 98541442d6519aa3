"""
Velocity recovery from azimuthal vorticity and implicit diffusion solves.

Both problems reduce to the same family of operators

    L_c f = d_rr f + (c / r) d_r f - (m / r^2) f + d_zz f

on the cell-centred meridian grid, with a parity ghost cell below the first
radial node and homogeneous Dirichlet data on the outer face ``r = r_max``.
The z direction is diagonalised with a real FFT (the symbol of the periodic
second difference is used, so the transform is exact for the discrete
operator); each z-mode is then a tridiagonal system in r.

Stream function
---------------
The Stokes stream function behaves like ``psi ~ r^2`` at the axis.  Writing
``psi = r^2 phi`` turns

    d_rr psi - (1/r) d_r psi + d_zz psi = -r omega_theta

into ``L_3 phi = -Omega`` with ``phi`` even in r and ``Omega = omega_theta / r``.
This is the operator of the Omega diffusion, so the two share one code path
and the axis needs no special stencil.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid_fields import (
    CylGrid,
    Parity,
    ParityError,
    ScalarField,
    ddr_array,
    ddz_array,
    lp_norm_array,
)

STREAM_TOL = 1e-10
DIFFUSION_TOL = 1e-10


class SolverError(RuntimeError):
    """Raised when a linear solve misses its residual tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


# ---------------------------------------------------------------------------
# operator assembly
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def radial_bands(grid: CylGrid, c: float, m: float, parity: Parity):
    """Tridiagonal bands ``(sub, diag, sup)`` of the radial part of ``L_c``.

    ``sub[0]`` and ``sup[-1]`` are zero; the ghost contributions are folded
    into the diagonal.
    """
    r = grid.r
    dr = grid.dr
    sub = 1.0 / dr**2 - c / (2.0 * r * dr)
    sup = 1.0 / dr**2 + c / (2.0 * r * dr)
    diag = -2.0 / dr**2 - m / r**2
    diag = diag.copy()
    diag[0] += parity.sign * sub[0]
    diag[-1] -= sup[-1]  # Dirichlet on the face: ghost = -f[N-1]
    sub = sub.copy()
    sup = sup.copy()
    sub[0] = 0.0
    sup[-1] = 0.0
    for a in (sub, diag, sup):
        a.flags.writeable = False
    return sub, diag, sup


@lru_cache(maxsize=64)
def z_symbol(Nz: int, dz: float) -> np.ndarray:
    """Eigenvalues of the periodic second difference for the rfft modes."""
    k = np.arange(Nz // 2 + 1)
    return -(2.0 - 2.0 * np.cos(2.0 * np.pi * k / Nz)) / dz**2


def apply_operator(
    v: np.ndarray, grid: CylGrid, c: float, m: float, parity: Parity
) -> np.ndarray:
    """Apply ``L_c`` (with its boundary closure) to an ``(Nr, Nz)`` array."""
    sub, diag, sup = radial_bands(grid, c, m, parity)
    out = diag[:, None] * v
    out[1:] += sub[1:, None] * v[:-1]
    out[:-1] += sup[:-1, None] * v[1:]
    dz2 = grid.dz**2
    out += (np.roll(v, -1, axis=1) - 2.0 * v + np.roll(v, 1, axis=1)) / dz2
    return out


def _thomas(sub, diag, sup, rhs):
    """Batched Thomas algorithm.

    ``diag`` and ``rhs`` have shape ``(n, k)``; ``sub``/``sup`` shape ``(n, 1)``
    or ``(n, k)``.  No pivoting: all systems solved here are diagonally
    dominant.
    """
    n = diag.shape[0]
    cp = np.empty(diag.shape, dtype=np.float64)
    dp = np.empty(rhs.shape, dtype=rhs.dtype)
    cp[0] = sup[0] / diag[0]
    dp[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - sub[i] * cp[i - 1]
        cp[i] = sup[i] / denom
        dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / denom
    x = np.empty_like(dp)
    x[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def solve_shifted(
    rhs: np.ndarray,
    grid: CylGrid,
    alpha: float,
    beta: float,
    c: float,
    m: float,
    parity: Parity,
) -> np.ndarray:
    """Solve ``(alpha I + beta L_c) X = rhs`` exactly (up to roundoff)."""
    sub, diag, sup = radial_bands(grid, c, m, parity)
    lam = z_symbol(grid.Nz, grid.dz)
    rhs_hat = np.fft.rfft(rhs, axis=1)
    d = alpha + beta * (diag[:, None] + lam[None, :])
    x_hat = _thomas(beta * sub[:, None], d, beta * sup[:, None], rhs_hat)
    return np.fft.irfft(x_hat, n=grid.Nz, axis=1)


def _relative_residual(res: np.ndarray, ref: np.ndarray, grid: CylGrid) -> float:
    den = lp_norm_array(ref, grid, 2)
    num = lp_norm_array(res, grid, 2)
    if den == 0.0:
        return num
    return num / den


# ---------------------------------------------------------------------------
# stream function and velocity
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StreamFunction:
    """Stokes stream function ``psi`` and its reduced form ``phi = psi / r^2``."""

    psi: ScalarField
    phi: ScalarField
    source: ScalarField | None = None
    residual: float = 0.0


@dataclass(frozen=True, eq=False)
class FlowField:
    ur: ScalarField
    uz: ScalarField
    ur_over_r: ScalarField
    psi: StreamFunction | None = None

    @property
    def grid(self) -> CylGrid:
        return self.ur.grid


def solve_stream(omega_theta: ScalarField, tol: float = STREAM_TOL) -> StreamFunction:
    """Solve for the stream function of an azimuthal vorticity field.

    Parameters
    ----------
    omega_theta : ScalarField
        ODD azimuthal vorticity.
    tol : float
        Bound on the relative grid-L^2 residual of the discrete system.

    Returns
    -------
    StreamFunction
        ``psi`` (EVEN, vanishing like r^2 on the axis and zero on the outer
        face) together with ``phi = psi / r^2``.
    """
    if omega_theta.parity is not Parity.ODD:
        raise ParityError("solve_stream expects an ODD omega_theta")
    g = omega_theta.grid
    Omega = omega_theta.values / g.r_col
    if not np.any(Omega):
        z = np.zeros(g.shape)
        return StreamFunction(
            ScalarField(g, Parity.EVEN, z), ScalarField(g, Parity.EVEN, z), omega_theta, 0.0
        )
    phi = solve_shifted(-Omega, g, 0.0, 1.0, 3.0, 0.0, Parity.EVEN)
    res = apply_operator(phi, g, 3.0, 0.0, Parity.EVEN) + Omega
    rel = _relative_residual(res, Omega, g)
    if not rel <= tol:
        raise SolverError("stream-function solve did not converge", rel)
    psi = phi * g.r_col**2
    return StreamFunction(
        ScalarField(g, Parity.EVEN, psi), ScalarField(g, Parity.EVEN, phi), omega_theta, rel
    )


def stream_residual(sf: StreamFunction) -> float:
    """Relative residual of the discrete stream equation for ``sf``."""
    if sf.source is None:
        raise ValueError("stream function carries no source field")
    g = sf.phi.grid
    Omega = sf.source.values / g.r_col
    res = apply_operator(sf.phi.values, g, 3.0, 0.0, Parity.EVEN) + Omega
    return _relative_residual(res, Omega, g)


def velocity_from_stream(psi: StreamFunction | ScalarField) -> FlowField:
    """``u^r = -(1/r) d_z psi``, ``u^z = (1/r) d_r psi``.

    Evaluated through ``phi = psi / r^2`` as ``u^r = -r d_z phi`` and
    ``u^z = 2 phi + r d_r phi``, which keeps the axis regular.
    """
    if isinstance(psi, ScalarField):
        g = psi.grid
        phi = ScalarField(g, Parity.EVEN, psi.values / g.r_col**2)
        sf = StreamFunction(psi, phi)
    else:
        sf = psi
        phi = sf.phi
        g = phi.grid
    dphi_dz = ddz_array(phi.values, g.dz)
    dphi_dr = ddr_array(phi.values, Parity.EVEN, g.dr)
    ur = -g.r_col * dphi_dz
    uz = 2.0 * phi.values + g.r_col * dphi_dr
    return FlowField(
        ScalarField(g, Parity.ODD, ur),
        ScalarField(g, Parity.EVEN, uz),
        ScalarField(g, Parity.EVEN, -dphi_dz),
        sf,
    )


def biot_savart(omega_theta: ScalarField) -> FlowField:
    """Velocity of a swirl-free axisymmetric vorticity ``omega_theta e_theta``."""
    return velocity_from_stream(solve_stream(omega_theta))


def zero_flow(grid: CylGrid) -> FlowField:
    z = np.zeros(grid.shape)
    return FlowField(
        ScalarField(grid, Parity.ODD, z),
        ScalarField(grid, Parity.EVEN, z),
        ScalarField(grid, Parity.EVEN, z),
    )


# ---------------------------------------------------------------------------
# diffusion
# ---------------------------------------------------------------------------


def diffusion_operator(f: ScalarField) -> ScalarField:
    """``(Delta + (2/r) d_r) f`` for an EVEN field, i.e. ``L_3 f``."""
    if f.parity is not Parity.EVEN:
        raise ParityError("diffusion operator acts on EVEN fields")
    return f.with_values(apply_operator(f.values, f.grid, 3.0, 0.0, Parity.EVEN))


def vector_laplacian_theta(f: ScalarField) -> ScalarField:
    """``(Delta - 1/r^2) f`` for an ODD azimuthal component."""
    if f.parity is not Parity.ODD:
        raise ParityError("(Delta - 1/r^2) acts on ODD fields")
    return f.with_values(apply_operator(f.values, f.grid, 1.0, 1.0, Parity.ODD))


def _implicit(rhs: ScalarField, dt: float, nu: float, c: float, m: float, tol: float) -> ScalarField:
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if nu < 0:
        raise ValueError(f"nu must be non-negative, got {nu}")
    if nu == 0.0 or not np.any(rhs.values):
        return rhs.with_values(rhs.values)
    g = rhs.grid
    a = nu * dt
    x = solve_shifted(rhs.values, g, 1.0, -a, c, m, rhs.parity)
    res = x - a * apply_operator(x, g, c, m, rhs.parity) - rhs.values
    rel = _relative_residual(res, rhs.values, g)
    if not rel <= tol:
        raise SolverError("implicit diffusion solve did not converge", rel)
    return rhs.with_values(x)


def solve_diffusion(
    rhs: ScalarField, dt: float, nu: float, tol: float = DIFFUSION_TOL
) -> ScalarField:
    """Backward-Euler solve ``(I - nu dt (Delta + (2/r) d_r)) X = rhs``."""
    if rhs.parity is not Parity.EVEN:
        raise ParityError("solve_diffusion expects an EVEN field")
    return _implicit(rhs, dt, nu, 3.0, 0.0, tol)


def solve_diffusion_theta(
    rhs: ScalarField, dt: float, nu: float, tol: float = DIFFUSION_TOL
) -> ScalarField:
    """Backward-Euler solve ``(I - nu dt (Delta - 1/r^2)) X = rhs`` for ODD fields."""
    if rhs.parity is not Parity.ODD:
        raise ParityError("solve_diffusion_theta expects an ODD field")
    return _implicit(rhs, dt, nu, 1.0, 1.0, tol)
