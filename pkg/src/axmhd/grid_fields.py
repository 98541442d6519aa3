"""
Meridian-plane grid and axisymmetric scalar fields.

Conventions
-----------
* Field arrays have shape ``(Nr, Nz)`` and are indexed ``[i, j]`` with
  ``r_i = (i + 1/2) dr`` (cell-centred, no node on the axis) and
  ``z_j = -z_len/2 + j dz`` (periodic in z).
* Each field carries a parity tag describing its continuation across the
  axis, ``f(-r) = +f(r)`` (EVEN) or ``f(-r) = -f(r)`` (ODD).  Derivative
  stencils touching the axis use this to fill a single ghost cell.
* Integral norms are those of the axisymmetric extension to R^3, i.e. the
  midpoint rule with weight ``2 pi r dr dz``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class GridSizeError(ValueError):
    """Invalid grid dimensions."""


class ParityError(ValueError):
    """A field has the wrong axis parity for the requested operation."""


class Parity(enum.IntEnum):
    EVEN = 0
    ODD = 1

    @property
    def sign(self) -> float:
        return 1.0 if self is Parity.EVEN else -1.0

    def flip(self) -> "Parity":
        return Parity.ODD if self is Parity.EVEN else Parity.EVEN


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class CylGrid:
    Nr: int
    Nz: int
    r_max: float
    z_len: float

    def __post_init__(self):
        for name in ("Nr", "Nz"):
            v = getattr(self, name)
            if int(v) != v or v <= 0:
                raise GridSizeError(f"{name} must be a positive integer, got {v!r}")
        if not _is_power_of_two(int(self.Nz)):
            raise GridSizeError(f"Nz must be a power of two, got {self.Nz}")
        if not (self.r_max > 0 and self.z_len > 0):
            raise GridSizeError(
                f"r_max and z_len must be positive, got {self.r_max}, {self.z_len}"
            )

    @property
    def dr(self) -> float:
        return self.r_max / self.Nr

    @property
    def dz(self) -> float:
        return self.z_len / self.Nz

    @property
    def r(self) -> np.ndarray:
        return (np.arange(self.Nr) + 0.5) * self.dr

    @property
    def z(self) -> np.ndarray:
        return -0.5 * self.z_len + np.arange(self.Nz) * self.dz

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Nr, self.Nz)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(R, Z)`` arrays of shape ``(Nr, Nz)``."""
        return np.meshgrid(self.r, self.z, indexing="ij")

    @property
    def r_col(self) -> np.ndarray:
        """Radial nodes as a ``(Nr, 1)`` column for broadcasting."""
        return self.r[:, None]

    def refine(self, factor: int = 2) -> "CylGrid":
        return CylGrid(self.Nr * factor, self.Nz * factor, self.r_max, self.z_len)


def make_grid(Nr: int, Nz: int, r_max: float, z_len: float) -> CylGrid:
    """Build a cell-centred meridian grid; see :class:`CylGrid`."""
    return CylGrid(Nr, Nz, float(r_max), float(z_len))


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: CylGrid
    parity: Parity
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        # C order always: reductions must not depend on where the data came from
        v = np.array(self.values, dtype=np.float64, copy=True, order="C")
        if v.shape != self.grid.shape:
            raise GridSizeError(
                f"values shape {v.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "parity", Parity(self.parity))

    def with_values(self, values: np.ndarray, parity: Parity | None = None) -> "ScalarField":
        return ScalarField(self.grid, self.parity if parity is None else parity, values)

    def times_r(self) -> "ScalarField":
        """``r * f``; flips parity."""
        return ScalarField(self.grid, self.parity.flip(), self.values * self.grid.r_col)

    def over_r(self) -> "ScalarField":
        """``f / r``; flips parity."""
        return ScalarField(self.grid, self.parity.flip(), self.values / self.grid.r_col)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        _check_same(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        _check_same(self, other)
        return self.with_values(self.values - other.values)

    def scaled(self, a: float) -> "ScalarField":
        return self.with_values(a * self.values)


def _check_same(a: ScalarField, b: ScalarField) -> None:
    if a.grid != b.grid:
        raise GridSizeError("fields live on different grids")
    if a.parity != b.parity:
        raise ParityError(f"parity mismatch: {a.parity.name} vs {b.parity.name}")


def zeros(grid: CylGrid, parity: Parity) -> ScalarField:
    return ScalarField(grid, parity, np.zeros(grid.shape))


def sample(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    grid: CylGrid,
    parity: Parity,
) -> ScalarField:
    """Evaluate ``f(r, z)`` at every node."""
    R, Z = grid.mesh()
    with np.errstate(all="ignore"):
        v = np.broadcast_to(np.asarray(f(R, Z), dtype=np.float64), grid.shape)
    bad = ~np.isfinite(v)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise ValueError(
            f"non-finite sample {v[i, j]!r} at node (i={i}, j={j}), "
            f"r={grid.r[i]:.6g}, z={grid.z[j]:.6g}"
        )
    return ScalarField(grid, parity, v)


# ---------------------------------------------------------------------------
# derivatives
# ---------------------------------------------------------------------------


def ddr_array(v: np.ndarray, parity: Parity, dr: float) -> np.ndarray:
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * dr)
    ghost = parity.sign * v[0]
    out[0] = (v[1] - ghost) / (2.0 * dr)
    # one-sided second order at the outer row
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * dr)
    return out


def ddz_array(v: np.ndarray, dz: float) -> np.ndarray:
    return (np.roll(v, -1, axis=1) - np.roll(v, 1, axis=1)) / (2.0 * dz)


def ddr(f: ScalarField) -> ScalarField:
    """Radial derivative; the result has the opposite parity."""
    if f.grid.Nr < 3:
        raise GridSizeError("ddr needs at least 3 radial cells")
    return ScalarField(f.grid, f.parity.flip(), ddr_array(f.values, f.parity, f.grid.dr))


def ddz(f: ScalarField) -> ScalarField:
    """Axial derivative with periodic wrap; parity is preserved."""
    return ScalarField(f.grid, f.parity, ddz_array(f.values, f.grid.dz))


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

SUPPORTED_P = (2, 4, 6)


def _as_array(f) -> tuple[np.ndarray, CylGrid]:
    if isinstance(f, ScalarField):
        return f.values, f.grid
    raise TypeError(f"expected ScalarField, got {type(f).__name__}")


def weights(grid: CylGrid) -> np.ndarray:
    """Midpoint quadrature weights ``2 pi r dr dz`` as an ``(Nr, 1)`` column."""
    return 2.0 * np.pi * grid.r_col * grid.dr * grid.dz


def lp_norm_array(v: np.ndarray, grid: CylGrid, p: int) -> float:
    if p not in SUPPORTED_P:
        raise ValueError(f"unsupported p={p!r}; use one of {SUPPORTED_P} or linf_norm")
    a = np.abs(v)
    if p == 2:
        s = np.sum(a * a * weights(grid))
    else:
        s = np.sum(a**p * weights(grid))
    return float(s ** (1.0 / p))


def lp_norm(f: ScalarField, p: int) -> float:
    """L^p(R^3) norm of the axisymmetric extension, p in {2, 4, 6}."""
    v, grid = _as_array(f)
    return lp_norm_array(v, grid, p)


def linf_norm(f: ScalarField) -> float:
    v, _ = _as_array(f)
    return float(np.max(np.abs(v))) if v.size else 0.0


def divergence(ur: ScalarField, uz: ScalarField) -> ScalarField:
    """``d_r u^r + u^r / r + d_z u^z`` (Even result)."""
    if ur.parity is not Parity.ODD or uz.parity is not Parity.EVEN:
        raise ParityError(
            f"divergence expects (ODD, EVEN) components, got "
            f"({ur.parity.name}, {uz.parity.name})"
        )
    if ur.grid != uz.grid:
        raise GridSizeError("components live on different grids")
    g = ur.grid
    v = ddr_array(ur.values, ur.parity, g.dr) + ur.values / g.r_col + ddz_array(uz.values, g.dz)
    return ScalarField(g, Parity.EVEN, v)
