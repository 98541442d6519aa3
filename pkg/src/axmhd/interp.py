"""Tensor-product interpolation of meridian fields at arbitrary (r, z) points.

Radial continuation below the axis follows the field parity; beyond the
outer face the field is either held constant (transport) or set to zero
(embedding into a larger box).  z is periodic.
"""

from __future__ import annotations

import numpy as np

from .grid_fields import CylGrid, Parity

METHODS = ("linear", "cubic", "monotone-cubic")
_G = 2  # ghost rows on each radial side


def _padded(values: np.ndarray, parity: Parity, outer: str) -> np.ndarray:
    nr, nz = values.shape
    P = np.empty((nr + 2 * _G, nz))
    P[_G : _G + nr] = values
    P[_G - 1] = parity.sign * values[0]
    P[_G - 2] = parity.sign * values[1]
    if outer == "constant":
        P[_G + nr :] = values[-1]
    elif outer == "zero":
        P[_G + nr] = -values[-1]  # odd reflection about the Dirichlet face
        P[_G + nr + 1] = -values[-2]
    else:
        raise ValueError(f"unknown outer extension {outer!r}")
    return P


def _kernel4(f0, f1, f2, f3, t, method):
    if method == "cubic":
        return (
            -t * (t - 1) * (t - 2) / 6.0 * f0
            + (t + 1) * (t - 1) * (t - 2) / 2.0 * f1
            - (t + 1) * t * (t - 2) / 2.0 * f2
            + (t + 1) * t * (t - 1) / 6.0 * f3
        )
    # Cubic limited to the bracket [f1, f2] widened by the local curvature.
    # A smooth extremum between f1 and f2 rises at most |f''| h^2 / 8 above
    # the bracket, so smooth peaks keep full order while oscillations near
    # steep gradients are cut back.  Global bounds are enforced by the caller.
    v = _kernel4(f0, f1, f2, f3, t, "cubic")
    slack = np.maximum(np.abs(f0 - 2.0 * f1 + f2), np.abs(f1 - 2.0 * f2 + f3)) * 0.125
    lo = np.minimum(f1, f2) - slack
    hi = np.maximum(f1, f2) + slack
    return np.clip(v, lo, hi)


def interpolate(
    values: np.ndarray,
    parity: Parity,
    grid: CylGrid,
    rq: np.ndarray,
    zq: np.ndarray,
    method: str = "monotone-cubic",
    outer: str = "constant",
) -> np.ndarray:
    """Interpolate an ``(Nr, Nz)`` array at query points ``(rq, zq)``.

    Query radii may be negative (parity continuation).  Returns an array with
    the broadcast shape of ``rq`` and ``zq``.
    """
    if method not in METHODS:
        raise ValueError(f"unknown interpolation method {method!r}")
    rq, zq = np.broadcast_arrays(np.asarray(rq, float), np.asarray(zq, float))
    nr, nz = values.shape
    sign = np.where(rq < 0, parity.sign, 1.0)
    ra = np.abs(rq)
    s = ra / grid.dr - 0.5
    if outer == "constant":
        s = np.minimum(s, nr - 1.0)
    else:
        outside = ra >= grid.r_max
        s = np.minimum(s, nr - 0.5)
    i = np.floor(s).astype(np.intp)
    tr = s - i
    tz_full = (zq + 0.5 * grid.z_len) / grid.dz
    j = np.floor(tz_full).astype(np.intp)
    tz = tz_full - j
    j = np.mod(j, nz)
    P = _padded(values, parity, outer)
    ip = i + _G

    if method == "linear":
        j1 = np.mod(j + 1, nz)
        a = P[ip, j] * (1 - tz) + P[ip, j1] * tz
        b = P[ip + 1, j] * (1 - tz) + P[ip + 1, j1] * tz
        out = a * (1 - tr) + b * tr
    else:
        jm = [np.mod(j + k, nz) for k in (-1, 0, 1, 2)]
        rows = []
        for di in (-1, 0, 1, 2):
            row = ip + di
            rows.append(
                _kernel4(P[row, jm[0]], P[row, jm[1]], P[row, jm[2]], P[row, jm[3]], tz, method)
            )
        out = _kernel4(rows[0], rows[1], rows[2], rows[3], tr, method)
    out = sign * out
    if outer == "zero":
        out = np.where(outside, 0.0, out)
    return out
