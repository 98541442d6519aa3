"""
Dyadic frequency decomposition of axisymmetric fields embedded in a periodic box.

Meridian fields are sampled onto a Cartesian box
``[-r_max, r_max)^2 x [-z_len/2, z_len/2)`` with ``N`` points per axis and
transformed with a real FFT.  Lattice frequencies are ``xi = 2 pi k / L``
per axis.  Blocks are Fourier multipliers

    Delta_{-1} = chi(D),   Delta_q = phi(2^-q D) = chi(2^-(q+1) D) - chi(2^-q D),

where ``chi(xi) = S(|xi|)`` and ``S`` is a quintic smoothstep ramp equal to
one on ``[0, 3/4]`` and zero on ``[4/3, inf)``.  With this choice
``supp phi`` lies in the ring ``3/4 <= |xi| <= 8/3`` and the partition
telescopes exactly.

The periodic q = -1 block stands in for ``chi(D)`` on R^3; the low-frequency
gap between periodic and whole-space norms is not quantified.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .grid_fields import Parity, ParityError, ScalarField
from .interp import interpolate

INNER = 0.75
OUTER = 4.0 / 3.0
P_VALUES = (2, 4, 6, math.inf)
R_VALUES = (1, 2, math.inf)


class Component(enum.Enum):
    SCALAR = "scalar"
    THETA_VECTOR = "theta-vector"
    MERIDIAN_VECTOR = "meridian-vector"


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class CartesianField3D:
    """Real field on the periodic box; ``values`` has shape ``(ncomp, N, N, N)``."""

    values: np.ndarray = field(repr=False)
    lengths: tuple[float, float, float]
    component: Component = Component.SCALAR

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 3:
            v = v[None]
        if v.ndim != 4 or not (v.shape[1] == v.shape[2] == v.shape[3]):
            raise ValueError(f"expected (ncomp, N, N, N) values, got shape {v.shape}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "lengths", tuple(float(x) for x in self.lengths))

    @property
    def N(self) -> int:
        return self.values.shape[1]

    @property
    def ncomp(self) -> int:
        return self.values.shape[0]

    @property
    def cell_volume(self) -> float:
        Lx, Ly, Lz = self.lengths
        return Lx * Ly * Lz / self.N**3

    def with_values(self, values: np.ndarray) -> "CartesianField3D":
        return CartesianField3D(values, self.lengths, self.component)

    def magnitude(self) -> np.ndarray:
        if self.ncomp == 1:
            return np.abs(self.values[0])
        return np.sqrt(np.sum(self.values**2, axis=0))

    def __add__(self, other: "CartesianField3D") -> "CartesianField3D":
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "CartesianField3D") -> "CartesianField3D":
        return self.with_values(self.values - other.values)


def box_lp_norm(f: CartesianField3D | np.ndarray, p: float, cell_volume: float | None = None) -> float:
    """Box-quadrature L^p norm of a field (Euclidean magnitude for vectors)."""
    if isinstance(f, CartesianField3D):
        a = f.magnitude()
        h3 = f.cell_volume
    else:
        a = np.abs(f)
        h3 = cell_volume
    if p == math.inf:
        return float(a.max()) if a.size else 0.0
    if p not in (1, 2, 4, 6):
        raise ValueError(f"unsupported p={p!r}")
    return float((np.sum(a**p) * h3) ** (1.0 / p))


# ---------------------------------------------------------------------------
# lattice
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lattice:
    N: int
    lengths: tuple[float, float, float]

    @property
    def kx(self) -> np.ndarray:
        return _freqs(self.N, self.lengths[0], False)[:, None, None]

    @property
    def ky(self) -> np.ndarray:
        return _freqs(self.N, self.lengths[1], False)[None, :, None]

    @property
    def kz(self) -> np.ndarray:
        return _freqs(self.N, self.lengths[2], True)[None, None, :]

    @property
    def absxi(self) -> np.ndarray:
        return _absxi(self.N, self.lengths)

    @property
    def max_absxi(self) -> float:
        return float(self.absxi.max())

    @property
    def min_nonzero_absxi(self) -> float:
        a = self.absxi
        return float(a[a > 0].min())

    def derivative_multipliers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``i xi`` per axis with the Nyquist planes removed."""
        out = []
        for k in (self.kx, self.ky, self.kz):
            k = k.copy()
            if self.N % 2 == 0:
                k.reshape(-1)[self.N // 2] = 0.0
            out.append(1j * k)
        return tuple(out)


@lru_cache(maxsize=16)
def _freqs(N: int, L: float, half: bool) -> np.ndarray:
    d = L / N
    f = np.fft.rfftfreq(N, d) if half else np.fft.fftfreq(N, d)
    return 2.0 * np.pi * f


@lru_cache(maxsize=8)
def _absxi(N: int, lengths: tuple[float, float, float]) -> np.ndarray:
    kx = _freqs(N, lengths[0], False)[:, None, None]
    ky = _freqs(N, lengths[1], False)[None, :, None]
    kz = _freqs(N, lengths[2], True)[None, None, :]
    a = np.sqrt(kx**2 + ky**2 + kz**2)
    a.flags.writeable = False
    return a


def lattice_of(f: CartesianField3D) -> Lattice:
    return Lattice(f.N, f.lengths)


def _fft(f: CartesianField3D) -> np.ndarray:
    return np.fft.rfftn(f.values, axes=(1, 2, 3))


def _ifft(fh: np.ndarray, N: int) -> np.ndarray:
    return np.fft.irfftn(fh, s=(N, N, N), axes=(1, 2, 3))


def apply_multiplier(f: CartesianField3D, m: np.ndarray) -> CartesianField3D:
    return f.with_values(_ifft(_fft(f) * m[None], f.N))


# ---------------------------------------------------------------------------
# filters
# ---------------------------------------------------------------------------


def smoothstep_profile(s: np.ndarray) -> np.ndarray:
    """``S(s)``: 1 for s <= 3/4, 0 for s >= 4/3, quintic smoothstep between."""
    t = np.clip((np.asarray(s, float) - INNER) / (OUTER - INNER), 0.0, 1.0)
    return 1.0 - t * t * t * (t * (6.0 * t - 15.0) + 10.0)


@dataclass(frozen=True)
class DyadicFilterBank:
    """Littlewood-Paley filters ``chi`` and ``phi(2^-q .)`` for ``-1 <= q <= q_max``.

    ``profile`` may be replaced (e.g. by a deliberately broken ramp in
    self-tests); it must map ``|xi|`` to ``[0, 1]``.
    """

    q_max: int
    profile: Callable[[np.ndarray], np.ndarray] = smoothstep_profile

    def chi(self, absxi: np.ndarray) -> np.ndarray:
        return self.profile(absxi)

    def phi(self, absxi: np.ndarray, q: int) -> np.ndarray:
        """``phi(2^-q xi) = chi(2^-(q+1) xi) - chi(2^-q xi)``."""
        return self.chi(absxi * 2.0 ** (-(q + 1))) - self.chi(absxi * 2.0 ** (-q))

    def block(self, absxi: np.ndarray, q: int) -> np.ndarray:
        return self.chi(absxi) if q == -1 else self.phi(absxi, q)

    @property
    def qs(self) -> range:
        return range(-1, self.q_max + 1)

    def partition(self, absxi: np.ndarray) -> np.ndarray:
        total = self.chi(absxi).copy()
        for q in range(self.q_max + 1):
            total += self.phi(absxi, q)
        return total


def covering_q_max(lattice: Lattice) -> int:
    """Smallest ``q_max`` whose blocks cover every lattice frequency."""
    # chi(2^-(Q+1) xi) == 1 needs |xi| <= (3/4) 2^(Q+1)
    need = lattice.max_absxi / INNER
    return max(0, int(math.ceil(math.log2(need))) - 1) if need > 1 else 0


def filter_bank_for(f: CartesianField3D, q_max: int | None = None) -> DyadicFilterBank:
    lat = lattice_of(f)
    top = covering_q_max(lat)
    if q_max is None:
        q_max = top
    if q_max > top:
        raise ValueError(
            f"q_max={q_max} exceeds the lattice: blocks above q={top} are empty "
            f"(N={f.N}, max |xi|={lat.max_absxi:.4g})"
        )
    return DyadicFilterBank(q_max)


# ---------------------------------------------------------------------------
# embedding
# ---------------------------------------------------------------------------

_EMBED_METHODS = {"bilinear": "linear", "cubic": "cubic"}


def box_coordinates(N: int, r_max: float, z_len: float):
    x = -r_max + np.arange(N) * (2.0 * r_max / N)
    z = -0.5 * z_len + np.arange(N) * (z_len / N)
    return x, x.copy(), z


def embed_axisym(
    fields: ScalarField | Sequence[ScalarField],
    component: Component | str,
    N: int = 64,
    method: str = "bilinear",
) -> CartesianField3D:
    """Sample meridian fields onto the periodic 3D box.

    Parameters
    ----------
    fields : ScalarField or sequence of ScalarField
        One field for SCALAR and THETA_VECTOR (the ODD ``B^theta``-type
        component), ``(u^r, u^z)`` for MERIDIAN_VECTOR.
    component : Component or str
    N : int
        Box resolution per axis (power of two).
    method : {"bilinear", "cubic"}
        Interpolation in the meridian plane.  Fields are taken as zero beyond
        ``r_max``.
    """
    if not _is_power_of_two(int(N)):
        raise ValueError(f"N must be a power of two, got {N}")
    component = Component(component)
    if isinstance(fields, ScalarField):
        fields = (fields,)
    fields = tuple(fields)
    imethod = _EMBED_METHODS[method]
    g = fields[0].grid
    x, y, z = box_coordinates(N, g.r_max, g.z_len)
    X = x[:, None, None]
    Y = y[None, :, None]
    Rxy = np.sqrt(X**2 + Y**2)
    Zq = z[None, None, :]
    lengths = (2.0 * g.r_max, 2.0 * g.r_max, g.z_len)

    def at_box(f: ScalarField) -> np.ndarray:
        return interpolate(f.values, f.parity, g, Rxy, Zq, imethod, outer="zero")

    with np.errstate(divide="ignore", invalid="ignore"):
        inv_r = np.where(Rxy > 0, 1.0 / Rxy, 0.0)
    if component is Component.SCALAR:
        if len(fields) != 1:
            raise ValueError("SCALAR embedding takes one field")
        vals = at_box(fields[0])[None]
    elif component is Component.THETA_VECTOR:
        if len(fields) != 1:
            raise ValueError("THETA_VECTOR embedding takes one field")
        b = fields[0]
        if b.parity is not Parity.ODD:
            raise ParityError("azimuthal component must be ODD")
        gr = at_box(b) * inv_r
        vals = np.stack([-gr * Y, gr * X, np.zeros_like(gr)])
    else:
        if len(fields) != 2:
            raise ValueError("MERIDIAN_VECTOR embedding takes (u^r, u^z)")
        ur, uz = fields
        if ur.parity is not Parity.ODD or uz.parity is not Parity.EVEN:
            raise ParityError("meridian vector expects (ODD, EVEN) components")
        gr = at_box(ur) * inv_r
        vals = np.stack([gr * X, gr * Y, at_box(uz)])
    vals = np.broadcast_to(vals, (vals.shape[0], N, N, N))
    return CartesianField3D(np.ascontiguousarray(vals), lengths, component)


# ---------------------------------------------------------------------------
# decomposition and norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DyadicDecomposition:
    blocks: dict[int, CartesianField3D]
    bank: DyadicFilterBank | None
    source_l2: float
    homogeneous: bool = False

    @property
    def qs(self) -> list[int]:
        return sorted(self.blocks)

    def reconstruct(self) -> CartesianField3D:
        qs = self.qs
        acc = self.blocks[qs[0]].values.copy()
        for q in qs[1:]:
            acc += self.blocks[q].values
        return self.blocks[qs[0]].with_values(acc)

    def block_norms(self, p: float) -> dict[int, float]:
        return {q: box_lp_norm(b, p) for q, b in self.blocks.items()}


def decompose(
    f: CartesianField3D,
    bank: DyadicFilterBank | None = None,
    homogeneous: bool = False,
) -> DyadicDecomposition:
    """Split ``f`` into Littlewood-Paley blocks.

    With ``homogeneous=True`` the blocks are ``phi(2^-q D)`` for every dyadic
    shell representable on the lattice (negative q included) and the zero
    mode is dropped.
    """
    lat = lattice_of(f)
    top = covering_q_max(lat)
    if bank is None:
        bank = DyadicFilterBank(top)
    elif bank.q_max > top:
        raise ValueError(
            f"q_max={bank.q_max} exceeds the lattice: blocks above q={top} are empty"
        )
    fh = _fft(f)
    absxi = lat.absxi
    blocks: dict[int, CartesianField3D] = {}
    if homogeneous:
        q_lo = int(math.floor(math.log2(INNER * lat.min_nonzero_absxi)))
        for q in range(q_lo, bank.q_max + 1):
            blocks[q] = f.with_values(_ifft(fh * bank.phi(absxi, q)[None], f.N))
    else:
        for q in bank.qs:
            blocks[q] = f.with_values(_ifft(fh * bank.block(absxi, q)[None], f.N))
    return DyadicDecomposition(blocks, bank, box_lp_norm(f, 2), homogeneous)


def _check_indices(p, r):
    if p not in P_VALUES:
        raise ValueError(f"unsupported p={p!r}; expected one of {P_VALUES}")
    if r not in R_VALUES:
        raise ValueError(f"unsupported r={r!r}; expected one of {R_VALUES}")


def _ell_r(a: np.ndarray, r: float) -> float:
    if a.size == 0:
        return 0.0
    if r == math.inf:
        return float(np.max(np.abs(a)))
    return float(np.sum(np.abs(a) ** r) ** (1.0 / r))


def besov_norm(decomp: DyadicDecomposition, s: float, p: float, r: float) -> float:
    """``|| (2^{qs} ||Delta_q u||_{L^p})_q ||_{l^r}``."""
    _check_indices(p, r)
    qs = decomp.qs
    seq = np.array([2.0 ** (q * s) * box_lp_norm(decomp.blocks[q], p) for q in qs])
    return _ell_r(seq, r)


def _time_norm(values: np.ndarray, times: np.ndarray, lam: float) -> float:
    if lam == math.inf:
        return float(np.max(values))
    if lam == 1:
        return float(np.trapezoid(values, times))
    if lam == 2:
        return float(np.sqrt(np.trapezoid(values**2, times)))
    raise ValueError(f"unsupported lambda={lam!r}")


def chemin_lerner_norm(
    snapshots: Sequence[DyadicDecomposition],
    times: Sequence[float],
    s: float,
    p: float,
    r: float,
    lam: float,
) -> float:
    """Chemin-Lerner norm: time L^lambda per block first, then weighted l^r."""
    _check_indices(p, r)
    if len(snapshots) == 0:
        raise ValueError("empty snapshot series")
    if len(snapshots) != len(times):
        raise ValueError("snapshots and times differ in length")
    if lam != math.inf and len(snapshots) < 2:
        raise ValueError("time quadrature needs at least two snapshots")
    t = np.asarray(times, float)
    qs = snapshots[0].qs
    seq = []
    for q in qs:
        a = np.array([box_lp_norm(d.blocks[q], p) for d in snapshots])
        seq.append(2.0 ** (q * s) * _time_norm(a, t, lam))
    return _ell_r(np.array(seq), r)


# ---------------------------------------------------------------------------
# multipliers
# ---------------------------------------------------------------------------


def fractional_laplacian(f: CartesianField3D, s: float) -> CartesianField3D:
    """``(-Delta)^{s/2}``: the multiplier ``|xi|^s``; zero mode dropped for s < 0."""
    if not -2.0 <= s <= 2.0:
        raise ValueError(f"s must lie in [-2, 2], got {s}")
    if s == 0:
        return f.with_values(f.values.copy())
    a = lattice_of(f).absxi
    with np.errstate(divide="ignore"):
        m = np.where(a > 0, a**s, 0.0)
    return apply_multiplier(f, m)


def heat_propagate(f: CartesianField3D, t: float) -> CartesianField3D:
    """``e^{t Delta} f``."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if t == 0:
        return f.with_values(f.values.copy())
    a = lattice_of(f).absxi
    return apply_multiplier(f, np.exp(-t * a * a))


def gradient(f: CartesianField3D) -> np.ndarray:
    """Spectral gradient; shape ``(ncomp, 3, N, N, N)``."""
    fh = _fft(f)
    out = np.empty((f.ncomp, 3) + f.values.shape[1:])
    for a, m in enumerate(lattice_of(f).derivative_multipliers()):
        out[:, a] = _ifft(fh * m[None], f.N)
    return out


def gradient_magnitude(f: CartesianField3D) -> np.ndarray:
    g = gradient(f)
    return np.sqrt(np.sum(g**2, axis=(0, 1)))


def curl(f: CartesianField3D) -> CartesianField3D:
    if f.ncomp != 3:
        raise ValueError("curl needs a 3-component field")
    g = gradient(f)  # g[i, a] = d_a f_i
    c = np.stack([g[2, 1] - g[1, 2], g[0, 2] - g[2, 0], g[1, 0] - g[0, 1]])
    return CartesianField3D(c, f.lengths, f.component)


def cross(a: CartesianField3D, b: CartesianField3D) -> CartesianField3D:
    u, v = a.values, b.values
    c = np.stack(
        [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
    )
    return CartesianField3D(c, a.lengths, a.component)


# ---------------------------------------------------------------------------
# Bernstein and tame-estimate probes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BernsteinReport:
    q: int
    a: float
    b: float
    gradient_ratio: float  # R1
    integrability_ratio: float  # R2


def bernstein_report(decomp: DyadicDecomposition, q: int, a: float = 2, b: float = 2) -> BernsteinReport:
    """Ratios ``||grad Delta_q u||_a / (2^q ||Delta_q u||_a)`` and
    ``||Delta_q u||_b / (2^{3q(1/a - 1/b)} ||Delta_q u||_a)``."""
    if q < 0:
        raise ValueError("Bernstein ratios are defined for q >= 0")
    if a not in (2, math.inf) or b not in (2, math.inf) or a > b:
        raise ValueError(f"need a <= b in {{2, inf}}, got a={a}, b={b}")
    blk = decomp.blocks[q]
    na = box_lp_norm(blk, a)
    if na == 0.0:
        raise ValueError(f"block q={q} is zero")
    grad = gradient_magnitude(blk)
    r1 = box_lp_norm(grad, a, blk.cell_volume) / (2.0**q * na)
    inv_a = 0.0 if a == math.inf else 1.0 / a
    inv_b = 0.0 if b == math.inf else 1.0 / b
    r2 = box_lp_norm(blk, b) / (2.0 ** (3 * q * (inv_a - inv_b)) * na)
    return BernsteinReport(q, a, b, r1, r2)


def tame_ratio(f: CartesianField3D, g: CartesianField3D, s: float = 1.5, p: float = 2, r: float = 1) -> float:
    """``||fg||_B / (||f||_inf ||g||_B + ||g||_inf ||f||_B)`` for scalar fields."""
    fg = f.with_values(f.values * g.values)
    lhs = besov_norm(decompose(fg), s, p, r)
    bf = besov_norm(decompose(f), s, p, r)
    bg = besov_norm(decompose(g), s, p, r)
    rhs = box_lp_norm(f, math.inf) * bg + box_lp_norm(g, math.inf) * bf
    if rhs == 0.0:
        raise ValueError("tame-estimate denominator vanishes")
    return lhs / rhs
