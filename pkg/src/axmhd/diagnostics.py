"""
Norm monitors and runtime checks of the a priori estimates.

Every monitored quantity is an L^p(R^3) norm of the axisymmetric extension
(see :func:`axmhd.grid_fields.lp_norm`).  Vector norms are assembled from
meridian components, e.g.

    |grad u|^2 = (d_r u^r)^2 + (d_z u^r)^2 + (d_r u^z)^2 + (d_z u^z)^2 + (u^r/r)^2
    |grad B|^2 = (d_r B^theta)^2 + (d_z B^theta)^2 + Pi^2
    ||grad omega||^2 = ||grad omega^theta||^2 + ||omega^theta / r||^2

Generic constants are never asserted; they are fitted and reported.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from . import littlewood_paley as lp
from .elliptic import FlowField, apply_operator
from .evolve import State
from .grid_fields import (
    CylGrid,
    Parity,
    ScalarField,
    ddr_array,
    ddz_array,
    lp_norm_array,
    weights,
)

# engineering defaults; callers may override
IDENTITY_TOL = 2e-2
DUAL_PATH_TOL = 5e-2
OMEGA_SLACK_TOL = 5e-2
ENERGY_TOL = 2e-2
REFINEMENT_FACTOR = 0.6
BESOV_P = 6
BESOV_S = 1.0 + 3.0 / BESOV_P
H_EPS = 0.5  # the epsilon of H^{2-eps}


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------


@dataclass
class CumulativeIntegrals:
    """Trapezoid-in-time integrals accumulated once per time step."""

    int_grad_u_Linf: float = 0.0
    int_ur_over_r_Linf: float = 0.0
    int_grad_Omega_L2_sq: float = 0.0
    int_grad_u_L2_sq: float = 0.0
    int_grad_omega_L2_sq: float = 0.0
    int_axis_term: float = 0.0
    last_t: float | None = None
    last_values: tuple[float, ...] | None = None

    INTEGRANDS = (
        "grad_u_Linf",
        "ur_over_r_Linf",
        "grad_Omega_L2_sq",
        "grad_u_L2_sq",
        "grad_omega_L2_sq",
        "axis_term",
    )

    def observe(self, t: float, values: dict[str, float]) -> None:
        cur = tuple(values[k] for k in self.INTEGRANDS)
        if self.last_t is not None:
            h = t - self.last_t
            if h < 0:
                raise ValueError("time went backwards")
            for k, a, b in zip(self.INTEGRANDS, self.last_values, cur):
                name = "int_" + k
                setattr(self, name, getattr(self, name) + 0.5 * h * (a + b))
        self.last_t = t
        self.last_values = cur

    def to_json(self) -> dict:
        d = asdict(self)
        d["last_values"] = list(self.last_values) if self.last_values is not None else None
        return d

    @classmethod
    def from_json(cls, d: dict) -> "CumulativeIntegrals":
        d = dict(d)
        if d.get("last_values") is not None:
            d["last_values"] = tuple(d["last_values"])
        return cls(**d)


@dataclass(frozen=True)
class DiagnosticRecord:
    t: float
    u_L2: float
    grad_u_L2: float
    B_L2: float
    Pi_L2: float
    Pi_L4: float
    Pi_L6: float
    Pi_Linf: float
    Omega_L2: float
    grad_Omega_L2: float
    axis_term: float
    Btheta_L2: float
    Btheta_L6: float
    Btheta_Linf: float
    omega_L2: float
    grad_omega_L2: float
    omega_over_r_L2: float
    ur_over_r_Linf: float
    u_Linf: float
    grad_u_Linf: float
    grad_B_L2: float
    grad_B_L6: float
    grad_Pi_L2: float
    grad2_B_L2: float
    besov_u: float
    grad_u_H32: float
    int_grad_u_Linf: float
    int_ur_over_r_Linf: float
    int_grad_Omega_L2_sq: float
    int_grad_u_L2_sq: float
    int_grad_omega_L2_sq: float
    int_axis_term: float

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in self.keys()}


def _l2sq(v: np.ndarray, w: np.ndarray) -> float:
    return float(np.sum(v * v * w))


def axis_values(Omega: np.ndarray, grid: CylGrid) -> np.ndarray:
    """Even quadratic extrapolation ``a + b r^2`` from the first two radial nodes."""
    r0, r1 = grid.r[0], grid.r[1]
    return (r1**2 * Omega[0] - r0**2 * Omega[1]) / (r1**2 - r0**2)


def instantaneous(state: State, flow: FlowField) -> dict[str, float]:
    """Norms needed every step (integrands of the cumulative integrals)."""
    g = state.grid
    w = weights(g)
    dr, dz = g.dr, g.dz
    ur, uz = flow.ur.values, flow.uz.values
    urr = flow.ur_over_r.values
    G2 = (
        ddr_array(ur, Parity.ODD, dr) ** 2
        + ddz_array(ur, dz) ** 2
        + ddr_array(uz, Parity.EVEN, dr) ** 2
        + ddz_array(uz, dz) ** 2
        + urr**2
    )
    Om = state.Omega.values
    gO2 = ddr_array(Om, Parity.EVEN, dr) ** 2 + ddz_array(Om, dz) ** 2
    om = Om * g.r_col
    go2 = ddr_array(om, Parity.ODD, dr) ** 2 + ddz_array(om, dz) ** 2
    ax = axis_values(Om, g)
    return {
        "grad_u_Linf": float(np.sqrt(G2.max())),
        "ur_over_r_Linf": float(np.abs(urr).max()),
        "grad_Omega_L2_sq": float(np.sum(gO2 * w)),
        "grad_u_L2_sq": float(np.sum(G2 * w)),
        "grad_omega_L2_sq": float(np.sum(go2 * w)) + _l2sq(Om, w),
        "axis_term": float(np.sum(ax * ax) * dz),
    }


def box_velocity(flow: FlowField, N: int) -> lp.CartesianField3D:
    return lp.embed_axisym((flow.ur, flow.uz), lp.Component.MERIDIAN_VECTOR, N, method="cubic")


def grad_h_norm(u3: lp.CartesianField3D, s: float) -> float:
    """``|| grad u ||_{H^s}`` on the box."""
    a = lp.lattice_of(u3).absxi
    J = lp.apply_multiplier(u3, (1.0 + a * a) ** (0.5 * s))
    return lp.box_lp_norm(lp.gradient_magnitude(J), 2, u3.cell_volume)


def record(
    state: State,
    flow: FlowField,
    integrals: CumulativeIntegrals | None = None,
    box_N: int | None = 64,
) -> DiagnosticRecord:
    """Sample every monitored norm at the current time.

    ``box_N=None`` skips the box-based Besov and H^{3/2} monitors (reported as 0).
    """
    g = state.grid
    w = weights(g)
    dr, dz = g.dr, g.dz
    inst = instantaneous(state, flow)
    Pi = state.Pi.values
    Om = state.Omega.values
    b = Pi * g.r_col
    om = Om * g.r_col
    ur, uz = flow.ur.values, flow.uz.values

    def lp_(v, p):
        return lp_norm_array(v, g, p)

    gB2 = ddr_array(b, Parity.ODD, dr) ** 2 + ddz_array(b, dz) ** 2 + Pi**2
    gPi2 = ddr_array(Pi, Parity.EVEN, dr) ** 2 + ddz_array(Pi, dz) ** 2
    # ||grad^2 B|| = ||(Delta - 1/r^2) B^theta|| = ||r L_3 Pi||
    lapB = g.r_col * apply_operator(Pi, g, 3.0, 0.0, Parity.EVEN)

    if box_N is not None and (np.any(ur) or np.any(uz)):
        u3 = box_velocity(flow, box_N)
        besov = lp.besov_norm(lp.decompose(u3), BESOV_S, BESOV_P, 1)
        h32 = grad_h_norm(u3, 2.0 - H_EPS)
    else:
        besov = 0.0
        h32 = 0.0

    I = integrals if integrals is not None else CumulativeIntegrals()
    return DiagnosticRecord(
        t=float(state.t),
        u_L2=math.sqrt(_l2sq(ur, w) + _l2sq(uz, w)),
        grad_u_L2=math.sqrt(inst["grad_u_L2_sq"]),
        B_L2=lp_(b, 2),
        Pi_L2=lp_(Pi, 2),
        Pi_L4=lp_(Pi, 4),
        Pi_L6=lp_(Pi, 6),
        Pi_Linf=float(np.abs(Pi).max()),
        Omega_L2=lp_(Om, 2),
        grad_Omega_L2=math.sqrt(inst["grad_Omega_L2_sq"]),
        axis_term=inst["axis_term"],
        Btheta_L2=lp_(b, 2),
        Btheta_L6=lp_(b, 6),
        Btheta_Linf=float(np.abs(b).max()),
        omega_L2=lp_(om, 2),
        grad_omega_L2=math.sqrt(inst["grad_omega_L2_sq"]),
        omega_over_r_L2=lp_(Om, 2),
        ur_over_r_Linf=inst["ur_over_r_Linf"],
        u_Linf=float(np.sqrt(ur * ur + uz * uz).max()),
        grad_u_Linf=inst["grad_u_Linf"],
        grad_B_L2=math.sqrt(float(np.sum(gB2 * w))),
        grad_B_L6=float(np.sum(gB2**3 * w) ** (1.0 / 6.0)),
        grad_Pi_L2=math.sqrt(float(np.sum(gPi2 * w))),
        grad2_B_L2=lp_(lapB, 2),
        besov_u=float(besov),
        grad_u_H32=float(h32),
        int_grad_u_Linf=I.int_grad_u_Linf,
        int_ur_over_r_Linf=I.int_ur_over_r_Linf,
        int_grad_Omega_L2_sq=I.int_grad_Omega_L2_sq,
        int_grad_u_L2_sq=I.int_grad_u_L2_sq,
        int_grad_omega_L2_sq=I.int_grad_omega_L2_sq,
        int_axis_term=I.int_axis_term,
    )


class Monitor:
    """Accumulates per-step integrals and emits records."""

    def __init__(self, box_N: int | None = 64, integrals: CumulativeIntegrals | None = None):
        self.box_N = box_N
        self.integrals = integrals if integrals is not None else CumulativeIntegrals()

    def observe(self, state: State, flow: FlowField) -> None:
        if self.integrals.last_t is not None and state.t == self.integrals.last_t:
            return
        self.integrals.observe(state.t, instantaneous(state, flow))

    def record(self, state: State, flow: FlowField) -> DiagnosticRecord:
        self.observe(state, flow)
        return record(state, flow, self.integrals, self.box_N)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class InequalityReport:
    """``lhs <= rhs`` with slack ``rhs - lhs``; satisfied iff slack >= -tolerance."""

    name: str
    lhs: float
    rhs: float
    tolerance: float = 0.0
    constant: float | None = None
    skipped: bool = False
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lhs = float(self.lhs)
        self.rhs = float(self.rhs)
        self.tolerance = float(self.tolerance)
        self.skipped = bool(self.skipped)
        if self.constant is not None:
            self.constant = float(self.constant)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def satisfied(self) -> bool:
        return bool(self.skipped or self.slack >= -self.tolerance)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "tolerance": self.tolerance,
            "satisfied": self.satisfied,
            "constant": self.constant,
            "skipped": self.skipped,
            "details": self.details,
        }


def _series(history: Sequence[DiagnosticRecord], key: str) -> np.ndarray:
    return np.array([getattr(r, key) for r in history], dtype=float)


def energy_balance(
    history: Sequence[DiagnosticRecord], nu: float = 1.0, tol: float = ENERGY_TOL
) -> InequalityReport:
    """Basic L^2 estimate ``|u|^2 + |B|^2 + int |grad u|^2 <= |u_0|^2 + |B_0|^2``.

    The inequality is checked at every record; the worst slack over the
    records after the first is reported.
    ``details['equality_residual']`` is the largest relative defect of the
    energy identity ``|u|^2 + |B|^2 + 2 nu int |grad u|^2 = |u_0|^2 + |B_0|^2``.
    """
    if len(history) < 2:
        raise ValueError("energy balance needs at least two records")
    E = _series(history, "u_L2") ** 2 + _series(history, "B_L2") ** 2
    D = _series(history, "int_grad_u_L2_sq")
    E0 = E[0]
    lhs = E + D
    worst = 1 + int(np.argmax(lhs[1:] - E0))
    scale = E0 if E0 > 0 else 1.0
    eq = (E + 2.0 * nu * D - E0) / scale
    k_eq = int(np.argmax(np.abs(eq)))
    return InequalityReport(
        "energy",
        float(lhs[worst]),
        float(E0),
        tolerance=tol * E0,
        details={
            "t_worst": history[worst].t,
            "equality_residual": float(abs(eq[k_eq])),
            "equality_residual_signed": float(eq[k_eq]),
            "t_equality_worst": history[k_eq].t,
        },
    )


def omega_inequality(
    history: Sequence[DiagnosticRecord], tol: float = OMEGA_SLACK_TOL
) -> InequalityReport:
    """Per-interval check of ``d/dt |Omega|^2 + |grad Omega|^2 + 4 pi A <= |Pi_0|_4^4``.

    On each record interval ``[t_k, t_{k+1}]`` the left side is
    ``Delta(|Omega|^2) + dt * mean(|grad Omega|^2 + 4 pi A)`` and the right side
    ``dt |Pi_0|_{L^4}^4``.  An interval passes when its slack is at least
    ``-tol`` times the magnitude of the balance terms.  The worst interval
    (most negative relative slack) is reported.
    """
    if len(history) < 2:
        raise ValueError("Omega inequality needs at least two records")
    t = _series(history, "t")
    O2 = _series(history, "Omega_L2") ** 2
    Dint = _series(history, "int_grad_Omega_L2_sq") + 4.0 * math.pi * _series(history, "int_axis_term")
    pi4 = history[0].Pi_L4 ** 4
    dt = np.diff(t)
    dO = np.diff(O2)
    diss = np.diff(Dint)
    lhs = dO + diss
    rhs = dt * pi4
    scale = rhs + np.abs(diss) + np.abs(dO)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(scale > 0, (rhs - lhs) / scale, 0.0)
    k = int(np.argmin(rel))
    # integrated form
    cum_lhs = O2[-1] + Dint[-1]
    cum_rhs = O2[0] + pi4 * (t[-1] - t[0])
    return InequalityReport(
        "omega_inequality",
        float(lhs[k]),
        float(rhs[k]),
        tolerance=float(tol * scale[k]),
        details={
            "interval": [float(t[k]), float(t[k + 1])],
            "worst_relative_slack": float(rel[k]),
            "intervals": int(len(dt)),
            "integrated_lhs": float(cum_lhs),
            "integrated_rhs": float(cum_rhs),
            "Pi0_L4_4": float(pi4),
        },
    )


@dataclass
class RatioReport:
    name: str
    value: float | None
    omitted: bool = False

    def as_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "omitted": self.omitted}


def _grad_l2(v: np.ndarray, parity: Parity, g: CylGrid) -> float:
    w = weights(g)
    return math.sqrt(_l2sq(ddr_array(v, parity, g.dr), w) + _l2sq(ddz_array(v, g.dz), w))


def biot_savart_ratios(flow: FlowField, omega_theta: ScalarField) -> tuple[RatioReport, RatioReport]:
    """Empirical constants of the velocity-vorticity interpolation inequalities

    ``|u|_inf <= C |omega^theta|_2^{1/2} |grad omega^theta|_2^{1/2}`` and
    ``|u^r/r|_inf <= C |Omega|_2^{1/2} |grad Omega|_2^{1/2}``.
    """
    g = omega_theta.grid
    om = omega_theta.values
    Om = om / g.r_col
    ur, uz = flow.ur.values, flow.uz.values
    u_inf = float(np.sqrt(ur * ur + uz * uz).max())
    urr_inf = float(np.abs(flow.ur_over_r.values).max())
    den_a = math.sqrt(lp_norm_array(om, g, 2) * _grad_l2(om, Parity.ODD, g))
    den_b = math.sqrt(lp_norm_array(Om, g, 2) * _grad_l2(Om, Parity.EVEN, g))
    ra = RatioReport("u_Linf", u_inf / den_a) if den_a > 0 else RatioReport("u_Linf", None, True)
    rb = (
        RatioReport("ur_over_r_Linf", urr_inf / den_b)
        if den_b > 0
        else RatioReport("ur_over_r_Linf", None, True)
    )
    return ra, rb


def grad_u_pointwise_sq(flow: FlowField) -> np.ndarray:
    g = flow.grid
    ur, uz = flow.ur.values, flow.uz.values
    return (
        ddr_array(ur, Parity.ODD, g.dr) ** 2
        + ddz_array(ur, g.dz) ** 2
        + ddr_array(uz, Parity.EVEN, g.dr) ** 2
        + ddz_array(uz, g.dz) ** 2
        + flow.ur_over_r.values ** 2
    )


def cz_check(
    flow: FlowField, omega_theta: ScalarField, tol: float = IDENTITY_TOL
) -> dict[int, InequalityReport]:
    """Calderon-Zygmund probe: ``||grad u||_p`` against ``||omega||_p``.

    p = 2 is an identity for divergence-free fields on R^3 and is asserted
    (relative defect <= tol); p = 4, 6 are reported as ratios only.
    """
    g = omega_theta.grid
    G = np.sqrt(grad_u_pointwise_sq(flow))
    om = omega_theta.values
    out: dict[int, InequalityReport] = {}
    w2 = lp_norm_array(om, g, 2)
    if w2 == 0.0:
        out[2] = InequalityReport("cz_l2_identity", 0.0, 0.0, tol, skipped=True)
    else:
        gu2 = lp_norm_array(G, g, 2)
        rel = abs(gu2 - w2) / w2
        out[2] = InequalityReport(
            "cz_l2_identity", rel, tol, 0.0, constant=gu2 / w2,
            details={"grad_u_L2": gu2, "omega_L2": w2},
        )
    for p in (4, 6):
        wp = lp_norm_array(om, g, p)
        gup = lp_norm_array(G, g, p)
        ratio = gup / wp if wp > 0 else None
        out[p] = InequalityReport(
            f"cz_l{p}_ratio", gup, wp, math.inf, constant=ratio, skipped=wp == 0.0
        )
    return out


# ---------------------------------------------------------------------------
# envelopes
# ---------------------------------------------------------------------------


@dataclass
class EnvelopeReport:
    name: str
    kind: str  # "power", "exp", "double-exp"
    C1: float
    C2: float
    covers_all: bool
    samples: int

    def as_dict(self) -> dict:
        return asdict(self)


def fit_power_envelope(t: np.ndarray, Q: np.ndarray, exponent: float = 1.25) -> tuple[float, bool]:
    """Minimal ``C >= 0`` with ``Q(t) <= C t^exponent`` at every sample with t > 0."""
    m = t > 0
    if not np.any(m):
        raise ValueError("no samples with t > 0")
    C = float(max(0.0, np.max(Q[m] / t[m] ** exponent)))
    covers = bool(np.all(Q[m] <= C * t[m] ** exponent * (1 + 1e-12) + 1e-300))
    return C, covers


def fit_exp_envelope(t: np.ndarray, Q: np.ndarray, exponent: float = 1.25) -> tuple[float, float, bool]:
    """``Q <= C1 exp(C2 t^exponent)``: C2 from a log-domain least-squares fit
    (clipped at 0), then the minimal covering C1."""
    s = t**exponent
    m = Q > 0
    if np.count_nonzero(m) >= 2 and np.ptp(s[m]) > 0:
        C2 = float(np.polyfit(s[m], np.log(Q[m]), 1)[0])
        C2 = max(C2, 0.0)
    else:
        C2 = 0.0
    C1 = float(max(0.0, np.max(Q / np.exp(C2 * s))))
    covers = bool(np.all(Q <= C1 * np.exp(C2 * s) * (1 + 1e-12)))
    return C1, C2, covers


def fit_double_exp_envelope(t: np.ndarray, Q: np.ndarray, exponent: float = 1.25) -> tuple[float, float, bool]:
    """``Q <= exp(C1 exp(C2 t^exponent))`` with the same two-stage fit applied
    to ``log Q``."""
    L = np.log(np.maximum(Q, np.finfo(float).tiny))
    L = np.maximum(L, 0.0)
    C1, C2, _ = fit_exp_envelope(t, L, exponent)
    covers = bool(np.all(Q <= np.exp(C1 * np.exp(C2 * t**exponent)) * (1 + 1e-12)))
    return C1, C2, covers


def growth_envelopes(history: Sequence[DiagnosticRecord]) -> dict[str, EnvelopeReport]:
    """Minimal envelopes for the growth bounds of the velocity and field.

    * ``int |u^r/r|_inf``                       vs ``C1 t^{5/4}``
    * ``|B^theta|_{L^p}``, p = 2, 6, inf         vs ``C1 exp(C2 t^{5/4})``
    * ``|omega|^2 + int |grad omega|^2``         vs ``C1 exp(C2 t^{5/4})``
    * ``int |grad u|_inf``                      vs ``C1 exp(C2 t^{5/4})``
    """
    if len(history) < 3 or sum(r.t > 0 for r in history) < 2:
        raise ValueError("envelope fits need at least three records with t > 0 samples")
    t = _series(history, "t")
    out: dict[str, EnvelopeReport] = {}
    C, cov = fit_power_envelope(t, _series(history, "int_ur_over_r_Linf"))
    out["int_ur_over_r_Linf"] = EnvelopeReport("int_ur_over_r_Linf", "power", C, 1.25, cov, len(t))
    exp_series = {
        "Btheta_L2": _series(history, "Btheta_L2"),
        "Btheta_L6": _series(history, "Btheta_L6"),
        "Btheta_Linf": _series(history, "Btheta_Linf"),
        "omega_energy": _series(history, "omega_L2") ** 2 + _series(history, "int_grad_omega_L2_sq"),
        "int_grad_u_Linf": _series(history, "int_grad_u_Linf"),
    }
    for name, Q in exp_series.items():
        C1, C2, cov = fit_exp_envelope(t, Q)
        out[name] = EnvelopeReport(name, "exp", C1, C2, cov, len(t))
    return out


def higher_norm_monitors(history: Sequence[DiagnosticRecord]) -> dict[str, EnvelopeReport]:
    """Doubly-exponential envelopes (report only) for the higher norms of B and u."""
    if len(history) < 2:
        raise ValueError("need at least two records")
    t = _series(history, "t")
    h32 = _series(history, "grad_u_H32")
    int_h32 = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (h32[1:] + h32[:-1]))])
    series = {
        "grad_B_L2": _series(history, "grad_B_L2"),
        "grad_B_L6": _series(history, "grad_B_L6"),
        "grad_Pi_L2": _series(history, "grad_Pi_L2"),
        "grad2_B_L2": _series(history, "grad2_B_L2"),
        "int_grad_u_H32": int_h32,
    }
    out = {}
    for name, Q in series.items():
        C1, C2, cov = fit_double_exp_envelope(t, Q)
        out[name] = EnvelopeReport(name, "double-exp", C1, C2, cov, len(t))
    return out


# ---------------------------------------------------------------------------
# Besov / Lipschitz and magnetic identity
# ---------------------------------------------------------------------------


@dataclass
class BesovLipReport:
    besov_time_integral: float
    lip_time_integral: float
    k_embed: float
    regression_ok: bool | None
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def besov_lip_from_series(
    times: Sequence[float],
    besov: Sequence[float],
    lip: Sequence[float],
    k_embed_baseline: float | None = None,
    regression_tol: float = 0.25,
) -> BesovLipReport:
    """As :func:`besov_lip_bound` from precomputed per-time values.

    For ``r = 1`` and a time-L^1 norm the Chemin-Lerner integral equals the
    time integral of the Besov norm, so the trapezoid rule is used directly.
    """
    t = np.asarray(times, float)
    bes = np.asarray(besov, float)
    lipv = np.asarray(lip, float)
    if not (len(t) == len(bes) == len(lipv)):
        raise ValueError("times and snapshots differ in length")
    if len(t) == 0:
        raise ValueError("no snapshots")
    if np.any(np.diff(t) <= 0):
        raise ValueError("snapshot times must be strictly increasing")
    bes_int = float(np.trapezoid(bes, t)) if len(t) >= 2 else 0.0
    lip_int = float(np.trapezoid(lipv, t)) if len(t) >= 2 else 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(bes > 0, lipv / np.where(bes > 0, bes, 1.0), 0.0)
    k = float(ratios.max())
    ok = None
    if k_embed_baseline is not None:
        ok = bool(k <= k_embed_baseline * (1.0 + regression_tol))
    return BesovLipReport(
        bes_int, lip_int, k, ok,
        details={"besov": bes.tolist(), "lip": lipv.tolist(), "times": t.tolist()},
    )


def besov_lip_bound(
    times: Sequence[float],
    snapshots: Sequence[lp.CartesianField3D],
    s: float = BESOV_S,
    p: float = BESOV_P,
    k_embed_baseline: float | None = None,
    regression_tol: float = 0.25,
) -> BesovLipReport:
    """Time integrals of ``|u|_{B^{1+3/p}_{p,1}}`` and ``|grad u|_inf`` on the box,
    and the empirical embedding constant ``max_t |grad u|_inf / |u|_B``.

    With a baseline the constant is asserted not to exceed it by more than
    ``regression_tol``; without one it is only reported.
    """
    if len(times) != len(snapshots):
        raise ValueError("times and snapshots differ in length")
    bes = [lp.besov_norm(lp.decompose(u), s, p, 1) for u in snapshots]
    lip = [float(lp.gradient_magnitude(u).max()) for u in snapshots]
    return besov_lip_from_series(times, bes, lip, k_embed_baseline, regression_tol)


def magnetic_identity_check(
    b_theta: ScalarField, N: int = 64, tol: float = DUAL_PATH_TOL
) -> InequalityReport:
    """Dual-path check of ``curl((curl B) x B) = -d_z(Pi B^theta) e_theta``.

    Left side: ``B = B^theta e_theta`` embedded in the box, curls by FFT, the
    cross product pointwise.  Right side: ``-d_z(Pi B^theta)`` differenced on
    the meridian grid and embedded as an azimuthal vector.  The reported
    ``lhs`` is the relative L^2 difference, ``rhs`` the tolerance.
    """
    if b_theta.parity is not Parity.ODD:
        raise ValueError("B^theta must be ODD")
    g = b_theta.grid
    B3 = lp.embed_axisym(b_theta, lp.Component.THETA_VECTOR, N, method="cubic")
    J = lp.curl(B3)
    left = lp.curl(lp.cross(J, B3))
    b = b_theta.values
    src = -ddz_array(b * b / g.r_col, g.dz)
    right = lp.embed_axisym(
        ScalarField(g, Parity.ODD, src), lp.Component.THETA_VECTOR, N, method="cubic"
    )
    nl = lp.box_lp_norm(left, 2)
    nr = lp.box_lp_norm(right, 2)
    diff = lp.box_lp_norm(left - right, 2)
    scale = lp.box_lp_norm(J, 2) * lp.box_lp_norm(B3, math.inf)
    if nr == 0.0:
        rel = 0.0 if nl == 0.0 else diff / max(scale, np.finfo(float).tiny)
    else:
        rel = diff / nr
    return InequalityReport(
        "magnetic_identity", rel, tol, 0.0,
        details={"lhs_L2": nl, "rhs_L2": nr, "diff_L2": diff, "N": N},
    )
