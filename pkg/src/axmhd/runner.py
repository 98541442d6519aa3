"""
Run orchestration behind the command line: the time loop with its
artifacts, the static property suite and the refinement studies.

Output layout (under the output directory)::

    config.ini                 echo of the effective configuration
    diagnostics.ndjson         one DiagnosticRecord per line
    snapshots/step_NNNNNN.axs  field snapshot at the snapshot cadence
    snapshots/step_NNNNNN.json restart sidecar for that snapshot
    checkpoint.json/.axs       the last restart point
    inequality_reports.ndjson  end-of-run reports
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import diagnostics as D
from . import littlewood_paley as lp
from .config import RunConfig, parse_config
from .elliptic import FlowField, solve_stream, velocity_from_stream
from .evolve import BlowUpError, State, cfl_dt, flow_of, initial_state, step
from .grid_fields import CylGrid, Parity, ScalarField, divergence, lp_norm_array, sample
from .manufactured import DEFAULT_SETUPS, ConvergenceResult, convergence_study
from .persistence import Checkpoint, ndjson_line

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_IO = 4

OUTPUT_ENV = "AXMHD_OUTPUT_DIR"


def output_dir_for(cfg: RunConfig) -> str:
    return os.environ.get(OUTPUT_ENV) or cfg.output_dir


# ---------------------------------------------------------------------------
# time loop
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    status: int
    state: State
    records: list[D.DiagnosticRecord]
    reports: list[dict]
    steps: int
    message: str = ""
    pi_bounds: dict = field(default_factory=dict)

    @property
    def asserted_ok(self) -> bool:
        return all(r["satisfied"] for r in self.reports if r.get("asserted"))


StepHook = Callable[[int, State, FlowField], None]


def simulate(
    cfg: RunConfig,
    out_dir: str | None = None,
    resume: Checkpoint | None = None,
    t_end: float | None = None,
    on_step: StepHook | None = None,
    box_monitors: bool = True,
) -> RunResult:
    """Run the step loop of ``cfg`` (optionally resuming a checkpoint).

    At step ``k`` the loop (i) writes a restart point when ``k`` is a multiple
    of ``snapshot_every`` or the run is about to end, (ii) accumulates the
    time integrals, (iii) emits a record every ``diag_every`` steps and at the
    end, then (iv) advances.  Restart points hold the loop state from before
    (ii), so a resumed run repeats exactly the same arithmetic.

    ``out_dir=None`` keeps everything in memory; ``box_monitors=False`` skips
    the box-based Besov and H^{3/2} monitors (recorded as 0).
    """
    t_end = cfg.t_end if t_end is None else t_end
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    config_text = cfg.to_text()
    if resume is None:
        Pi0, Om0 = cfg.initial.fields(cfg.grid)
        state = initial_state(Pi0, Om0)
        k = 0
        records: list[D.DiagnosticRecord] = []
        integrals = D.CumulativeIntegrals()
        bounds = {
            "min0": float(Pi0.values.min()),
            "max0": float(Pi0.values.max()),
            "min": float(Pi0.values.min()),
            "max": float(Pi0.values.max()),
        }
    else:
        state, k = resume.state, resume.step
        records = list(resume.records)
        integrals = D.CumulativeIntegrals.from_json(resume.integrals.to_json())
        bounds = dict(resume.extra.get("pi_bounds", {}))
    monitor = D.Monitor(cfg.lp_N if box_monitors else None, integrals)

    diag_fh = None
    snap_dir = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        snap_dir = os.path.join(out_dir, "snapshots")
        os.makedirs(snap_dir, exist_ok=True)
        with open(os.path.join(out_dir, "config.ini"), "w", encoding="utf-8") as fh:
            fh.write(config_text)
        diag_fh = open(os.path.join(out_dir, "diagnostics.ndjson"), "w", encoding="utf-8")
        for rec in records:
            diag_fh.write(ndjson_line(rec.as_dict()))

    def restart_point(k: int, state: State) -> None:
        if snap_dir is None:
            return
        ck = Checkpoint(config_text, k, state, list(records), monitor.integrals, {"pi_bounds": dict(bounds)})
        ck.write(os.path.join(snap_dir, f"step_{k:06d}.json"))
        ck.write(os.path.join(out_dir, "checkpoint.json"))

    status, message = EXIT_OK, ""
    try:
        while True:
            last = state.t >= t_end * (1 - 1e-14)
            flow = flow_of(state)
            if k % cfg.snapshot_every == 0 or last:
                restart_point(k, state)
            monitor.observe(state, flow)
            if k % cfg.diag_every == 0 or last:
                rec = monitor.record(state, flow)
                records.append(rec)
                if diag_fh is not None:
                    diag_fh.write(ndjson_line(rec.as_dict()))
                    diag_fh.flush()
            if on_step is not None:
                on_step(k, state, flow)
            if last:
                break
            dt = min(cfl_dt(flow, cfg.params), t_end - state.t)
            state = step(state, cfg.params, dt=dt, flow=flow)
            k += 1
            v = state.Pi.values
            bounds["min"] = min(bounds["min"], float(v.min()))
            bounds["max"] = max(bounds["max"], float(v.max()))
    except BlowUpError as exc:
        status, message = EXIT_BLOWUP, str(exc)
    finally:
        if diag_fh is not None:
            diag_fh.close()

    reports: list[dict] = []
    if status == EXIT_OK:
        reports = end_of_run_reports(cfg, state, records, bounds)
        if out_dir is not None:
            with open(os.path.join(out_dir, "inequality_reports.ndjson"), "w", encoding="utf-8") as fh:
                for r in reports:
                    fh.write(ndjson_line(r))
        if not all(r["satisfied"] for r in reports if r["asserted"]):
            status = EXIT_CHECK_FAILED
            failed = [r["name"] for r in reports if r["asserted"] and not r["satisfied"]]
            message = "asserted reports failed: " + ", ".join(failed)
    return RunResult(status, state, records, reports, k, message, bounds)


def _finite_or_none(v):
    return v if not isinstance(v, float) or math.isfinite(v) else None


def _rep(r: D.InequalityReport, asserted: bool) -> dict:
    d = r.as_dict()
    return {"name": d.pop("name"), "asserted": asserted, **{k: _finite_or_none(v) for k, v in d.items()}}


def _no_name(env: D.EnvelopeReport) -> dict:
    d = env.as_dict()
    del d["name"]
    return d


def end_of_run_reports(
    cfg: RunConfig, state: State, records: list[D.DiagnosticRecord], bounds: dict
) -> list[dict]:
    tol = cfg.tolerances
    out: list[dict] = []
    if bounds:
        viol = max(bounds["min0"] - bounds["min"], bounds["max"] - bounds["max0"], 0.0)
        out.append(
            _rep(
                D.InequalityReport(
                    "pi_maximum_principle", viol, 0.0, 0.0, details=dict(bounds)
                ),
                True,
            )
        )
    if len(records) >= 2:
        e = D.energy_balance(records, cfg.params.nu, tol.energy)
        out.append(_rep(e, True))
        if records[0].B_L2 == 0.0:
            res = e.details["equality_residual"]
            out.append(_rep(D.InequalityReport("energy_equality", res, tol.energy), True))
        out.append(_rep(D.omega_inequality(records, tol.omega_slack), True))
    flow = flow_of(state)
    om = state.omega_theta
    cz = D.cz_check(flow, om, tol.identity)
    out.append(_rep(cz[2], True))
    for p in (4, 6):
        out.append(_rep(cz[p], False))
    for rr in D.biot_savart_ratios(flow, om):
        out.append({**rr.as_dict(), "name": "biot_savart_" + rr.name, "asserted": False, "satisfied": True})
    out.append(_rep(D.magnetic_identity_check(state.b_theta, cfg.lp_N, tol.dual_path), True))
    t = [r.t for r in records]
    if len(records) >= 3 and sum(x > 0 for x in t) >= 2:
        for name, env in D.growth_envelopes(records).items():
            out.append({"name": "envelope_" + name, "asserted": False, "satisfied": env.covers_all, **_no_name(env)})
        for name, env in D.higher_norm_monitors(records).items():
            out.append({"name": "higher_" + name, "asserted": False, "satisfied": env.covers_all, **_no_name(env)})
    if len(records) >= 2:
        bl = D.besov_lip_from_series(
            t, [r.besov_u for r in records], [r.grad_u_Linf for r in records], tol.k_embed_baseline
        )
        out.append(
            {
                "name": "besov_lip",
                "asserted": bl.regression_ok is not None,
                "satisfied": bl.regression_ok is not False,
                **bl.as_dict(),
            }
        )
    return out


def replay(checkpoint_path: str, t_end: float, out_dir: str | None = None) -> RunResult:
    ck = Checkpoint.read(checkpoint_path)
    cfg = parse_config(ck.config_text)
    if t_end < ck.state.t:
        raise ValueError(f"t_end={t_end} precedes the checkpoint time {ck.state.t}")
    cfg = replace(cfg, t_end=t_end)
    return simulate(cfg, out_dir, resume=ck, t_end=t_end)


# ---------------------------------------------------------------------------
# property suite (no time evolution)
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def random_box_fields(N: int, lengths, count: int, seed: int) -> list[lp.CartesianField3D]:
    """Smooth random scalar fields: white noise shaped by ``(1 + |xi|^2)^-1``."""
    rng = np.random.default_rng(seed)
    a = lp.Lattice(N, tuple(lengths)).absxi
    out = []
    for _ in range(count):
        noise = rng.standard_normal((N, N, N))
        f = lp.CartesianField3D(noise[None], tuple(lengths), lp.Component.SCALAR)
        out.append(lp.apply_multiplier(f, 1.0 / (1.0 + a * a)))
    return out


def stream_oracle_error(grid: CylGrid) -> tuple[float, float]:
    """Max error of the recovered ``psi`` for ``psi* = r^2 exp(-r^2-z^2)`` and
    the relative residual of the solve."""
    # omega* = -(1/r) (d_r^2 - (1/r) d_r + d_z^2) psi*  = -r L[exp(-r^2-z^2)]
    def omega(R, Z):
        g = np.exp(-R * R - Z * Z)
        return -R * (4 * R * R + 4 * Z * Z - 10.0) * g

    sf = solve_stream(sample(omega, grid, Parity.ODD))
    exact = sample(lambda R, Z: R * R * np.exp(-R * R - Z * Z), grid, Parity.EVEN)
    return float(np.abs(sf.psi.values - exact.values).max()), sf.residual


def oracle_flow(grid: CylGrid) -> tuple[FlowField, ScalarField]:
    def omega(R, Z):
        return -R * (4 * R * R + 4 * Z * Z - 10.0) * np.exp(-R * R - Z * Z)

    om = sample(omega, grid, Parity.ODD)
    return velocity_from_stream(solve_stream(om)), om


def run_checks(
    cfg: RunConfig,
    profile: Callable[[np.ndarray], np.ndarray] | None = None,
) -> list[CheckResult]:
    """Static property suite; ``profile`` replaces the LP cut-off (test hook)."""
    res: list[CheckResult] = []

    def add(name, ok, detail):
        res.append(CheckResult(name, bool(ok), detail))

    g = cfg.grid
    tol = cfg.tolerances
    N = cfg.lp_N
    lengths = (2 * g.r_max, 2 * g.r_max, g.z_len)
    lat = lp.Lattice(N, lengths)
    bank = lp.DyadicFilterBank(lp.covering_q_max(lat), profile or lp.smoothstep_profile)

    # Littlewood-Paley
    err = float(np.abs(bank.partition(lat.absxi) - 1.0).max())
    add("lp_partition_of_unity", err <= 1e-14, f"max |sum - 1| = {err:.3e}")
    fields = random_box_fields(N, lengths, 10, cfg.seed)
    worst_rec, lo, hi = 0.0, math.inf, -math.inf
    heat_ok, heat_worst = True, -math.inf
    for f in fields:
        dec = lp.decompose(f, bank)
        e = lp.box_lp_norm(dec.reconstruct() - f, 2) / lp.box_lp_norm(f, 2)
        worst_rec = max(worst_rec, e)
        for q in dec.qs:
            if q < 0 or lp.box_lp_norm(dec.blocks[q], 2) == 0.0:
                continue
            b = lp.bernstein_report(dec, q)
            lo, hi = min(lo, b.gradient_ratio), max(hi, b.gradient_ratio)
            n0 = lp.box_lp_norm(dec.blocks[q], 2)
            for t in (0.01, 0.1, 1.0):
                nt = lp.box_lp_norm(lp.heat_propagate(dec.blocks[q], t), 2)
                bound = math.exp(-(9.0 / 16.0) * t * 4.0**q) * n0
                heat_worst = max(heat_worst, (nt - bound) / n0)
                heat_ok &= nt <= bound * (1 + 1e-12) + 1e-14 * n0
    add("lp_reconstruction", worst_rec <= 1e-12, f"max relative L2 error = {worst_rec:.3e}")
    add("lp_bernstein", 0.75 <= lo and hi <= 8.0 / 3.0, f"gradient ratios in [{lo:.4f}, {hi:.4f}]")
    add("lp_heat_decay", heat_ok, f"worst (|e^tD f_q| - bound)/|f_q| = {heat_worst:.3e}")

    # elliptic oracle, at the configured grid and once refined
    e1, res1 = stream_oracle_error(g)
    e2, _ = stream_oracle_error(g.refine())
    order = math.log2(e1 / e2)
    add(
        "elliptic_oracle",
        1.7 <= order <= 2.3 and res1 <= 1e-10,
        f"max psi error {e1:.3e} -> {e2:.3e}, order {order:.3f}, residual {res1:.1e}",
    )

    # divergence and Calderon-Zygmund identity on the oracle flow and the preset
    flow, om = oracle_flow(g)
    div = divergence(flow.ur, flow.uz)
    gu = math.sqrt(lp_norm_array(np.sqrt(D.grad_u_pointwise_sq(flow)), g, 2) ** 2)
    rel_div = lp_norm_array(div.values, g, 2) / gu
    add("divergence_free", rel_div <= tol.identity, f"|div u| / |grad u| = {rel_div:.3e}")
    cz = D.cz_check(flow, om, tol.identity)[2]
    add("cz_identity_oracle", cz.satisfied, f"relative defect {cz.lhs:.3e}")

    Pi0, Om0 = cfg.initial.fields(g)
    st = initial_state(Pi0, Om0)
    if np.any(Om0.values):
        fl = flow_of(st)
        cz = D.cz_check(fl, st.omega_theta, tol.identity)[2]
        add("cz_identity_preset", cz.satisfied, f"relative defect {cz.lhs:.3e}")
    mi = D.magnetic_identity_check(
        sample(lambda R, Z: R * np.exp(-R * R - Z * Z), g, Parity.ODD), N, tol.dual_path
    )
    add("magnetic_identity", mi.satisfied, f"relative L2 difference {mi.lhs:.3e} at N={N}")

    # assembled |grad B| and |grad omega| against spectral gradients of the embeddings
    rec = D.record(st, flow_of(st), None, None)
    for name, grid_val, fld in (
        ("grad_B_assembly", rec.grad_B_L2, st.b_theta),
        ("grad_omega_assembly", rec.grad_omega_L2, st.omega_theta),
    ):
        if not np.any(fld.values):
            continue
        box = lp.embed_axisym(fld, lp.Component.THETA_VECTOR, N, method="cubic")
        ref = lp.box_lp_norm(lp.gradient_magnitude(box), 2, box.cell_volume)
        rel = abs(grid_val - ref) / ref
        add(name, rel <= tol.dual_path, f"grid {grid_val:.6g} vs box {ref:.6g} (rel {rel:.3e})")
    return res


# ---------------------------------------------------------------------------
# refinement studies
# ---------------------------------------------------------------------------


def converge(cfg: RunConfig, case: str) -> ConvergenceResult:
    """Three-level study ending at the configured radial resolution."""
    base = DEFAULT_SETUPS[case]
    n = cfg.grid.Nr
    if n < 16 or n % 4:
        raise ValueError(f"Nr={n} must be a multiple of 4 and >= 16 for a three-level study")
    Nr = (n // 4, n // 2, n)
    dt0 = base.dt0 * (base.Nr[0] / Nr[0]) ** base.dt_power
    setup = replace(base, Nr=Nr, r_max=cfg.grid.r_max, z_len=cfg.grid.z_len, dt0=dt0)
    return convergence_study(case, setup, nu=cfg.params.nu if case != "advection" else 0.0)


__all__ = [
    "CheckResult",
    "RunResult",
    "converge",
    "output_dir_for",
    "replay",
    "run_checks",
    "simulate",
]
