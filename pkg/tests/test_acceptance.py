"""Acceptance suite: every criterion at its stated tolerance.

Each test logs one PASS/FAIL line (collected in the terminal summary).
The reference runs are shared through module-scoped fixtures.
"""

from __future__ import annotations

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from axmhd import diagnostics as D
from axmhd import littlewood_paley as lp
from axmhd.config import InitialSpec, parse_config
from axmhd.elliptic import biot_savart
from axmhd.evolve import PrimitiveState, StepParams, evolve_omega_primitive, initial_state, step
from axmhd.grid_fields import Parity, lp_norm, lp_norm_array, make_grid, sample
from axmhd.manufactured import CASES, convergence_study
from axmhd.persistence import Snapshot, decode_snapshot, encode_snapshot
from axmhd.runner import random_box_fields, replay, simulate, stream_oracle_error

from conftest import acceptance_line, gauss, strip_grid

pytestmark = pytest.mark.slow

REFINE = 0.6
REF_TEXT = """\
[grid]
Nr = 128
Nz = 256
r_max = 4.0
z_len = 8.0

[params]
dt_max = 0.01

[initial]
preset = ring+gauss

[run]
t_end = 1.0
diag_every = 1
snapshot_every = 1000
"""


def _reference_config(N: int, preset: str = "ring+gauss"):
    base = parse_config(REF_TEXT)
    return replace(
        base,
        grid=make_grid(N, 2 * N, 4.0, 8.0),
        params=replace(base.params, dt_max=0.01 * 128 / N),
        initial=replace(base.initial, preset=preset),
        diag_every=N // 128,
    )


class Tracker:
    """Per-step Pi bounds and L^p drift."""

    def __init__(self):
        self.lo = self.hi = None
        self.n0 = None
        self.bounds_ok = True
        self.drift = {2: 0.0, 4: 0.0, 6: 0.0}

    def __call__(self, k, state, flow):
        v = state.Pi.values
        if self.n0 is None:
            self.lo, self.hi = v.min(), v.max()
            self.n0 = {p: lp_norm(state.Pi, p) for p in self.drift}
        self.bounds_ok &= bool(v.min() >= self.lo and v.max() <= self.hi)
        for p in self.drift:
            n, n0 = lp_norm(state.Pi, p), self.n0[p]
            self.drift[p] = max(self.drift[p], abs(n / n0 - 1.0) if n0 > 0 else n)


def _run(N, preset="ring+gauss", box=False):
    cfg = _reference_config(N, preset)
    tr = Tracker()
    t0 = time.perf_counter()
    res = simulate(cfg, None, on_step=tr, box_monitors=box)
    return res, tr, time.perf_counter() - t0


@pytest.fixture(scope="module")
def ref128():
    return _run(128, box=True)


@pytest.fixture(scope="module")
def ref256():
    return _run(256)


@pytest.fixture(scope="module")
def ns_pair():
    return _run(128, "ring"), _run(256, "ring")


# ---------------------------------------------------------------------------


def test_c01_maximum_principle(ref128):
    res, tr, secs = ref128
    ok = res.status == 0 and tr.bounds_ok and secs <= 300
    acceptance_line(
        1, "Pi maximum principle", ok,
        f"bounds held at every step of {res.steps}; run time {secs:.1f} s (limit 300 s)",
    )
    assert ok


def test_c02_lp_conservation(ref128, ref256):
    d1, d2 = ref128[1].drift, ref256[1].drift
    ok = all(d1[p] <= 0.02 and d2[p] <= REFINE * d1[p] for p in d1)
    detail = ", ".join(f"p={p}: {d1[p]:.2e} -> {d2[p]:.2e}" for p in d1)
    acceptance_line(2, "Pi L^p conservation", ok, detail + " (<= 2%, ratio <= 0.6)")
    assert ok


def test_c03_energy_balance(ref128, ns_pair):
    (a, _, _), (b, _, _) = ns_pair
    r1 = D.energy_balance(a.records).details["equality_residual"]
    r2 = D.energy_balance(b.records).details["equality_residual"]
    ineq = D.energy_balance(ref128[0].records, tol=0.02)
    rel_slack = ineq.slack / ineq.rhs
    ok = r1 <= 0.02 and r2 <= REFINE * r1 and ineq.satisfied
    acceptance_line(
        3, "energy balance", ok,
        f"Pi0=0 equality residual {r1:.3e} -> {r2:.3e} (ratio {r2 / r1:.2f}); "
        f"Pi0!=0 inequality relative slack {rel_slack:+.3e}",
    )
    assert ok


def test_c04_omega_inequality(ref128):
    rep = D.omega_inequality(ref128[0].records, tol=0.05)
    acceptance_line(
        4, "Omega inequality", rep.satisfied,
        f"{rep.details['intervals']} intervals, worst relative slack "
        f"{rep.details['worst_relative_slack']:+.3e} (>= -5%)",
    )
    assert rep.satisfied


def _corpus():
    def psi_oracle(R, Z):
        return -R * (4 * R * R + 4 * Z * Z - 10.0) * gauss(R, Z)

    def hill(R, Z):
        return R * gauss(R, Z)

    def ring(R, Z):
        return R * (1 - R * R) * gauss(R, Z)

    return {"psi-oracle": psi_oracle, "hill": hill, "ring": ring}


def test_c05_calderon_zygmund():
    ok, parts = True, []
    for name, f in _corpus().items():
        res = []
        for n in (64, 128):
            g = strip_grid(n)
            om = sample(f, g, Parity.ODD)
            res.append(D.cz_check(biot_savart(om), om)[2].lhs)
        good = res[0] <= 2e-2 and res[1] <= 2e-2 and res[1] <= REFINE * res[0]
        ok &= good
        parts.append(f"{name} {res[0]:.2e} -> {res[1]:.2e}")
    acceptance_line(5, "Calderon-Zygmund L2 identity", ok, "; ".join(parts))
    assert ok


def test_c06_littlewood_paley():
    t0 = time.perf_counter()
    N, lengths = 64, (8.0, 8.0, 8.0)
    lat = lp.Lattice(N, lengths)
    bank = lp.DyadicFilterBank(lp.covering_q_max(lat))
    part = float(np.abs(bank.partition(lat.absxi) - 1.0).max())
    rec, lo, hi, heat = 0.0, math.inf, -math.inf, True
    for f in random_box_fields(N, lengths, 10, seed=2024):
        d = lp.decompose(f, bank)
        rec = max(rec, lp.box_lp_norm(d.reconstruct() - f, 2) / lp.box_lp_norm(f, 2))
        for q in d.qs:
            if q < 0:
                continue
            b = lp.bernstein_report(d, q)
            lo, hi = min(lo, b.gradient_ratio), max(hi, b.gradient_ratio)
            n0 = lp.box_lp_norm(d.blocks[q], 2)
            for t in (0.01, 0.1, 1.0):
                nt = lp.box_lp_norm(lp.heat_propagate(d.blocks[q], t), 2)
                heat &= nt <= math.exp(-9 / 16 * t * 4.0**q) * n0 + 1e-14 * n0
    secs = time.perf_counter() - t0
    ok = part <= 1e-14 and rec <= 1e-12 and 0.75 <= lo and hi <= 8 / 3 and heat and secs <= 60
    acceptance_line(
        6, "Littlewood-Paley suite", ok,
        f"partition {part:.1e}, reconstruction {rec:.1e}, Bernstein in [{lo:.3f}, {hi:.3f}], "
        f"heat decay {'ok' if heat else 'violated'}, {secs:.1f} s",
    )
    assert ok


def test_c07_elliptic_oracle():
    errs = [stream_oracle_error(strip_grid(n))[0] for n in (32, 64, 128, 256)]
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    ok = bool(np.all((orders >= 1.7) & (orders <= 2.3)))
    acceptance_line(7, "elliptic oracle recovery", ok, "orders " + ", ".join(f"{o:.3f}" for o in orders))
    assert ok


def test_c08_manufactured_convergence():
    t0 = time.perf_counter()
    results = {c: convergence_study(c) for c in CASES}
    secs = time.perf_counter() - t0
    ok = all(r.passed for r in results.values()) and secs <= 600
    detail = ", ".join(f"{c} {r.observed_order:.2f} (>= {r.threshold})" for c, r in results.items())
    acceptance_line(8, "manufactured-solution convergence", ok, f"{detail}; {secs:.1f} s")
    assert ok


def test_c09_magnetic_identity():
    res = []
    for N in (64, 128):
        g = strip_grid(N)
        B = sample(lambda R, Z: R * gauss(R, Z), g, Parity.ODD)
        res.append(D.magnetic_identity_check(B, N).lhs)
    ok = res[0] <= 5e-2 and res[1] < res[0]
    acceptance_line(9, "magnetic identity", ok, f"relative L2 difference {res[0]:.3e} (N=64) -> {res[1]:.3e} (N=128)")
    assert ok


def test_c10_formulation_consistency():
    out = []
    for N, n_steps in ((128, 10), (256, 20)):
        g = strip_grid(N)
        s = initial_state(*InitialSpec().fields(g))
        ps = PrimitiveState.from_reduced(s)
        dt = 0.01 * 128 / N
        p = StepParams()
        for _ in range(n_steps):
            s = step(s, p, dt=dt)
            ps = evolve_omega_primitive(ps, p, dt=dt)
        out.append(lp_norm_array(s.omega_theta.values - ps.omega_theta.values, g, 2) / lp_norm(ps.omega_theta, 2))
    ok = out[0] <= 0.05 and out[1] < out[0]
    acceptance_line(10, "reduced vs primitive", ok, f"relative L2 {out[0]:.3e} (128, 10 steps) -> {out[1]:.3e} (256, t=0.1)")
    assert ok


def _common(records, times):
    by_t = {round(r.t, 9): r for r in records}
    return [by_t[t] for t in times]


def test_c11_envelopes(ref128, ref256):
    t1 = {round(r.t, 9) for r in ref128[0].records}
    t2 = {round(r.t, 9) for r in ref256[0].records}
    times = sorted(t1 & t2)
    e1 = D.growth_envelopes(_common(ref128[0].records, times))
    e2 = D.growth_envelopes(_common(ref256[0].records, times))
    worst, ok = 0.0, True
    for k in e1:
        ok &= e1[k].covers_all and e2[k].covers_all
        for a, b in ((e1[k].C1, e2[k].C1), (e1[k].C2, e2[k].C2)):
            m = max(abs(a), abs(b))
            rel = 0.0 if m == 0 else abs(a - b) / m
            worst = max(worst, rel)
    ok &= worst <= 0.25
    acceptance_line(
        11, "envelope reports", ok,
        f"{len(e1)} envelopes on {len(times)} common samples cover all; worst constant change {worst:.2%} (<= 25%)",
    )
    assert ok


def test_c12_determinism_and_persistence(tmp_path):
    cfg = replace(_reference_config(128), grid=make_grid(64, 128, 4.0, 8.0), t_end=0.2, snapshot_every=5)
    a, b, c = (str(tmp_path / x) for x in "abc")
    simulate(cfg, a)
    simulate(cfg, b)
    same = open(f"{a}/diagnostics.ndjson", "rb").read() == open(f"{b}/diagnostics.ndjson", "rb").read()
    replay(f"{a}/snapshots/step_000010.json", cfg.t_end, c)
    restart = all(
        open(f"{a}/{n}", "rb").read() == open(f"{c}/{n}", "rb").read()
        for n in ("diagnostics.ndjson", "inequality_reports.ndjson", "checkpoint.axs")
    )
    s = initial_state(*InitialSpec().fields(strip_grid(128)))
    snap = Snapshot.from_state(s)
    data = encode_snapshot(snap)
    back = decode_snapshot(data)
    roundtrip = back.identical(snap) and encode_snapshot(back) == data
    ok = same and restart and roundtrip
    acceptance_line(
        12, "determinism and persistence", ok,
        f"repeat runs byte-identical: {same}; snapshot round-trip: {roundtrip}; restart equivalence: {restart}",
    )
    assert ok
