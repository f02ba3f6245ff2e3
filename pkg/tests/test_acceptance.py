"""Acceptance checks, one test per criterion.

Each test prints a single ``CRITERION n: PASS|FAIL`` line listing every
measured quantity next to its target window, then asserts the outcome.
"""

import math
from itertools import product

import numpy as np
import pytest

from acgem.atomic_structure import (
    HyperfineState,
    dipole_matrix_element,
    excited_states,
    ground_states,
    wigner_3j,
    wigner_6j,
)
from acgem.decoherence import TrapSpec, find_optimal_detuning, scattering_per_bandwidth, trap_report
from acgem.gem_dynamics import (
    GradientSchedule,
    apply_switch,
    read_write_efficiency,
    recall_metrics,
    solve,
    spectral_bin,
    standard_scenario,
)
from acgem.memory_budget import reference_scenario, gaussian_pulse_bandwidth, power_for_bandwidth, threshold_storage_time
from acgem.stark_response import (
    OPTIMAL_SCHEME,
    W_PER_CM2,
    IntensityProfile,
    LaserSpec,
    gradient_and_bandwidth,
    splittings,
    stark_shift,
    stark_shift_per_intensity,
)

THZ = 2 * math.pi * 1e12
STORE = HyperfineState(1, -1)


class Report:
    def __init__(self, number):
        self.number = number
        self.items = []

    def rel(self, name, value, target, tol, unit=""):
        ok = abs(value - target) <= tol * abs(target)
        self.items.append((ok, f"{name}={value:.4g}{unit} (target {target:g}{unit} +/-{tol:.0%})"))

    def window(self, name, value, lo, hi, unit=""):
        ok = lo <= value <= hi
        self.items.append((ok, f"{name}={value:.4g}{unit} (target [{lo:g}, {hi:g}]{unit})"))

    def check(self, name, ok, detail):
        self.items.append((bool(ok), f"{name}: {detail}"))

    def finish(self, capsys):
        ok = all(o for o, _ in self.items)
        parts = "; ".join(("" if o else "[x] ") + s for o, s in self.items)
        with capsys.disabled():
            print(f"\nCRITERION {self.number}: {'PASS' if ok else 'FAIL'} | {parts}")
        failed = [s for o, s in self.items if not o]
        assert ok, "; ".join(failed)


@pytest.fixture(scope="module")
def optimum():
    return find_optimal_detuning(STORE, 1)


def test_criterion_1_optimal_detuning(optimum, capsys):
    r = Report(1)
    r.window("|Delta*|/2pi", abs(optimum.detuning) / THZ, 4, 6, " THz")
    r.rel("rate per MHz", optimum.rate * 1e6, 11, 0.3, " 1/s")
    r.check("interior minimum", not optimum.boundary, f"boundary={optimum.boundary}")
    r.finish(capsys)


def test_criterion_2_splitting_magnitude(optimum, capsys):
    r = Report(2)
    laser = LaserSpec.from_detuning(optimum.detuning, 1)
    s = splittings(laser)
    r.rel("delta_1 at optimum", s.delta_1 * W_PER_CM2, 50, 0.2, " Hz/(W/cm^2)")
    r.rel("delta_2 at optimum", s.delta_2 * W_PER_CM2, 50, 0.2, " Hz/(W/cm^2)")
    per_watt = gradient_and_bandwidth(IntensityProfile.linear(1.0), laser, OPTIMAL_SCHEME).bandwidth
    r.rel("B_s per watt at optimum", per_watt / 1e3, 150, 0.2, " kHz/W")
    r.finish(capsys)


def test_criterion_3_trap(capsys):
    r = Report(3)
    rep = trap_report(TrapSpec(wavelength=1064e-9, power=1.5, waist=10e-6))
    r.rel("U_t", rep.depth_Ut * 1e3, 1.0, 0.25, " mK")
    r.rel("Gamma_t", rep.scatter_Gamma_t, 4, 0.3, " 1/s")
    r.window("tau_trap", rep.lifetime_tau_trap, 5, 20, " s")
    r.rel("1/Gamma_t", 1e3 / rep.scatter_Gamma_t, 250, 0.3, " ms")
    r.finish(capsys)


def test_criterion_4_gamma_ac_coefficient(optimum, capsys):
    r = Report(4)
    laser = LaserSpec.from_detuning(optimum.detuning, 1)
    r.rel("Gamma_ac/B_s", scattering_per_bandwidth(STORE, laser, OPTIMAL_SCHEME), 7e-6, 0.3)
    r.finish(capsys)


def test_criterion_5_pde_against_formula(capsys):
    r = Report(5)
    for d in (0.25, 0.5, 2.0):
        cfg, sched, pulse, tsw = standard_scenario(d, bandwidth_ratio=3.0)
        state = solve(cfg, sched, pulse)
        m = recall_metrics(state, pulse, tsw)
        r.rel(f"eff(d'={d})", m.efficiency, read_write_efficiency(d), 0.03)
        err = abs(m.echo_time - (2 * tsw - pulse.t_peak))
        r.check(f"echo centroid(d'={d})", err <= state.dt, f"offset {err:.2g} vs dt {state.dt:.2g}")
        r.window(f"fidelity(d'={d})", m.time_reversal_fidelity, 0.99, 1.0)
    r.finish(capsys)


def test_criterion_6_switching(capsys):
    r = Report(6)

    def go(centred, method, compensate=False):
        cfg, sched, pulse, tsw = standard_scenario(0.5, centred=centred, method=method, compensate=compensate)
        state = solve(cfg, sched, pulse)
        return state, recall_metrics(state, pulse, tsw), pulse

    a, _, _ = go(True, "IntensityReverse")
    b, _, _ = go(True, "PolarizationFlip")
    rel = float(np.max(np.abs(a.field_out - b.field_out)) / np.max(np.abs(a.field_out)))
    r.check("centred echoes", rel < 1e-6, f"relative difference {rel:.2g} (target < 1e-6)")

    rev_state, rev, pulse = go(False, "IntensityReverse")
    _, flip, _ = go(False, "PolarizationFlip")
    _, comp, _ = go(False, "PolarizationFlip", True)
    bin_ = spectral_bin(rev_state)
    dmax = 3 * pulse.bandwidth
    shift = flip.carrier_shift - rev.carrier_shift
    r.check("flip shift", abs(shift + dmax) <= bin_, f"{shift:.4g} vs {-dmax:.4g} +/- {bin_:.3g}")
    r.check("compensated shift", abs(comp.carrier_shift) <= bin_, f"{comp.carrier_shift:.3g} vs 0 +/- {bin_:.3g}")
    r.finish(capsys)


def test_criterion_7_storage_thresholds(capsys):
    r = Report(7)
    tp = 20e-6
    r.rel("single eps>=0.9", threshold_storage_time(reference_scenario(tp), 0.9) / tp, 130, 0.2, " t_p")
    multi = reference_scenario(tp, multi_pulse=True)
    r.rel("multi eps>=0.9", threshold_storage_time(multi, 0.9) / tp, 50, 0.2, " t_p")
    r.rel("multi eps>=0.5", threshold_storage_time(multi, 0.5) / tp, 350, 0.2, " t_p")
    laser = LaserSpec.from_detuning(reference_scenario().Delta_ac, 1)
    p = power_for_bandwidth(gaussian_pulse_bandwidth(tp), laser, OPTIMAL_SCHEME)
    r.window("power for B_G(20 us)", p, 0, 2, " W")
    r.finish(capsys)


def _sawtooth_recall(D, teeth=16, nz=1024):
    cfg, _, pulse, tsw = standard_scenario(D / (2 * math.pi), z_points=nz)
    B = 3 * pulse.bandwidth
    delta = B * (np.mod(teeth * cfg.z / cfg.length, 1.0) - 0.5)
    sched = apply_switch(GradientSchedule.static(delta), "PolarizationFlip", tsw)
    state = solve(cfg.auto_dt(sched.max_detuning), sched, pulse)
    return recall_metrics(state, pulse, tsw).efficiency


def test_criterion_8_property_suites(capsys):
    r = Report(8)
    rng = np.random.default_rng(2024)

    # Wigner symbols: orthogonality and permutation symmetry for j <= 5
    worst = 0.0
    for _ in range(20):
        j1, j2 = rng.integers(0, 11, 2) / 2
        for j3 in np.arange(abs(j1 - j2), j1 + j2 + 1):
            for m3 in np.arange(-j3, j3 + 1):
                s = sum(
                    (2 * j3 + 1) * wigner_3j(j1, j2, j3, m1, m3 - m1, -m3) ** 2
                    for m1 in np.arange(-j1, j1 + 1)
                    if abs(m3 - m1) <= j2
                )
                worst = max(worst, abs(s - 1))
    for _ in range(200):
        j = rng.integers(0, 11, 6) / 2
        a = wigner_6j(*j)
        worst = max(worst, abs(a - wigner_6j(j[1], j[0], j[2], j[4], j[3], j[5])))
        j1, j2, j3 = rng.integers(0, 11, 3) / 2
        m1 = rng.integers(-int(2 * j1), int(2 * j1) + 1) / 2 if (2 * j1) % 2 == 0 else None
        if m1 is None:
            continue
        for m2 in np.arange(-j2, j2 + 1):
            x = wigner_3j(j1, j2, j3, m1, m2, -m1 - m2)
            worst = max(worst, abs(x - wigner_3j(j2, j3, j1, m2, -m1 - m2, m1)))
    r.check("Wigner identities", worst <= 1e-12, f"max deviation {worst:.2g} (target 1e-12)")

    # dipole sum rule independent of mF
    spread = 0.0
    for Jp in (0.5, 1.5):
        for F in (1, 2):
            tot = [
                sum(dipole_matrix_element(g, a, q) ** 2 for a in excited_states(Jp) for q in (-1, 0, 1))
                for g in ground_states(F)
            ]
            spread = max(spread, np.ptp(tot) / np.mean(tot))
    r.check("sum rule", spread <= 1e-12, f"relative spread {spread:.2g} (target 1e-12)")

    # exact linearity and linear-polarisation splitting
    laser = LaserSpec.from_detuning(-5 * THZ, 1)
    lin = all(stark_shift(g, laser, I) == I * stark_shift(g, laser, 1.0) for g in ground_states() for I in (0.0, 3.0, 1e7))
    r.check("shift linear in intensity", lin, "exact")
    s0 = splittings(LaserSpec.from_detuning(-5 * THZ, 0))
    r.check("q=0 splitting", s0.delta_1 == 0 and s0.delta_2 == 0, f"delta_F = {s0.delta_1:g}, {s0.delta_2:g}")

    worst = 0.0
    for thz, g in product(np.geomspace(0.1, 5, 12), ground_states()):
        l = LaserSpec.from_detuning(-thz * THZ, 1)
        f = stark_shift_per_intensity(g, l, "full")
        a = stark_shift_per_intensity(g, l, "approx")
        worst = max(worst, abs(f / a - 1))
    r.window("full vs approx", worst, 0, 0.05)

    # solver grid convergence
    changes = []
    for d in (0.5, 2.0):
        base = standard_scenario(d)
        fine = standard_scenario(d, z_points=1024, cfl=0.05)
        e = [recall_metrics(solve(c, s, p), p, t).efficiency for c, s, p, t in (base, fine)]
        changes.append(abs(e[1] / e[0] - 1))
    r.window("grid refinement change", max(changes), 0, 0.01)

    # flat (non-monotone) gradient recall bound
    best = max(_sawtooth_recall(D) for D in (1.0, 2.0, 3.0))
    r.window("non-monotone recall", best, 0, 0.54 * 1.1)
    r.finish(capsys)
