import csv
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from acgem.gem_dynamics import read_write_efficiency, recall_metrics, solve, standard_scenario
from acgem.memory_budget import (
    BREAKDOWN_FIELDS,
    BackgroundRates,
    MemoryScenario,
    efficiency_breakdown,
    efficiency_sweep,
    reference_scenario,
    gaussian_pulse_bandwidth,
    optical_depth,
    power_for_bandwidth,
    threshold_storage_time,
    write_sweep_csv,
)
from acgem.stark_response import OPTIMAL_SCHEME, LaserSpec

TP = 20e-6
ACS = LaserSpec.from_detuning(-2 * math.pi * 5e12, 1)


# --- pulse bandwidth --------------------------------------------------------


def test_bandwidth_of_twenty_microsecond_pulse():
    assert gaussian_pulse_bandwidth(20e-6) == pytest.approx(202.6e3, rel=1e-3)


@given(st.floats(1e-9, 1.0))
def test_bandwidth_inverse_in_pulse_length(tp):
    assert gaussian_pulse_bandwidth(2 * tp) == pytest.approx(gaussian_pulse_bandwidth(tp) / 2, rel=1e-12)


def test_bandwidth_definition_inversion():
    assert gaussian_pulse_bandwidth(9 * math.sqrt(2) / math.pi) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        gaussian_pulse_bandwidth(0.0)


# --- breakdown --------------------------------------------------------------


def test_no_decoherence_leaves_read_write_only():
    b = efficiency_breakdown(reference_scenario(), Gamma_ac=0.0, Gamma_c=0.0, Gamma_bg=0.0)
    assert b.eps_total == b.eps_rw
    assert b.eps_s == 1.0


def test_reference_working_point():
    b = efficiency_breakdown(reference_scenario())
    assert b.bandwidth_Bs == pytest.approx(gaussian_pulse_bandwidth(TP))
    assert b.eps_rw == pytest.approx(read_write_efficiency(b.d_prime), rel=1e-12)
    assert b.Gamma_rw == b.Gamma_ac + b.Gamma_c
    assert b.eps_total == pytest.approx(b.eps_rw * b.eps_s, rel=1e-14)
    assert b.dbp == 1.0


def test_depth_formula_by_hand():
    sc = reference_scenario()
    g, N, L, eps_l = 2 * math.pi * 1.5e6, 2.5e6, 0.01, 0.4
    ref = g**2 * eps_l * N * L / (299792458.0 * 2 * math.pi * sc.bandwidth) * 0.02**2
    assert optical_depth(sc) == pytest.approx(ref, rel=1e-12)
    with pytest.raises(ValueError):
        optical_depth(sc, 0.0)


def test_multi_pulse_timing_of_rw_scattering():
    rates = dict(Gamma_ac=10.0, Gamma_c=20.0, Gamma_bg=5.0)
    sc = replace(reference_scenario(), store_ts=50 * TP)
    single = efficiency_breakdown(sc, **rates)
    multi = efficiency_breakdown(replace(sc, multi_pulse=True), **rates)
    assert single.eps_s == pytest.approx(math.exp(-2 * TP * 30) * math.exp(-52 * TP * 5), rel=1e-12)
    assert multi.eps_s == pytest.approx(math.exp(-52 * TP * 30) * math.exp(-52 * TP * 5), rel=1e-12)


@pytest.mark.parametrize(
    "multi,level,expected",
    [(False, 0.9, 130), (True, 0.9, 50), (True, 0.5, 350)],
)
def test_storage_thresholds(multi, level, expected):
    ts = threshold_storage_time(reference_scenario(multi_pulse=multi), level)
    assert ts / TP == pytest.approx(expected, rel=0.2)


@given(st.floats(0, 0.05), st.floats(0, 0.05), st.booleans())
def test_efficiency_monotone_in_storage(t1, t2, multi):
    sc = reference_scenario(multi_pulse=multi)
    a, b = sorted((t1, t2))
    ea = efficiency_breakdown(replace(sc, store_ts=a)).eps_total
    eb = efficiency_breakdown(replace(sc, store_ts=b)).eps_total
    assert eb <= ea


@given(st.floats(1e-6, 1e-3), st.floats(0, 0.05), st.floats(1e-4, 0.1))
def test_multi_pulse_never_beats_single(tp, ts, ratio):
    sc = MemoryScenario(tp, ts, Omega_over_Delta=ratio)
    assert efficiency_breakdown(replace(sc, multi_pulse=True)).eps_total <= efficiency_breakdown(sc).eps_total


@given(st.floats(1e-7, 1e-2), st.floats(0, 0.1), st.floats(1e-4, 0.5), st.booleans())
def test_efficiencies_are_ratios(tp, ts, ratio, multi):
    b = efficiency_breakdown(MemoryScenario(tp, ts, Omega_over_Delta=ratio, multi_pulse=multi))
    for name in ("eps_w", "eps_r", "eps_rw", "eps_s", "eps_total"):
        assert 0.0 <= getattr(b, name) <= 1.0


@given(st.floats(0, 5), st.floats(0, 5))
def test_read_write_monotone_in_depth(d1, d2):
    a, b = sorted((d1, d2))
    assert read_write_efficiency(a) <= read_write_efficiency(b) <= 1.0
    assert read_write_efficiency(0.0) == 0.0


def test_delay_bandwidth_shrinks_with_coupling_scattering():
    base = reference_scenario()
    dbp = []
    for delta in (-2 * math.pi * 2e9, -2 * math.pi * 4e9, -2 * math.pi * 8e9):
        sc = replace(base, Delta_1p=delta)
        b = efficiency_breakdown(sc)
        dbp.append((b.Gamma_c, threshold_storage_time(sc, 0.9) / TP))
    gammas, products = zip(*dbp)
    assert np.all(np.diff(gammas) > 0)
    assert np.all(np.diff(products) < 0)


def test_explicit_background_rates():
    bg = BackgroundRates(1.0, 2.0, 3.0)
    b = efficiency_breakdown(replace(reference_scenario(), background=bg))
    assert b.Gamma_bg == bg.total == 6.0


def test_scenario_validation():
    with pytest.raises(ValueError):
        MemoryScenario(0.0, 1.0)
    with pytest.raises(ValueError):
        MemoryScenario(1e-6, 1.0, Omega_over_Delta=1.0)
    with pytest.raises(ValueError):
        efficiency_breakdown(reference_scenario(), Gamma_ac=-1.0)


# --- sweeps -----------------------------------------------------------------


@pytest.mark.parametrize("ratio", [0.01, 0.003, 0.001])
def test_pulse_sweep_single_interior_maximum(ratio):
    tp = np.geomspace(1e-7, 1e-1, 121)
    rows = efficiency_sweep(reference_scenario(Omega_over_Delta=ratio), "pulse_tp", tp, store_equals_pulse=True)
    eps = np.array([b.eps_total for _, b in rows])
    k = int(np.argmax(eps))
    assert 0 < k < tp.size - 1
    assert np.all(np.diff(eps[: k + 1]) >= 0) and np.all(np.diff(eps[k:]) <= 0)
    assert all(b.dbp == 1.0 for _, b in rows)


def test_long_pulse_coherence_time():
    sc = reference_scenario()
    t_e = brentq(lambda ts: efficiency_breakdown(replace(sc, store_ts=ts)).eps_s - math.exp(-1), 0, 1)
    assert t_e == pytest.approx(30e-3, rel=0.3)


def test_single_point_sweep_is_breakdown():
    sc = reference_scenario()
    rows = efficiency_sweep(sc, "store_ts", [sc.store_ts])
    assert len(rows) == 1 and rows[0][1] == efficiency_breakdown(sc)


def test_sweep_rejects_bad_axis():
    with pytest.raises(ValueError):
        efficiency_sweep(reference_scenario(), "length", [1.0])
    with pytest.raises(ValueError):
        efficiency_sweep(reference_scenario(), "pulse_tp", [0.0])


def test_threshold_edge_cases():
    sc = reference_scenario()
    assert threshold_storage_time(sc, 0.999) == 0.0
    assert threshold_storage_time(sc, 0.5, t_max=1e-4) == 1e-4


def test_sweep_csv(tmp_path):
    rows = efficiency_sweep(reference_scenario(), "store_ts", [0.0, 1e-3])
    path = tmp_path / "sweep.csv"
    write_sweep_csv(path, "store_ts", rows, {"tool": "acgem"})
    lines = path.read_text().splitlines()
    assert lines[0] == "# tool: acgem"
    table = list(csv.reader(lines[1:]))
    assert table[0] == ["store_ts", *BREAKDOWN_FIELDS]
    assert float(table[2][BREAKDOWN_FIELDS.index("eps_total") + 1]) == pytest.approx(rows[1][1].eps_total, rel=1e-8)


# --- power ------------------------------------------------------------------


def test_power_for_one_megahertz():
    p = power_for_bandwidth(1e6, ACS, OPTIMAL_SCHEME)
    assert p < 10
    assert p == pytest.approx(6.7, rel=0.2)


def test_power_for_reference_bandwidth():
    assert power_for_bandwidth(200e3, ACS) < 2
    assert power_for_bandwidth(gaussian_pulse_bandwidth(TP), ACS) < 2
    assert power_for_bandwidth(0.0, ACS) == 0.0


def test_gaussian_profile_needs_more_power():
    assert power_for_bandwidth(1e6, ACS, profile_kind="gaussian") > power_for_bandwidth(1e6, ACS)


# --- formula against simulation --------------------------------------------


@pytest.mark.parametrize("d_prime", [0.25, 0.5, 2.0])
def test_formula_matches_simulation(d_prime):
    sc = reference_scenario()
    B = optical_depth(sc, 1.0) / d_prime
    b = efficiency_breakdown(replace(sc, bandwidth_Bs=B), Gamma_ac=0.0, Gamma_c=0.0, Gamma_bg=0.0)
    assert b.d_prime == pytest.approx(d_prime, rel=1e-12)
    cfg, sched, pulse, tsw = standard_scenario(d_prime)
    sim = recall_metrics(solve(cfg, sched, pulse), pulse, tsw).efficiency
    assert b.eps_rw == pytest.approx(sim, rel=0.03)
