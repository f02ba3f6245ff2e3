"""End-to-end efficiency budget: optical depth, scattering ledger and storage time."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache
from typing import Iterable, Sequence

from scipy import constants as const
from scipy.optimize import brentq

from .atomic_structure import RB87, AtomSpec, HyperfineState
from .decoherence import TrapSpec, coupling_field_scattering, scattering_per_bandwidth, trap_report
from .stark_response import (
    OPTIMAL_SCHEME,
    EnsembleGeometry,
    IntensityProfile,
    LaserSpec,
    LevelScheme,
    gradient_and_bandwidth,
    select_level_scheme,
)


def gaussian_pulse_bandwidth(t_p: float) -> float:
    """Bandwidth 9 sqrt(2) / (pi t_p) needed to hold 99% of a Gaussian pulse's field."""
    if t_p <= 0:
        raise ValueError("pulse length must be positive")
    return 9 * math.sqrt(2) / (math.pi * t_p)


@dataclass(frozen=True)
class BackgroundRates:
    """Decoherence present throughout storage (1/s)."""

    trap_scatter: float
    collisions: float
    background_gas: float

    @property
    def total(self) -> float:
        return self.trap_scatter + self.collisions + self.background_gas


@dataclass(frozen=True)
class MemoryScenario:
    """Operating point of the Lambda-GEM memory.

    ``bandwidth_Bs`` of None means the system bandwidth tracks the pulse
    bandwidth.  ``trap`` supplies the background rates unless ``background``
    is given explicitly.
    """

    pulse_tp: float
    store_ts: float
    Omega_over_Delta: float = 0.02
    Delta_1p: float = -2 * math.pi * 2e9
    Delta_ac: float = -2 * math.pi * 5e12
    q_c: int = 1
    q_p: int = 0
    geometry: EnsembleGeometry = field(default_factory=EnsembleGeometry)
    bandwidth_Bs: float | None = None
    multi_pulse: bool = False
    trap: TrapSpec = field(default_factory=TrapSpec)
    background: BackgroundRates | None = None

    def __post_init__(self):
        if self.pulse_tp <= 0 or self.store_ts < 0:
            raise ValueError("pulse length must be positive and storage time non-negative")
        if not 0 <= abs(self.Omega_over_Delta) < 1:
            raise ValueError("|Omega_c / Delta_1p| must be below 1")
        if self.bandwidth_Bs is not None and self.bandwidth_Bs <= 0:
            raise ValueError("system bandwidth must be positive")

    @property
    def bandwidth(self) -> float:
        return gaussian_pulse_bandwidth(self.pulse_tp) if self.bandwidth_Bs is None else self.bandwidth_Bs

    @property
    def Omega_c(self) -> float:
        return abs(self.Omega_over_Delta * self.Delta_1p)

    @property
    def scheme(self) -> LevelScheme:
        return select_level_scheme(self.q_p, self.q_c)


@dataclass(frozen=True)
class EfficiencyBreakdown:
    d_prime: float
    eps_w: float
    eps_r: float
    eps_rw: float
    eps_s: float
    eps_total: float
    Gamma_bg: float
    Gamma_rw: float
    Gamma_ac: float
    Gamma_c: float
    dbp: float
    bandwidth_Bs: float


@lru_cache(maxsize=None)
def _ac_coefficient(Delta_ac: float, scheme: LevelScheme, atom: AtomSpec) -> float:
    laser = LaserSpec.from_detuning(Delta_ac, 1, atom=atom)
    return scattering_per_bandwidth(HyperfineState(1, -1), laser, scheme, atom=atom)


@lru_cache(maxsize=None)
def _coupling_rate(Omega_c: float, Delta_1p: float, q_c: int, atom: AtomSpec) -> float:
    return coupling_field_scattering(Omega_c, Delta_1p, q_c, atom=atom)


@lru_cache(maxsize=None)
def _trap_rates(trap: TrapSpec, atom: AtomSpec) -> BackgroundRates:
    rep = trap_report(trap, atom=atom)
    return BackgroundRates(rep.scatter_Gamma_t, rep.collision_rate, rep.background_rate)


def optical_depth(scenario: MemoryScenario, bandwidth: float | None = None) -> float:
    """Effective optical depth d' for a gradient spanning the system bandwidth."""
    B = scenario.bandwidth if bandwidth is None else bandwidth
    if B <= 0:
        raise ValueError("system bandwidth must be positive")
    geo = scenario.geometry
    return (
        geo.coupling_g**2 * geo.loading_eff * geo.atom_count * geo.length
        / (const.c * 2 * math.pi * B)
        * scenario.Omega_over_Delta**2
    )


def efficiency_breakdown(
    scenario: MemoryScenario,
    Gamma_ac: float | None = None,
    Gamma_c: float | None = None,
    Gamma_bg: float | None = None,
    atom: AtomSpec = RB87,
) -> EfficiencyBreakdown:
    """Read/write, storage and total efficiency of one scenario.

    Rates left as None are computed from the atomic model.  The read/write
    scattering acts for 2 t_p (single pulse) or for the whole 2 t_p + t_s
    when the fields stay on for multi-pulse storage.
    """
    B = scenario.bandwidth
    dp = optical_depth(scenario, B)
    eps_w = 1.0 - math.exp(-2 * math.pi * dp)
    if Gamma_ac is None:
        Gamma_ac = _ac_coefficient(scenario.Delta_ac, scenario.scheme, atom) * B
    if Gamma_c is None:
        Gamma_c = _coupling_rate(scenario.Omega_c, scenario.Delta_1p, scenario.q_c, atom)
    if Gamma_bg is None:
        bg = scenario.background or _trap_rates(scenario.trap, atom)
        Gamma_bg = bg.total
    if min(Gamma_ac, Gamma_c, Gamma_bg) < 0:
        raise ValueError("rates must be non-negative")
    tp, ts = scenario.pulse_tp, scenario.store_ts
    g_rw = Gamma_ac + Gamma_c
    t_rw = 2 * tp + ts if scenario.multi_pulse else 2 * tp
    eps_s = math.exp(-t_rw * g_rw) * math.exp(-(2 * tp + ts) * Gamma_bg)
    eps_rw = eps_w * eps_w
    return EfficiencyBreakdown(
        d_prime=dp,
        eps_w=eps_w,
        eps_r=eps_w,
        eps_rw=eps_rw,
        eps_s=eps_s,
        eps_total=eps_rw * eps_s,
        Gamma_bg=Gamma_bg,
        Gamma_rw=g_rw,
        Gamma_ac=Gamma_ac,
        Gamma_c=Gamma_c,
        dbp=ts / tp,
        bandwidth_Bs=B,
    )


SWEEP_AXES = ("pulse_tp", "store_ts", "Omega_over_Delta")


def efficiency_sweep(
    base: MemoryScenario,
    axis: str,
    values: Iterable[float],
    store_equals_pulse: bool = False,
    atom: AtomSpec = RB87,
    **rates,
) -> list[tuple[float, EfficiencyBreakdown]]:
    """Evaluate ``efficiency_breakdown`` along one scenario axis.

    With ``store_equals_pulse`` a pulse-length sweep also sets t_s = t_p,
    and the bandwidth follows the pulse unless ``base`` fixes it.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {SWEEP_AXES}")
    rows = []
    for v in values:
        if v <= 0 and axis != "store_ts":
            raise ValueError(f"{axis} values must be positive")
        sc = replace(base, **{axis: v})
        if store_equals_pulse and axis == "pulse_tp":
            sc = replace(sc, store_ts=v)
        rows.append((float(v), efficiency_breakdown(sc, atom=atom, **rates)))
    return rows


def threshold_storage_time(
    base: MemoryScenario,
    level: float,
    t_max: float | None = None,
    atom: AtomSpec = RB87,
    **rates,
) -> float:
    """Longest storage time with eps_total >= ``level`` (bisection on t_s).

    Returns 0 if the level is never reached and ``t_max`` if it is never
    crossed within the search span.
    """

    def f(ts):
        return efficiency_breakdown(replace(base, store_ts=ts), atom=atom, **rates).eps_total - level

    if f(0.0) < 0:
        return 0.0
    hi = t_max if t_max is not None else max(base.pulse_tp, 1e-6)
    while f(hi) >= 0:
        if t_max is not None:
            return t_max
        hi *= 2
        if hi > 1e6:
            return math.inf
    return brentq(f, 0.0, hi, xtol=1e-12, rtol=1e-10)


def power_for_bandwidth(
    B_target: float,
    laser: LaserSpec,
    scheme: LevelScheme = OPTIMAL_SCHEME,
    profile_kind: str = "linear",
    geometry: EnsembleGeometry = EnsembleGeometry(),
    atom: AtomSpec = RB87,
) -> float:
    """Gradient-laser power giving ``B_target`` Hz of system bandwidth."""
    if B_target == 0:
        return 0.0
    make = IntensityProfile.linear if profile_kind == "linear" else IntensityProfile.gaussian
    per_watt = gradient_and_bandwidth(make(1.0, geometry), laser, scheme, atom=atom).bandwidth
    if per_watt == 0:
        raise ValueError("profile produces no bandwidth per watt")
    return B_target / per_watt


# ---------------------------------------------------------------------------
# Reference operating point of the efficiency plots
# ---------------------------------------------------------------------------

#: collision rate quoted for n ~ 1e11 cm^-3 in the efficiency study (1/s)
REFERENCE_COLLISION_RATE = 30.0


def reference_scenario(t_p: float = 20e-6, Omega_over_Delta: float = 0.02, multi_pulse: bool = False) -> MemoryScenario:
    """Parameter set of the efficiency-versus-time study.

    The collision term is fixed at the quoted 30 s^-1 rather than rebuilt
    from beta n; see the decision log.
    """
    trap = TrapSpec(collision_rate_override=REFERENCE_COLLISION_RATE)
    return MemoryScenario(
        pulse_tp=t_p,
        store_ts=t_p,
        Omega_over_Delta=Omega_over_Delta,
        multi_pulse=multi_pulse,
        trap=trap,
    )


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

BREAKDOWN_FIELDS = tuple(f.name for f in fields(EfficiencyBreakdown))


def write_sweep_csv(path, axis: str, rows: Sequence[tuple[float, EfficiencyBreakdown]], header: dict | None = None):
    with open(path, "w", newline="") as fh:
        for k, v in (header or {}).items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([axis, *BREAKDOWN_FIELDS])
        for v, b in rows:
            d = asdict(b)
            w.writerow([f"{v:.9g}", *(f"{d[k]:.9g}" for k in BREAKDOWN_FIELDS)])
