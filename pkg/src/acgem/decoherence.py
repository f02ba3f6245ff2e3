"""Photon scattering, dipole-trap model and the detuning optimiser.

Scattering rates are Kramers-Heisenberg sums over the D1/D2 excited states
with the two ground hyperfine levels as final states.  Rates per unit
intensity are in 1/s per (W/m^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import constants as const
from scipy.optimize import minimize_scalar

from .atomic_structure import (
    EXCITED,
    GROUND,
    RB87,
    AtomSpec,
    HyperfineState,
    check_polarization,
    detuning_of,
    level_tables,
)
from .stark_response import (
    DEFAULT_GUARD,
    EQUAL_M_SCHEME,
    EnsembleGeometry,
    LaserSpec,
    LevelScheme,
    _check_guard,
    splittings,
    stark_shift_per_intensity,
)


class UndefinedRatioError(ValueError):
    """Scattering per bandwidth requested where the splitting vanishes."""


_KH_PREFACTOR = 1.0 / (6 * math.pi * const.epsilon_0**2 * const.hbar**3 * const.c**4)


@dataclass(frozen=True)
class ScatteringChannel:
    """One Rayleigh or Raman channel g_i -> g_f and its per-line amplitudes."""

    initial: HyperfineState
    final: HyperfineState
    omega_fi: float
    amplitude_A: dict  # J' -> C^2 m^2


def _final_omega(tab, i: int, omega_l: float):
    omega_fi = tab.ground_energy - tab.ground_energy[i]
    allowed = omega_fi <= omega_l
    return omega_fi, omega_l - omega_fi, allowed


def scattering_channels(state: HyperfineState, q: int, atom: AtomSpec = RB87):
    """Per-line amplitudes A_{J'} for every final ground sublevel reachable from ``state``."""
    check_polarization(q)
    tab = level_tables(atom)
    i = GROUND.index(state)
    jp = np.array([float(a.Jp) for a in EXCITED])
    out = []
    for f, gf in enumerate(GROUND):
        amp = {}
        for Jp in (0.5, 1.5):
            sel = jp == Jp
            amp[Jp] = float(
                sum(np.sum(tab.dipole[qs + 1, f, sel] * tab.dipole[q + 1, i, sel]) for qs in (-1, 0, 1))
            )
        if any(amp.values()):
            out.append(ScatteringChannel(state, gf, tab.ground_energy[f] - tab.ground_energy[i], amp))
    return out


def scattering_rate_per_intensity(
    state: HyperfineState,
    laser: LaserSpec,
    mode: Literal["full", "simplified"] = "full",
    rwa: bool = False,
    atom: AtomSpec = RB87,
    guard: float = DEFAULT_GUARD,
) -> float:
    """Total spontaneous scattering rate of ``state`` per unit intensity.

    ``full`` keeps every excited hyperfine sublevel in the amplitude;
    ``simplified`` collapses each fine-structure line onto its centre and
    uses the amplitudes A_{J'}.  The scattered frequency enters as
    omega_s^3 in both modes.
    """
    q = laser.q
    check_polarization(q)
    tab = level_tables(atom)
    i = GROUND.index(state)
    wl = laser.omega_l
    omega_ag = tab.excited_energy - tab.ground_energy[i]
    _check_guard(wl, omega_ag, atom, guard)
    omega_fi, omega_s, allowed = _final_omega(tab, i, wl)
    D = tab.dipole

    if mode == "full":
        # M[qs, f] summed over excited sublevels a
        M = np.einsum("sfa,a->sf", D, D[q + 1, i] / (omega_ag - wl))
        if not rwa:
            for s, qs in enumerate((-1, 0, 1)):
                phase = (-1) ** ((q + qs) % 2)
                denom = omega_ag[None, :] + omega_s[:, None]
                M[s] += phase * np.sum(D[-q + 1] * D[-qs + 1, i][None, :] / denom, axis=1)
    elif mode == "simplified":
        jp = np.array([float(a.Jp) for a in EXCITED])
        M = np.zeros((3, len(GROUND)))
        for Jp in (0.5, 1.5):
            sel = jp == Jp
            line = wl - detuning_of(wl, state, Jp, atom)  # line-centre transition frequency
            A = D[:, :, sel] @ D[q + 1, i, sel]
            M += A / (line - wl)
            if not rwa:
                for s, qs in enumerate((-1, 0, 1)):
                    phase = (-1) ** ((q + qs) % 2)
                    Ac = D[-q + 1][:, sel] @ D[-qs + 1, i, sel]
                    M[s] += phase * Ac / (line + omega_s)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    rate = np.sum(np.where(allowed, omega_s**3, 0.0) * np.sum(M * M, axis=0))
    return float(_KH_PREFACTOR * rate)


def scattering_rate(
    state: HyperfineState,
    laser: LaserSpec,
    intensity: float,
    mode: Literal["full", "simplified"] = "full",
    rwa: bool = False,
    atom: AtomSpec = RB87,
    guard: float = DEFAULT_GUARD,
) -> float:
    """Scattering rate Gamma_{F,mF} (1/s) at ``intensity`` (W/m^2)."""
    return intensity * scattering_rate_per_intensity(state, laser, mode, rwa, atom, guard)


def scattering_per_bandwidth(
    state: HyperfineState,
    laser: LaserSpec,
    scheme: LevelScheme = EQUAL_M_SCHEME,
    rwa: bool = False,
    atom: AtomSpec = RB87,
) -> float:
    """Scattering rate per hertz of two-photon splitting, (1/s) per Hz.

    Multiply by the system bandwidth to get the gradient-induced
    decoherence rate Gamma_ac; multiply by 1e6 for the rate per MHz.
    """
    if laser.q == 0:
        raise UndefinedRatioError("delta_t vanishes for q = 0")
    dt = splittings(laser, scheme, rwa, atom).delta_t
    if dt == 0:
        raise UndefinedRatioError("delta_t vanishes at this detuning")
    return scattering_rate_per_intensity(state, laser, "full", rwa, atom) / dt


@dataclass(frozen=True)
class OptimalDetuning:
    detuning: float  # rad/s, signed like the search range
    rate: float  # (1/s) per Hz
    boundary: bool
    grid: np.ndarray = field(repr=False, compare=False)
    values: np.ndarray = field(repr=False, compare=False)


def find_optimal_detuning(
    state: HyperfineState,
    q: int = 1,
    scheme: LevelScheme = EQUAL_M_SCHEME,
    search_range=(-2 * math.pi * 0.5e12, -2 * math.pi * 40e12),
    n_grid: int = 400,
    rtol: float = 0.01,
    rwa: bool = False,
    atom: AtomSpec = RB87,
) -> OptimalDetuning:
    """Detuning Delta_{1/2,2} that minimises scattering per unit bandwidth.

    A log-spaced grid in |Delta| is searched first, then the bracketing cell
    is refined by golden section to ``rtol`` in Delta.  Ties go to the
    smaller |Delta|.  A minimum on the grid edge sets ``boundary``.
    """
    lo, hi = search_range
    if lo == 0 or hi == 0 or np.sign(lo) != np.sign(hi):
        raise ValueError("search range must not cross zero")
    sgn = float(np.sign(lo))
    a, b = sorted((abs(lo), abs(hi)))
    mags = np.geomspace(a, b, n_grid)

    def f(mag):
        laser = LaserSpec.from_detuning(sgn * mag, q, atom=atom)
        return scattering_per_bandwidth(state, laser, scheme, rwa, atom)

    vals = np.array([f(m) for m in mags])
    k = int(np.argmin(vals))
    if k == 0 or k == n_grid - 1:
        return OptimalDetuning(sgn * mags[k], float(vals[k]), True, sgn * mags, vals)
    res = minimize_scalar(
        lambda x: f(math.exp(x)),
        bracket=(math.log(mags[k - 1]), math.log(mags[k]), math.log(mags[k + 1])),
        method="golden",
        tol=rtol / 10,
    )
    best, rate = math.exp(res.x), float(res.fun)
    if rate > vals[k]:
        best, rate = mags[k], float(vals[k])
    return OptimalDetuning(sgn * best, rate, False, sgn * mags, vals)


def coupling_field_scattering(
    Omega_c: float,
    Delta_1p: float,
    q_c: int = 0,
    rwa: bool = False,
    atom: AtomSpec = RB87,
    guard: float = DEFAULT_GUARD,
) -> float:
    """Scattering of the storage state |F=1, mF=-1> caused by the coupling field.

    The coupling field drives F=2 -> J'=1/2 with one-photon detuning
    ``Delta_1p``; seen from F=1 it is detuned by Delta_1p - Delta_hfs.
    Its intensity follows from the Rabi frequency through the D1 reduced
    matrix element sqrt(2J+1) <J||d||J'>.
    """
    check_polarization(q_c)
    if Omega_c == 0:
        return 0.0
    mu_sq = 2 * atom.reduced_dipole(0.5) ** 2
    intensity = 2 * const.hbar**2 * const.epsilon_0 * const.c * Omega_c**2 / mu_sq
    laser = LaserSpec(atom.omega_D1 + Delta_1p, q_c)
    return scattering_rate(HyperfineState(1, -1), laser, intensity, "full", rwa, atom, guard)


# ---------------------------------------------------------------------------
# Dipole trap
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrapSpec:
    """Far-detuned standing-wave dipole trap holding the ensemble."""

    wavelength: float = 1064e-9
    power: float = 1.5
    waist: float = 10e-6
    geometry: EnsembleGeometry = field(default_factory=EnsembleGeometry)
    pressure_inv_alpha: float = 1.0  # s
    beta_hcc: float = 5e-17  # m^3/s
    density_n: float | None = None  # m^-3, None: loaded-atom density of the geometry
    collision_rate_override: float | None = None

    def __post_init__(self):
        for name in ("wavelength", "power", "waist", "pressure_inv_alpha", "beta_hcc", "density_n"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"trap field {name} must be positive")

    @property
    def peak_intensity(self) -> float:
        return 2 * self.power / (math.pi * self.waist**2)


@dataclass(frozen=True)
class TrapReport:
    depth_Ut: float  # K
    scatter_Gamma_t: float  # 1/s
    lifetime_tau_trap: float  # s
    site_detuning_diff: float  # Hz
    collision_rate: float  # 1/s
    background_rate: float  # 1/s
    coherence_time: float  # s
    recoil_energy: float  # J

    @property
    def total_rate(self) -> float:
        return self.scatter_Gamma_t + self.collision_rate + self.background_rate


#: state whose trap depth and scattering are reported
TRAP_STATE = HyperfineState(1, -1)


def trap_lifetime(depth: float, gamma_t: float, atom: AtomSpec = RB87) -> float:
    """Heating-limited lifetime m U / (hbar^2 k^2 Gamma_t), ``depth`` in J."""
    if gamma_t <= 0:
        return math.inf
    k = atom.omega_D2 / const.c
    return atom.mass * depth / (const.hbar**2 * k**2 * gamma_t)


def trap_report(
    trap: TrapSpec,
    bandwidth: float = 0.0,
    rwa: bool = False,
    atom: AtomSpec = RB87,
) -> TrapReport:
    """Depth, heating-limited lifetime and decoherence budget of the trap.

    The trap light is taken as linearly polarised.  ``bandwidth`` (Hz) sets
    the detuning difference between adjacent standing-wave sites.
    """
    laser = LaserSpec(2 * math.pi * const.c / trap.wavelength, 0, trap.power)
    I = trap.peak_intensity
    U = I * stark_shift_per_intensity(TRAP_STATE, laser, "full", rwa, atom)
    gamma_t = scattering_rate(TRAP_STATE, laser, I, "full", rwa, atom)
    k = atom.omega_D2 / const.c
    m = atom.mass
    depth = abs(U)
    tau = trap_lifetime(depth, gamma_t, atom)
    n = trap.geometry.density if trap.density_n is None else trap.density_n
    coll = trap.beta_hcc * n if trap.collision_rate_override is None else trap.collision_rate_override
    bg = 1.0 / trap.pressure_inv_alpha
    total = gamma_t + coll + bg
    return TrapReport(
        depth_Ut=depth / const.k,
        scatter_Gamma_t=gamma_t,
        lifetime_tau_trap=tau,
        site_detuning_diff=bandwidth * trap.wavelength / (2 * trap.geometry.length),
        collision_rate=coll,
        background_rate=bg,
        coherence_time=1.0 / total,
        recoil_energy=(const.hbar * k) ** 2 / (2 * m),
    )
