"""AC Stark shifts, mF splittings, intensity profiles and the resulting gradient.

Shifts are returned in joules, splittings in Hz per (W/m^2).  Detunings are
angular frequencies; red detuning is negative.  Multiply a per-(W/m^2)
splitting by ``W_PER_CM2`` to get Hz per (W/cm^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import constants as const

from .atomic_structure import (
    GROUND,
    RB87,
    AtomSpec,
    HyperfineState,
    check_polarization,
    detuning_of,
    level_tables,
)

W_PER_CM2 = 1e4  # W/m^2 in one W/cm^2
DEFAULT_GUARD = 10.0  # in units of gamma


class NearResonanceError(ValueError):
    """Laser too close to an atomic transition for perturbation theory."""


class ForbiddenSchemeError(ValueError):
    """Level scheme needs |m2| > 2."""


@dataclass(frozen=True)
class LaserSpec:
    """Off-resonant laser: angular frequency, polarisation q and power."""

    omega_l: float
    q: int = 1
    power: float = 0.0

    def __post_init__(self):
        check_polarization(self.q)
        if self.power < 0:
            raise ValueError("laser power must be non-negative")

    @classmethod
    def from_detuning(cls, delta_12: float, q: int = 1, power: float = 0.0, atom: AtomSpec = RB87):
        """Laser detuned by ``delta_12`` (rad/s) from the F=2 -> D1 line."""
        return cls(atom.omega_D1 + delta_12, q, power)

    def detuning(self, atom: AtomSpec = RB87) -> float:
        """Detuning from F=2 -> J'=1/2 (the Delta_{1/2,2} of the optimisation plots)."""
        return self.omega_l - atom.omega_D1

    def with_q(self, q: int) -> "LaserSpec":
        return LaserSpec(self.omega_l, q, self.power)


@dataclass(frozen=True)
class EnsembleGeometry:
    """Cylindrical cold-atom ensemble held in the dipole trap."""

    length: float = 0.01
    radius: float = 1e-5
    atom_count: float = 2.5e6
    loading_eff: float = 0.4
    coupling_g: float = 2 * math.pi * 1.5e6

    def __post_init__(self):
        if self.length <= 0 or self.radius <= 0:
            raise ValueError("ensemble length and radius must be positive")
        if not 0.0 <= self.loading_eff <= 1.0:
            raise ValueError("loading efficiency must lie in [0, 1]")

    @property
    def volume(self) -> float:
        return math.pi * self.radius**2 * self.length

    @property
    def density(self) -> float:
        """Uniform density of loaded atoms (m^-3)."""
        return self.loading_eff * self.atom_count / self.volume


# ---------------------------------------------------------------------------
# Stark shifts
# ---------------------------------------------------------------------------


def _check_guard(omega_l: float, omega_ag: np.ndarray, atom: AtomSpec, guard: float):
    gap = np.min(np.abs(omega_l - omega_ag))
    if gap < guard * atom.gamma:
        raise NearResonanceError(
            f"laser is {gap / (2 * math.pi):.3g} Hz from a transition "
            f"(guard band {guard:g} gamma)"
        )


def stark_shift_per_intensity(
    state: HyperfineState,
    laser: LaserSpec,
    mode: Literal["full", "approx"] = "full",
    rwa: bool = False,
    atom: AtomSpec = RB87,
    guard: float = DEFAULT_GUARD,
) -> float:
    """Light shift of ``state`` per unit intensity, in J per (W/m^2).

    ``full`` sums second-order perturbation theory over every D1/D2 excited
    sublevel; ``approx`` is the closed form valid far outside the excited
    hyperfine structure.  With ``rwa=False`` the counter-rotating terms are
    kept; they couple through the opposite circular component.
    """
    q = laser.q
    tab = level_tables(atom)
    i = GROUND.index(state)
    omega_ag = tab.excited_energy - tab.ground_energy[i]
    _check_guard(laser.omega_l, omega_ag, atom, guard)

    if mode == "approx":
        gq = q * atom.lande_gF(state.F) * state.mF
        d32 = detuning_of(laser.omega_l, state, 1.5, atom)
        d12 = detuning_of(laser.omega_l, state, 0.5, atom)
        w0 = atom.omega_mean
        u = (2 + gq) / d32 + (1 - gq) / d12
        if not rwa:
            # counter-rotating partners: Delta -> -(omega_l + omega_a), q -> -q
            s32 = -(2 * laser.omega_l - d32)
            s12 = -(2 * laser.omega_l - d12)
            u += (2 - gq) / s32 + (1 + gq) / s12
        return math.pi * const.c**2 * atom.gamma / (2 * w0**3) * u
    if mode != "full":
        raise ValueError(f"unknown mode {mode!r}")

    d = tab.dipole[q + 1, i]
    total = np.sum(d * d / (laser.omega_l - omega_ag))
    if not rwa:
        dc = tab.dipole[-q + 1, i]
        total -= np.sum(dc * dc / (laser.omega_l + omega_ag))
    return float(total / (2 * const.c * const.epsilon_0 * const.hbar))


def stark_shift(
    state: HyperfineState,
    laser: LaserSpec,
    intensity: float,
    mode: Literal["full", "approx"] = "full",
    rwa: bool = False,
    atom: AtomSpec = RB87,
    guard: float = DEFAULT_GUARD,
) -> float:
    """Light shift U_{F,mF} in joules at the given intensity (W/m^2)."""
    return intensity * stark_shift_per_intensity(state, laser, mode, rwa, atom, guard)


# ---------------------------------------------------------------------------
# Level schemes and splittings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelScheme:
    """Choice of the two ground sublevels |1> = (F=1, m1) and |2> = (F=2, m2)."""

    m1: int = -1
    m2: int = -1
    q_p: int = 0
    q_c: int = 0

    def __post_init__(self):
        check_polarization(self.q_p)
        check_polarization(self.q_c)
        if abs(self.m1) > 1:
            raise ValueError("|m1| must be <= 1")
        if abs(self.m2) > 2:
            raise ForbiddenSchemeError(f"m2 = {self.m2} needs |m2| <= 2")
        if self.m2 != self.m1 + self.q_p - self.q_c:
            raise ValueError("selection rule m2 = m1 + q_p - q_c violated")

    @property
    def multiplier(self) -> int:
        """delta_t / delta_F for q = +1 when delta_1 = delta_2 >> delta_12."""
        return -(self.m1 + self.m2)

    def multiplier_for(self, q: int) -> int:
        return q * self.multiplier

    @property
    def state1(self) -> HyperfineState:
        return HyperfineState(1, self.m1)

    @property
    def state2(self) -> HyperfineState:
        return HyperfineState(2, self.m2)


#: splitting arrangement of the scattering-versus-detuning plots (m1 = m2 = -1)
EQUAL_M_SCHEME = LevelScheme(-1, -1, 0, 0)
#: best scheme, delta_t ~ 3 delta_F
OPTIMAL_SCHEME = LevelScheme(-1, -2, 0, 1)


def select_level_scheme(q_p: int, q_c: int, m1: int = -1) -> LevelScheme:
    """Level scheme fixed by the probe/coupling polarisations.

    ``m2 = m1 + q_p - q_c``; the ``multiplier`` property gives
    ``q * (2 + q_c - q_p)`` for q = +1 and m1 = -1.
    """
    m2 = m1 + q_p - q_c
    if abs(m2) > 2:
        raise ForbiddenSchemeError(f"q_p={q_p}, q_c={q_c} needs m2 = {m2}")
    return LevelScheme(m1, m2, q_p, q_c)


@dataclass(frozen=True)
class SplittingSet:
    """Per-unit-intensity splittings (Hz per W/m^2) at one detuning and polarisation.

    All splittings are magnitudes.  ``delta_F`` is half the gap between
    mF = +1 and mF = -1, which drops the small tensor shift left by the
    resolved excited hyperfine structure; ``delta_F_adjacent`` keeps the
    plain |U(F,0) - U(F,1)| / h.  ``sign_12`` and ``sign`` carry the signs
    of delta_12 and delta_t; ``physical`` is the signed shift
    ``(U_2 - U_1) / h`` of the scheme's two states.
    """

    detuning: float
    q: int
    delta_F: dict
    delta_12: float
    delta_t: float
    sign_12: int
    sign: int
    physical: float
    scheme: LevelScheme = EQUAL_M_SCHEME
    delta_F_adjacent: dict | None = None

    @property
    def delta_1(self) -> float:
        return self.delta_F[1]

    @property
    def delta_2(self) -> float:
        return self.delta_F[2]


def splittings(
    laser: LaserSpec,
    scheme: LevelScheme = EQUAL_M_SCHEME,
    rwa: bool = False,
    atom: AtomSpec = RB87,
    guard: float = DEFAULT_GUARD,
) -> SplittingSet:
    """Splittings per unit intensity from the full light-shift sum."""

    def u(F, m):
        return stark_shift_per_intensity(HyperfineState(F, m), laser, "full", rwa, atom, guard)

    h = const.h
    # half the mF = +1 / -1 gap: the vector part only, so q = 0 gives exactly 0
    dF = {F: abs(u(F, 1) - u(F, -1)) / (2 * h) for F in (1, 2)}
    adjacent = {F: abs(u(F, 0) - u(F, 1)) / h for F in (1, 2)}
    d12 = (u(1, 0) - u(2, 0)) / h
    q = laser.q
    dt = d12 - q * (scheme.m2 * dF[2] + scheme.m1 * dF[1])
    phys = (u(2, scheme.m2) - u(1, scheme.m1)) / h
    return SplittingSet(
        laser.detuning(atom), q, dF, abs(d12), abs(dt),
        _sign(d12), _sign(dt), phys, scheme, adjacent,
    )


def _sign(x: float) -> int:
    return -1 if x < 0 else 1


def two_photon_shift_per_intensity(
    laser: LaserSpec, scheme: LevelScheme, rwa: bool = False, atom: AtomSpec = RB87
) -> float:
    """Signed shift of the |1> -> |2> Raman resonance, Hz per (W/m^2)."""
    u2 = stark_shift_per_intensity(scheme.state2, laser, "full", rwa, atom)
    u1 = stark_shift_per_intensity(scheme.state1, laser, "full", rwa, atom)
    return (u2 - u1) / const.h


def delta_t_approx(laser: LaserSpec, scheme: LevelScheme, atom: AtomSpec = RB87) -> float:
    """Closed-form delta_t ~ q * delta_F * (2 + q_c - q_p) from the far-detuned formula."""
    g = HyperfineState(2, 0)
    d12 = detuning_of(laser.omega_l, g, 0.5, atom)
    d32 = detuning_of(laser.omega_l, g, 1.5, atom)
    w0 = atom.omega_mean
    dF = (
        math.pi * const.c**2 * atom.gamma / (2 * w0**3 * const.h)
        * abs(laser.q * atom.lande_gF(2) / d12)
        * (1 - d12 / d32)
    )
    return laser.q * dF * scheme.multiplier


# ---------------------------------------------------------------------------
# Intensity profiles and the detuning gradient
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntensityProfile:
    """Intensity of the gradient beam over the ensemble.

    ``linear``: I0 (1 - z/L) for |x| <= R, zero outside.
    ``gaussian``: I0 exp(-2 (x^2 + z^2) / w0^2), focused on the z = 0 end.
    ``sampled``: on-axis values given on a z grid, linearly interpolated.
    """

    kind: Literal["linear", "gaussian", "sampled"]
    I0: float
    geometry: EnsembleGeometry = field(default_factory=EnsembleGeometry)
    waist: float | None = None
    z_samples: tuple | None = None
    I_samples: tuple | None = None

    def __post_init__(self):
        if self.I0 < 0:
            raise ValueError("peak intensity must be non-negative")
        if self.kind == "gaussian" and self.waist is None:
            object.__setattr__(self, "waist", 2 * self.geometry.length / 3)
        if self.kind == "sampled" and (self.z_samples is None or self.I_samples is None):
            raise ValueError("sampled profile needs z_samples and I_samples")

    @classmethod
    def linear(cls, power: float, geometry: EnsembleGeometry = EnsembleGeometry()):
        return cls("linear", power / (geometry.length * geometry.radius), geometry)

    @classmethod
    def gaussian(cls, power: float, geometry: EnsembleGeometry = EnsembleGeometry(), waist=None):
        w0 = 2 * geometry.length / 3 if waist is None else waist
        return cls("gaussian", 2 * power / (math.pi * w0**2), geometry, w0)

    @classmethod
    def sampled(cls, z, intensity, geometry: EnsembleGeometry = EnsembleGeometry()):
        z = tuple(float(v) for v in z)
        vals = tuple(float(v) for v in intensity)
        return cls("sampled", max(vals), geometry, None, z, vals)

    def intensity(self, x, z):
        z = np.asarray(z, dtype=float)
        x = np.asarray(x, dtype=float)
        L = self.geometry.length
        if np.any(z < -1e-12 * L) or np.any(z > L * (1 + 1e-12)):
            raise ValueError("z outside the ensemble [0, L]")
        if self.kind == "linear":
            out = self.I0 * (1 - z / L) * (np.abs(x) <= self.geometry.radius)
        elif self.kind == "gaussian":
            out = self.I0 * np.exp(-2 * (x**2 + z**2) / self.waist**2)
        else:
            out = np.interp(z, self.z_samples, self.I_samples) * np.ones_like(x)
        return out

    def slope(self, z):
        """dI/dz on axis (W/m^3)."""
        z = np.asarray(z, dtype=float)
        L = self.geometry.length
        if self.kind == "linear":
            return np.full_like(z, -self.I0 / L)
        if self.kind == "gaussian":
            return -4 * z / self.waist**2 * self.I0 * np.exp(-2 * z**2 / self.waist**2)
        zs = np.asarray(self.z_samples)
        return np.interp(z, zs, np.gradient(np.asarray(self.I_samples), zs))


def profile_intensity(profile: IntensityProfile, x, z):
    return profile.intensity(x, z)


@dataclass(frozen=True)
class GradientResult:
    z: np.ndarray
    eta: np.ndarray  # rad/s per m
    bandwidth: float  # Hz
    monotonic: bool
    delta_t: float  # Hz per (W/m^2)

    @property
    def detuning(self) -> np.ndarray:
        """Two-photon detuning along the ensemble relative to z = 0 (Hz)."""
        from scipy.integrate import cumulative_trapezoid

        return cumulative_trapezoid(self.eta, self.z, initial=0.0) / (2 * math.pi)


def gradient_and_bandwidth(
    profile: IntensityProfile,
    laser: LaserSpec,
    scheme: LevelScheme = OPTIMAL_SCHEME,
    z_points: int = 512,
    rwa: bool = False,
    atom: AtomSpec = RB87,
) -> GradientResult:
    """Frequency gradient eta(z) = 2 pi delta_t dI/dz and system bandwidth.

    The bandwidth is |delta_t (I(L) - I(0))|.  A profile whose slope changes
    sign is flagged through ``monotonic`` rather than rejected.
    """
    L = profile.geometry.length
    z = np.linspace(0.0, L, z_points)
    dt = splittings(laser, scheme, rwa, atom).delta_t
    slope = profile.slope(z)
    eta = 2 * math.pi * dt * slope  # dt is a magnitude; eta follows the slope sign
    nz = slope[np.abs(slope) > 1e-12 * np.max(np.abs(slope), initial=0.0)]
    monotonic = bool(np.all(nz >= 0) or np.all(nz <= 0))
    i_end = profile.intensity(0.0, np.array([0.0, L]))
    bw = abs(dt * (i_end[1] - i_end[0]))
    return GradientResult(z, eta, float(bw), monotonic, dt)
