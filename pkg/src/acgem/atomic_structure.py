"""Rb-87 level structure, angular-momentum algebra and dipole matrix elements.

Energies are stored as angular frequencies (rad/s) measured from the
5S1/2 F=2 ground level.  Dipole elements are in C*m.

Reduced dipole elements follow the convention where summing
``|<a|d_q|g>|**2`` over every excited sublevel ``a`` of one J' manifold and
every polarisation ``q`` returns ``reduced_dipole(J')**2`` for any ground
sublevel ``g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

import numpy as np
from scipy import constants as const

NUCLEAR_SPIN = Fraction(3, 2)
GROUND_J = Fraction(1, 2)
EXCITED_JS = (Fraction(1, 2), Fraction(3, 2))
POLARIZATIONS = (-1, 0, 1)

RB87_MASS = 86.909180527 * const.atomic_mass


# ---------------------------------------------------------------------------
# Wigner symbols
# ---------------------------------------------------------------------------


def _twice(x) -> int:
    """Return 2*x as an int, raising if x is not a half-integer."""
    t = 2 * x
    r = round(t)
    if abs(t - r) > 1e-9:
        raise ValueError(f"{x!r} is not a half-integer")
    return int(r)


def _logfact(n2: int) -> float:
    # n2 is twice an integer argument
    return math.lgamma(n2 // 2 + 1)


def _triangle_ok(a: int, b: int, c: int) -> bool:
    # arguments doubled
    return (a + b + c) % 2 == 0 and abs(a - b) <= c <= a + b


def _log_delta(a: int, b: int, c: int) -> float:
    return (
        _logfact(a + b - c)
        + _logfact(a - b + c)
        + _logfact(-a + b + c)
        - _logfact(a + b + c + 2)
    )


@lru_cache(maxsize=65536)
def _wigner_3j_twice(j1: int, j2: int, j3: int, m1: int, m2: int, m3: int) -> float:
    if min(j1, j2, j3) < 0:
        raise ValueError("angular momenta must be non-negative")
    if m1 + m2 + m3 != 0:
        return 0.0
    for j, m in ((j1, m1), (j2, m2), (j3, m3)):
        if abs(m) > j or (j - m) % 2:
            return 0.0
    if not _triangle_ok(j1, j2, j3):
        return 0.0

    log_pref = 0.5 * (
        _log_delta(j1, j2, j3)
        + _logfact(j1 + m1) + _logfact(j1 - m1)
        + _logfact(j2 + m2) + _logfact(j2 - m2)
        + _logfact(j3 + m3) + _logfact(j3 - m3)
    )
    # k runs over integers; every factorial argument must be >= 0
    kmin = max(0, j2 - j3 - m1, j1 - j3 + m2) // 2
    kmax = min(j1 + j2 - j3, j1 - m1, j2 + m2) // 2
    total = 0.0
    for k in range(kmin, kmax + 1):
        k2 = 2 * k
        log_den = (
            _logfact(k2)
            + _logfact(j3 - j2 + k2 + m1)
            + _logfact(j3 - j1 + k2 - m2)
            + _logfact(j1 + j2 - j3 - k2)
            + _logfact(j1 - k2 - m1)
            + _logfact(j2 - k2 + m2)
        )
        total += (-1) ** k * math.exp(log_pref - log_den)
    phase = (j1 - j2 - m3) // 2
    return -total if phase % 2 else total


def wigner_3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3j symbol from the Racah sum.

    Arguments may be ints, Fractions or floats but must be half-integers.
    Returns 0 whenever a selection rule (triangle, m-sum, |m| <= j) fails.
    """
    return _wigner_3j_twice(*(_twice(x) for x in (j1, j2, j3, m1, m2, m3)))


@lru_cache(maxsize=65536)
def _wigner_6j_twice(j1: int, j2: int, j3: int, j4: int, j5: int, j6: int) -> float:
    if min(j1, j2, j3, j4, j5, j6) < 0:
        raise ValueError("angular momenta must be non-negative")
    triads = ((j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3))
    if not all(_triangle_ok(*t) for t in triads):
        return 0.0
    log_pref = 0.5 * sum(_log_delta(*t) for t in triads)
    sums = [sum(t) for t in triads]
    tmin = max(sums) // 2
    tmax = min(j1 + j2 + j4 + j5, j2 + j3 + j5 + j6, j3 + j1 + j6 + j4) // 2
    total = 0.0
    for t in range(tmin, tmax + 1):
        t2 = 2 * t
        log_num = _logfact(t2 + 2)
        log_den = sum(_logfact(t2 - s) for s in sums) + (
            _logfact(j1 + j2 + j4 + j5 - t2)
            + _logfact(j2 + j3 + j5 + j6 - t2)
            + _logfact(j3 + j1 + j6 + j4 - t2)
        )
        total += (-1) ** t * math.exp(log_pref + log_num - log_den)
    return total


def wigner_6j(j1, j2, j3, j4, j5, j6) -> float:
    """Wigner 6j symbol {j1 j2 j3; j4 j5 j6} (Racah formula).

    Zero if any of the four triads breaks the triangle rule.
    """
    return _wigner_6j_twice(*(_twice(x) for x in (j1, j2, j3, j4, j5, j6)))


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------


def _allowed_F(J) -> list[int]:
    J = Fraction(J)
    lo, hi = abs(J - NUCLEAR_SPIN), J + NUCLEAR_SPIN
    return [int(lo) + k for k in range(int(hi - lo) + 1)]


def check_polarization(q: int) -> int:
    if q not in POLARIZATIONS:
        raise ValueError(f"polarisation q must be -1, 0 or +1, got {q!r}")
    return int(q)


@dataclass(frozen=True)
class HyperfineState:
    """Ground sublevel |J=1/2, F, mF>."""

    F: int
    mF: int
    J: Fraction = GROUND_J

    def __post_init__(self):
        if Fraction(self.J) != GROUND_J:
            raise ValueError("ground states have J = 1/2")
        if self.F not in _allowed_F(self.J):
            raise ValueError(f"F={self.F} not allowed for J=1/2, I=3/2")
        if abs(self.mF) > self.F:
            raise ValueError(f"|mF| > F for F={self.F}, mF={self.mF}")


@dataclass(frozen=True)
class ExcitedState:
    """Excited sublevel |J', F', mF'> of the 5P manifold."""

    Jp: Fraction
    Fp: int
    mFp: int

    def __post_init__(self):
        object.__setattr__(self, "Jp", Fraction(self.Jp))
        if self.Jp not in EXCITED_JS:
            raise ValueError(f"J'={self.Jp} is not a D-line excited level")
        if self.Fp not in _allowed_F(self.Jp):
            raise ValueError(f"F'={self.Fp} not allowed for J'={self.Jp}")
        if abs(self.mFp) > self.Fp:
            raise ValueError(f"|mF'| > F' for F'={self.Fp}, mF'={self.mFp}")


def ground_states(F: int | None = None) -> Iterator[HyperfineState]:
    for FF in _allowed_F(GROUND_J):
        if F is not None and FF != F:
            continue
        for m in range(-FF, FF + 1):
            yield HyperfineState(FF, m)


def excited_states(Jp=None) -> Iterator[ExcitedState]:
    for J in EXCITED_JS:
        if Jp is not None and J != Fraction(Jp):
            continue
        for Fp in _allowed_F(J):
            for m in range(-Fp, Fp + 1):
                yield ExcitedState(J, Fp, m)


# ---------------------------------------------------------------------------
# Atom data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AtomSpec:
    """Rb-87 constants in SI / angular-frequency units.

    The D2 line is placed exactly ``delta_fs`` above the D1 line, so
    ``wavelength_D2`` is derived (780.5 nm for the defaults).
    """

    mass: float = RB87_MASS
    wavelength_D1: float = 795e-9
    gamma: float = 2 * math.pi * 6e6
    # per-line decay rates set the D1/D2 oscillator strengths
    gamma_lines: dict = field(
        default_factory=lambda: {
            Fraction(1, 2): 2 * math.pi * 5.746e6,
            Fraction(3, 2): 2 * math.pi * 6.065e6,
        }
    )
    delta_hfs: float = 2 * math.pi * 6.8e9
    delta_fs: float = 2 * math.pi * 7e12
    excited_hfs: dict = field(
        default_factory=lambda: {
            Fraction(1, 2): 2 * math.pi * 800e6,
            Fraction(3, 2): 2 * math.pi * 500e6,
        }
    )
    lande_g: dict = field(default_factory=lambda: {1: -0.5, 2: 0.5})

    def __post_init__(self):
        if self.gamma <= 0 or min(self.gamma_lines.values()) <= 0:
            raise ValueError("decay rates must be positive")

    def __hash__(self):
        return hash(
            (self.mass, self.wavelength_D1, self.gamma, self.delta_hfs, self.delta_fs)
            + tuple(sorted(self.gamma_lines.items()))
            + tuple(sorted(self.excited_hfs.items()))
        )

    @property
    def omega_D1(self) -> float:
        return 2 * math.pi * const.c / self.wavelength_D1

    @property
    def omega_D2(self) -> float:
        return self.omega_D1 + self.delta_fs

    @property
    def wavelength_D2(self) -> float:
        return 2 * math.pi * const.c / self.omega_D2

    @property
    def omega_mean(self) -> float:
        """Average of the two D-line frequencies."""
        return 0.5 * (self.omega_D1 + self.omega_D2)

    def omega_line(self, Jp) -> float:
        return self.omega_D1 if Fraction(Jp) == Fraction(1, 2) else self.omega_D2

    def delta_hfs_excited(self, Jp) -> float:
        return self.excited_hfs[Fraction(Jp)]

    def lande_gF(self, F: int) -> float:
        return self.lande_g[F]

    def line_gamma(self, Jp) -> float:
        return self.gamma_lines[Fraction(Jp)]

    def reduced_dipole(self, Jp) -> float:
        """<J=1/2||e r||J'> from the line's decay rate (C*m)."""
        Jp = Fraction(Jp)
        w = self.omega_line(Jp)
        mult = (2 * Jp + 1) / (2 * GROUND_J + 1)
        return math.sqrt(
            float(mult) * 3 * math.pi * const.epsilon_0 * const.hbar * const.c**3
            * self.line_gamma(Jp) / w**3
        )

    def ground_energy(self, F: int) -> float:
        return 0.0 if F == 2 else -self.delta_hfs

    def excited_energy(self, Jp, Fp: int) -> float:
        """Energy of an excited F' level; F' levels spread evenly over the manifold width."""
        Jp = Fraction(Jp)
        Fs = _allowed_F(Jp)
        centre = self.omega_line(Jp)
        if len(Fs) == 1:
            return centre
        width = self.delta_hfs_excited(Jp)
        frac = (Fp - Fs[0]) / (len(Fs) - 1) - 0.5
        return centre + frac * width

    def transition_omega(self, g: HyperfineState, a: ExcitedState) -> float:
        return self.excited_energy(a.Jp, a.Fp) - self.ground_energy(g.F)


RB87 = AtomSpec()


# ---------------------------------------------------------------------------
# Matrix elements and detunings
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4096)
def _angular_factor(F: int, mF: int, Jp: Fraction, Fp: int, mFp: int, q: int) -> float:
    if mFp != mF + q or abs(Fp - F) > 1:
        return 0.0
    J, I = GROUND_J, NUCLEAR_SPIN
    three_j = wigner_3j(Fp, 1, F, -mFp, q, mF)
    if three_j == 0.0:
        return 0.0
    six_j = wigner_6j(Jp, Fp, I, F, J, 1)
    phase = (Fp - mFp) + (Jp + I + F + 1)
    sign = -1.0 if int(phase) % 2 else 1.0
    # sqrt(2J+1) converts the stored reduced element to the Edmonds normalisation
    return sign * three_j * six_j * math.sqrt((2 * Fp + 1) * (2 * F + 1) * float(2 * J + 1))


def dipole_matrix_element(g: HyperfineState, a: ExcitedState, q: int, atom: AtomSpec = RB87) -> float:
    """<a| e r . eps_q |g> in C*m (real)."""
    check_polarization(q)
    return _angular_factor(g.F, g.mF, a.Jp, a.Fp, a.mFp, q) * atom.reduced_dipole(a.Jp)


def detuning_of(laser_omega: float, g: HyperfineState, Jp, atom: AtomSpec = RB87) -> float:
    """Laser detuning from the centre of the J' manifold as seen from ground level F.

    Negative for red detuning.
    """
    return laser_omega - (atom.omega_line(Jp) - atom.ground_energy(g.F))


def laser_omega_for(delta_12: float, atom: AtomSpec = RB87) -> float:
    """Laser angular frequency giving detuning ``delta_12`` from F=2 -> J'=1/2."""
    return atom.omega_D1 + delta_12


# ---------------------------------------------------------------------------
# Dense tables for the perturbative sums
# ---------------------------------------------------------------------------

GROUND = tuple(ground_states())
EXCITED = tuple(excited_states())


@dataclass(frozen=True)
class LevelTables:
    """Dipole elements and energies laid out as arrays.

    ``dipole[q + 1, i, a]`` is ``<EXCITED[a]| d_q |GROUND[i]>``.
    """

    dipole: np.ndarray
    ground_energy: np.ndarray
    excited_energy: np.ndarray

    def index(self, g: HyperfineState) -> int:
        return GROUND.index(g)


@lru_cache(maxsize=32)
def level_tables(atom: AtomSpec = RB87) -> LevelTables:
    dip = np.zeros((3, len(GROUND), len(EXCITED)))
    for k, q in enumerate(POLARIZATIONS):
        for i, g in enumerate(GROUND):
            for a, e in enumerate(EXCITED):
                dip[k, i, a] = dipole_matrix_element(g, e, q, atom)
    eg = np.array([atom.ground_energy(g.F) for g in GROUND])
    ee = np.array([atom.excited_energy(e.Jp, e.Fp) for e in EXCITED])
    for arr in (dip, eg, ee):
        arr.setflags(write=False)
    return LevelTables(dip, eg, ee)
