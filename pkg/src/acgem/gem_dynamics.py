"""Gradient echo memory dynamics in the weak-probe, two-level picture.

The coherence sigma(z, t) and field envelope E(z, t) obey, in a frame moving
with the light,

    d sigma / dt = -(gamma/2 + 2 pi i delta(z, t)) sigma + i g E
    d E / dz     = i kappa sigma,        kappa = g N / c

with E(0, t) set by the input pulse.  sigma is advanced by classic RK4 and
E is rebuilt at every stage by trapezoidal quadrature from the input face.
A far-detuned Lambda system maps onto this through ``effective_two_level``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import constants as const

from .stark_response import EnsembleGeometry


class SolverError(RuntimeError):
    """Integration aborted: step-size bound violated or non-finite values."""


class SwitchMethod(str, Enum):
    INTENSITY_REVERSE = "IntensityReverse"
    POLARIZATION_FLIP = "PolarizationFlip"


# ---------------------------------------------------------------------------
# Configuration objects
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EffectiveCoupling:
    g_eff: float
    far_detuned: bool  # |Delta_1p| >> d gamma
    adiabatic: bool  # T gamma d >> 1
    optical_depth: float

    @property
    def valid(self) -> bool:
        return self.far_detuned and self.adiabatic


def effective_two_level(
    Omega_c: float,
    Delta_1p: float,
    g: float,
    gamma: float,
    gamma_0: float = 0.0,
    optical_depth: float | None = None,
    timescale: float | None = None,
    geometry: EnsembleGeometry | None = None,
    margin: float = 10.0,
) -> EffectiveCoupling:
    """Reduce a far-detuned Lambda system to an effective two-level one.

    Returns g' = g Omega_c / Delta_1p with flags for the two validity
    conditions, each required to hold by ``margin``.  The resonant optical
    depth d = g^2 N L / (c gamma) comes from ``optical_depth`` or, failing
    that, from ``geometry``.  ``gamma_0`` is the ground-state decoherence
    rate that replaces gamma in the reduced equations; it does not enter
    the flags.  Without ``timescale`` the adiabatic flag is left True.
    """
    if Delta_1p == 0:
        raise ValueError("one-photon detuning must be nonzero")
    if optical_depth is None:
        geo = geometry or EnsembleGeometry()
        n_loaded = geo.loading_eff * geo.atom_count
        # g^2 N L / (c gamma) with N the number density; N L = atoms / area
        optical_depth = g**2 * n_loaded / (math.pi * geo.radius**2 * const.c * gamma)
    d = optical_depth
    far = abs(Delta_1p) >= margin * d * gamma
    adiabatic = True if timescale is None else timescale * gamma * d >= margin
    return EffectiveCoupling(g * Omega_c / Delta_1p, far, adiabatic, d)


def effective_optical_depth(g: float, kappa: float, eta: float) -> float:
    """d' = g kappa / |eta| with eta in rad/s per metre."""
    return g * kappa / abs(eta)


def read_write_efficiency(d_prime: float) -> float:
    """Closed-form forward-recall efficiency [1 - exp(-2 pi d')]^2."""
    return (1.0 - math.exp(-2 * math.pi * d_prime)) ** 2


@dataclass(frozen=True)
class GemConfig:
    """Grid and coupling constants for one simulation.

    ``kappa`` is g N / c (field gain per unit coherence per metre), so the
    product ``g * kappa`` is the g^2 N / c that sets the optical depth.
    """

    length: float
    g: float
    kappa: float
    effective_gamma: float = 0.0
    z_points: int = 512
    dt: float = 1e-9
    total_time: float = 1e-6
    cfl: float = 0.1

    def __post_init__(self):
        if self.z_points < 64:
            raise ValueError("z_points must be at least 64")
        if self.dt <= 0 or self.total_time <= 0 or self.length <= 0:
            raise ValueError("length, dt and total_time must be positive")
        if self.kappa < 0 or self.effective_gamma < 0:
            raise ValueError("kappa and effective_gamma must be non-negative")

    @classmethod
    def from_optical_depth(
        cls,
        d_prime: float,
        bandwidth: float,
        length: float = 1.0,
        g: float = 1.0,
        **kw,
    ) -> "GemConfig":
        """Config whose linear gradient spanning ``bandwidth`` Hz gives depth ``d_prime``."""
        eta = 2 * math.pi * bandwidth / length
        return cls(length=length, g=g, kappa=d_prime * eta / g, **kw)

    @property
    def z(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.z_points)

    @property
    def n_steps(self) -> int:
        return int(round(self.total_time / self.dt))

    def auto_dt(self, max_detuning: float) -> "GemConfig":
        """Copy with the largest dt that satisfies the step bound and tiles total_time."""
        limit = self.cfl / (2 * math.pi * max(abs(max_detuning), 1e-300))
        n = max(1, math.ceil(self.total_time / limit))
        return replace(self, dt=self.total_time / n)


@dataclass(frozen=True)
class GradientSegment:
    t_start: float
    delta: np.ndarray  # Hz on the z grid
    freq_offset: float = 0.0  # Hz

    @property
    def detuning(self) -> np.ndarray:
        return self.delta + self.freq_offset


@dataclass(frozen=True)
class GradientSchedule:
    """Piecewise-static two-photon detuning delta(z, t)."""

    segments: tuple
    switch_method: SwitchMethod = SwitchMethod.INTENSITY_REVERSE
    compensate: bool = False

    def __post_init__(self):
        ts = [s.t_start for s in self.segments]
        if not ts:
            raise ValueError("schedule needs at least one segment")
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValueError("segments must be time-ordered")

    @classmethod
    def static(cls, delta: Sequence[float], t_start: float = 0.0) -> "GradientSchedule":
        return cls((GradientSegment(t_start, np.asarray(delta, dtype=float)),))

    def at(self, t: float) -> GradientSegment:
        seg = self.segments[0]
        for s in self.segments:
            if s.t_start <= t:
                seg = s
        return seg

    @property
    def switch_times(self) -> list:
        return [s.t_start for s in self.segments[1:]]

    @property
    def max_detuning(self) -> float:
        return max(float(np.max(np.abs(s.detuning))) for s in self.segments)


def linear_gradient(z: np.ndarray, bandwidth: float, centred: bool = True) -> np.ndarray:
    """Linear detuning profile in Hz.

    ``centred``: delta = B (z/L - 1/2), antisymmetric about the centre.
    Otherwise the one-sided profile delta = B (1 - z/L) of a beam entering
    at z = 0 whose intensity falls to zero at z = L.
    """
    L = z[-1] - z[0]
    u = (z - z[0]) / L
    return bandwidth * (u - 0.5) if centred else bandwidth * (1.0 - u)


def apply_switch(
    schedule: GradientSchedule,
    method: SwitchMethod | str,
    t_switch: float,
    compensate: bool = False,
) -> GradientSchedule:
    """Append the post-switch gradient at ``t_switch``.

    IntensityReverse mirrors the profile, delta(z) -> delta(L - z).
    PolarizationFlip negates it, delta(z) -> -delta(z), which equals the
    mirrored profile shifted by -(delta(0) + delta(L)); ``compensate``
    adds that amount back through the coupling-field frequency.
    """
    method = SwitchMethod(method)
    last = schedule.at(t_switch)
    if t_switch < schedule.segments[0].t_start:
        raise ValueError("switch time precedes the schedule")
    if method is SwitchMethod.INTENSITY_REVERSE:
        new = GradientSegment(t_switch, last.delta[::-1].copy(), 0.0)
    else:
        offset = float(last.delta[0] + last.delta[-1]) if compensate else 0.0
        new = GradientSegment(t_switch, -last.delta, offset)
    kept = tuple(s for s in schedule.segments if s.t_start < t_switch)
    return GradientSchedule(kept + (new,), method, compensate)


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian input envelope; ``duration_tp`` is the intensity FWHM."""

    t_peak: float
    duration_tp: float
    amplitude: complex = 1.0
    carrier_offset: float = 0.0  # Hz
    shape: str = "gaussian"

    def __post_init__(self):
        if self.duration_tp <= 0:
            raise ValueError("pulse duration must be positive")
        if self.shape != "gaussian":
            raise ValueError("only Gaussian pulses are supported")

    @property
    def bandwidth(self) -> float:
        """Storage bandwidth 9 sqrt(2) / (pi t_p) in Hz."""
        return 9 * math.sqrt(2) / (math.pi * self.duration_tp)

    def envelope(self, t):
        t = np.asarray(t, dtype=float)
        s = t - self.t_peak
        return (
            self.amplitude
            * np.exp(-2 * math.log(2) * (s / self.duration_tp) ** 2)
            * np.exp(-2j * math.pi * self.carrier_offset * s)
        )


@dataclass(frozen=True)
class GemState:
    t: np.ndarray
    z: np.ndarray
    field_in: np.ndarray  # E(0, t)
    field_out: np.ndarray  # E(L, t)
    stored: np.ndarray  # (kappa/g) int |sigma|^2 dz at each t
    t_snap: np.ndarray
    sigma12: np.ndarray  # [z, t_snap]
    field_E: np.ndarray  # [z, t_snap]
    switch_times: tuple
    config: GemConfig

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def energy_in(self) -> float:
        return float(np.trapezoid(np.abs(self.field_in) ** 2, self.t))

    @property
    def energy_out(self) -> float:
        return float(np.trapezoid(np.abs(self.field_out) ** 2, self.t))

    def to_csv(self, path, header: dict | None = None):
        """Write t, Re E_out, Im E_out, |E_out|^2 with a commented header."""
        with open(path, "w", newline="") as fh:
            for k, v in (header or {}).items():
                fh.write(f"# {k}: {v}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "re_E_out", "im_E_out", "abs2_E_out"])
            for t, e in zip(self.t, self.field_out):
                w.writerow([f"{t:.9g}", f"{e.real:.9g}", f"{e.imag:.9g}", f"{abs(e) ** 2:.9g}"])


# ---------------------------------------------------------------------------
# Integrator
# ---------------------------------------------------------------------------


def _cumtrapz(y: np.ndarray, dz: float, out: np.ndarray) -> np.ndarray:
    out[0] = 0.0
    np.cumsum((y[1:] + y[:-1]) * (0.5 * dz), out=out[1:])
    return out


def solve(
    config: GemConfig,
    schedule: GradientSchedule,
    pulse: PulseSpec,
    snapshots: int = 200,
) -> GemState:
    """Integrate storage and recall over [0, total_time].

    Switch times are snapped to the nearest time step.  ``snapshots``
    limits how many z-profiles of sigma and E are retained.
    """
    z = config.z
    nz = z.size
    dz = z[1] - z[0]
    dt = config.dt
    n = config.n_steps
    for s in schedule.segments:
        if s.delta.shape != (nz,):
            raise ValueError(f"gradient has {s.delta.shape} samples, grid has {nz}")
    worst = dt * 2 * math.pi * schedule.max_detuning
    if worst > config.cfl * (1 + 1e-9):
        raise SolverError(
            f"dt * 2 pi max|delta| = {worst:.3g} exceeds {config.cfl:g}; reduce dt"
        )

    t = np.arange(n + 1) * dt
    starts = [int(round(s.t_start / dt)) for s in schedule.segments]
    g, kappa, half_gamma = config.g, config.kappa, config.effective_gamma / 2
    e_in = pulse.envelope(t)
    e_mid = pulse.envelope(t[:-1] + dt / 2)

    sigma = np.zeros(nz, complex)
    buf = np.empty(nz, complex)
    out = np.empty(n + 1, complex)
    stored = np.empty(n + 1)
    snap_idx = np.unique(np.linspace(0, n, min(snapshots, n + 1)).round().astype(int))
    sig_snap = np.empty((nz, snap_idx.size), complex)
    e_snap = np.empty((nz, snap_idx.size), complex)
    si = 0
    seg = 0
    a = None

    def rhs(s, e0):
        E = e0 + 1j * kappa * _cumtrapz(s, dz, buf)
        return a * s + 1j * g * E, E

    for k in range(n + 1):
        while seg < len(starts) and starts[seg] <= k:
            a = -(half_gamma + 2j * math.pi * schedule.segments[seg].detuning)
            seg += 1
        if a is None:
            a = -(half_gamma + 2j * math.pi * schedule.segments[0].detuning)
        k1, E = rhs(sigma, e_in[k])
        out[k] = E[-1]
        stored[k] = (kappa / g if g else 0.0) * np.trapezoid(np.abs(sigma) ** 2, dx=dz)
        if si < snap_idx.size and snap_idx[si] == k:
            sig_snap[:, si] = sigma
            e_snap[:, si] = E
            si += 1
        if k == n:
            break
        k2, _ = rhs(sigma + 0.5 * dt * k1, e_mid[k])
        k3, _ = rhs(sigma + 0.5 * dt * k2, e_mid[k])
        k4, _ = rhs(sigma + dt * k3, e_in[k + 1])
        sigma = sigma + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(sigma)):
            raise SolverError(f"non-finite coherence at t = {t[k + 1]:.6g} (step {k + 1})")

    return GemState(
        t=t,
        z=z,
        field_in=e_in,
        field_out=out,
        stored=stored,
        t_snap=t[snap_idx],
        sigma12=sig_snap,
        field_E=e_snap,
        switch_times=tuple(starts[i] * dt for i in range(1, len(starts))),
        config=config,
    )


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RecallMetrics:
    efficiency: float
    echo_time: float  # absolute time of the echo intensity centroid
    time_reversal_fidelity: float
    carrier_shift: float  # Hz, echo minus input spectral centroid
    transmitted: float  # fraction leaking through before the switch


def _spectral_centroid(field: np.ndarray, dt: float) -> float:
    """Carrier frequency in the exp(-2 pi i f t) convention used for pulses."""
    n = 1 << int(math.ceil(math.log2(max(field.size, 2)))) + 2
    spec = np.abs(np.fft.fft(field, n)) ** 2
    freqs = np.fft.fftfreq(n, dt)
    return float(-np.sum(freqs * spec) / np.sum(spec))


def recall_metrics(state: GemState, pulse: PulseSpec, t_switch: float | None = None) -> RecallMetrics:
    """Efficiency, echo centroid, time-reversal fidelity and carrier shift.

    Input energy is counted up to the switch and echo energy after it.  The
    fidelity compares echo and input envelopes with the input mirrored
    about the switch time.
    """
    t = state.t
    dt = state.dt
    if t_switch is None:
        t_switch = state.switch_times[0] if state.switch_times else t[-1]
    ksw = int(round(t_switch / dt))
    t_switch = ksw * dt
    before = np.arange(t.size) <= ksw
    e_in = float(np.trapezoid(np.abs(state.field_in[before]) ** 2, t[before]))
    if e_in <= 0:
        raise ValueError("input pulse carries no energy")
    echo = np.where(before, 0.0, state.field_out)
    p_out = np.abs(echo) ** 2
    e_out = float(np.trapezoid(p_out[~before], t[~before]))
    leak = float(np.trapezoid(np.abs(state.field_out[before]) ** 2, t[before]))
    echo_time = float(np.sum(t * p_out) / np.sum(p_out)) if e_out > 0 else math.nan

    mirrored = np.abs(pulse.envelope(2 * t_switch - t))
    num = np.trapezoid(np.abs(echo) * mirrored, t) ** 2
    den = np.trapezoid(p_out, t) * np.trapezoid(mirrored**2, t)
    fidelity = float(num / den) if den > 0 else 0.0

    if e_out > 0:
        shift = _spectral_centroid(echo, dt) - _spectral_centroid(
            np.where(before, state.field_in, 0.0), dt
        )
    else:
        shift = math.nan
    return RecallMetrics(e_out / e_in, echo_time, fidelity, shift, leak / e_in)


def spectral_bin(state: GemState) -> float:
    """Frequency resolution 1 / (record length) in Hz."""
    return 1.0 / (state.t[-1] - state.t[0])


def standard_scenario(
    d_prime: float,
    bandwidth_ratio: float = 3.0,
    centred: bool = True,
    method: SwitchMethod | str = SwitchMethod.INTENSITY_REVERSE,
    compensate: bool = False,
    z_points: int = 512,
    cfl: float = 0.1,
    gamma: float = 0.0,
    t_p: float = 1.0,
    store: float = 4.0,
):
    """Dimensionless storage-and-recall run used by the tests and the CLI.

    The pulse (FWHM ``t_p``, peak at 3 t_p) is written into a linear
    gradient spanning ``bandwidth_ratio`` pulse bandwidths and the gradient
    is switched ``store`` pulse lengths after the peak.  Returns
    ``(config, schedule, pulse, t_switch)``.
    """
    pulse0 = PulseSpec(3 * t_p, t_p)
    B = bandwidth_ratio * pulse0.bandwidth
    t_switch = pulse0.t_peak + store * t_p
    total = 2 * t_switch - pulse0.t_peak + 4 * t_p
    cfg = GemConfig.from_optical_depth(
        d_prime, B, length=1.0, g=1.0, effective_gamma=gamma, z_points=z_points, total_time=total, cfl=cfl
    )
    delta = linear_gradient(cfg.z, B, centred)
    pulse = PulseSpec(pulse0.t_peak, t_p, carrier_offset=0.0 if centred else B / 2)
    sched = apply_switch(GradientSchedule.static(delta), method, t_switch, compensate)
    cfg = cfg.auto_dt(sched.max_detuning)
    if B < pulse.bandwidth:
        warnings.warn("pulse bandwidth exceeds memory bandwidth", stacklevel=2)
    return cfg, sched, pulse, t_switch
