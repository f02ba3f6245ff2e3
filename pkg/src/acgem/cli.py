"""Command-line front end: ``acgem <command> [--config FILE] [--set k=v] --out PATH``.

Config files are INI-style ``key = value`` text with sections; physical
values carry unit suffixes.  Every CSV starts with ``#`` lines recording
the tool version, the command and the fully resolved parameter set.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .atomic_structure import HyperfineState
from .decoherence import TrapSpec, UndefinedRatioError, find_optimal_detuning, scattering_rate_per_intensity, trap_report
from .gem_dynamics import (
    SolverError,
    recall_metrics,
    solve,
    spectral_bin,
    standard_scenario,
)
from .memory_budget import (
    MemoryScenario,
    efficiency_sweep,
    gaussian_pulse_bandwidth,
    power_for_bandwidth,
    threshold_storage_time,
    write_sweep_csv,
)
from .stark_response import (
    EQUAL_M_SCHEME,
    OPTIMAL_SCHEME,
    W_PER_CM2,
    EnsembleGeometry,
    ForbiddenSchemeError,
    LaserSpec,
    NearResonanceError,
    select_level_scheme,
    splittings,
)
from .units import UnitError, parse_quantity

EXIT_CONFIG = 2
EXIT_PHYSICS = 3

COMMANDS = (
    "stark-scan",
    "optimal-detuning",
    "trap-report",
    "gem-sim",
    "efficiency-sweep",
    "switch-demo",
    "power-budget",
)

# section.key -> (kind, default text)
SCHEMA = {
    "geometry.length": ("length", "1 cm"),
    "geometry.radius": ("length", "10 um"),
    "geometry.atoms": ("dimensionless", "2.5e6"),
    "geometry.loading_eff": ("dimensionless", "0.4"),
    "geometry.coupling_g": ("frequency", "1.5 MHz"),
    "laser.detuning": ("frequency", "-5 THz"),
    "laser.q": ("int", "1"),
    "laser.power": ("power", "1 W"),
    "scheme.q_p": ("int", "0"),
    "scheme.q_c": ("int", "1"),
    "scan.start": ("frequency", "-0.05 THz"),
    "scan.stop": ("frequency", "-40 THz"),
    "scan.points": ("int", "200"),
    "optimal.F": ("int", "1"),
    "optimal.mF": ("int", "-1"),
    "optimal.start": ("frequency", "-0.5 THz"),
    "optimal.stop": ("frequency", "-40 THz"),
    "optimal.points": ("int", "400"),
    "optimal.scheme": ("str", "equal-m"),
    "trap.wavelength": ("length", "1064 nm"),
    "trap.power": ("power", "1.5 W"),
    "trap.waist": ("length", "10 um"),
    "trap.inv_alpha": ("time", "1 s"),
    "trap.beta": ("rate_coefficient", "5e-11 cm^3/s"),
    "trap.density": ("density", "1e11 cm^-3"),
    "trap.collision_rate": ("rate", "none"),
    "trap.bandwidth": ("frequency", "1 MHz"),
    "gem.d_prime": ("dimensionless", "0.5"),
    "gem.bandwidth_ratio": ("dimensionless", "3"),
    "gem.store": ("dimensionless", "4"),
    "gem.gamma": ("dimensionless", "0"),
    "gem.gradient": ("str", "centred"),
    "gem.method": ("str", "IntensityReverse"),
    "gem.compensate": ("bool", "false"),
    "switch.gradient": ("str", "one-sided"),
    "memory.t_p": ("time", "20 us"),
    "memory.t_s": ("time", "20 us"),
    "memory.omega_over_delta": ("dimensionless", "0.02"),
    "memory.delta_1p": ("frequency", "-2 GHz"),
    "memory.delta_ac": ("frequency", "-5 THz"),
    "memory.multi_pulse": ("bool", "false"),
    "memory.collision_rate": ("rate", "30 /s"),
    "memory.axis": ("str", "store_ts"),
    "memory.start": ("dimensionless", "1"),
    "memory.stop": ("dimensionless", "1000"),
    "memory.points": ("int", "200"),
    "memory.relative": ("bool", "true"),
    "memory.store_equals_pulse": ("bool", "false"),
    "power.targets": ("list:frequency", "200 kHz, 1 MHz"),
    "power.profile": ("str", "linear"),
}

GRIDS = {"coarse": (256, 0.2), "default": (512, 0.1), "fine": (1024, 0.05)}


class ConfigError(ValueError):
    pass


def _convert(key: str, text: str):
    kind, _ = SCHEMA[key]
    text = text.strip()
    if kind == "int":
        try:
            return int(text)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected an integer, got {text!r}") from exc
    if kind == "bool":
        low = text.lower()
        if low not in ("true", "false", "yes", "no", "1", "0"):
            raise ConfigError(f"{key}: expected true/false, got {text!r}")
        return low in ("true", "yes", "1")
    if kind == "str":
        return text
    if text.lower() == "none":
        return None
    if kind.startswith("list:"):
        return [parse_quantity(t, kind[5:]) for t in text.split(",") if t.strip()]
    return parse_quantity(text, kind)


def load_config(path: str | None, overrides: list[str]) -> tuple[dict, dict]:
    """Resolve defaults, file values and ``--set`` overrides.

    Returns the converted values and the raw text of each key (for the
    provenance header).
    """
    raw = {k: v for k, (_, v) in SCHEMA.items()}
    if path:
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for sec in cp.sections():
            for k, v in cp.items(sec):
                raw[_known(f"{sec}.{k}")] = v
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        raw[_known(k.strip())] = v.strip()
    try:
        values = {k: _convert(k, v) for k, v in raw.items()}
    except UnitError as exc:
        raise ConfigError(str(exc)) from exc
    return values, raw


def _known(key: str) -> str:
    if key not in SCHEMA:
        raise ConfigError(f"unknown config key {key!r}")
    return key


def _geometry(v) -> EnsembleGeometry:
    return EnsembleGeometry(
        v["geometry.length"],
        v["geometry.radius"],
        v["geometry.atoms"],
        v["geometry.loading_eff"],
        2 * math.pi * v["geometry.coupling_g"],
    )


def _header(command: str, raw: dict, extra: dict | None = None) -> dict:
    h = {"tool": f"acgem {__version__}", "command": command}
    for k in sorted(raw):
        h[k] = raw[k]
    h.update(extra or {})
    return h


def _write(path: Path, header: dict, columns: list[str], rows):
    with open(path, "w", newline="") as fh:
        for k, v in header.items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.9g}"
    return str(x)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_stark_scan(v, raw, out: Path, grid):
    lo, hi = v["scan.start"], v["scan.stop"]
    if lo == 0 or hi == 0 or (lo > 0) != (hi > 0):
        raise ConfigError("scan range must not include zero detuning")
    mags = np.geomspace(abs(lo), abs(hi), v["scan.points"])
    sign = 1.0 if lo > 0 else -1.0
    q = v["laser.q"]
    scheme = select_level_scheme(v["scheme.q_p"], v["scheme.q_c"])
    rows = []
    for m in mags:
        laser = LaserSpec.from_detuning(2 * math.pi * sign * m, q)
        s = splittings(laser, EQUAL_M_SCHEME)
        s3 = splittings(laser, scheme)
        gbar = scattering_rate_per_intensity(HyperfineState(1, -1), laser)
        per_mhz = 1e6 * gbar / s.delta_t if s.delta_t else math.nan
        rows.append(
            (sign * m, s.delta_1 * W_PER_CM2, s.delta_2 * W_PER_CM2, s.sign_12 * s.delta_12 * W_PER_CM2,
             s.delta_t * W_PER_CM2, s3.delta_t * W_PER_CM2, s.sign, per_mhz)
        )
    cols = ["detuning_Hz", "delta_1", "delta_2", "delta_12", "delta_t", "delta_t_scheme", "sign_t", "scatter_per_MHz"]
    _write(out, _header("stark-scan", raw, {"units": "splittings in Hz/(W/cm^2); scatter in 1/s per MHz"}), cols, rows)


def cmd_optimal_detuning(v, raw, out: Path, grid):
    state = HyperfineState(v["optimal.F"], v["optimal.mF"])
    name = v["optimal.scheme"]
    if name == "equal-m":
        scheme = EQUAL_M_SCHEME
    elif name == "optimal":
        scheme = OPTIMAL_SCHEME
    else:
        raise ConfigError("optimal.scheme must be 'equal-m' or 'optimal'")
    rng = (2 * math.pi * v["optimal.start"], 2 * math.pi * v["optimal.stop"])
    res = find_optimal_detuning(state, v["laser.q"], scheme, rng, v["optimal.points"])
    laser = LaserSpec.from_detuning(res.detuning, v["laser.q"])
    s = splittings(laser, scheme)
    cols = ["F", "mF", "q", "detuning_Hz", "detuning_THz", "scatter_per_MHz", "boundary", "delta_1", "delta_2", "delta_t"]
    row = (state.F, state.mF, v["laser.q"], res.detuning / (2 * math.pi), res.detuning / (2 * math.pi) / 1e12,
           res.rate * 1e6, res.boundary, s.delta_1 * W_PER_CM2, s.delta_2 * W_PER_CM2, s.delta_t * W_PER_CM2)
    _write(out, _header("optimal-detuning", raw), cols, [row])


def _trap(v) -> TrapSpec:
    return TrapSpec(
        v["trap.wavelength"], v["trap.power"], v["trap.waist"], _geometry(v),
        v["trap.inv_alpha"], v["trap.beta"], v["trap.density"], v["trap.collision_rate"],
    )


def cmd_trap_report(v, raw, out: Path, grid):
    rep = trap_report(_trap(v), v["trap.bandwidth"])
    d = asdict(rep)
    _write(out, _header("trap-report", raw), list(d), [list(d.values())])


def _gem_run(v, grid, method=None, compensate=None, centred=None):
    nz, cfl = GRIDS[grid]
    cfg, sched, pulse, tsw = standard_scenario(
        v["gem.d_prime"],
        v["gem.bandwidth_ratio"],
        centred=(v["gem.gradient"] == "centred") if centred is None else centred,
        method=v["gem.method"] if method is None else method,
        compensate=v["gem.compensate"] if compensate is None else compensate,
        z_points=nz,
        cfl=cfl,
        gamma=v["gem.gamma"],
        store=v["gem.store"],
    )
    st = solve(cfg, sched, pulse)
    return cfg, sched, pulse, tsw, st, recall_metrics(st, pulse, tsw)


def _check_gem(v):
    if v["gem.gradient"] not in ("centred", "one-sided"):
        raise ConfigError("gem.gradient must be 'centred' or 'one-sided'")
    if v["gem.method"] not in ("IntensityReverse", "PolarizationFlip"):
        raise ConfigError("gem.method must be IntensityReverse or PolarizationFlip")


def cmd_gem_sim(v, raw, out: Path, grid):
    _check_gem(v)
    cfg, sched, pulse, tsw, st, m = _gem_run(v, grid)
    hdr = _header("gem-sim", raw, {"grid": grid, "time_unit": "pulse FWHM", "frequency_unit": "1/(pulse FWHM)"})
    cols = ["efficiency", "formula_efficiency", "echo_time", "expected_echo_time", "time_reversal_fidelity",
            "carrier_shift", "transmitted", "dt", "z_points"]
    row = (m.efficiency, (1 - math.exp(-2 * math.pi * v["gem.d_prime"])) ** 2, m.echo_time,
           2 * (st.switch_times[0]) - pulse.t_peak, m.time_reversal_fidelity, m.carrier_shift,
           m.transmitted, st.dt, cfg.z_points)
    _write(out, hdr, cols, [row])
    st.to_csv(_sibling(out, "series"), hdr)


def _sibling(out: Path, tag: str) -> Path:
    return out.with_name(f"{out.stem}.{tag}{out.suffix or '.csv'}")


def cmd_switch_demo(v, raw, out: Path, grid):
    _check_gem(v)
    if v["switch.gradient"] not in ("centred", "one-sided"):
        raise ConfigError("switch.gradient must be 'centred' or 'one-sided'")
    centred = v["switch.gradient"] == "centred"
    runs = {}
    for label, meth, comp in (
        ("reverse", "IntensityReverse", False),
        ("flip", "PolarizationFlip", False),
        ("flip_compensated", "PolarizationFlip", True),
    ):
        runs[label] = _gem_run(v, grid, meth, comp, centred)
    cfg, sched_r, pulse, tsw, st_r, _ = runs["reverse"]
    z = cfg.z
    before = sched_r.segments[0].delta
    after = {k: r[1].segments[-1].detuning for k, r in runs.items()}
    hdr = _header("switch-demo", raw, {"grid": grid})
    _write(
        out, hdr, ["z", "delta_initial", "delta_reverse", "delta_flip", "delta_flip_compensated"],
        zip(z / cfg.length, before, after["reverse"], after["flip"], after["flip_compensated"]),
    )
    B = float(np.max(before) - np.min(before))
    rows = []
    for k, r in runs.items():
        m = r[5]
        rows.append((k, m.efficiency, m.echo_time, m.carrier_shift, m.carrier_shift - runs["reverse"][5].carrier_shift,
                     -B if not centred else 0.0, spectral_bin(r[4])))
    _write(_sibling(out, "echo"), hdr,
           ["method", "efficiency", "echo_time", "carrier_shift", "shift_vs_reverse", "expected_shift", "spectral_bin"], rows)


def cmd_efficiency_sweep(v, raw, out: Path, grid):
    axis = v["memory.axis"]
    geo = _geometry(v)
    trap = TrapSpec(
        v["trap.wavelength"], v["trap.power"], v["trap.waist"], geo,
        v["trap.inv_alpha"], v["trap.beta"], v["trap.density"], v["memory.collision_rate"],
    )
    base = MemoryScenario(
        pulse_tp=v["memory.t_p"], store_ts=v["memory.t_s"], Omega_over_Delta=v["memory.omega_over_delta"],
        Delta_1p=2 * math.pi * v["memory.delta_1p"], Delta_ac=2 * math.pi * v["memory.delta_ac"],
        q_c=v["scheme.q_c"], q_p=v["scheme.q_p"], geometry=geo, multi_pulse=v["memory.multi_pulse"], trap=trap,
    )
    if axis not in ("pulse_tp", "store_ts", "Omega_over_Delta"):
        raise ConfigError("memory.axis must be pulse_tp, store_ts or Omega_over_Delta")
    lo, hi, n = v["memory.start"], v["memory.stop"], v["memory.points"]
    grid_vals = np.geomspace(lo, hi, n) if lo > 0 else np.linspace(lo, hi, n)
    scale = v["memory.t_p"] if (v["memory.relative"] and axis != "Omega_over_Delta") else 1.0
    rows = efficiency_sweep(base, axis, grid_vals * scale, store_equals_pulse=v["memory.store_equals_pulse"])
    extra = {}
    if axis == "store_ts":
        for lvl in (0.9, 0.5):
            extra[f"threshold_{lvl}_ts_over_tp"] = f"{threshold_storage_time(base, lvl) / base.pulse_tp:.9g}"
    write_sweep_csv(out, axis, rows, _header("efficiency-sweep", raw, extra))


def cmd_power_budget(v, raw, out: Path, grid):
    laser = LaserSpec.from_detuning(2 * math.pi * v["laser.detuning"], v["laser.q"])
    scheme = select_level_scheme(v["scheme.q_p"], v["scheme.q_c"])
    geo = _geometry(v)
    rows = []
    for B in v["power.targets"]:
        rows.append((B, power_for_bandwidth(B, laser, scheme, v["power.profile"], geo)))
    rows.append(("B_G(t_p)", power_for_bandwidth(gaussian_pulse_bandwidth(v["memory.t_p"]), laser, scheme, v["power.profile"], geo)))
    _write(out, _header("power-budget", raw), ["bandwidth_Hz", "power_W"], rows)


HANDLERS = {
    "stark-scan": cmd_stark_scan,
    "optimal-detuning": cmd_optimal_detuning,
    "trap-report": cmd_trap_report,
    "gem-sim": cmd_gem_sim,
    "efficiency-sweep": cmd_efficiency_sweep,
    "switch-demo": cmd_switch_demo,
    "power-budget": cmd_power_budget,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="acgem", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="INI-style scenario file")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config value")
    p.add_argument("--grid", choices=tuple(GRIDS), default="default", help="solver resolution")
    p.add_argument("--version", action="version", version=f"acgem {__version__}")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        values, raw = load_config(args.config, args.set)
        out = Path(args.out)
        if not out.parent.exists():
            raise ConfigError(f"output directory {out.parent} does not exist")
        HANDLERS[args.command](values, raw, out, args.grid)
    except ConfigError as exc:
        print(f"acgem: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NearResonanceError, ForbiddenSchemeError, UndefinedRatioError, SolverError) as exc:
        print(f"acgem: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    return 0


if __name__ == "__main__":
    sys.exit(main())
