"""Configuration parsing, diagnostics CSV, binary snapshots, and the CLI.

The config format is line-oriented ``key = value`` with ``#`` comments and
the four sections [solver], [constitutive], [scenario], [output].  Unknown
keys are errors, reported with their line number.  The diagnostics CSV
carries a fixed, versioned header and prints every value with 17 significant
digits so that a parse of the emitted file reproduces the float64 values
bit-exactly.  Snapshots store physical-space samples (portable across
transform conventions) in a little-endian binary layout with magic "CRFS".
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import struct
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .constitutive import PowerLawIndex, StressModel, check_properties
from .diagnostics import COLUMNS, DiagnosticsRecord
from .solver import RunResult, SolverConfig, State, run
from .spectral import PhysicalField, VECTOR, make_grid, to_physical, to_spectral
from . import scenarios

DIAG_HEADER = ",".join(COLUMNS)
DIAG_VERSION = 1
SNAPSHOT_MAGIC = b"CRFS"
SNAPSHOT_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_PICARD = 4


class ConfigError(ValueError):
    """Malformed configuration; message carries the offending line number."""


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# (section, key) -> (type, default, required, help)
_SCHEMA = {
    ("solver", "d"): (int, None, True, "spatial dimension (2 or 3)"),
    ("solver", "n"): (int, None, True, "Fourier modes per dimension (even)"),
    ("solver", "dt"): (float, None, True, "time step"),
    ("solver", "t_end"): (float, None, True, "final time"),
    ("solver", "picard_tol"): (float, 1e-10, False, "relative L2 tolerance of the in-step iteration"),
    ("solver", "picard_max"): (int, 50, False, "iteration cap before the step is flagged non-converged"),
    ("solver", "nu_split"): (str, "adaptive", False, "implicit viscosity mode: adaptive | constant"),
    ("solver", "nu_split_value"): (float, None, False, "constant-mode implicit viscosity (default nu0)"),
    ("solver", "nu_split_cap"): (float, 1e3, False, "cap on the adaptive factor over nu0"),
    ("solver", "convection"): (str, "divergence", False, "divergence | skew | none"),
    ("solver", "dealias"): (str, "two_thirds", False, "two_thirds | none"),
    ("solver", "q_monitor"): (float, None, False, "exponent of the |grad c|_q monitor (default 2d+2, must exceed 2d)"),
    ("solver", "delta_monitor"): (float, None, False, "exponent of the dc/dt monitor (default 4.5 in 2D, 3.25 in 3D)"),
    ("solver", "blowup_threshold"): (float, 1e12, False, "abort when any coefficient magnitude exceeds this"),
    ("constitutive", "nu0"): (float, None, True, "viscosity scale (> 0)"),
    ("constitutive", "p_minus"): (float, None, True, "lower exponent bound (> 1)"),
    ("constitutive", "p_plus"): (float, None, True, "upper exponent bound (>= p_minus)"),
    ("constitutive", "p_form"): (str, "tanh_profile", False, "constant | affine_clamped | tanh_profile"),
    ("constitutive", "p_center"): (float, 0.5, False, "tanh transition center"),
    ("constitutive", "p_width"): (float, 0.25, False, "tanh transition width"),
    ("constitutive", "p_slope"): (float, 0.0, False, "affine slope"),
    ("constitutive", "p_intercept"): (float, None, False, "affine intercept (default p_plus)"),
    ("constitutive", "p_increasing"): (bool, False, False, "tanh orientation: p grows with c"),
    ("scenario", "name"): (str, "synovial_demo", False,
                           "synovial_demo | taylor_green_2d | linear_twins | "
                           "decaying_mode_2d | decaying_mode_3d | steady_shear_2d"),
    ("scenario", "epsilon"): (float, 1e-6, False, "twin-run perturbation size"),
    ("scenario", "n_ladder"): (str, "16,32,64", False, "grid ladder for converge"),
    ("scenario", "dt_ladder"): (str, "4e-4,2e-4,1e-4", False, "time-step ladder for converge"),
    ("scenario", "t_end_temporal"): (float, 0.04, False, "horizon of the temporal ladder"),
    ("scenario", "n_for_dt"): (int, 64, False, "grid used by the temporal ladder"),
    ("scenario", "dt_for_n"): (float, 1e-5, False, "time step of the spatial ladder"),
    ("scenario", "t_end_spatial"): (float, 2e-4, False, "horizon of the spatial ladder"),
    ("output", "cadence"): (int, 20, False, "steps between diagnostics records"),
    ("output", "out_dir"): (str, "out", False, "output directory"),
    ("output", "prefix"): (str, "run", False, "output file prefix"),
    ("output", "snapshots"): (bool, False, False, "write a final-state snapshot"),
}

_SECTIONS = ("solver", "constitutive", "scenario", "output")


@dataclass
class ParsedConfig:
    solver: SolverConfig
    scenario: dict
    output: dict
    config_hash: str


def print_defaults() -> str:
    lines = ["# configuration keys (defaults in brackets; * = required)"]
    for section in _SECTIONS:
        lines.append(f"[{section}]")
        for (sec, key), (typ, default, required, help_) in _SCHEMA.items():
            if sec != section:
                continue
            tag = "*" if required else f"[{default}]"
            lines.append(f"  {key} = <{typ.__name__}> {tag}  # {help_}")
    return "\n".join(lines)


def parse_config(path) -> ParsedConfig:
    """Parse and validate one config file; raises ConfigError on any defect."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_bytes()
    values = {}
    section = None
    for lineno, raw in enumerate(text.decode("utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any section")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if (section, key) not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key '{key}' in [{section}]")
        typ = _SCHEMA[(section, key)][0]
        try:
            parsed = _parse_bool(val) if typ is bool else typ(val)
        except ValueError:
            raise ConfigError(
                f"line {lineno}: value {val!r} for '{key}' is not a valid {typ.__name__}"
            )
        values[(section, key)] = parsed

    for (section, key), (typ, default, required, _) in _SCHEMA.items():
        if required and (section, key) not in values:
            raise ConfigError(f"missing required key '{key}' in [{section}]")
        values.setdefault((section, key), default)

    def get(section, key):
        return values[(section, key)]

    p_minus = get("constitutive", "p_minus")
    if not p_minus > 1.0:
        raise ConfigError("p_minus must exceed 1 (the exponent bounds require 1 < p_minus)")
    try:
        index = PowerLawIndex(
            p_minus=p_minus,
            p_plus=get("constitutive", "p_plus"),
            form=get("constitutive", "p_form"),
            center=get("constitutive", "p_center"),
            width=get("constitutive", "p_width"),
            slope=get("constitutive", "p_slope"),
            intercept=get("constitutive", "p_intercept"),
            increasing=get("constitutive", "p_increasing"),
        )
        solver_cfg = SolverConfig(
            d=get("solver", "d"),
            n=get("solver", "n"),
            dt=get("solver", "dt"),
            t_end=get("solver", "t_end"),
            nu0=get("constitutive", "nu0"),
            index=index,
            picard_tol=get("solver", "picard_tol"),
            picard_max=get("solver", "picard_max"),
            nu_split=get("solver", "nu_split"),
            nu_split_value=get("solver", "nu_split_value"),
            nu_split_cap=get("solver", "nu_split_cap"),
            convection=get("solver", "convection"),
            dealias_rule=get("solver", "dealias"),
            q_monitor=get("solver", "q_monitor"),
            delta_monitor=get("solver", "delta_monitor"),
            cadence=get("output", "cadence"),
            blowup_threshold=get("solver", "blowup_threshold"),
        )
        solver_cfg.grid  # validates d and n eagerly
    except ValueError as err:
        raise ConfigError(str(err))

    scenario = {k: v for (s, k), v in values.items() if s == "scenario"}
    output = {k: v for (s, k), v in values.items() if s == "output"}
    return ParsedConfig(
        solver=solver_cfg,
        scenario=scenario,
        output=output,
        config_hash=hashlib.sha256(text).hexdigest(),
    )


# ---------------------------------------------------------------------------
# diagnostics CSV
# ---------------------------------------------------------------------------

def write_diagnostics(records, path):
    """Fixed-header CSV with 17 significant digits per value (lossless)."""
    if not records:
        raise ValueError("refusing to write an empty diagnostics series")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(DIAG_HEADER + "\n")
        for rec in records:
            fh.write(",".join(format(x, ".17g") for x in rec.as_row()) + "\n")
    return path


def read_diagnostics(path):
    """Parse an emitted CSV back into records; the header is a schema guard."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != DIAG_HEADER:
            raise ValueError(
                f"diagnostics header mismatch (expected schema v{DIAG_VERSION}): {header!r}"
            )
        records = []
        for line in fh:
            vals = [float(x) for x in line.rstrip("\n").split(",")]
            if len(vals) != len(COLUMNS):
                raise ValueError(f"row has {len(vals)} columns, expected {len(COLUMNS)}")
            records.append(DiagnosticsRecord(**dict(zip(COLUMNS, vals))))
    return records


def write_twin_report(report, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = ("t", "y", "v_diff_sq", "gradc_diff_sq",
            "strain_diff_diss", "lap_diff_diss", "envelope")
    arrays = (report.times, report.y, report.v_diff_sq, report.gradc_diff_sq,
              report.strain_diff_diss, report.lap_diff_diss, report.envelope)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for row in zip(*arrays):
            fh.write(",".join(format(x, ".17g") for x in row) + "\n")
    return path


def write_property_report(report, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = ("samples", "d", "seed", "k1_measured", "k2_measured",
            "k3_measured", "k4_measured", "violations")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        fh.write(",".join(
            format(getattr(report, c), ".17g") if isinstance(getattr(report, c), float)
            else str(getattr(report, c))
            for c in cols
        ) + "\n")
    return path


# ---------------------------------------------------------------------------
# binary snapshots
# ---------------------------------------------------------------------------

@dataclass
class Snapshot:
    """Physical-space samples as stored on disk (bit-exact round trip)."""

    t: float
    v: PhysicalField
    c: PhysicalField

    def to_state(self) -> State:
        """Spectralise; this applies one forward transform, so the physical
        samples of the resulting state agree with the file only to roundoff."""
        return State(t=self.t, v=to_spectral(self.v), c=to_spectral(self.c))


def write_snapshot(state, path):
    """Binary layout: magic "CRFS", u32 version, then d, n, t as little-endian
    float64, then the velocity components and the concentration as contiguous
    little-endian float64 physical arrays, x-fastest.  Accepts a State (its
    collocation samples are stored) or a Snapshot."""
    if isinstance(state, State):
        state = Snapshot(t=state.t, v=to_physical(state.v), c=to_physical(state.c))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = state.v.grid
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<I", SNAPSHOT_VERSION))
        fh.write(struct.pack("<3d", float(grid.d), float(grid.n), float(state.t)))
        for i in range(grid.d):
            fh.write(np.ascontiguousarray(state.v.values[i].T, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.c.values.T, dtype="<f8").tobytes())
    return path


def read_snapshot(path) -> Snapshot:
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != SNAPSHOT_MAGIC:
        raise ValueError(f"not a CRFS snapshot (bad magic {data[:4]!r})")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    d_f, n_f, t = struct.unpack_from("<3d", data, 8)
    d, n = int(d_f), int(n_f)
    grid = make_grid(d, n)
    count = n**d
    offset = 8 + 24
    expected = offset + 8 * count * (d + 1)
    if len(data) != expected:
        raise ValueError(
            f"snapshot size mismatch: {len(data)} bytes, expected {expected}"
        )
    shape_rev = grid.phys_shape[::-1]
    fields = []
    for _ in range(d + 1):
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        fields.append(arr.reshape(shape_rev).T.copy())
        offset += 8 * count
    return Snapshot(
        t=t,
        v=PhysicalField(grid, VECTOR, np.stack(fields[:d])),
        c=PhysicalField(grid, "scalar", fields[d]),
    )


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

@dataclass
class RunManifest:
    config_hash: str
    code_version: str
    started_at: str
    finished_at: str
    strong_regime: bool
    unique_regime: bool
    termination: str
    message: str = ""

    def write(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(dataclasses.asdict(self), indent=2) + "\n")
        return path


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())


# ---------------------------------------------------------------------------
# scenario dispatch
# ---------------------------------------------------------------------------

def _build_scenario(parsed: ParsedConfig):
    """(v0, c0, f, g) for the configured scenario name."""
    cfg = parsed.solver
    name = parsed.scenario["name"]
    grid = cfg.grid
    if name in ("synovial_demo", "taylor_green_2d", "linear_twins") and cfg.d != 2:
        raise ConfigError(f"scenario {name} needs d = 2")
    if name == "synovial_demo":
        _, v0, c0, f, g = scenarios.synovial_demo_setup(
            n=cfg.n, dt=cfg.dt, t_end=cfg.t_end, d=cfg.d, nu0=cfg.nu0,
            index=cfg.index, cadence=cfg.cadence,
        )
        return v0, c0, f, g
    if name == "taylor_green_2d":
        _, v0, c0 = scenarios.taylor_green_setup(
            n=cfg.n, dt=cfg.dt, t_end=cfg.t_end, nu0=cfg.nu0,
            index=cfg.index, cadence=cfg.cadence,
        )
        return v0, c0, None, None
    if name == "linear_twins":
        _, v0, c0 = scenarios.linear_twin_setup(
            n=cfg.n, dt=cfg.dt, t_end=cfg.t_end, nu0=cfg.nu0,
            index=cfg.index, convection=cfg.convection, cadence=cfg.cadence,
        )
        return v0, c0, None, None
    if name in scenarios.CASE_IDS:
        case = scenarios.make_manufactured(name, cfg.model)
        if case.d != cfg.d:
            raise ConfigError(f"scenario {name} needs d = {case.d}")
        f, g = case.forcings(grid)
        return (case.eval_velocity(grid, 0.0),
                case.eval_concentration(grid, 0.0), f, g)
    raise ConfigError(f"unknown scenario name {name!r}")


def _termination_exit(termination: str) -> int:
    return {
        "completed": EXIT_OK,
        "blowup": EXIT_BLOWUP,
        "picard_failure": EXIT_PICARD,
    }[termination]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_run(parsed: ParsedConfig, out_dir: Path, quiet: bool) -> int:
    cfg = parsed.solver
    prefix = parsed.output["prefix"]
    v0, c0, f, g = _build_scenario(parsed)
    started = _now()
    termination, message = "blowup", "aborted before completing a step"
    result: Optional[RunResult] = None
    try:
        result = run(cfg, v0, c0, f=f, g=g)
        termination, message = result.termination, result.message
    finally:
        regime = cfg.regime
        RunManifest(
            config_hash=parsed.config_hash,
            code_version=__version__,
            started_at=started,
            finished_at=_now(),
            strong_regime=regime.strong_regime,
            unique_regime=regime.unique_regime,
            termination=termination,
            message=message,
        ).write(out_dir / f"{prefix}_manifest.json")

    write_diagnostics(result.records, out_dir / f"{prefix}_diagnostics.csv")
    if parsed.output["snapshots"] and result.final_state is not None:
        write_snapshot(result.final_state, out_dir / f"{prefix}_final.crfs")
    if not quiet:
        if not cfg.regime.strong_regime:
            print("warning: outside the strong-solution regime "
                  "(exploratory run, bounds are not guaranteed)")
        print(f"{termination}: {message}")
        print(f"steps = {result.steps_taken}, records = {len(result.records)}, "
              f"max divergence residual = {result.max_div_residual:.3e}, "
              f"mean drift = {result.mean_drift:.3e}")
    return _termination_exit(termination)


def _cmd_converge(parsed: ParsedConfig, out_dir: Path, quiet: bool) -> int:
    cfg = parsed.solver
    name = parsed.scenario["name"]
    if name not in scenarios.CASE_IDS:
        raise ConfigError(
            f"converge needs a manufactured scenario, got {name!r}"
        )
    case = scenarios.make_manufactured(name, cfg.model)
    n_ladder = [int(x) for x in parsed.scenario["n_ladder"].split(",")]
    dt_ladder = [float(x) for x in parsed.scenario["dt_ladder"].split(",")]
    table = scenarios.convergence_study(
        case, n_ladder, dt_ladder,
        t_end_temporal=parsed.scenario["t_end_temporal"],
        n_for_dt=parsed.scenario["n_for_dt"],
        dt_for_n=parsed.scenario["dt_for_n"],
        t_end_spatial=parsed.scenario["t_end_spatial"],
        picard_tol=cfg.picard_tol,
        convection=cfg.convection,
    )
    out = out_dir / f"{parsed.output['prefix']}_convergence.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("kind,parameter,error_v,error_c\n")
        for dt, ev, ec in zip(table.dts, table.temporal_errors_v, table.temporal_errors_c):
            fh.write(f"temporal,{dt:.17g},{ev:.17g},{ec:.17g}\n")
        for n, ev, ec in zip(table.ns, table.spatial_errors_v, table.spatial_errors_c):
            fh.write(f"spatial,{n},{ev:.17g},{ec:.17g}\n")
    if not quiet:
        print(f"temporal slopes: v {table.temporal_slope_v:.3f}, "
              f"c {table.temporal_slope_c:.3f}")
        print(f"spatial ratios: v {['%.1f' % r for r in table.spatial_ratios_v]}, "
              f"c {['%.1f' % r for r in table.spatial_ratios_c]}")
    return EXIT_OK


def _cmd_unique(parsed: ParsedConfig, out_dir: Path, quiet: bool) -> int:
    cfg = parsed.solver
    v0, c0, f, g = _build_scenario(parsed)
    started = _now()
    termination, message = "blowup", "aborted before completing a step"
    report = None
    try:
        report = scenarios.uniqueness_experiment(
            cfg, v0, c0, f=f, g=g, epsilon=parsed.scenario["epsilon"]
        )
        termination, message = "completed", "twin run finished"
    finally:
        RunManifest(
            config_hash=parsed.config_hash,
            code_version=__version__,
            started_at=started,
            finished_at=_now(),
            strong_regime=cfg.regime.strong_regime,
            unique_regime=cfg.regime.unique_regime,
            termination=termination,
            message=message,
        ).write(out_dir / f"{parsed.output['prefix']}_manifest.json")
    write_twin_report(report, out_dir / f"{parsed.output['prefix']}_twin.csv")
    if not quiet:
        if report.regime_warning:
            print("warning: configuration is outside the uniqueness regime")
        print(f"Gronwall constant = {report.gronwall_constant:.6g}, "
              f"margin = {report.margin:.3e}, passed = {report.passed}")
    return EXIT_OK


def _cmd_check_constitutive(samples: int, seed: int, out_dir: Path,
                            quiet: bool) -> int:
    index = PowerLawIndex(p_minus=2.0, p_plus=2.9, form="tanh_profile",
                          center=0.5, width=0.25)
    model = StressModel(nu0=1.0, index=index)
    ok = True
    for d in (2, 3):
        report = check_properties(model, n_samples=samples, rng_seed=seed, d=d)
        write_property_report(report, out_dir / f"constitutive_d{d}.csv")
        ok = ok and report.passed
        if not quiet:
            print(f"d={d}: K1 = {report.k1_measured:.6g}, K2 = {report.k2_measured:.6g}, "
                  f"K3 = {report.k3_measured:.6g}, K4 = {report.k4_measured:.6g}, "
                  f"violations = {report.violations}")
    return EXIT_OK if ok else 1


def main(argv=None) -> int:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=None, help="output directory")
    common.add_argument("--cadence", type=int, default=None,
                        help="override the record cadence (steps)")
    common.add_argument("--quiet", action="store_true")

    parser = argparse.ArgumentParser(
        prog="crfluid",
        description="Pseudo-spectral chemically reacting generalized "
                    "Newtonian flow on the periodic torus",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("run", "converge", "unique"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("config")
    p = sub.add_parser("check-constitutive", parents=[common])
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    sub.add_parser("print-defaults", parents=[common])

    args = parser.parse_args(argv)

    if args.command == "print-defaults":
        print(print_defaults())
        return EXIT_OK

    out_dir = Path(args.out_dir) if args.out_dir else Path("out")
    if args.command == "check-constitutive":
        return _cmd_check_constitutive(args.samples, args.seed, out_dir, args.quiet)

    try:
        parsed = parse_config(args.config)
        if args.cadence is not None:
            parsed.solver.cadence = args.cadence
        if args.out_dir is None:
            out_dir = Path(parsed.output["out_dir"])
        if args.command == "run":
            return _cmd_run(parsed, out_dir, args.quiet)
        if args.command == "converge":
            return _cmd_converge(parsed, out_dir, args.quiet)
        return _cmd_unique(parsed, out_dir, args.quiet)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
