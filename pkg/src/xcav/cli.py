"""Command-line front end: ``xcav <command> --config FILE``.

Exit codes: 0 success, 1 configuration error, 2 numerical or validity
error, 3 I/O error. Thread count: ``--threads`` beats the ``XCAV_THREADS``
environment variable, which beats ``[grid] threads``; the default is 1.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .beam import chi_sigma, chi_source, chi_source_necessary, peak_pulse_area
from .cavity import rocking_curve
from .config import RunConfig, load_config
from .errors import ConfigError, NumericalError
from .excitation import inversion_map
from .gridio import (Axis, write_fieldmap_csv, write_grid, write_inversion_csv, write_rocking_csv,
                     write_rows)
from .rotation import beam_grid, cavity_angular_spectrum
from .stack import FE57
from .synthesis import FieldMap, collimated_field, field_scan_divergence, synthesize_field
from .units import ev_to_omega
from .validity import depletion_report, inversion_budget, synchrotron_benchmark

log = logging.getLogger("xcav")

COMMANDS = ("rocking", "fieldmap", "invert", "chi", "validate")
THREADS_ENV = "XCAV_THREADS"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3
#: converts chi values to the customary millijoule units
SQRT_MJ = math.sqrt(1e-3)


@dataclass
class RunManifest:
    """Everything needed to reproduce a run and check its outputs."""

    command: str
    config_sha256: str
    config_text: str
    config_path: str | None
    tool_version: str = __version__
    grid: dict = field(default_factory=dict)
    threads: int = 1
    timing_s: float = 0.0
    outputs: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def add_output(self, path: Path):
        data = path.read_bytes()
        self.outputs.append({"path": path.name, "bytes": len(data),
                             "sha256": hashlib.sha256(data).hexdigest()})

    def write(self, directory: Path) -> Path:
        path = directory / "manifest.json"
        body = {"tool": "xcav", "tool_version": self.tool_version, "command": self.command,
                "config_path": self.config_path, "config_sha256": self.config_sha256,
                "config_text": self.config_text, "grid": self.grid, "threads": self.threads,
                "timing_s": self.timing_s, "outputs": self.outputs, "summary": self.summary}
        path.write_text(json.dumps(body, indent=2, sort_keys=True, default=_jsonable) + "\n",
                        encoding="utf-8")
        return path


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def resolve_threads(cli_value, cfg: RunConfig | None = None) -> int:
    if cli_value is not None:
        n = cli_value
    elif os.environ.get(THREADS_ENV):
        try:
            n = int(os.environ[THREADS_ENV])
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer") from None
    elif cfg is not None and cfg.grid.threads is not None:
        n = cfg.grid.threads
    else:
        n = 1
    if n < 1:
        raise ConfigError("thread count must be >= 1")
    return n


class _Run:
    """Shared state of one command invocation."""

    def __init__(self, cfg: RunConfig, out: Path, threads: int, command: str):
        self.cfg = cfg
        self.out = out
        self.threads = threads
        self.manifest = RunManifest(command, cfg.sha256, cfg.text, cfg.path, threads=threads)

    def path(self, name) -> Path:
        return self.out / f"{self.cfg.output.prefix}{name}"

    def done(self, path: Path):
        self.manifest.add_output(path)

    def report(self, name, items: dict) -> Path:
        """Key-value report, also echoed to stdout."""
        p = self.path(name)
        lines = [f"{k} = {_fmt(v)}" for k, v in items.items()]
        p.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print("\n".join(lines))
        self.done(p)
        return p


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _need(value, what):
    if value is None:
        raise ConfigError(f"this command needs a [{what}] section")
    return value


# ------------------------------------------------------------------ commands


def cmd_rocking(run: _Run, grid_override=None) -> int:
    cfg = run.cfg
    stack = _need(cfg.stack, "stack")
    omega = cfg.beam.omega if cfg.beam is not None else ev_to_omega(stack.photon_energy)
    n = grid_override or cfg.grid.n_theta
    theta = np.linspace(*cfg.grid.theta_range, n)
    curve = rocking_curve(stack, omega, theta)
    minima = curve.minima(stack)
    run.manifest.grid = {"theta_range_rad": list(cfg.grid.theta_range), "n_theta": n}
    p = run.path("rocking.csv")
    write_rocking_csv(p, curve)
    run.done(p)
    p = run.path("minima.csv")
    write_rows(p, ["theta_mrad"], ([float(m) * 1e3] for m in minima))
    run.done(p)
    run.manifest.summary = {"minima_mrad": [float(m) * 1e3 for m in minima]}
    print("minima_mrad = " + " ".join(repr(float(m) * 1e3) for m in minima))
    return EXIT_OK


def _grid_for(cfg: RunConfig, beam, n):
    return beam_grid(beam, n=n, n_sigma=cfg.grid.n_sigma, x_step=cfg.grid.x_step)


def _crop(fm: FieldMap, x_range):
    if x_range is None:
        return fm
    try:
        return fm.crop(x_range)
    except ValueError:
        raise ConfigError(f"x_range {x_range} lies outside the synthesized window "
                          f"[{fm.x[0]:.4g}, {fm.x[-1]:.4g}] m") from None


def _write_fieldmap(run: _Run, fm: FieldMap, stem: str):
    v = fm.slice_y0()
    axes = (Axis.from_values("z", fm.z), Axis.from_values("x", fm.x))
    meta = {k: fm.meta[k] for k in sorted(fm.meta) if isinstance(fm.meta[k], (int, float, bool, str))}
    meta.update(omega=fm.omega, reference=fm.reference, y=float(fm.y[0]) if fm.y is not None else 0.0)
    p = run.path(stem + ".xcg")
    write_grid(p, v, axes, "V s/m", meta)
    run.done(p)
    if run.cfg.output.csv:
        p = run.path(stem + ".csv")
        write_fieldmap_csv(p, fm)
        run.done(p)


def cmd_fieldmap(run: _Run, grid_override=None) -> int:
    cfg = run.cfg
    stack = _need(cfg.stack, "stack")
    beam = _need(cfg.beam, "beam")
    n = grid_override or cfg.grid.n
    z = np.asarray(cfg.grid.z_list)
    summary = {}
    if cfg.grid.theta_div_list:
        maps = field_scan_divergence(beam, stack, cfg.grid.theta_div_list, z, n=n,
                                     shared_grid=cfg.grid.shared_grid, workers=run.threads,
                                     n_sigma=cfg.grid.n_sigma, x_step=cfg.grid.x_step)
        items = [(f"fieldmap_td{td * 1e3:g}mrad", _crop(fm, cfg.grid.x_range))
                 for td, fm in zip(cfg.grid.theta_div_list, maps)]
        g = {"nx": maps[0].meta["nx"], "ny": maps[0].meta["ny"], "shared_grid": cfg.grid.shared_grid}
    else:
        grid = _grid_for(cfg, beam, n)
        if cfg.grid.collimated:
            fm = collimated_field(beam, stack, z, grid=grid, workers=run.threads)
        else:
            fm = synthesize_field(cavity_angular_spectrum(beam, grid), stack, z, workers=run.threads)
        items = [("fieldmap", _crop(fm, cfg.grid.x_range))]
        g = {"nx": grid.nx, "ny": grid.ny}
    run.manifest.grid = {"n": n, "nx": g.get("nx"), "ny": g.get("ny"), "n_sigma": cfg.grid.n_sigma,
                         "x_step": cfg.grid.x_step, "nz": len(z)}
    for stem, fm in items:
        _write_fieldmap(run, fm, stem)
        summary[stem] = {"peak_intensity_rel": float(fm.intensity.max())}
    run.manifest.summary = summary
    for stem, s in summary.items():
        print(f"{stem}: peak_intensity_rel = {s['peak_intensity_rel']!r}")
    return EXIT_OK


def cmd_invert(run: _Run, grid_override=None) -> int:
    cfg = run.cfg
    stack = _need(cfg.stack, "stack")
    beam = _need(cfg.beam, "beam")
    t = _need(cfg.transition, "transition")
    n = grid_override or cfg.grid.n
    if cfg.grid.z_eval is not None:
        z_eval = cfg.grid.z_eval
    elif stack.resonant_indices:
        z_eval = stack.resonant_center()
    else:
        z_eval = 0.0
    grid = _grid_for(cfg, beam, n)
    if cfg.grid.collimated:
        fm = collimated_field(beam, stack, [z_eval], grid=grid, keep_y=True, workers=run.threads)
    else:
        fm = synthesize_field(cavity_angular_spectrum(beam, grid), stack, [z_eval], keep_y=True,
                              workers=run.threads)
    fm = _crop(fm, cfg.grid.x_range)
    inv = inversion_map(fm, beam, t)
    phi_free = peak_pulse_area(beam, t)
    summary = {"peak_sigma_z": inv.peak_sigma_z, "inverted_fraction": inv.inverted_fraction,
               "peak_pulse_area": inv.peak_pulse_area, "free_space_peak_pulse_area": phi_free,
               "pulse_area_enhancement": inv.peak_pulse_area / phi_free if phi_free > 0 else 0.0,
               "z_eval_m": z_eval}
    run.manifest.grid = {"n": n, "nx": grid.nx, "ny": grid.ny, "n_sigma": cfg.grid.n_sigma,
                         "x_step": cfg.grid.x_step}
    axes = (Axis.from_values("z", inv.z), Axis.from_values("y", inv.y), Axis.from_values("x", inv.x))
    p = run.path("inversion.xcg")
    write_grid(p, inv.sigma_z.astype(complex), axes, "sigma_z",
               {"peak_pulse_area": inv.peak_pulse_area, "z_eval": z_eval})
    run.done(p)
    p = run.path("pulse_area.xcg")
    write_grid(p, inv.pulse_area.astype(complex), axes, "rad", {"z_eval": z_eval})
    run.done(p)
    if cfg.output.csv:
        j = int(np.argmin(np.abs(inv.y)))
        row = type(inv)(inv.sigma_z[:, j, :], inv.pulse_area[:, j, :], inv.drive_phase[:, j, :],
                        inv.x, inv.z, None, inv.meta)
        p = run.path("inversion_y0.csv")
        write_inversion_csv(p, row)
        run.done(p)
    run.manifest.summary = summary
    run.report("invert_summary.txt", summary)
    return EXIT_OK


def cmd_chi(run: _Run, grid_override=None) -> int:
    cfg = run.cfg
    t = cfg.transition or FE57
    cs = chi_sigma(t)
    items = {"transition": t.name or "custom", "chi_sigma_m_per_sqrtJ": cs,
             "chi_sigma_m_per_sqrtmJ": cs * SQRT_MJ}
    if cfg.beam is not None:
        b = cfg.beam
        cx = chi_source(b.pulse_energy, b.rel_bandwidth)
        items.update(beam_chi_source_sqrtJ=cx, beam_chi_source_sqrtmJ=cx / SQRT_MJ,
                     beam_w0_m=b.w0, beam_peak_pulse_area=peak_pulse_area(b, t),
                     beam_chi_source_needed_sqrtmJ=chi_source_necessary(b.w0, t) / SQRT_MJ)
    if cfg.source is not None:
        s = cfg.source
        est = synchrotron_benchmark(s.flux, s.bandwidth, s.photon_energy, s.pulse_spacing, s.w0,
                                    s.target_thickness, s.rho, t, s.efficiency, s.phi_max)
        items.update(source_pulse_energy_J=est.pulse_energy, source_rel_bandwidth=est.rel_bandwidth,
                     source_chi_source_sqrtJ=est.chi_source, source_chi_source_sqrtmJ=est.chi_source / SQRT_MJ,
                     source_pulse_area=est.pulse_area, source_pulse_area_times_w0_m=est.pulse_area * s.w0,
                     source_N_exc=est.N_exc, source_N_det=est.N_det, source_efficiency=s.efficiency)
    run.manifest.summary = {k: v for k, v in items.items()}
    run.report("chi.txt", items)
    return EXIT_OK


def cmd_validate(run: _Run, grid_override=None) -> int:
    cfg = run.cfg
    v = cfg.validate
    t = cfg.transition or FE57
    items = {}
    failed = False
    if v.b is not None or v.sigma_pulse is not None:
        if v.b is None or v.sigma_pulse is None:
            raise ConfigError("[validate] depletion check needs both b and sigma_pulse")
        rep = depletion_report(v.b, v.sigma_pulse, t.gamma_rate, threshold=v.depletion_threshold)
        items.update(rep.as_dict())
        failed |= rep.verdict == "fail"
    if v.t_res is not None or v.rho_res is not None:
        beam = _need(cfg.beam, "beam")
        if v.t_res is None or v.rho_res is None:
            raise ConfigError("[validate] budget check needs both t_res and rho_res")
        bud = inversion_budget(beam, t, v.t_res, v.rho_res, threshold=v.ratio_threshold)
        items.update(bud.as_dict())
        failed |= not bud.passed
    if cfg.source is not None:
        s = cfg.source
        try:
            est = synchrotron_benchmark(s.flux, s.bandwidth, s.photon_energy, s.pulse_spacing, s.w0,
                                        s.target_thickness, s.rho, t, s.efficiency, s.phi_max)
            items.update(regime_pulse_area=est.pulse_area, regime_verdict="pass")
        except NumericalError as exc:
            items.update(regime_verdict=f"fail ({exc})")
            failed = True
    if not items:
        raise ConfigError("nothing to validate: give [validate] b/sigma_pulse, t_res/rho_res or [source]")
    items["overall"] = "fail" if failed else "pass"
    run.manifest.summary = dict(items)
    run.report("validate.txt", items)
    return EXIT_NUMERICAL if failed else EXIT_OK


HANDLERS = {"rocking": cmd_rocking, "fieldmap": cmd_fieldmap, "invert": cmd_invert,
            "chi": cmd_chi, "validate": cmd_validate}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xcav", description="Focused x-ray pulses in thin-film cavities.")
    p.add_argument("--version", action="version", version=f"xcav {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="run configuration file")
    p.add_argument("--out", help="output directory (default: [output] directory)")
    p.add_argument("--grid", type=int, help="FFT points per axis (rocking: number of angles)")
    p.add_argument("--threads", type=int, help=f"worker threads (overrides ${THREADS_ENV})")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        threads = resolve_threads(args.threads, cfg)
        if args.grid is not None and args.grid < 8:
            raise ConfigError("--grid must be >= 8")
        out = Path(args.out if args.out is not None else cfg.output.directory)
        out.mkdir(parents=True, exist_ok=True)
        run = _Run(cfg, out, threads, args.command)
        t0 = time.perf_counter()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            code = HANDLERS[args.command](run, args.grid)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        run.manifest.timing_s = time.perf_counter() - t0
        run.manifest.write(out)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
