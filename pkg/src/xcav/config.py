"""Declarative run configuration (INI style).

Sections
--------
``[stack]``
    ``photon_energy`` and a multi-line ``layers`` value, one layer per line
    (or ``/``-separated on one line)::

        name  thickness  [delta beta]  [resonant]

    `thickness` is a length (bare numbers are nm) or ``inf``; a trailing
    ``*`` on the name also marks the resonant layer. If `delta`/`beta` are
    omitted they are looked up in ``[materials]`` (``name = delta beta``);
    names ``vacuum``/``vac`` default to zero. When the first layer has a
    finite thickness a semi-infinite vacuum layer is prepended.
``[transition]``
    ``preset = 57Fe`` and/or ``energy``, ``gamma``, ``alpha_ic``, ``spin_g``,
    ``spin_e``. Required when any layer is resonant.
``[beam]``
    ``theta_in``; one of ``theta_div``/``w0``; one of
    ``n_photons + tau``, ``pulse_energy + rel_bandwidth`` or
    ``peak_pulse_area`` (with ``tau`` or ``rel_bandwidth``); optional
    ``photon_energy``, ``focus = x y z``, ``alignment``.
``[grid]``
    Sampling and windows, see :class:`GridSettings`.
``[output]``
    ``directory``, ``prefix``, ``csv``.
``[source]``, ``[validate]``
    Inputs of the ``chi`` and ``validate`` commands.

Bare angles are mrad, bare lengths nm, bare energies eV, bare times s.
"""
from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field

from .beam import BeamError, BeamSpec
from .errors import ConfigError
from .stack import FE57, Layer, LayerStack, MaterialIndex, TransitionSpec, VACUUM
from .units import (ev_to_omega, parse_angle, parse_energy_ev, parse_length, parse_pulse_energy,
                    parse_time)
from .validity import required_photons

SECTIONS = ("stack", "materials", "transition", "beam", "grid", "output", "source", "validate")
PRESETS = {"57fe": FE57, "fe57": FE57}
_VACUUM_NAMES = {"vacuum", "vac"}
_KEY = re.compile(r"^([^\s=:][^=:]*?)\s*[=:]")


class _Lines:
    """Line numbers of sections, keys and continuation lines in the raw text."""

    def __init__(self, text):
        self.keys = {}
        self.cont = {}
        section = None
        last = None
        for no, raw in enumerate(text.splitlines(), start=1):
            s = raw.strip()
            if not s or s[0] in "#;":
                continue
            if s.startswith("[") and s.endswith("]"):
                section, last = s[1:-1].strip().lower(), None
                self.keys.setdefault((section, None), no)
                continue
            if raw[0].isspace() and last is not None:
                self.cont[last].append(no)
                continue
            m = _KEY.match(s)
            if m and section is not None:
                last = (section, m.group(1).strip().lower())
                self.keys[last] = no
                self.cont[last] = []

    def key(self, section, key=None):
        return self.keys.get((section, key))

    def item(self, section, key, i):
        """Line of the `i`-th non-empty entry of a multi-line value."""
        first = self.key(section, key)
        cont = self.cont.get((section, key), [])
        return cont[i] if i < len(cont) else first


def _read(text) -> tuple[configparser.ConfigParser, _Lines]:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", None)) from None
    lines = _Lines(text)
    for sec in cp.sections():
        if sec.lower() not in SECTIONS:
            raise ConfigError(f"unknown section [{sec}]", lines.key(sec.lower()))
    return cp, lines


class _Section:
    """Typed accessors that attach line numbers to every error."""

    def __init__(self, cp, lines, name):
        self.name = name
        self.lines = lines
        self.data = cp[name] if cp.has_section(name) else {}

    def __contains__(self, key):
        return key in self.data

    def line(self, key):
        return self.lines.key(self.name, key)

    def raw(self, key, default=None):
        return self.data.get(key, default)

    def get(self, key, conv, default=None):
        if key not in self.data:
            return default
        try:
            return conv(self.data[key])
        except ConfigError as exc:
            raise ConfigError(f"[{self.name}] {key}: {exc}", self.line(key)) from None
        except (ValueError, TypeError):
            raise ConfigError(f"[{self.name}] {key}: malformed value {self.data[key]!r}",
                              self.line(key)) from None

    def require(self, key, conv):
        if key not in self.data:
            raise ConfigError(f"[{self.name}] missing required key {key!r}", self.lines.key(self.name))
        return self.get(key, conv)


def _floats(conv, n=None):
    """Converter for whitespace-separated lists; a trailing unit applies to all."""
    def parse(text):
        parts = text.replace(",", " ").split()
        unit = ""
        if parts and not _is_number(parts[-1]):
            unit = parts.pop()
        vals = [conv(p + unit) for p in parts]
        if n is not None and len(vals) != n:
            raise ValueError
        return tuple(vals)
    return parse


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "yes", "true", "on"):
        return True
    if t in ("0", "no", "false", "off"):
        return False
    raise ValueError(text)


def _thickness(tok):
    return None if tok.lower() == "inf" else parse_length(tok)


def _pulse_area(text):
    t = text.strip().lower().replace(" ", "")
    m = re.fullmatch(r"([-+]?[\d.eE+-]*)\*?pi(?:/([\d.]+))?", t)
    if m:
        num = float(m.group(1)) if m.group(1) not in ("", "+") else 1.0
        return num * math.pi / (float(m.group(2)) if m.group(2) else 1.0)
    return float(t)


# ------------------------------------------------------------------ stack


def _parse_layer_line(entry, materials, line):
    toks = entry.split()
    if not toks:
        raise ConfigError("empty layer entry", line)
    name = toks[0]
    resonant = False
    if name.endswith("*"):
        name, resonant = name[:-1], True
    rest = toks[1:]
    flags = [t for t in rest if t.lower() == "resonant"]
    if len(flags) + resonant > 1:
        raise ConfigError(f"duplicate resonant flag on layer {name!r}", line)
    resonant = resonant or bool(flags)
    rest = [t for t in rest if t.lower() != "resonant"]
    if len(rest) >= 2 and _is_number(rest[0]) and not _is_number(rest[1]):
        rest = [rest[0] + rest[1]] + rest[2:]  # "2.5 nm"
    if not name:
        raise ConfigError("layer without a name", line)
    thickness = None
    try:
        if rest:
            thickness = _thickness(rest[0])
            rest = rest[1:]
    except ConfigError as exc:
        raise ConfigError(str(exc), line) from None
    if len(rest) == 2:
        try:
            delta, beta = float(rest[0]), float(rest[1])
        except ValueError:
            raise ConfigError(f"malformed refractive index on layer {name!r}: {' '.join(rest)}", line) from None
    elif not rest:
        key = name.lower()
        if key in materials:
            delta, beta = materials[key]
        elif key in _VACUUM_NAMES:
            delta, beta = 0.0, 0.0
        else:
            raise ConfigError(f"no refractive index for {name!r} (give delta beta or a [materials] entry)", line)
    else:
        raise ConfigError(f"cannot read layer entry {entry!r}", line)
    if thickness is not None and not thickness > 0:
        raise ConfigError(f"layer {name!r} has non-positive thickness", line)
    try:
        material = MaterialIndex(delta, beta)
    except ConfigError as exc:
        raise ConfigError(f"layer {name!r}: {exc}", line) from None
    return Layer(name, thickness, material, resonant)


def _materials(cp, lines):
    sec = _Section(cp, lines, "materials")
    out = {}
    for key in sec.data:
        out[key.lower()] = sec.get(key, _floats(float, 2))
    return out


def _stack_from(cp, lines) -> LayerStack:
    sec = _Section(cp, lines, "stack")
    if not cp.has_section("stack"):
        raise ConfigError("missing [stack] section")
    energy = sec.get("photon_energy", parse_energy_ev, 14412.5)
    raw = sec.require("layers", str)
    materials = _materials(cp, lines)
    entries = []
    for i, row in enumerate(r for r in raw.splitlines() if r.strip()):
        line = lines.item("stack", "layers", i)
        entries.extend((e.strip(), line) for e in row.split("/") if e.strip())
    if not entries:
        raise ConfigError("[stack] layers is empty", sec.line("layers"))
    rows = [(_parse_layer_line(e, materials, ln), ln) for e, ln in entries]
    if rows[0][0].thickness is not None:
        rows.insert(0, (Layer("vacuum", None, VACUUM), rows[0][1]))
    if rows[-1][0].thickness is not None:
        raise ConfigError(f"bottom layer {rows[-1][0].name!r} must be semi-infinite ('inf')", rows[-1][1])
    if len(rows) < 2:
        raise ConfigError("a stack needs at least two layers", sec.line("layers"))
    for layer, line in rows[1:-1]:
        if layer.thickness is None:
            raise ConfigError(f"interior layer {layer.name!r} needs a finite thickness", line)
    layers = [r[0] for r in rows]
    try:
        return LayerStack(tuple(layers), energy)
    except ConfigError as exc:
        raise ConfigError(str(exc), sec.line("layers")) from None


def _transition_from(cp, lines) -> TransitionSpec | None:
    if not cp.has_section("transition"):
        return None
    sec = _Section(cp, lines, "transition")
    base = FE57
    if "preset" in sec:
        key = sec.raw("preset").strip().lower()
        if key not in PRESETS:
            raise ConfigError(f"unknown transition preset {sec.raw('preset')!r}", sec.line("preset"))
        base = PRESETS[key]
    elif "energy" not in sec or "gamma" not in sec:
        raise ConfigError("[transition] needs a preset or both energy and gamma", lines.key("transition"))
    energy = sec.get("energy", parse_energy_ev, base.energy_ev)
    try:
        return TransitionSpec(
            ev_to_omega(energy) if "energy" in sec else base.omega_nuc,
            sec.get("gamma", parse_energy_ev, base.gamma),
            sec.get("alpha_ic", float, base.alpha_ic),
            sec.get("spin_g", float, base.spin_g),
            sec.get("spin_e", float, base.spin_e),
            sec.raw("name", base.name if "preset" in sec else ""),
        )
    except ConfigError as exc:
        raise ConfigError(str(exc), lines.key("transition")) from None


def parse_stack(config_text: str) -> LayerStack:
    """Validated :class:`LayerStack` from config text.

    Raises
    ------
    ConfigError
        With the line of the offending entry where it can be located.
    """
    cp, lines = _read(config_text)
    stack = _stack_from(cp, lines)
    if stack.resonant_indices and not cp.has_section("transition"):
        raise ConfigError("resonant layer flagged but no [transition] section given",
                          lines.key("stack", "layers"))
    return stack


def _fmt(x: float) -> str:
    return repr(float(x))


def serialize_stack(stack: LayerStack, transition: TransitionSpec | None = None) -> str:
    """Config text that :func:`parse_stack` turns back into an equal stack."""
    if stack.resonant_indices and transition is None:
        raise ConfigError("a stack with resonant layers needs its transition to serialize")
    out = ["[stack]", f"photon_energy = {_fmt(stack.photon_energy)} eV", "layers ="]
    for layer in stack.layers:
        if not layer.name or any(c.isspace() or c in "/*#;" for c in layer.name):
            raise ConfigError(f"layer name {layer.name!r} cannot be written")
        t = "inf" if layer.thickness is None else f"{_fmt(layer.thickness)}m"
        flag = "  resonant" if layer.resonant else ""
        out.append(f"    {layer.name}  {t}  {_fmt(layer.material.delta)}  {_fmt(layer.material.beta)}{flag}")
    if transition is not None:
        out += ["", "[transition]", f"energy = {_fmt(transition.energy_ev)} eV",
                f"gamma = {_fmt(transition.gamma)} eV", f"alpha_ic = {_fmt(transition.alpha_ic)}",
                f"spin_g = {_fmt(transition.spin_g)}", f"spin_e = {_fmt(transition.spin_e)}"]
        if transition.name:
            out.append(f"name = {transition.name}")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------- run config


@dataclass
class GridSettings:
    """Sampling of the k-grid and the requested real-space windows.

    Attributes
    ----------
    n : int
        FFT points per axis (``--grid``).
    n_sigma : float
        k-space coverage in Gaussian widths.
    x_range : (float, float) or None
        Real-space x window of the written maps (m).
    z_list : tuple of float
        Depths (m), from ``z_range`` + ``nz`` or an explicit ``z_list``.
    theta_div_list : tuple of float
        Divergences (rad) for a field-map scan.
    theta_range, n_theta
        Rocking-curve sweep (rad).
    z_eval : float or None
        Depth for ``invert`` (default: resonant layer centre, else 0).
    x_step : float or None
        Largest real-space x spacing (m); widens the k_x span if needed.
    shared_grid : bool
        Use one k-grid for all divergences of a scan.
    """

    n: int = 1024
    n_sigma: float = 6.0
    x_range: tuple | None = None
    z_list: tuple = (0.0,)
    theta_div_list: tuple = ()
    collimated: bool = False
    theta_range: tuple = (0.5e-3, 20e-3)
    n_theta: int = 4001
    z_eval: float | None = None
    x_step: float | None = None
    shared_grid: bool = False
    threads: int | None = None


@dataclass
class OutputSettings:
    directory: str = "out"
    prefix: str = ""
    csv: bool = True


@dataclass
class SourceSettings:
    flux: float
    bandwidth: float
    photon_energy: float
    pulse_spacing: float
    w0: float
    target_thickness: float
    rho: float
    efficiency: float = 1.0
    phi_max: float = 0.1


@dataclass
class ValidateSettings:
    b: float | None = None
    sigma_pulse: float | None = None
    t_res: float | None = None
    rho_res: float | None = None
    depletion_threshold: float = 1e-3
    ratio_threshold: float = 1e3


@dataclass
class RunConfig:
    stack: LayerStack | None
    transition: TransitionSpec | None
    beam: BeamSpec | None
    grid: GridSettings
    output: OutputSettings
    source: SourceSettings | None = None
    validate: ValidateSettings = field(default_factory=ValidateSettings)
    text: str = ""
    path: str | None = None

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()


def _beam_from(cp, lines, stack, transition) -> BeamSpec | None:
    if not cp.has_section("beam"):
        return None
    sec = _Section(cp, lines, "beam")
    if "photon_energy" in sec:
        energy = sec.get("photon_energy", parse_energy_ev)
    elif transition is not None:
        energy = transition.energy_ev
    elif stack is not None:
        energy = stack.photon_energy
    else:
        raise ConfigError("[beam] needs photon_energy", lines.key("beam"))
    omega = ev_to_omega(energy) if "photon_energy" in sec or transition is None else transition.omega_nuc
    kw = dict(
        omega=omega,
        theta_in=sec.require("theta_in", parse_angle),
        w0=sec.get("w0", parse_length),
        theta_div=sec.get("theta_div", parse_angle),
        focus=sec.get("focus", _floats(parse_length, 3), (0.0, 0.0, 0.0)),
        alignment=sec.get("alignment", float, 1.0),
    )
    target = sec.get("peak_pulse_area", _pulse_area)
    if target is not None:
        if transition is None:
            raise ConfigError("peak_pulse_area needs a [transition] section", sec.line("peak_pulse_area"))
        tau = sec.get("tau", parse_time)
        if tau is None:
            b_r = sec.get("rel_bandwidth", float)
            if b_r is None:
                raise ConfigError("peak_pulse_area needs tau or rel_bandwidth", sec.line("peak_pulse_area"))
            tau = math.sqrt(math.log(2)) / (b_r * omega)
        kw.update(n_photons=1.0, tau=tau)
    else:
        kw.update(n_photons=sec.get("n_photons", float), tau=sec.get("tau", parse_time),
                  pulse_energy=sec.get("pulse_energy", parse_pulse_energy),
                  rel_bandwidth=sec.get("rel_bandwidth", float))
    try:
        beam = BeamSpec(**kw)
        if target is not None:
            beam = beam.with_photons(required_photons(beam, transition) * (target / math.pi) ** 2)
    except BeamError as exc:
        raise ConfigError(f"[beam] {exc}", lines.key("beam")) from None
    return beam


def _grid_from(cp, lines) -> GridSettings:
    sec = _Section(cp, lines, "grid")
    g = GridSettings()
    g.n = sec.get("n", int, g.n)
    if g.n < 8:
        raise ConfigError("[grid] n must be >= 8", sec.line("n"))
    g.n_sigma = sec.get("n_sigma", float, g.n_sigma)
    g.x_range = sec.get("x_range", _floats(lambda s: parse_length(s), 2))
    if g.x_range is not None and not g.x_range[1] > g.x_range[0]:
        raise ConfigError("[grid] x_range is empty", sec.line("x_range"))
    if "z_list" in sec:
        g.z_list = sec.get("z_list", _floats(parse_length))
    elif "z_range" in sec:
        lo, hi = sec.get("z_range", _floats(parse_length, 2))
        nz = sec.get("nz", int, 101)
        if nz < 1 or hi < lo or (nz > 1 and hi == lo):
            raise ConfigError("[grid] z_range/nz describe an empty window", sec.line("z_range"))
        g.z_list = tuple(lo + (hi - lo) * i / max(nz - 1, 1) for i in range(nz))
    if not g.z_list:
        raise ConfigError("[grid] no depths requested", sec.line("z_list"))
    g.theta_div_list = sec.get("theta_div_list", _floats(parse_angle), ())
    g.collimated = sec.get("collimated", _bool, False)
    g.shared_grid = sec.get("shared_grid", _bool, False)
    g.theta_range = sec.get("theta_range", _floats(parse_angle, 2), g.theta_range)
    if not 0 <= g.theta_range[0] < g.theta_range[1]:
        raise ConfigError("[grid] theta_range must be increasing and non-negative", sec.line("theta_range"))
    g.n_theta = sec.get("n_theta", int, g.n_theta)
    if g.n_theta < 3:
        raise ConfigError("[grid] n_theta must be >= 3", sec.line("n_theta"))
    g.z_eval = sec.get("z_eval", parse_length)
    g.x_step = sec.get("x_step", parse_length)
    if g.x_step is not None and not g.x_step > 0:
        raise ConfigError("[grid] x_step must be positive", sec.line("x_step"))
    g.threads = sec.get("threads", int)
    return g


def _output_from(cp, lines) -> OutputSettings:
    sec = _Section(cp, lines, "output")
    o = OutputSettings()
    o.directory = sec.raw("directory", o.directory).strip()
    o.prefix = sec.raw("prefix", o.prefix).strip()
    o.csv = sec.get("csv", _bool, True)
    return o


def _source_from(cp, lines) -> SourceSettings | None:
    if not cp.has_section("source"):
        return None
    sec = _Section(cp, lines, "source")
    return SourceSettings(
        flux=sec.require("flux", float),
        bandwidth=sec.require("bandwidth", parse_energy_ev),
        photon_energy=sec.require("photon_energy", parse_energy_ev),
        pulse_spacing=sec.require("pulse_spacing", parse_time),
        w0=sec.require("w0", parse_length),
        target_thickness=sec.require("target_thickness", parse_length),
        rho=sec.require("rho", float),
        efficiency=sec.get("efficiency", float, 1.0),
        phi_max=sec.get("phi_max", float, 0.1),
    )


def _validate_from(cp, lines) -> ValidateSettings:
    sec = _Section(cp, lines, "validate")
    v = ValidateSettings()
    v.b = sec.get("b", float)
    v.sigma_pulse = sec.get("sigma_pulse", parse_time)
    v.t_res = sec.get("t_res", parse_length)
    v.rho_res = sec.get("rho_res", float)
    v.depletion_threshold = sec.get("depletion_threshold", float, v.depletion_threshold)
    v.ratio_threshold = sec.get("ratio_threshold", float, v.ratio_threshold)
    return v


def parse_config(text: str, path: str | None = None) -> RunConfig:
    """Parse a complete run configuration."""
    cp, lines = _read(text)
    stack = _stack_from(cp, lines) if cp.has_section("stack") else None
    transition = _transition_from(cp, lines)
    if stack is not None and stack.resonant_indices and transition is None:
        raise ConfigError("resonant layer flagged but no [transition] section given",
                          lines.key("stack", "layers"))
    beam = _beam_from(cp, lines, stack, transition)
    return RunConfig(stack, transition, beam, _grid_from(cp, lines), _output_from(cp, lines),
                     _source_from(cp, lines), _validate_from(cp, lines), text, path)


def load_config(path) -> RunConfig:
    """Read and parse a config file (``OSError`` propagates)."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, str(path))
