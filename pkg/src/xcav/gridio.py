"""Binary ``XCAVGRID`` files and CSV exports.

Binary layout (all little-endian)::

    8s   magic  b"XCAVGRID"
    u16  version (1)
    u16  ndim
    ndim x axis record:
        u64  n
        f64  origin
        f64  spacing
        u16 + utf-8  name
        u16 + utf-8  unit
    u16 + utf-8  value unit
    u32 + utf-8  metadata (JSON, sorted keys)
    complex128 payload, C order (first axis slowest)

Files contain no timestamps, so equal inputs give equal bytes.
"""
from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import GridFormatError

MAGIC = b"XCAVGRID"
VERSION = 1
_DT = np.dtype("<c16")


@dataclass(frozen=True)
class Axis:
    name: str
    n: int
    origin: float
    spacing: float
    unit: str = "m"

    @classmethod
    def from_values(cls, name, values, unit="m", rtol=1e-9) -> "Axis":
        """Uniform axis through `values`; a single point gets spacing 0."""
        v = np.asarray(values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError(f"axis {name!r} must be a non-empty 1D array")
        if v.size == 1:
            return cls(name, 1, float(v[0]), 0.0, unit)
        step = (v[-1] - v[0]) / (v.size - 1)
        if np.abs(np.diff(v) - step).max() > rtol * max(abs(step), 1e-300) + 1e-300:
            raise ValueError(f"axis {name!r} is not uniformly spaced")
        return cls(name, int(v.size), float(v[0]), float(step), unit)

    @property
    def values(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.n)


@dataclass
class GridFile:
    values: np.ndarray
    axes: tuple
    value_unit: str = ""
    meta: dict = field(default_factory=dict)


def _pack_str(s, fmt="<H"):
    b = s.encode("utf-8")
    return struct.pack(fmt, len(b)) + b


def encode_grid(values, axes, value_unit="", meta=None) -> bytes:
    values = np.asarray(values)
    axes = tuple(axes)
    if values.shape != tuple(a.n for a in axes):
        raise ValueError(f"values shape {values.shape} does not match axes {[a.n for a in axes]}")
    parts = [MAGIC, struct.pack("<HH", VERSION, len(axes))]
    for a in axes:
        parts.append(struct.pack("<Qdd", a.n, a.origin, a.spacing))
        parts.append(_pack_str(a.name))
        parts.append(_pack_str(a.unit))
    parts.append(_pack_str(value_unit))
    parts.append(_pack_str(json.dumps(meta or {}, sort_keys=True, default=float), "<I"))
    parts.append(np.ascontiguousarray(values, dtype=_DT).tobytes())
    return b"".join(parts)


def write_grid(path, values, axes, value_unit="", meta=None) -> None:
    data = encode_grid(values, axes, value_unit, meta)
    with open(path, "wb") as fh:
        fh.write(data)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise GridFormatError("truncated XCAVGRID file")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def string(self, fmt="<H"):
        (n,) = self.unpack(fmt)
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError:
            raise GridFormatError("invalid utf-8 string in header") from None


def decode_grid(data: bytes) -> GridFile:
    r = _Reader(data)
    if r.take(8) != MAGIC:
        raise GridFormatError("not an XCAVGRID file (bad magic)")
    version, ndim = r.unpack("<HH")
    if version != VERSION:
        raise GridFormatError(f"unsupported XCAVGRID version {version}")
    axes = []
    for _ in range(ndim):
        n, origin, spacing = r.unpack("<Qdd")
        name = r.string()
        unit = r.string()
        axes.append(Axis(name, int(n), origin, spacing, unit))
    value_unit = r.string()
    try:
        meta = json.loads(r.string("<I"))
    except json.JSONDecodeError:
        raise GridFormatError("corrupt metadata block") from None
    shape = tuple(a.n for a in axes)
    count = int(np.prod(shape)) if shape else 1
    payload = r.take(count * _DT.itemsize)
    if r.pos != len(data):
        raise GridFormatError("trailing bytes after payload")
    values = np.frombuffer(payload, dtype=_DT).astype(complex).reshape(shape)
    return GridFile(values, tuple(axes), value_unit, meta)


def read_grid(path) -> GridFile:
    with open(path, "rb") as fh:
        return decode_grid(fh.read())


def _g(x):
    return repr(float(x))


def write_rows(path, header, rows) -> None:
    """CSV with full-precision floats; deterministic formatting."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_g(v) if isinstance(v, (float, np.floating)) else v for v in row])


def write_fieldmap_csv(path, field_map) -> None:
    """Long-format ``z, x, Re E, Im E, |E|^2 / |E_focus|^2`` at the y = 0 slice."""
    v = field_map.slice_y0()
    inten = np.abs(v) ** 2 / field_map.reference**2

    def rows():
        for i, z in enumerate(field_map.z):
            for j, x in enumerate(field_map.x):
                yield (float(z), float(x), float(v[i, j].real), float(v[i, j].imag), float(inten[i, j]))
    write_rows(path, ["z_m", "x_m", "re_E", "im_E", "intensity_rel"], rows())


def write_rocking_csv(path, curve) -> None:
    amp = curve.amplitude if curve.amplitude is not None else np.sqrt(curve.reflectivity)
    write_rows(path, ["theta_mrad", "reflectivity", "phase_rad"],
               ((float(t) * 1e3, float(r), float(np.angle(a)))
                for t, r, a in zip(curve.angles, curve.reflectivity, amp)))


def write_inversion_csv(path, inv) -> None:
    """One row per cell: ``z, y, x, pulse_area, sigma_z``."""
    sz, phi = inv.sigma_z, inv.pulse_area
    ys = inv.y if sz.ndim == 3 else np.array([0.0])
    sz3 = sz if sz.ndim == 3 else sz[:, None, :]
    phi3 = phi if phi.ndim == 3 else phi[:, None, :]

    def rows():
        for i, z in enumerate(inv.z):
            for j, y in enumerate(ys):
                for k, x in enumerate(inv.x):
                    yield (float(z), float(y), float(x), float(phi3[i, j, k]), float(sz3[i, j, k]))
    write_rows(path, ["z_m", "y_m", "x_m", "pulse_area", "sigma_z"], rows())
