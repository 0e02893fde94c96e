"""Uniform wave-vector grids and the masked complex samples living on them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class KGrid:
    """Uniform ``(k_x, k_y)`` grid.

    ``kx[p] = kx0 + p * dkx`` for ``p = 0 .. nx - 1`` (same for y). The
    conjugate real-space grid is centred on ``(xc, yc)`` with spacing
    ``dx = 2 pi / (nx * dkx)``; index ``nx // 2`` sits exactly on ``xc``.
    """

    kx0: float
    ky0: float
    dkx: float
    dky: float
    nx: int
    ny: int
    xc: float = 0.0
    yc: float = 0.0

    def __post_init__(self):
        if self.nx < 2 or self.ny < 1:
            raise ValueError("grid needs nx >= 2 and ny >= 1")
        if not (self.dkx > 0 and self.dky > 0):
            raise ValueError("grid spacings must be positive")

    @classmethod
    def centered(cls, kx_center, ky_center, span_x, span_y, nx, ny, xc=0.0, yc=0.0):
        dkx = span_x / nx
        dky = span_y / ny
        return cls(kx_center - dkx * (nx // 2), ky_center - dky * (ny // 2), dkx, dky, nx, ny, xc, yc)

    @property
    def kx(self) -> np.ndarray:
        return self.kx0 + self.dkx * np.arange(self.nx)

    @property
    def ky(self) -> np.ndarray:
        return self.ky0 + self.dky * np.arange(self.ny)

    @property
    def dx(self) -> float:
        return 2 * math.pi / (self.nx * self.dkx)

    @property
    def dy(self) -> float:
        return 2 * math.pi / (self.ny * self.dky)

    @property
    def x(self) -> np.ndarray:
        return self.xc + self.dx * (np.arange(self.nx) - self.nx // 2)

    @property
    def y(self) -> np.ndarray:
        return self.yc + self.dy * (np.arange(self.ny) - self.ny // 2)

    @property
    def cell_area(self) -> float:
        return self.dkx * self.dky

    def mesh(self):
        """``(KX, KY)`` arrays of shape ``(ny, nx)``."""
        return np.meshgrid(self.kx, self.ky)

    def kz2(self, k):
        """Vacuum ``k^2 - kx^2 - ky^2`` on the grid, shape ``(ny, nx)``.

        Written as ``(k - kx)(k + kx) - ky^2`` since ``kx`` is close to ``k``
        at grazing incidence.
        """
        kx = self.kx[None, :]
        ky = self.ky[:, None]
        return (k - kx) * (k + kx) - ky**2

    def refined(self, factor=2) -> "KGrid":
        """Same k-span sampled `factor` times more finely (larger real-space window)."""
        kxc = self.kx0 + self.dkx * (self.nx // 2)
        kyc = self.ky0 + self.dky * (self.ny // 2)
        return KGrid.centered(
            kxc, kyc, self.nx * self.dkx, self.ny * self.dky,
            self.nx * factor, self.ny * factor, self.xc, self.yc,
        )


@dataclass
class AngularSpectrumGrid:
    """Complex samples on a :class:`KGrid` with an on-shell validity mask.

    Masked cells hold zero in `values` and are excluded by `mask`; they are
    never silently valid.
    """

    values: np.ndarray
    grid: KGrid
    mask: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = (self.grid.ny, self.grid.nx)
        if self.values.shape != shape or self.mask.shape != shape:
            raise ValueError(f"values/mask must have shape {shape}")

    @property
    def n_valid(self) -> int:
        return int(self.mask.sum())

    def masked(self) -> np.ma.MaskedArray:
        return np.ma.MaskedArray(self.values, mask=~self.mask)

    def __mul__(self, other):
        if isinstance(other, AngularSpectrumGrid):
            if other.grid != self.grid:
                raise ValueError("grids differ")
            mask = self.mask & other.mask
            return AngularSpectrumGrid(np.where(mask, self.values * other.values, 0), self.grid, mask)
        return AngularSpectrumGrid(self.values * other, self.grid, self.mask.copy(), dict(self.meta))

    __rmul__ = __mul__

    def __add__(self, other):
        if other.grid != self.grid:
            raise ValueError("grids differ")
        mask = self.mask | other.mask
        return AngularSpectrumGrid(self.values + other.values, self.grid, mask)
