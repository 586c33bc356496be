"""Uniform cell-centred computational grid for the waveguide cross-section.

Coordinates are in micrometres; x is lateral and y is depth, with y = 0 the
crystal surface (y < 0 is the cover). Nodes sit at cell centres, so that a
domain edge lying on a multiple of the spacing falls exactly on a cell face.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError

MIN_NODES = 16


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < MIN_NODES or self.ny < MIN_NODES:
            raise ConfigurationError(
                f"grid needs at least {MIN_NODES} nodes per axis, got {self.nx}x{self.ny}"
            )
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ConfigurationError("grid extents must be increasing")

    @classmethod
    def from_step(cls, x_min, x_max, y_min, y_max, step):
        """Build a grid with (approximately) square cells of size `step` µm.

        The extents are kept exactly; the node counts are rounded so that the
        actual spacing deviates from `step` by less than half a cell over the
        whole extent.
        """
        if step <= 0:
            raise ConfigurationError("grid step must be positive")
        nx = int(round((x_max - x_min) / step))
        ny = int(round((y_max - y_min) / step))
        return cls(float(x_min), float(x_max), float(y_min), float(y_max), nx, ny)

    @property
    def hx(self):
        return (self.x_max - self.x_min) / self.nx

    @property
    def hy(self):
        return (self.y_max - self.y_min) / self.ny

    @property
    def cell_area(self):
        return self.hx * self.hy

    @property
    def shape(self):
        return (self.nx, self.ny)

    @cached_property
    def x(self):
        return self.x_min + (np.arange(self.nx) + 0.5) * self.hx

    @cached_property
    def y(self):
        return self.y_min + (np.arange(self.ny) + 0.5) * self.hy

    def mesh(self):
        """Return ``(X, Y)`` node coordinates with ``indexing='ij'``."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    def refined(self, factor):
        """Same extents, `factor` times as many cells per axis."""
        return Grid(self.x_min, self.x_max, self.y_min, self.y_max,
                    self.nx * factor, self.ny * factor)

    def integrate(self, values):
        """Midpoint-rule quadrature of nodal values over the domain."""
        return float(np.sum(values) * self.cell_area)

    def covers(self, x_lo, x_hi, y_lo, y_hi):
        return (self.x_min <= x_lo and self.x_max >= x_hi
                and self.y_min <= y_lo and self.y_max >= y_hi)
