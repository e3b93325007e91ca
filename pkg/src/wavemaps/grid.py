"""Uniform node-centred radial grids on [0, r_max] and grid functions."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidArgument, NonFiniteValue

MIN_CELLS = 8


@dataclass(frozen=True)
class RadialGrid:
    """n cells, n + 1 nodes r_i = i*h with r_0 = 0 and r_n = r_max."""

    r_max: float
    n: int

    @property
    def h(self) -> float:
        return self.r_max / self.n

    @property
    def size(self) -> int:
        return self.n + 1

    @cached_property
    def r(self) -> np.ndarray:
        nodes = np.arange(self.n + 1) * self.h
        nodes[-1] = self.r_max
        nodes.flags.writeable = False
        return nodes

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.size))

    def coarsen(self, levels: int) -> "RadialGrid":
        factor = 1 << levels
        if levels < 0 or self.n % factor:
            raise InvalidArgument(f"n={self.n} is not divisible by 2**{levels}")
        return RadialGrid(self.r_max, self.n // factor)


def make_grid(r_max: float, n: int) -> RadialGrid:
    if not np.isfinite(r_max) or r_max <= 0:
        raise InvalidArgument(f"r_max must be positive, got {r_max!r}")
    if int(n) != n or n < MIN_CELLS:
        raise InvalidArgument(f"n must be an integer >= {MIN_CELLS}, got {n!r}")
    return RadialGrid(float(r_max), int(n))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal values on a RadialGrid."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise InvalidArgument(
                f"expected {self.grid.size} nodal values, got shape {values.shape}"
            )
        object.__setattr__(self, "values", values)

    def _check(self, other: "GridFunction") -> None:
        if other.grid != self.grid:
            raise InvalidArgument("grid functions live on different grids")

    def __len__(self) -> int:
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __getitem__(self, idx):
        return self.values[idx]

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __add__(self, other):
        self._check(other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.values).all())

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy())


def restrict(fine: GridFunction, levels: int) -> GridFunction:
    """Inject onto the grid coarsened by 2**levels (keeps every 2**levels-th node)."""
    coarse = fine.grid.coarsen(levels)
    return GridFunction(coarse, fine.values[:: 1 << levels].copy())


def l2_norm(f) -> float:
    """RMS norm sqrt(sum f_i^2 / (n+1)); accepts a GridFunction or an array."""
    values = np.asarray(f.values if isinstance(f, GridFunction) else f, dtype=float)
    if not np.isfinite(values).all():
        raise NonFiniteValue("l2_norm of a non-finite grid function")
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    if scale == 0.0:
        return 0.0
    # scaling keeps tiny and huge values away from under/overflow in the squares
    scaled = values / scale
    return scale * float(np.sqrt(np.mean(scaled * scaled)))
