"""Field states, the ingoing Gaussian family and the static harmonic-map profiles."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidArgument
from .grid import GridFunction, RadialGrid


@dataclass(frozen=True, eq=False)
class FieldState:
    """Time t with chi(r) and its time derivative pi(r) on a common grid."""

    t: float
    chi: GridFunction
    pi: GridFunction

    def __post_init__(self):
        if self.chi.grid != self.pi.grid:
            raise InvalidArgument("chi and pi must share a grid")

    @property
    def grid(self) -> RadialGrid:
        return self.chi.grid

    @classmethod
    def from_arrays(cls, grid: RadialGrid, t: float, chi, pi) -> "FieldState":
        return cls(float(t), GridFunction(grid, chi), GridFunction(grid, pi))

    def is_finite(self) -> bool:
        return self.chi.is_finite() and self.pi.is_finite()

    def __neg__(self):
        return FieldState(self.t, -self.chi, -self.pi)


ORIGIN_MODES = ("image", "pin")


@dataclass(frozen=True)
class GaussianFamily:
    """chi(r, 0) = A exp(-(r - R0)^2 / delta^2), with pi(r, 0) = chi'(r, 0).

    ``origin`` selects how chi(0) = 0 is enforced, see gaussian_ingoing.
    """

    A: float
    R0: float
    delta: float
    origin: str = "image"

    def __post_init__(self):
        if not (np.isfinite(self.A) and np.isfinite(self.R0) and np.isfinite(self.delta)):
            raise InvalidArgument("Gaussian family parameters must be finite")
        if self.delta <= 0:
            raise InvalidArgument(f"delta must be positive, got {self.delta}")
        if self.R0 <= 0:
            raise InvalidArgument(f"R0 must be positive, got {self.R0}")
        if self.origin not in ORIGIN_MODES:
            raise InvalidArgument(f"origin must be one of {ORIGIN_MODES}, got {self.origin!r}")

    def with_amplitude(self, A: float) -> "GaussianFamily":
        return replace(self, A=float(A))


def gaussian_ingoing(fam: GaussianFamily, grid: RadialGrid) -> FieldState:
    """Sample the ingoing pulse on the grid with chi(0) = pi(0) = 0.

    The family's ``origin="image"`` subtracts the mirror pulse centred at -R0, the odd
    extension of the ingoing wave, so the data stay smooth through r = 0.
    ``origin="pin"`` zeroes the origin node only, which leaves a kink of
    size A*exp(-(R0/delta)^2) that converges at first order.

    pi uses the analytic time derivative rather than a difference of samples.
    """
    if fam.R0 >= grid.r_max:
        raise InvalidArgument(f"R0={fam.R0} must lie inside r_max={grid.r_max}")
    d2 = fam.delta**2
    x = grid.r - fam.R0
    chi = fam.A * np.exp(-(x * x) / d2)
    pi = (-2.0 * x / d2) * chi
    if fam.origin == "image":
        y = grid.r + fam.R0
        mirror = fam.A * np.exp(-(y * y) / d2)
        chi -= mirror
        pi -= (2.0 * y / d2) * mirror
    chi[0] = 0.0
    pi[0] = 0.0
    return FieldState.from_arrays(grid, 0.0, chi, pi)


def static_profile(lam: float, sign: int, grid: RadialGrid) -> GridFunction:
    """sign * 2 arctan(lam r): the degree-one static solutions for k = 1."""
    if not np.isfinite(lam) or lam <= 0:
        raise InvalidArgument(f"lambda must be positive, got {lam!r}")
    if sign not in (1, -1):
        raise InvalidArgument(f"sign must be +1 or -1, got {sign!r}")
    return GridFunction(grid, sign * (2.0 * np.arctan(lam * grid.r)))


def static_state(lam: float, sign: int, grid: RadialGrid) -> FieldState:
    chi = static_profile(lam, sign, grid)
    return FieldState(0.0, chi, grid.zeros())
