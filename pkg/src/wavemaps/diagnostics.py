"""Energy, drift, convergence factor, origin gradient and static-profile fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import FitFailure, IndeterminateConvergence, InvalidArgument, UndefinedDrift
from .grid import GridFunction, l2_norm, restrict
from .state import FieldState

# exp(DRIFT_FLOOR) = 1e-16, returned when energy is conserved to the last bit
DRIFT_FLOOR = math.log(1e-16)


def radial_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Centred differences inside, second-order one-sided at both ends."""
    return np.gradient(values, h, edge_order=2)


def origin_gradient(state: FieldState) -> float:
    chi = state.chi.values
    return float((-3.0 * chi[0] + 4.0 * chi[1] - chi[2]) / (2.0 * state.grid.h))


def energy_density(state: FieldState, k: int = 1) -> GridFunction:
    grid = state.grid
    chi, pi = state.chi.values, state.pi.values
    dchi = radial_derivative(chi, grid.h)
    rho = 0.5 * (pi * pi + dchi * dchi)
    r = grid.r[1:]
    s = np.sin(chi[1:])
    rho[1:] += k * k * s * s / (2.0 * r * r)
    # sin(chi)/r -> chi'(0) at the regular origin
    rho[0] += 0.5 * k * k * dchi[0] ** 2
    return GridFunction(grid, rho)


def _trapezoid(f: np.ndarray, h: float) -> float:
    if f.size < 2:
        return 0.0
    return float(h * (f.sum() - 0.5 * (f[0] + f[-1])))


def total_energy(state: FieldState, k: int = 1) -> float:
    """E = integral of rho r dr over the grid (trapezoidal rule)."""
    rho = energy_density(state, k).values
    return _trapezoid(rho * state.grid.r, state.grid.h)


def energy_inside(state: FieldState, radius: float, k: int = 1) -> float:
    """Energy carried by the nodes with r < radius."""
    grid = state.grid
    m = int(np.count_nonzero(grid.r < radius))
    rho = energy_density(state, k).values[:m]
    return _trapezoid(rho * grid.r[:m], grid.h)


def outgoing_flux(state: FieldState) -> float:
    """Rate at which energy leaves through r_max: -r chi' pi at the last node."""
    grid = state.grid
    chi = state.chi.values
    dchi = (3.0 * chi[-1] - 4.0 * chi[-2] + chi[-3]) / (2.0 * grid.h)
    return float(-grid.r_max * dchi * state.pi.values[-1])


def energy_drift(energy: float, energy0: float) -> float:
    """ln |(E(t) - E(0)) / E(0)|, floored at ln(1e-16)."""
    if energy0 == 0 or not math.isfinite(energy0):
        raise UndefinedDrift(f"relative drift undefined for E(0)={energy0!r}")
    rel = abs((energy - energy0) / energy0)
    if not math.isfinite(rel):
        return math.nan
    return max(math.log(rel), DRIFT_FLOOR) if rel > 0 else DRIFT_FLOOR


@dataclass
class DiagnosticSeries:
    """Per-step diagnostics.

    ``energy`` is the energy on the grid. ``radiated`` accumulates the flux
    leaving through r_max, and ``delta`` is taken on their sum, so an
    absorbing outer boundary does not count as numerical drift.
    """

    t: list = field(default_factory=list)
    chi_prime_origin: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    radiated: list = field(default_factory=list)
    delta: list = field(default_factory=list)

    def append(self, t: float, chi_prime_origin: float, energy: float, radiated: float = 0.0):
        if self.t and t <= self.t[-1]:
            raise InvalidArgument(f"series times must increase: {t} after {self.t[-1]}")
        self.t.append(float(t))
        self.chi_prime_origin.append(float(chi_prime_origin))
        self.energy.append(float(energy))
        self.radiated.append(float(radiated))
        e0 = self.energy[0]
        try:
            self.delta.append(energy_drift(energy + radiated, e0))
        except UndefinedDrift:
            self.delta.append(math.nan)

    def __len__(self) -> int:
        return len(self.t)

    def array(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name), dtype=float)

    @property
    def energy_balance(self) -> np.ndarray:
        return self.array("energy") + self.array("radiated")

    def max_relative_drift(self, t_max: float | None = None) -> float:
        """max_t |E(t) + radiated(t) - E(0)| / E(0)."""
        bal = self.energy_balance
        if t_max is not None:
            bal = bal[self.array("t") <= t_max]
        e0 = self.energy[0]
        if e0 == 0:
            raise UndefinedDrift("relative drift undefined for E(0)=0")
        return float(np.max(np.abs(bal - e0)) / abs(e0))

    def rows(self):
        return zip(self.t, self.chi_prime_origin, self.energy, self.delta)


def convergence_factor(u_4h: GridFunction, u_2h: GridFunction, u_h: GridFunction) -> float:
    """Q = |u_4h - u_2h| / |u_2h - u_h|, both differences on the coarsest grid."""
    g4, g2, g1 = u_4h.grid, u_2h.grid, u_h.grid
    if not (g2.n == 2 * g4.n and g1.n == 2 * g2.n and g4.r_max == g2.r_max == g1.r_max):
        raise InvalidArgument("convergence_factor needs grids nested by factors of two")
    c2 = restrict(u_2h, 1)
    c1 = restrict(u_h, 2)
    den = l2_norm(c2 - c1)
    if den == 0:
        raise IndeterminateConvergence("finest two solutions coincide")
    return l2_norm(u_4h - c2) / den


@dataclass(frozen=True)
class StaticFit:
    lam: float
    sign: int
    residual: float
    window: tuple[float, float]

    def record(self) -> str:
        return (
            f"{self.lam:.17e} {self.sign:d} {self.residual:.17e} "
            f"{self.window[0]:.17e} {self.window[1]:.17e}"
        )


def fit_window(state: FieldState) -> slice:
    """Nodes from the origin up to the first one where |chi| exceeds pi/2."""
    outside = np.abs(state.chi.values) > 0.5 * math.pi
    stop = int(np.argmax(outside)) if outside.any() else outside.size
    return slice(0, stop)


def fit_static(state: FieldState) -> StaticFit:
    """Least-squares fit of sign * 2 arctan(lam r) over the inner window."""
    g0 = origin_gradient(state)
    if not math.isfinite(g0) or g0 == 0:
        raise FitFailure(f"origin gradient {g0!r} gives no sign or scale")
    sign = 1 if g0 > 0 else -1
    window = fit_window(state)
    r = state.grid.r[window]
    chi = state.chi.values[window]
    if r.size < 3:
        raise FitFailure("fewer than three nodes inside |chi| <= pi/2")

    def mismatch(p):
        return chi - sign * 2.0 * np.arctan(p[0] * r)

    guess = abs(g0) / 2.0
    sol = least_squares(
        mismatch, x0=[guess], bounds=([guess * 1e-6], [np.inf]),
        x_scale=[guess], xtol=1e-15, ftol=1e-15, gtol=1e-15,
    )
    lam = float(sol.x[0])
    residual = float(np.max(np.abs(mismatch([lam]))))
    return StaticFit(lam, sign, residual, (float(r[0]), float(r[-1])))
