"""Iterative Crank-Nicholson evolution of the equivariant wave-map equation.

    chi_tt = chi_rr + chi_r / r - k^2 sin(2 chi) / (2 r^2)

written as the first-order system chi_t = pi, pi_t = L[chi] on a uniform
node-centred grid with chi = pi = 0 pinned at r = 0.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import (
    DiagnosticSeries,
    origin_gradient,
    outgoing_flux,
    radial_derivative,
    total_energy,
)
from .errors import InvalidArgument
from .grid import GridFunction
from .state import FieldState


class Boundary(str, enum.Enum):
    OUTGOING = "outgoing"
    FIXED_DIRICHLET = "dirichlet"


class Status(str, enum.Enum):
    COMPLETED = "completed"
    BLOW_UP = "blowup"
    NUMERICAL_FAILURE = "failure"


@dataclass(frozen=True)
class EvolutionConfig:
    """Run parameters.

    A run is declared a blow-up when max|chi'| exceeds ``blow_threshold``,
    when chi changes by more than ``jump_threshold`` radians across a single
    cell (the gradient is no longer resolved), or when the state turns
    non-finite after ``growth_window`` steps of strictly growing max|chi'|.
    """

    k: int = 1
    cfl: float = 0.5
    cn_iters: int = 3
    boundary: Boundary = Boundary.OUTGOING
    t_max: float = 30.0
    blow_threshold: float = 1e6
    jump_threshold: float = 1.0
    growth_window: int = 16
    snapshot_times: tuple[float, ...] = ()
    record_every: int = 1
    keep_every: int = 0

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        object.__setattr__(self, "snapshot_times", tuple(float(s) for s in self.snapshot_times))
        if int(self.k) != self.k:
            raise InvalidArgument(f"k must be an integer, got {self.k!r}")
        if not 0 < self.cfl <= 1:
            raise InvalidArgument(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.cn_iters < 2:
            raise InvalidArgument(f"cn_iters must be >= 2, got {self.cn_iters}")
        if not self.blow_threshold > 0:
            raise InvalidArgument(f"blow_threshold must be positive, got {self.blow_threshold}")
        if not self.jump_threshold > 0:
            raise InvalidArgument(f"jump_threshold must be positive, got {self.jump_threshold}")
        if not (math.isfinite(self.t_max) and self.t_max >= 0):
            raise InvalidArgument(f"t_max must be finite and >= 0, got {self.t_max}")
        if self.record_every < 1 or self.keep_every < 0 or self.growth_window < 2:
            raise InvalidArgument("record_every >= 1, keep_every >= 0, growth_window >= 2")

    def dt(self, h: float) -> float:
        return self.cfl * h


def _operator(chi: np.ndarray, r: np.ndarray, h: float, k: int) -> np.ndarray:
    out = np.zeros_like(chi)
    c = chi[1:-1]
    up, dn = chi[2:], chi[:-2]
    ri = r[1:-1]
    out[1:-1] = (
        (up - 2.0 * c + dn) / (h * h)
        + (up - dn) / (2.0 * ri * h)
        - (k * k) * np.sin(2.0 * c) / (2.0 * ri * ri)
    )
    return out


def spatial_operator(state: FieldState, k: int = 1) -> GridFunction:
    """Second-order discretisation of the right-hand side on interior nodes.

    The two boundary entries are zero; the outer node is governed by the
    boundary condition instead.
    """
    grid = state.grid
    return GridFunction(grid, _operator(state.chi.values, grid.r, grid.h, k))


def _boundary_inplace(chi, pi, chi_old, pi_old, r_max, h, dt, mode):
    chi[0] = 0.0
    pi[0] = 0.0
    if mode is Boundary.FIXED_DIRICHLET:
        chi[-1] = chi_old[-1]
        pi[-1] = 0.0
        return
    # chi_t = -chi_r - chi / (2r), one-sided chi_r, trapezoidal in time;
    # the new outer value enters linearly so the implicit update is closed form.
    a = 1.5 / h + 0.5 / r_max
    rest = (-4.0 * chi[-2] + chi[-3]) / (2.0 * h)
    rest_old = (-4.0 * chi_old[-2] + chi_old[-3]) / (2.0 * h)
    rhs_old = -(a * chi_old[-1] + rest_old)
    chi[-1] = (chi_old[-1] + 0.5 * dt * (rhs_old - rest)) / (1.0 + 0.5 * dt * a)
    pi[-1] = -(a * chi[-1] + rest)


def apply_boundary(
    state: FieldState, mode: Boundary, dt: float, previous: FieldState | None = None
) -> FieldState:
    """Impose the origin pin and the outer condition on an updated state.

    ``previous`` is the state at the start of the step; it defaults to
    ``state`` itself.
    """
    mode = Boundary(mode)
    prev = state if previous is None else previous
    chi = state.chi.values.copy()
    pi = state.pi.values.copy()
    grid = state.grid
    _boundary_inplace(chi, pi, prev.chi.values, prev.pi.values, grid.r_max, grid.h, dt, mode)
    return FieldState.from_arrays(grid, state.t, chi, pi)


def _icn_arrays(chi, pi, op_n, r, h, r_max, dt, k, iters, mode):
    half = 0.5 * dt
    cs, ps = chi, pi
    for _ in range(iters):
        op_s = _operator(cs, r, h, k)
        # all predictor values come from the previous iterate (Jacobi order)
        cs, ps = chi + half * (pi + ps), pi + half * (op_n + op_s)
        _boundary_inplace(cs, ps, chi, pi, r_max, h, dt, mode)
    return cs, ps


def step_crank_nicholson(state: FieldState, dt: float, cfg: EvolutionConfig) -> FieldState:
    """Advance by one step of length dt."""
    if not dt > 0:
        raise InvalidArgument(f"dt must be positive, got {dt}")
    grid = state.grid
    chi, pi = state.chi.values, state.pi.values
    op_n = _operator(chi, grid.r, grid.h, cfg.k)
    cs, ps = _icn_arrays(
        chi, pi, op_n, grid.r, grid.h, grid.r_max, dt, cfg.k, cfg.cn_iters, cfg.boundary
    )
    return FieldState.from_arrays(grid, state.t + dt, cs, ps)


@dataclass
class EvolutionOutcome:
    status: Status
    final_state: FieldState
    series: DiagnosticSeries
    t_end: float
    steps: int
    reason: str = ""
    peak_origin_gradient: float = 0.0
    snapshots: list[FieldState] = field(default_factory=list)
    kept: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def t_blow(self) -> float | None:
        return self.t_end if self.status is Status.BLOW_UP else None

    @property
    def t_fail(self) -> float | None:
        return self.t_end if self.status is Status.NUMERICAL_FAILURE else None

    @property
    def defined(self) -> bool:
        return self.status is not Status.NUMERICAL_FAILURE


def gradient_growing(history, window: int) -> bool:
    """True when the last ``window`` values of max|chi'| increase strictly."""
    grad = np.asarray(list(history)[-window:], dtype=float)
    return grad.size == window and bool(np.all(np.diff(grad) > 0))


def step_count(t_max: float, dt: float) -> int:
    return max(0, math.ceil(t_max / dt - 1e-9))


@np.errstate(all="ignore")
def evolve(initial: FieldState, cfg: EvolutionConfig) -> EvolutionOutcome:
    """Evolve until t >= t_max, blow-up or numerical failure."""
    if not initial.is_finite():
        raise InvalidArgument("initial state contains non-finite values")
    grid = initial.grid
    r, h, r_max = grid.r, grid.h, grid.r_max
    k, mode = cfg.k, cfg.boundary
    dt = cfg.dt(h)
    nsteps = step_count(cfg.t_max, dt)
    snap_steps = {}
    for ts in cfg.snapshot_times:
        s = int(round(ts / dt))
        if 0 <= s <= nsteps:
            snap_steps.setdefault(s, ts)

    series = DiagnosticSeries()
    snapshots: list[FieldState] = []
    kept: dict[int, np.ndarray] = {}
    history: deque[float] = deque(maxlen=cfg.growth_window)

    state = initial
    chi, pi = initial.chi.values.copy(), initial.pi.values.copy()
    radiated = 0.0
    flux = outgoing_flux(initial) if mode is Boundary.OUTGOING else 0.0
    series.append(initial.t, origin_gradient(initial), total_energy(initial, k), 0.0)
    peak = abs(series.chi_prime_origin[0])
    history.append(float(np.max(np.abs(radial_derivative(chi, h)))))
    if 0 in snap_steps:
        snapshots.append(initial)
    if cfg.keep_every:
        kept[0] = chi.copy()

    status, reason, t_end, step = Status.COMPLETED, "", initial.t, 0
    op_n = _operator(chi, r, h, k)
    for step in range(1, nsteps + 1):
        t = initial.t + step * dt
        cs, ps = _icn_arrays(chi, pi, op_n, r, h, r_max, dt, k, cfg.cn_iters, mode)
        if not (np.isfinite(cs).all() and np.isfinite(ps).all()):
            if gradient_growing(history, cfg.growth_window):
                status, reason = Status.BLOW_UP, "nonfinite after gradient growth"
            else:
                status, reason = Status.NUMERICAL_FAILURE, "nonfinite values"
            t_end = t
            break
        chi, pi = cs, ps
        state = FieldState.from_arrays(grid, t, chi, pi)
        op_n = _operator(chi, r, h, k)
        if mode is Boundary.OUTGOING:
            new_flux = outgoing_flux(state)
            radiated += 0.5 * dt * (flux + new_flux)
            flux = new_flux

        dchi = radial_derivative(chi, h)
        max_grad = float(np.max(np.abs(dchi)))
        history.append(max_grad)
        jump = float(np.max(np.abs(np.diff(chi))))
        g0 = float(dchi[0])
        peak = max(peak, abs(g0))
        if max_grad > cfg.blow_threshold:
            status, reason = Status.BLOW_UP, "gradient threshold"
        elif jump > cfg.jump_threshold:
            status, reason = Status.BLOW_UP, "unresolved gradient"
        t_end = t

        if step % cfg.record_every == 0 or status is not Status.COMPLETED or step == nsteps:
            series.append(t, g0, total_energy(state, k), radiated)
        if step in snap_steps:
            snapshots.append(state)
        if cfg.keep_every and step % cfg.keep_every == 0:
            kept[step] = chi.copy()
        if status is not Status.COMPLETED:
            break

    return EvolutionOutcome(
        status=status,
        final_state=state,
        series=series,
        t_end=t_end,
        steps=step,
        reason=reason,
        peak_origin_gradient=peak,
        snapshots=snapshots,
        kept=kept,
    )
