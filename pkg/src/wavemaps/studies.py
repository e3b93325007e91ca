"""Multi-resolution experiments: the convergence triple and the resolution ladder."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .diagnostics import convergence_factor
from .errors import IndeterminateConvergence, InvalidArgument
from .evolve import EvolutionConfig, EvolutionOutcome, evolve
from .grid import GridFunction, RadialGrid, make_grid
from .state import GaussianFamily, gaussian_ingoing


def _run(fam: GaussianFamily, grid: RadialGrid, cfg: EvolutionConfig) -> EvolutionOutcome:
    return evolve(gaussian_ingoing(fam, grid), cfg)


def run_many(jobs, workers: int = 1) -> list[EvolutionOutcome]:
    """Evolve (family, grid, cfg) jobs, optionally in worker processes."""
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [_run(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_run, *zip(*jobs)))


@dataclass
class ConvergenceStudy:
    t: np.ndarray
    Q: np.ndarray  # NaN marks an indeterminate factor
    outcomes: list[EvolutionOutcome]

    @property
    def determinate(self) -> np.ndarray:
        return np.isfinite(self.Q)


def convergence_study(
    fam: GaussianFamily,
    r_max: float,
    n: int,
    cfg: EvolutionConfig,
    stride: int = 1,
    workers: int = 1,
) -> ConvergenceStudy:
    """Evolve at n, 2n, 4n and form Q every ``stride`` coarse steps."""
    if stride < 1:
        raise InvalidArgument(f"stride must be >= 1, got {stride}")
    grids = [make_grid(r_max, n * 2**level) for level in range(3)]
    cfgs = [replace(cfg, keep_every=stride * 2**level) for level in range(3)]
    outcomes = run_many([(fam, g, c) for g, c in zip(grids, cfgs)], workers)

    common = sorted(
        set(outcomes[0].kept)
        & {s // 2 for s in outcomes[1].kept}
        & {s // 4 for s in outcomes[2].kept}
    )
    dt = cfg.dt(grids[0].h)
    times, qs = [], []
    for s in common:
        u = [GridFunction(g, o.kept[s * 2**lvl]) for lvl, (g, o) in enumerate(zip(grids, outcomes))]
        try:
            q = convergence_factor(*u)
        except IndeterminateConvergence:
            q = math.nan
        times.append(s * dt)
        qs.append(q)
    return ConvergenceStudy(np.array(times), np.array(qs), outcomes)


@dataclass
class LadderRow:
    n: int
    t_blow: float | None
    max_chi_prime: float
    max_abs_delta: float
    outcome: EvolutionOutcome


def resolution_ladder(
    fam: GaussianFamily, r_max: float, ns, cfg: EvolutionConfig, workers: int = 1
) -> list[LadderRow]:
    """One run per resolution.

    ``max_abs_delta`` is the largest relative energy-balance error over the
    window before the earliest blow-up on the ladder, so every resolution is
    compared over the same times and none includes its unresolved final step.
    """
    ns = [int(n) for n in ns]
    outcomes = run_many([(fam, make_grid(r_max, n), cfg) for n in ns], workers)
    blow_times = [o.t_blow for o in outcomes if o.t_blow is not None]
    window = min(blow_times) if blow_times else math.inf
    rows = []
    for n, o in zip(ns, outcomes):
        series = o.series
        t = series.array("t")
        keep = t < window if blow_times else np.ones(t.size, bool)
        e0 = series.energy[0]
        if e0 == 0 or not keep.any():
            drift = math.nan
        else:
            drift = float(np.max(np.abs(series.energy_balance[keep] - e0)) / abs(e0))
        rows.append(LadderRow(n, o.t_blow, o.peak_origin_gradient, drift, o))
    return rows
