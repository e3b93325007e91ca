"""Sub/supercritical classification and bisection on the family amplitude."""

from __future__ import annotations

import enum
from concurrent.futures import Future, ProcessPoolExecutor
from dataclasses import dataclass, field

from .diagnostics import energy_inside, total_energy
from .errors import InvalidArgument
from .evolve import EvolutionConfig, EvolutionOutcome, Status, evolve
from .grid import RadialGrid
from .state import GaussianFamily, gaussian_ingoing

DISPERSAL_FRACTION = 0.1


class Classification(str, enum.Enum):
    SUBCRITICAL = "subcritical"
    SUPERCRITICAL = "supercritical"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class Probe:
    A: float
    classification: Classification
    t_end: float  # blow-up time, or the time reached
    n: int


def classify_outcome(outcome: EvolutionOutcome, R0: float, k: int = 1) -> Classification:
    """Blow-up is supercritical; a completed run is subcritical only once the
    energy inside r < R0/2 has fallen below 10% of E(0)."""
    if outcome.status is Status.BLOW_UP:
        return Classification.SUPERCRITICAL
    if outcome.status is Status.NUMERICAL_FAILURE:
        return Classification.UNDETERMINED
    e0 = outcome.series.energy[0]
    if e0 == 0:
        return Classification.SUBCRITICAL
    inner = energy_inside(outcome.final_state, 0.5 * R0, k)
    if inner < DISPERSAL_FRACTION * e0:
        return Classification.SUBCRITICAL
    return Classification.UNDETERMINED


def probe(A: float, fam_template: GaussianFamily, cfg: EvolutionConfig, grid: RadialGrid) -> Probe:
    fam = fam_template.with_amplitude(A)
    outcome = evolve(gaussian_ingoing(fam, grid), cfg)
    return Probe(float(A), classify_outcome(outcome, fam.R0, cfg.k), outcome.t_end, grid.n)


def classify(A: float, fam_template: GaussianFamily, cfg: EvolutionConfig, grid: RadialGrid) -> Classification:
    return probe(A, fam_template, cfg, grid).classification


@dataclass
class CriticalSearchResult:
    bracket: tuple[float, float]
    probes: list[Probe] = field(default_factory=list)
    iterations: int = 0
    n: int = 0
    complete: bool = True  # False when an undetermined probe stopped the search

    @property
    def width(self) -> float:
        return self.bracket[1] - self.bracket[0]


class _Prober:
    """Runs probes inline, or in a process pool with look-ahead."""

    def __init__(self, fam, cfg, grid, workers):
        self.args = (fam, cfg, grid)
        self.pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
        self.pending: dict[float, Future] = {}

    def prefetch(self, *amplitudes):
        if self.pool is None:
            return
        for A in amplitudes:
            if A not in self.pending:
                self.pending[A] = self.pool.submit(probe, A, *self.args)

    def get(self, A: float) -> Probe:
        if self.pool is None:
            return probe(A, *self.args)
        self.prefetch(A)
        return self.pending.pop(A).result()

    def close(self):
        if self.pool is not None:
            for fut in self.pending.values():
                fut.cancel()
            self.pool.shutdown(wait=True, cancel_futures=True)


def bisect_critical(
    A_lo: float,
    A_hi: float,
    tol: float,
    fam_template: GaussianFamily,
    cfg: EvolutionConfig,
    grid: RadialGrid,
    workers: int = 1,
) -> CriticalSearchResult:
    """Bisect on classification until A_hi - A_lo <= tol.

    Both endpoints are probed first and must classify as subcritical and
    supercritical respectively. An undetermined midpoint ends the search
    with ``complete=False`` and the last valid bracket.
    """
    A_lo, A_hi = float(A_lo), float(A_hi)
    if not A_lo < A_hi:
        raise InvalidArgument(f"bracket must satisfy A_lo < A_hi, got ({A_lo}, {A_hi})")
    if not tol > 0:
        raise InvalidArgument(f"tol must be positive, got {tol}")

    prober = _Prober(fam_template, cfg, grid, workers)
    try:
        prober.prefetch(A_lo, A_hi)
        lo, hi = prober.get(A_lo), prober.get(A_hi)
        if lo.classification is not Classification.SUBCRITICAL:
            raise InvalidArgument(f"A_lo={A_lo} classifies as {lo.classification.value}")
        if hi.classification is not Classification.SUPERCRITICAL:
            raise InvalidArgument(f"A_hi={A_hi} classifies as {hi.classification.value}")
        result = CriticalSearchResult((A_lo, A_hi), [lo, hi], n=grid.n)

        while A_hi - A_lo > tol:
            mid = 0.5 * (A_lo + A_hi)
            prober.prefetch(mid, 0.5 * (A_lo + mid), 0.5 * (mid + A_hi))
            p = prober.get(mid)
            result.probes.append(p)
            result.iterations += 1
            if p.classification is Classification.SUPERCRITICAL:
                A_hi = mid
            elif p.classification is Classification.SUBCRITICAL:
                A_lo = mid
            else:
                result.complete = False
                break
            assert A_lo < A_hi
        result.bracket = (A_lo, A_hi)
        return result
    finally:
        prober.close()
