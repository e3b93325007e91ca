"""Command-line driver: single runs, convergence triples, ladders, bisection, fits."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import output
from .criticality import bisect_critical
from .diagnostics import fit_static
from .errors import FitFailure, InvalidArgument, WaveMapError
from .evolve import Boundary, EvolutionConfig, evolve
from .grid import make_grid
from .state import ORIGIN_MODES, GaussianFamily, gaussian_ingoing
from .studies import convergence_study, resolution_ladder

log = logging.getLogger("wavemaps")

MODES = ("evolve", "converge", "ladder", "bisect", "fit")
DEFAULT_LADDER = tuple(2**p for p in range(8, 14))


class UsageError(InvalidArgument):
    pass


@dataclass
class RunSpec:
    mode: str
    family: GaussianFamily | None
    r_max: float
    n: int
    config: EvolutionConfig
    out: Path
    bracket: tuple[float, float] | None = None
    tol: float = 0.01
    ns: tuple[int, ...] = DEFAULT_LADDER
    stride: int = 1
    workers: int = 1
    snapshot: Path | None = None
    extra: dict = field(default_factory=dict)


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="wavemaps",
        description="Evolve equivariant 2+1 wave maps into the two-sphere.",
    )
    a = p.add_argument
    a("--config", type=Path, help="JSON file with the same keys as the long options")
    a("--mode", choices=MODES)
    a("--A", type=float)
    a("--R0", type=float)
    a("--delta", type=float)
    a("--origin", choices=ORIGIN_MODES, help="enforce chi(0)=0 by mirror subtraction or by pinning")
    a("--rmax", type=float)
    a("--n", type=int)
    a("--cfl", type=float)
    a("--k", type=int)
    a("--tmax", type=float)
    a("--boundary", choices=[b.value for b in Boundary])
    a("--blow-threshold", dest="blow_threshold", type=float)
    a("--jump-threshold", dest="jump_threshold", type=float)
    a("--snap", help="comma-separated snapshot times")
    a("--out", type=Path)
    a("--bracket", help="lo,hi amplitudes for bisect mode")
    a("--tol", type=float)
    a("--ns", help="comma-separated resolutions for ladder mode")
    a("--stride", type=int, help="coarse steps between Q evaluations")
    a("--record-every", dest="record_every", type=int)
    a("--workers", type=int)
    a("--snapshot", type=Path, help="snapshot file to fit in fit mode")
    return p


_DEFAULTS = dict(
    rmax=30.0, n=4096, cfl=0.5, k=1, tmax=30.0, boundary="outgoing",
    blow_threshold=1e6, jump_threshold=1.0, snap="", out=Path("."),
    tol=0.01, origin="image", stride=1, record_every=1, workers=1,
)


def _merge(args: argparse.Namespace, parser) -> dict:
    values = {}
    if args.config is not None:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        known = {a.dest for a in parser._actions} - {"help", "config"}
        aliases = {k.replace("-", "_"): k for k in cfg}
        for key, raw in aliases.items():
            if key not in known:
                raise UsageError(f"unknown config key {raw!r}")
            values[key] = cfg[raw]
    for key, val in vars(args).items():
        if key != "config" and val is not None:
            values[key] = val
    for key, val in _DEFAULTS.items():
        values.setdefault(key, val)
    return values


def parse_config(argv=None) -> RunSpec:
    """Turn CLI arguments (optionally a JSON config) into a validated RunSpec."""
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        raise UsageError("no arguments given; --mode is required")
    args = parser.parse_args(argv)
    v = _merge(args, parser)
    mode = v.get("mode")
    if mode not in MODES:
        raise UsageError(f"--mode must be one of {', '.join(MODES)}")

    def need(key, cond, why):
        if not cond:
            raise UsageError(f"--{key.replace('_', '-')}: {why} (got {v.get(key)!r})")

    snapshot = v.get("snapshot")
    family = None
    if not (mode == "fit" and snapshot):
        for key in ("R0", "delta") + (() if mode == "bisect" else ("A",)):
            need(key, v.get(key) is not None, "required for this mode")
        A = float(v.get("A", 0.0) or 0.0)
        need("delta", float(v["delta"]) > 0, "must be positive")
        need("R0", 0 < float(v["R0"]) < float(v["rmax"]), "must lie in (0, rmax)")
        family = GaussianFamily(A, float(v["R0"]), float(v["delta"]), v["origin"])

    need("rmax", float(v["rmax"]) > 0 and math.isfinite(float(v["rmax"])), "must be positive")
    n = int(v["n"])
    need("n", n >= 8, "must be >= 8")
    if mode in ("converge", "ladder"):
        need("n", n & (n - 1) == 0, "nested grids need a power of two")
    need("cfl", 0 < float(v["cfl"]) <= 1, "must lie in (0, 1]")
    need("tmax", float(v["tmax"]) >= 0, "must be >= 0")
    need("tol", float(v["tol"]) > 0, "must be positive")
    need("stride", int(v["stride"]) >= 1, "must be >= 1")
    need("workers", int(v["workers"]) >= 1, "must be >= 1")
    need("record_every", int(v["record_every"]) >= 1, "must be >= 1")
    need("blow_threshold", float(v["blow_threshold"]) > 0, "must be positive")
    need("jump_threshold", float(v["jump_threshold"]) > 0, "must be positive")
    try:
        boundary = Boundary(v["boundary"])
    except ValueError:
        raise UsageError(f"--boundary: unknown mode {v['boundary']!r}") from None

    try:
        snaps = tuple(_floats(v["snap"])) if isinstance(v["snap"], str) else tuple(map(float, v["snap"]))
    except ValueError:
        raise UsageError(f"--snap: expected comma-separated times, got {v['snap']!r}") from None

    bracket = None
    if mode == "bisect":
        need("bracket", v.get("bracket") is not None, "required in bisect mode")
        raw = v["bracket"]
        try:
            lo_hi = _floats(raw) if isinstance(raw, str) else [float(x) for x in raw]
        except ValueError:
            lo_hi = []
        need("bracket", len(lo_hi) == 2, "expected lo,hi")
        need("bracket", lo_hi[0] < lo_hi[1], "lo must be below hi")
        bracket = (lo_hi[0], lo_hi[1])

    ns = DEFAULT_LADDER
    if v.get("ns") is not None:
        raw = v["ns"]
        try:
            ns = tuple(int(x) for x in (raw.split(",") if isinstance(raw, str) else raw))
        except ValueError:
            raise UsageError(f"--ns: expected comma-separated integers, got {raw!r}") from None
        need("ns", ns and all(m >= 8 for m in ns), "every resolution must be >= 8")

    config = EvolutionConfig(
        k=int(v["k"]),
        cfl=float(v["cfl"]),
        boundary=boundary,
        t_max=float(v["tmax"]),
        blow_threshold=float(v["blow_threshold"]),
        jump_threshold=float(v["jump_threshold"]),
        snapshot_times=snaps,
        record_every=int(v["record_every"]),
    )
    return RunSpec(
        mode=mode, family=family, r_max=float(v["rmax"]), n=n, config=config,
        out=Path(v["out"]), bracket=bracket, tol=float(v["tol"]), ns=ns,
        stride=int(v["stride"]), workers=int(v["workers"]),
        snapshot=Path(snapshot) if snapshot else None,
    )


def _snapshot_name(state) -> str:
    return f"snapshot_n{state.grid.n}_t{state.t:.6f}.txt"


def run_evolve(spec: RunSpec) -> int:
    grid = make_grid(spec.r_max, spec.n)
    outcome = evolve(gaussian_ingoing(spec.family, grid), spec.config)
    output.write_series(spec.out / "series.csv", outcome.series)
    for snap in outcome.snapshots:
        output.write_snapshot(spec.out / _snapshot_name(snap), snap, spec.config.k)
    (spec.out / "outcome.txt").write_text(
        f"status={outcome.status.value} t_end={outcome.t_end!r} steps={outcome.steps} "
        f"reason={outcome.reason!r}\n"
    )
    log.info("%s at t=%.6g (%s)", outcome.status.value, outcome.t_end, outcome.reason)
    return 0 if outcome.defined else 1


def run_converge(spec: RunSpec) -> int:
    study = convergence_study(
        spec.family, spec.r_max, spec.n, spec.config, stride=spec.stride, workers=spec.workers
    )
    output.write_rows(spec.out / "convergence.csv", ("t", "Q"), zip(study.t, study.Q))
    for o in study.outcomes:
        output.write_series(spec.out / f"series_n{o.final_state.grid.n}.csv", o.series)
    if not study.determinate.any():
        log.warning("every convergence factor is indeterminate")
    return 0 if all(o.defined for o in study.outcomes) else 1


def run_ladder(spec: RunSpec) -> int:
    rows = resolution_ladder(spec.family, spec.r_max, spec.ns, spec.config, workers=spec.workers)
    for row in rows:
        output.write_series(spec.out / f"series_n{row.n}.csv", row.outcome.series)
    output.write_rows(
        spec.out / "ladder.csv",
        output.LADDER_HEADER,
        ((row.n, row.t_blow, row.max_chi_prime, row.max_abs_delta) for row in rows),
    )
    return 0 if all(row.outcome.defined for row in rows) else 1


def run_bisect(spec: RunSpec) -> int:
    grid = make_grid(spec.r_max, spec.n)
    lo, hi = spec.bracket
    result = bisect_critical(lo, hi, spec.tol, spec.family, spec.config, grid, workers=spec.workers)
    output.write_rows(
        spec.out / "bisect.csv",
        output.BISECT_HEADER,
        [(*result.bracket, result.iterations, result.n, result.complete)],
    )
    output.write_rows(
        spec.out / "probes.csv",
        output.PROBE_HEADER,
        ((p.A, p.classification.value, p.t_end, p.n) for p in result.probes),
    )
    log.info("bracket [%r, %r] after %d iterations", *result.bracket, result.iterations)
    return 0 if result.complete else 1


def run_fit(spec: RunSpec) -> int:
    if spec.snapshot is not None:
        state = output.read_snapshot(spec.snapshot)
    else:
        grid = make_grid(spec.r_max, spec.n)
        outcome = evolve(gaussian_ingoing(spec.family, grid), spec.config)
        if not outcome.defined:
            return 1
        state = outcome.final_state
        output.write_snapshot(spec.out / _snapshot_name(state), state, spec.config.k)
    fit = fit_static(state)
    output.write_fit(spec.out / "fit.txt", fit)
    log.info("lambda=%.6g sign=%+d residual=%.3g", fit.lam, fit.sign, fit.residual)
    return 0


RUNNERS = {
    "evolve": run_evolve,
    "converge": run_converge,
    "ladder": run_ladder,
    "bisect": run_bisect,
    "fit": run_fit,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        spec = parse_config(argv)
    except UsageError as exc:
        build_parser().print_usage(sys.stderr)
        print(f"wavemaps: error: {exc}", file=sys.stderr)
        return 2
    spec.out.mkdir(parents=True, exist_ok=True)
    try:
        return RUNNERS[spec.mode](spec)
    except FitFailure as exc:
        log.error("fit failed: %s", exc)
        return 1
    except WaveMapError as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
