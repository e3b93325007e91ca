import importlib
import math

import numpy as np
import pytest
from scipy.special import j1

from wavemaps import (
    Boundary,
    EvolutionConfig,
    FieldState,
    GaussianFamily,
    GridFunction,
    InvalidArgument,
    Status,
    apply_boundary,
    evolve,
    gaussian_ingoing,
    make_grid,
    spatial_operator,
    static_profile,
    static_state,
    step_crank_nicholson,
)
from wavemaps.diagnostics import energy_density
from wavemaps.evolve import gradient_growing


def test_operator_vacuum():
    g = make_grid(10, 128)
    L = spatial_operator(FieldState(0.0, g.zeros(), g.zeros()))
    assert (L.values == 0).all()


def _ramp_oracle(r, terms=12):
    # 1/r - sin(2r)/(2r^2) from the Taylor series of sin, summed from the j=1 term
    total = 0.0
    for j in range(1, terms):
        total -= (-1) ** j * (2 * r) ** (2 * j + 1) / (math.factorial(2 * j + 1) * 2 * r * r)
    return total


def test_operator_linear_ramp():
    g = make_grid(1, 100)
    L = spatial_operator(FieldState(0.0, GridFunction(g, g.r), g.zeros())).values
    r = g.r[10]
    assert r == pytest.approx(0.1)
    assert L[10] == pytest.approx(_ramp_oracle(r), rel=1e-9)
    assert L[10] == pytest.approx(0.0667, abs=5e-4)
    assert _ramp_oracle(0.1) == pytest.approx(2 * 0.1 / 3, rel=2e-3)


def _static_residuals(ns, r_max=10.0, lam=1.0):
    out = []
    for n in ns:
        g = make_grid(r_max, n)
        L = spatial_operator(static_state(lam, 1, g)).values
        far = (g.r >= 1.0) & (g.r < r_max)
        out.append((np.max(np.abs(L[1:-1])), np.max(np.abs(L[far]))))
    return np.array(out)


def test_static_residual_second_order_at_fixed_radius():
    res = _static_residuals([512, 1024, 2048, 4096])
    ratios = res[:-1, 1] / res[1:, 1]
    assert np.all((ratios > 3.5) & (ratios < 4.5)), ratios


def test_static_residual_first_order_next_to_origin():
    # the centred chi'/r term has an O(h) truncation error at r = h
    # (for chi = a r + b r^3 the error at node 1 is exactly b h)
    res = _static_residuals([512, 1024, 2048, 4096])
    ratios = res[:-1, 0] / res[1:, 0]
    np.testing.assert_allclose(ratios, 2.0, rtol=0.02)
    g = make_grid(1, 64)
    a, b = 0.7, -0.4
    chi = a * g.r + b * g.r**3
    L = spatial_operator(FieldState(0.0, GridFunction(g, chi), g.zeros()), k=1).values
    r1 = g.r[1]
    exact = 8 * b * r1 + (a * r1 + b * r1**3 - 0.5 * np.sin(2 * (a * r1 + b * r1**3))) / r1**2
    assert L[1] - exact == pytest.approx(b * g.h, rel=1e-6)


def test_step_zero_fixed_point():
    g = make_grid(10, 64)
    s = FieldState(0.0, g.zeros(), g.zeros())
    out = step_crank_nicholson(s, 0.05, EvolutionConfig())
    assert out.t == 0.05
    assert (out.chi.values == 0).all() and (out.pi.values == 0).all()


@pytest.mark.parametrize("boundary", list(Boundary))
def test_step_negation_equivariant(boundary):
    g = make_grid(30, 512)
    s = gaussian_ingoing(GaussianFamily(1.7, 8, 2.3), g)
    cfg = EvolutionConfig(boundary=boundary)
    for _ in range(3):
        a = step_crank_nicholson(s, 0.02, cfg)
        b = step_crank_nicholson(-s, 0.02, cfg)
        np.testing.assert_array_equal(a.chi.values, -b.chi.values)
        np.testing.assert_array_equal(a.pi.values, -b.pi.values)
        s = a


def test_step_rejects_bad_dt():
    g = make_grid(1, 8)
    with pytest.raises(InvalidArgument):
        step_crank_nicholson(FieldState(0.0, g.zeros(), g.zeros()), 0.0, EvolutionConfig())


def _static_drift(n, r_max=8.0):
    g = make_grid(r_max, n)
    s = static_state(1.0, 1, g)
    out = evolve(s, EvolutionConfig(boundary=Boundary.FIXED_DIRICHLET, t_max=1.0))
    assert out.status is Status.COMPLETED
    assert out.final_state.t == pytest.approx(1.0)
    return np.max(np.abs(out.final_state.chi.values - s.chi.values))


def test_static_data_drift_second_order():
    d = [_static_drift(n) for n in (2**11, 2**12)]
    assert d[1] < 1e-6
    assert 3.5 < d[0] / d[1] < 4.5


@pytest.mark.parametrize("mode", list(Boundary))
def test_boundary_pins_origin(mode):
    g = make_grid(5, 64)
    chi = np.sin(g.r) + 0.3
    s = FieldState.from_arrays(g, 0.0, chi, np.cos(g.r))
    out = apply_boundary(s, mode, 0.01)
    assert out.chi.values[0] == 0.0 and out.pi.values[0] == 0.0
    np.testing.assert_array_equal(out.chi.values[1:-1], chi[1:-1])


@pytest.mark.parametrize("mode", list(Boundary))
def test_boundary_vacuum_identity(mode):
    g = make_grid(5, 64)
    s = FieldState(0.0, g.zeros(), g.zeros())
    out = apply_boundary(s, mode, 0.01)
    assert (out.chi.values == 0).all() and (out.pi.values == 0).all()


def test_dirichlet_holds_outer_value():
    g = make_grid(10, 256)
    s = static_state(1.0, 1, g)
    out = evolve(s, EvolutionConfig(boundary="dirichlet", t_max=0.5))
    assert out.final_state.chi.values[-1] == s.chi.values[-1]
    assert out.final_state.pi.values[-1] == 0.0


def _outgoing_pulse(r_max, n, eps=0.05, centre=25.0):
    g = make_grid(r_max, n)
    r = g.r
    x = r - centre
    chi = eps * np.exp(-x * x)
    pi = 2 * x * chi - chi / (2 * np.where(r > 0, r, 1.0))
    chi[0] = pi[0] = 0.0
    return FieldState.from_arrays(g, 0.0, chi, pi)


def test_outgoing_boundary_reflection_small():
    # oracle: the same data on a doubled domain whose boundary is never reached
    eps = 0.05
    cfg = EvolutionConfig(t_max=14.0, snapshot_times=(8.0, 11.0, 14.0))
    near = evolve(_outgoing_pulse(30, 2**12, eps), cfg)
    far = evolve(_outgoing_pulse(60, 2**13, eps), cfg)
    for a, b in zip(near.snapshots, far.snapshots):
        assert a.t == b.t
        reflected = np.max(np.abs(a.chi.values - b.chi.values[: a.grid.size]))
        assert reflected <= 0.02 * eps


def test_dirichlet_boundary_reflects():
    eps = 0.05
    cfg = EvolutionConfig(t_max=14.0, boundary="dirichlet")
    near = evolve(_outgoing_pulse(30, 2**11, eps), cfg)
    assert np.max(np.abs(near.final_state.chi.values)) > 0.1 * eps


@pytest.fixture(scope="module")
def subcritical_run():
    g = make_grid(30, 2**12)
    cfg = EvolutionConfig(t_max=30.0, snapshot_times=tuple(range(0, 31, 2)), record_every=8)
    return evolve(gaussian_ingoing(GaussianFamily(1.0, 8.0, 2.3), g), cfg)


def test_subcritical_completes_and_bounces(subcritical_run):
    out = subcritical_run
    assert out.status is Status.COMPLETED
    assert out.t_blow is None and out.t_fail is None
    assert out.final_state.t >= 30.0
    peaks = []
    for s in out.snapshots:
        rho_r = energy_density(s).values * s.grid.r
        peaks.append(s.grid.r[np.argmax(rho_r)])
    turn = int(np.argmin(peaks))
    assert peaks[0] == pytest.approx(8.0, abs=2.0)
    assert peaks[turn] < 2.0
    assert 0 < turn < len(peaks) - 1
    assert peaks[-1] > 15.0
    t = out.series.array("t")
    assert np.all(np.diff(t) > 0)


def test_snapshots_at_nearest_step(subcritical_run):
    dt = 0.5 * 30 / 2**12
    for want, s in zip(range(0, 31, 2), subcritical_run.snapshots):
        assert abs(s.t - want) <= 0.5 * dt + 1e-12


def test_supercritical_blows_up_near_eight():
    g = make_grid(30, 2**12)
    out = evolve(gaussian_ingoing(GaussianFamily(2.0, 10.0, 2.3), g), EvolutionConfig(record_every=4))
    assert out.status is Status.BLOW_UP
    assert out.t_blow == pytest.approx(8.0, abs=1.0)
    assert out.t_blow <= 30.0


def _hankel_linear(r, t, A, R0, delta):
    """Free linear k=1 evolution via the order-one Hankel transform."""
    rq = np.linspace(0, 40, 8001)
    kq = np.linspace(0, 12, 2401)
    f = A * np.exp(-((rq - R0) ** 2) / delta**2)
    g = -2 * (rq - R0) / delta**2 * f
    J = j1(np.outer(kq, rq))
    a = np.trapezoid(J * (f * rq), rq, axis=1)
    b = np.trapezoid(J * (g * rq), rq, axis=1)
    sinc_t = np.where(kq > 0, np.sin(kq * t) / np.where(kq > 0, kq, 1.0), t)
    return np.trapezoid(j1(np.outer(r, kq)) * ((a * np.cos(kq * t) + b * sinc_t) * kq), kq, axis=1)


def test_small_data_matches_linear_oracle_and_disperses():
    A = 1e-3
    g = make_grid(30, 2**12)
    cfg = EvolutionConfig(t_max=30.0, snapshot_times=(4.0, 8.0, 12.0), record_every=16)
    out = evolve(gaussian_ingoing(GaussianFamily(A, 8.0, 2.3), g), cfg)
    assert out.status is Status.COMPLETED
    for s in out.snapshots:
        ref = _hankel_linear(g.r[::16], s.t, A, 8.0, 2.3)
        assert np.max(np.abs(s.chi.values[::16] - ref)) < 1e-4 * A
    initial_max = A
    assert np.max(np.abs(out.final_state.chi.values)) < initial_max


def test_threshold_blowup_reason():
    g = make_grid(30, 1024)
    cfg = EvolutionConfig(t_max=30, blow_threshold=0.5)
    out = evolve(gaussian_ingoing(GaussianFamily(1.0, 8, 2.3), g), cfg)
    assert out.status is Status.BLOW_UP and out.reason == "gradient threshold"
    assert out.t_blow < 30


def test_overflow_without_growth_is_failure():
    g = make_grid(10, 64)
    chi = np.zeros(65)
    pi = np.zeros(65)
    pi[30] = 1e308
    out = evolve(FieldState.from_arrays(g, 0.0, chi, pi), EvolutionConfig(t_max=1.0))
    assert out.status is Status.NUMERICAL_FAILURE
    assert out.t_fail is not None and not out.defined
    assert out.final_state.is_finite()


def test_unstable_scheme_is_failure_not_blowup():
    # two Jacobi passes are unconditionally unstable: the gradient oscillates
    # while it grows, so the overflow is reported as a scheme breakdown
    g = make_grid(10, 64)
    s = gaussian_ingoing(GaussianFamily(0.1, 5, 1.0), g)
    cfg = EvolutionConfig(t_max=1e4, cfl=1.0, cn_iters=2, jump_threshold=math.inf, blow_threshold=math.inf)
    out = evolve(s, cfg)
    assert out.status is Status.NUMERICAL_FAILURE


def test_gradient_growth_guard():
    assert gradient_growing(np.arange(20.0), 16)
    assert not gradient_growing(np.arange(10.0), 16)
    wobble = np.arange(20.0)
    wobble[-3] = wobble[-4]
    assert not gradient_growing(wobble, 16)
    wobble[:5] = 0.0
    assert not gradient_growing(wobble, 16)
    assert gradient_growing(np.r_[np.zeros(4), np.exp(np.arange(16.0))], 16)


def test_nonfinite_after_monotone_growth_is_blowup(monkeypatch):
    ev = importlib.import_module("wavemaps.evolve")

    calls = {"n": 0}
    real = ev._icn_arrays

    def fake(chi, pi, *args):
        calls["n"] += 1
        cs, ps = real(chi, pi, *args)
        if calls["n"] <= 30:
            return 1.5 * cs, ps  # max|chi'| grows strictly every step
        return cs * np.nan, ps

    monkeypatch.setattr(ev, "_icn_arrays", fake)
    g = make_grid(10, 64)
    cfg = EvolutionConfig(t_max=10.0, jump_threshold=math.inf, blow_threshold=math.inf)
    out = evolve(gaussian_ingoing(GaussianFamily(0.01, 5, 1.0), g), cfg)
    assert out.status is Status.BLOW_UP
    assert out.reason == "nonfinite after gradient growth"


def test_keep_every():
    g = make_grid(10, 64)
    out = evolve(gaussian_ingoing(GaussianFamily(0.1, 5, 1.0), g), EvolutionConfig(t_max=1.0, keep_every=4))
    assert sorted(out.kept) == list(range(0, out.steps + 1, 4))


@pytest.mark.parametrize(
    "kw", [dict(cfl=0), dict(cfl=1.5), dict(cn_iters=1), dict(blow_threshold=0), dict(k=1.5), dict(t_max=-1)]
)
def test_config_validation(kw):
    with pytest.raises(InvalidArgument):
        EvolutionConfig(**kw)


def test_config_rejects_unknown_boundary():
    with pytest.raises(ValueError):
        EvolutionConfig(boundary="periodic")


def test_evolve_rejects_nonfinite_initial():
    g = make_grid(1, 8)
    chi = np.zeros(9)
    chi[3] = np.nan
    with pytest.raises(InvalidArgument):
        evolve(FieldState.from_arrays(g, 0.0, chi, np.zeros(9)), EvolutionConfig())


def test_static_profile_is_fixed_point_of_continuum():
    # evolving the static profile is stationary up to discretisation error
    g = make_grid(10, 1024)
    s = FieldState(0.0, static_profile(2.0, -1, g), g.zeros())
    out = evolve(s, EvolutionConfig(boundary="dirichlet", t_max=2.0))
    assert np.max(np.abs(out.final_state.chi.values - s.chi.values)) < 1e-3
