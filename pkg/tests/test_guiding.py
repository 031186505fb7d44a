"""Pulse ignition, tracking and extraction on synthetic trajectories.

Real guiding runs are covered by the integration/acceptance tier; here the
oracles are profiles translated or shaped by hand so every expected number
is known in closed form.
"""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from fhn_twoscale.errors import BlowUp, NoPulse, NotSettled, TailTooShort
from fhn_twoscale.fields import Field1D, MacroGrid
from fhn_twoscale.guiding import (GuidingState, extract_pulse, fourier_shift,
                                  peak_position, seed_bump, step_guiding,
                                  tail_decay_rate, wave_speed)
from fhn_twoscale.microcell import CubicNonlinearity, GuidingParams

GRID = MacroGrid(150.0, 4096)


def _pulse_profile(grid, rate=0.2, height=0.9):
    # exponential-tailed bump, smooth enough at the peak for tracking
    z = grid.x
    u = height * np.exp(rate * 5.0 - rate * np.sqrt(z * z + 25.0))
    return u


def _synthetic_history(shifts_cells, dt_obs=10.0, rate=0.2):
    """States translated left by an integer cell count per observation."""
    u0 = _pulse_profile(GRID, rate)
    v0 = 0.05 * np.exp(-((GRID.x + 3.0) ** 2) / 40.0)
    states = []
    for k, cells in enumerate(shifts_cells):
        u = np.roll(u0, -cells)
        v = np.roll(v0, -cells)
        states.append(GuidingState(k * dt_obs, Field1D(GRID, u),
                                   (Field1D(GRID, v),)))
    return states


class TestSpeedMeasurement:
    def test_translated_profile_recovers_speed_exactly(self):
        # 64 cells left per 10 time units
        cells = 64
        hist = _synthetic_history([k * cells for k in range(6)])
        c_true = cells * GRID.dx / 10.0
        assert abs(wave_speed(hist) - c_true) < 1e-8

    def test_speed_unwraps_across_the_periodic_seam(self):
        # start near the left edge so the track wraps around
        base = _pulse_profile(GRID)
        u0 = np.roll(base, -1900)  # peak near x = -139
        states = []
        for k in range(8):
            u = np.roll(u0, -40 * k)
            states.append(GuidingState(10.0 * k, Field1D(GRID, u),
                                       (Field1D(GRID, np.zeros(GRID.n_x)),)))
        c_true = 40 * GRID.dx / 10.0
        assert abs(wave_speed(states) - c_true) < 1e-8

    def test_fractional_shifts_tracked_subcell(self):
        u0 = _pulse_profile(GRID)
        shift = 2.7 * GRID.dx
        states = []
        for k in range(6):
            u = fourier_shift(u0, k * shift, GRID.half_length)
            states.append(GuidingState(10.0 * k, Field1D(GRID, u),
                                       (Field1D(GRID, np.zeros(GRID.n_x)),)))
        c_true = shift / 10.0
        assert abs(wave_speed(states) - c_true) < 1e-6

    def test_needs_three_observations(self):
        hist = _synthetic_history([0, 10])
        with pytest.raises(ValueError):
            wave_speed(hist)


class TestPeakPosition:
    def test_on_grid_peak(self):
        u = _pulse_profile(GRID)
        j = int(np.argmax(u))
        assert abs(peak_position(Field1D(GRID, u)) - GRID.x[j]) < 1e-12

    def test_subcell_peak_of_smooth_bump(self):
        x0 = 17.2345
        u = np.exp(-((GRID.x - x0) ** 2) / 25.0)
        assert abs(peak_position(Field1D(GRID, u)) - x0) < 1e-3

    def test_fourier_shift_roundtrip(self):
        u = _pulse_profile(GRID)
        back = fourier_shift(fourier_shift(u, 0.4, 150.0), -0.4, 150.0)
        assert np.max(np.abs(back - u)) < 1e-12


class TestTailFit:
    def test_synthetic_exponential_tail_rate(self):
        u = 0.9 * np.exp(-0.2 * np.abs(GRID.x))
        sigma = tail_decay_rate(Field1D(GRID, u))
        assert abs(sigma - 0.2) <= 0.02 * 0.2

    def test_two_sided_fit_takes_the_slower_side(self):
        z = GRID.x
        u = 0.9 * np.where(z < 0, np.exp(0.5 * z), np.exp(-0.25 * z))
        sigma = tail_decay_rate(Field1D(GRID, u))
        assert abs(sigma - 0.25) <= 0.005

    def test_flat_profile_has_no_tail(self):
        u = np.full(GRID.n_x, 0.3)
        u[GRID.n_x // 2] = 0.35  # a peak, but no decay anywhere
        with pytest.raises(TailTooShort):
            tail_decay_rate(Field1D(GRID, u))

    def test_wake_ramp_is_not_reported_as_a_tail(self):
        # |u| rising linearly from the quiet point: log fit far from
        # straight, must be refused rather than fitted
        z = GRID.x
        u = 0.9 * np.exp(-0.5 * np.abs(z)) + np.where(
            z > 0, 1e-4 + 6e-6 * z, 0.0)
        sigma = tail_decay_rate(Field1D(GRID, u))
        # the leading side still fits; the ramp side must not win with a
        # bogus shallow rate
        assert abs(sigma - 0.5) < 0.02


class TestExtractPulse:
    def test_extract_from_translated_history(self):
        cells = 64
        hist = _synthetic_history([k * cells for k in range(6)])
        pulse = extract_pulse(hist)
        assert abs(pulse.c - cells * GRID.dx / 10.0) < 1e-8
        assert pulse.settle_residual < 1e-12
        assert abs(pulse.sigma - 0.2) <= 0.004
        # recentered: peak sits at z = 0
        assert np.argmax(pulse.u.values) == GRID.n_x // 2

    def test_low_amplitude_raises_no_pulse(self):
        hist = _synthetic_history([k * 64 for k in range(4)])
        faint = [GuidingState(s.t, Field1D(GRID, 0.05 * s.u.values), s.v)
                 for s in hist]
        with pytest.raises(NoPulse):
            extract_pulse(faint)

    def test_rightward_motion_raises_no_pulse(self):
        hist = _synthetic_history([-k * 64 for k in range(5)])
        with pytest.raises(NoPulse):
            extract_pulse(hist)

    def test_unsettled_shape_raises(self):
        hist = _synthetic_history([k * 64 for k in range(5)])
        grown = GuidingState(
            hist[-1].t, Field1D(GRID, 1.07 * hist[-1].u.values), hist[-1].v)
        with pytest.raises(NotSettled):
            extract_pulse(hist[:-1] + [grown])

    def test_boundary_contamination_raises(self):
        hist = _synthetic_history([k * 64 for k in range(5)])
        dirty = [GuidingState(s.t, Field1D(GRID, s.u.values + 1e-3), s.v)
                 for s in hist]
        with pytest.raises(NoPulse, match="window"):
            extract_pulse(dirty)

    def test_zero_speed_profile_reports_c_zero(self):
        hist = _synthetic_history([0] * 5)
        pulse = extract_pulse(hist)
        assert pulse.c == 0.0


class TestSeedBump:
    def test_bump_shape_and_preload_sides(self):
        state = seed_bump(GRID, 2, center=50.0, width=8.0, height=0.8,
                          preload=0.15)
        assert state.t == 0.0
        assert len(state.v) == 2
        j = int(np.argmax(state.u.values))
        assert abs(GRID.x[j] - 50.0) <= GRID.dx
        # center need not be a grid node; the sampled max sits just below
        assert 0.8 - 1e-4 < np.max(state.u.values) <= 0.8
        v1 = state.v[0].values
        # shield saturates to the right of the bump, vanishes to the left
        assert abs(v1[GRID.n_x - 1] - 0.15) < 1e-3
        assert abs(v1[0]) < 1e-12
        assert np.max(np.abs(state.v[1].values)) == 0.0

    def test_no_preload_leaves_inhibitors_zero(self):
        state = seed_bump(GRID, 1, center=0.0, width=5.0, height=0.5)
        assert np.max(np.abs(state.v[0].values)) == 0.0


UNIFORM_PARAMS = GuidingParams(alpha_i=(1.0, 1.0),
                               beta_i=(1e-3, 1e-3),
                               lambda_i=(0.004, 0.0159),
                               beta_plus_norm=0.0)


def _uniform_rhs(t, y, f, params):
    u, v = y[0], y[1:]
    du = f(np.array([u]))[0] - float(np.dot(params.alpha_i, v))
    dv = [-l * vi + b * u for l, b, vi in
          zip(params.lambda_i, params.beta_i, v)]
    return [du, *dv]


class TestStepGuiding:
    def test_uniform_dynamics_converges_to_ode_oracle(self):
        # spatially uniform state: diffusion is inert, the stepper must
        # reproduce the guiding ODEs to first order in dt
        f = CubicNonlinearity()
        grid = MacroGrid(10.0, 64)
        sol = solve_ivp(_uniform_rhs, (0.0, 20.0), [0.4, 0.0, 0.0],
                        args=(f, UNIFORM_PARAMS), rtol=1e-12, atol=1e-14)
        ref = sol.y[:, -1]

        errs = []
        for dt in (0.02, 0.005):
            state = GuidingState(
                0.0, Field1D(grid, np.full(64, 0.4)),
                tuple(Field1D(grid, np.zeros(64)) for _ in range(2)))
            n = int(round(20.0 / dt))
            for _ in range(n):
                state = step_guiding(state, UNIFORM_PARAMS, f, dt)
            got = np.array([state.u.values[0]] +
                           [v.values[0] for v in state.v])
            errs.append(np.max(np.abs(got - ref)))
        assert errs[1] < errs[0]
        ratio = errs[0] / errs[1]
        assert 3.0 < ratio < 5.0  # first order in dt

    def test_diffusion_spreads_a_spike(self):
        # f vanishes at u = 0 and u = 1, so the first step off this spike
        # is purely diffusive: mass conserved, peak lowered, neighbors fed
        f = CubicNonlinearity()
        grid = MacroGrid(20.0, 256)
        u0 = np.zeros(256)
        u0[128] = 1.0
        params = GuidingParams((), (), (), 0.0)
        state = GuidingState(0.0, Field1D(grid, u0), ())
        state = step_guiding(state, params, f, 0.01)
        u = state.u.values
        assert np.max(u) < 1.0
        assert u[127] > 0.0 and u[129] > 0.0
        assert np.sum(u) == pytest.approx(1.0, rel=1e-12)

    def test_runaway_coupling_raises_blowup(self):
        f = CubicNonlinearity()
        params = GuidingParams(alpha_i=(-5.0,), beta_i=(5.0,),
                               lambda_i=(0.0,), beta_plus_norm=0.0)
        grid = MacroGrid(10.0, 64)
        state = GuidingState(0.0, Field1D(grid, np.full(64, 0.5)),
                             (Field1D(grid, np.full(64, 0.5)),))
        with pytest.raises(BlowUp):
            for _ in range(10_000):
                state = step_guiding(state, params, f, 0.05)

    def test_nan_state_raises_blowup(self):
        f = CubicNonlinearity()
        grid = MacroGrid(10.0, 64)
        u = np.full(64, 0.5)
        u[3] = np.nan
        state = GuidingState(0.0, Field1D(grid, u), ())
        params = GuidingParams((), (), (), 0.0)
        with pytest.raises(BlowUp):
            step_guiding(state, params, f, 0.01)

    def test_time_advances_by_dt(self):
        f = CubicNonlinearity()
        state = seed_bump(GRID, 1, 0.0, 5.0, 0.5)
        params = GuidingParams((1.0,), (1e-3,), (0.01,), 0.0)
        new = step_guiding(state, params, f, 0.01)
        assert new.t == pytest.approx(0.01)
