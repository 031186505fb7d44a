"""Direct and two-scale steppers against closed-form and ODE oracles."""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from fhn_twoscale.errors import BlowUp
from fhn_twoscale.fields import CellGrid, Field1D, MacroGrid, TwoScaleField
from fhn_twoscale.microcell import CoefficientSet, CubicNonlinearity
from fhn_twoscale.presets import get_preset
from fhn_twoscale.simulate import (EpsState, SolverConfig, TwoScaleState,
                                   freeze_cell_coefficients,
                                   freeze_eps_coefficients, run, step_eps,
                                   step_twoscale)

F = CubicNonlinearity()


def _const_coeffs(alpha=1.0, beta=1e-3, b=1e-4, d=1e-4):
    def mk(v):
        return lambda y: np.full_like(np.asarray(y, dtype=float), v)
    return CoefficientSet(alpha=mk(alpha), beta=mk(beta), b=mk(b), d=mk(d),
                          nonlinearity=F)


class TestFreezing:
    def test_eps_sampling_wraps_on_the_unit_cell(self):
        grid = MacroGrid(150.0, 4096)
        coeffs = get_preset("ex2-step").coefficients
        frozen = freeze_eps_coefficients(coeffs, grid, 25.0)
        assert set(np.unique(frozen.alpha)) == {-1.0, 1.0}
        assert set(np.unique(frozen.beta)) == {-3e-3, 3e-3}
        # alpha(x/eps) has period eps on the macro grid: 25 units
        period_cells = int(round(25.0 / grid.dx))
        shifted = np.roll(frozen.alpha, period_cells)
        # 25/dx is not an integer here, so compare at exact multiples
        k = 4096 // 8
        assert frozen.alpha[k] == coeffs.alpha(np.mod(grid.x[k] / 25.0, 1.0))
        del shifted

    def test_constant_d_is_detected(self):
        grid = MacroGrid(10.0, 64)
        frozen = freeze_eps_coefficients(_const_coeffs(), grid, 2.0)
        assert frozen.d_const == pytest.approx(1e-4)

    def test_oscillating_d_goes_to_flux_path(self):
        grid = MacroGrid(10.0, 64)
        coeffs = CoefficientSet(
            alpha=lambda y: np.ones_like(y),
            beta=lambda y: np.full_like(y, 1e-3),
            b=lambda y: np.full_like(y, 1e-4),
            d=lambda y: 1e-4 * (2.0 + np.sin(2 * np.pi * np.asarray(y))),
            nonlinearity=F)
        frozen = freeze_eps_coefficients(coeffs, grid, 2.0)
        assert frozen.d_const is None

    def test_nonpositive_eps_rejected(self):
        with pytest.raises(ValueError):
            freeze_eps_coefficients(_const_coeffs(), MacroGrid(10.0, 64), 0.0)


class TestRunLoop:
    @staticmethod
    def _stepper(state):
        return EpsState(state.t + 0.01, state.u, state.v)

    def _initial(self):
        grid = MacroGrid(10.0, 64)
        z = Field1D(grid, np.zeros(64))
        return EpsState(0.0, z, z)

    def test_observation_count_and_times(self):
        hist = run(self._initial(), self._stepper, 1.0, dt=0.01,
                   observe_every_time=0.25)
        assert len(hist) == 5
        assert [pytest.approx(s.t) for s in hist] == [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_default_keeps_first_and_last(self):
        hist = run(self._initial(), self._stepper, 0.5, dt=0.01)
        assert len(hist) == 2
        assert hist[-1].t == pytest.approx(0.5)

    def test_non_multiple_horizon_rejected(self):
        with pytest.raises(ValueError):
            run(self._initial(), self._stepper, 0.505, dt=0.01)

    def test_non_multiple_observation_rejected(self):
        with pytest.raises(ValueError):
            run(self._initial(), self._stepper, 1.0, dt=0.01,
                observe_every_time=0.015)

    def test_observer_sees_every_retained_state(self):
        seen = []
        run(self._initial(), self._stepper, 1.0, dt=0.01,
            observe_every_time=0.5, observer=lambda s: seen.append(s.t))
        assert [pytest.approx(t) for t in seen] == [0.0, 0.5, 1.0]


class TestEpsStepper:
    def test_uniform_state_follows_the_ode_oracle(self):
        # constant coefficients + uniform fields: diffusion inert, the
        # stepper must match du = f(u) - a v, dv = -b v + beta u
        coeffs = _const_coeffs(alpha=1.0, beta=0.05, b=0.02, d=1e-4)
        grid = MacroGrid(10.0, 64)
        frozen = freeze_eps_coefficients(coeffs, grid, 2.0)

        def rhs(t, y):
            u, v = y
            return [F(np.array([u]))[0] - v, -0.02 * v + 0.05 * u]

        ref = solve_ivp(rhs, (0, 10.0), [0.4, 0.0],
                        rtol=1e-12, atol=1e-14).y[:, -1]
        errs = []
        for dt in (0.02, 0.005):
            cfg = SolverConfig(dt=dt)
            state = EpsState(0.0, Field1D(grid, np.full(64, 0.4)),
                             Field1D(grid, np.zeros(64)))
            for _ in range(int(round(10.0 / dt))):
                state = step_eps(state, frozen, coeffs, cfg)
            errs.append(max(abs(state.u.values[0] - ref[0]),
                            abs(state.v.values[0] - ref[1])))
        assert errs[1] < errs[0]
        assert 3.0 < errs[0] / errs[1] < 5.0

    def test_v_diffusion_damps_a_mode_at_the_scaled_rate(self):
        # u = 0, beta = 0: v_t = eps^2 d v_xx - b v, single Fourier mode
        coeffs = CoefficientSet(
            alpha=lambda y: np.zeros_like(y),
            beta=lambda y: np.zeros_like(y),
            b=lambda y: np.full_like(y, 0.5),
            d=lambda y: np.full_like(y, 0.2),
            nonlinearity=F)
        grid = MacroGrid(np.pi, 64)
        eps = 1.5
        frozen = freeze_eps_coefficients(coeffs, grid, eps)
        k = 3.0
        v0 = np.cos(k * grid.x)
        rate = eps ** 2 * 0.2 * k ** 2 + 0.5
        errs = []
        for dt in (0.01, 0.0025):
            cfg = SolverConfig(dt=dt)
            state = EpsState(0.0, Field1D(grid, np.zeros(64)),
                             Field1D(grid, v0.copy()))
            for _ in range(int(round(2.0 / dt))):
                state = step_eps(state, frozen, coeffs, cfg)
            exact = np.exp(-rate * 2.0) * v0
            errs.append(np.max(np.abs(state.v.values - exact)))
        assert 3.0 < errs[0] / errs[1] < 5.0

    def test_flux_path_matches_spectral_path_for_constant_d(self):
        # force the conservative flux branch with a constant sampled d and
        # compare one step against the implicit spectral branch
        coeffs = _const_coeffs(b=0.0, beta=0.0, d=0.3)
        grid = MacroGrid(np.pi, 256)
        frozen = freeze_eps_coefficients(coeffs, grid, 1.0)
        forced = type(frozen)(eps=frozen.eps, alpha=frozen.alpha,
                              beta=frozen.beta, b=frozen.b, d=frozen.d,
                              d_half=frozen.d_half, d_const=None)
        v0 = np.sin(grid.x)
        cfg = SolverConfig(dt=1e-4)
        s0 = EpsState(0.0, Field1D(grid, np.zeros(256)), Field1D(grid, v0))
        spectral = step_eps(s0, frozen, coeffs, cfg)
        flux = step_eps(s0, forced, coeffs, cfg)
        # differ by O(dt^2) + O(dt dx^2)
        assert np.max(np.abs(spectral.v.values - flux.v.values)) < 1e-7

    def test_blowup_raises_with_time_stamp(self):
        coeffs = _const_coeffs(alpha=-10.0, beta=10.0, b=0.0)
        grid = MacroGrid(10.0, 64)
        frozen = freeze_eps_coefficients(coeffs, grid, 1.0)
        cfg = SolverConfig(dt=0.05)
        state = EpsState(0.0, Field1D(grid, np.full(64, 0.5)),
                         Field1D(grid, np.full(64, 0.5)))
        with pytest.raises(BlowUp, match="t="):
            for _ in range(10_000):
                state = step_eps(state, frozen, coeffs, cfg)


class TestTwoScaleStepper:
    def test_y_independent_data_reduces_to_the_eps_system(self):
        # constant coefficients: V(x, y) = v(x) solves the same equations
        # as the direct system, step for step
        coeffs = _const_coeffs(alpha=0.8, beta=0.05, b=0.02, d=0.0)
        grid = MacroGrid(20.0, 128)
        cell = CellGrid(16)
        u0 = 0.5 * np.exp(-grid.x ** 2)
        v0 = 0.1 * np.exp(-grid.x ** 2)
        cfg = SolverConfig(dt=0.01)
        frozen_eps = freeze_eps_coefficients(coeffs, grid, 3.0)
        frozen_cell = freeze_cell_coefficients(coeffs, cell)
        es = EpsState(0.0, Field1D(grid, u0.copy()), Field1D(grid, v0.copy()))
        ts = TwoScaleState(0.0, Field1D(grid, u0.copy()),
                           TwoScaleField(grid, cell,
                                         np.tile(v0[:, None], (1, 16))))
        for _ in range(50):
            es = step_eps(es, frozen_eps, coeffs, cfg)
            ts = step_twoscale(ts, frozen_cell, coeffs, cfg)
        assert np.max(np.abs(es.u.values - ts.u.values)) < 1e-12
        assert np.max(np.abs(ts.v.values - es.v.values[:, None])) < 1e-12

    def test_cell_diffusion_damps_cell_modes(self):
        # U = 0, beta = 0: V_t = d V_yy - b V per macro point
        coeffs = CoefficientSet(
            alpha=lambda y: np.zeros_like(y),
            beta=lambda y: np.zeros_like(y),
            b=lambda y: np.full_like(y, 0.3),
            d=lambda y: np.full_like(y, 0.01),
            nonlinearity=F)
        grid = MacroGrid(5.0, 16)
        cell = CellGrid(64)
        frozen = freeze_cell_coefficients(coeffs, cell)
        v0 = np.sin(2 * np.pi * cell.y)[None, :] * np.ones((16, 1))
        rate = 0.3 + 0.01 * (2 * np.pi) ** 2
        errs = []
        for dt in (0.01, 0.0025):
            cfg = SolverConfig(dt=dt)
            state = TwoScaleState(0.0, Field1D(grid, np.zeros(16)),
                                  TwoScaleField(grid, cell, v0.copy()))
            for _ in range(int(round(2.0 / dt))):
                state = step_twoscale(state, frozen, coeffs, cfg)
            exact = np.exp(-rate * 2.0) * v0
            errs.append(np.max(np.abs(state.v.values - exact)))
        assert 3.0 < errs[0] / errs[1] < 5.0

    def test_coupling_uses_the_cell_average_of_alpha_v(self):
        # alpha = sqrt(2) sin(2 pi y), V = w(x) alpha(y):
        # <alpha V> = w; u feels exactly w
        coeffs = get_preset("ex1-two-sines").coefficients
        grid = MacroGrid(5.0, 16)
        cell = CellGrid(128)
        frozen = freeze_cell_coefficients(coeffs, cell)
        w = 0.3 * np.exp(-grid.x ** 2)
        a1 = np.sqrt(2) * np.sin(2 * np.pi * cell.y)
        state = TwoScaleState(0.0, Field1D(grid, np.zeros(16)),
                              TwoScaleField(grid, cell, w[:, None] * a1))
        cfg = SolverConfig(dt=0.01)
        new = step_twoscale(state, frozen, coeffs, cfg)
        # u* = dt * (f(0) - <alpha V>) = -dt w, then implicit diffusion
        from fhn_twoscale.fields import _implicit_diffusion
        expect = _implicit_diffusion(-0.01 * w, 0.01, grid.wavenumbers)
        assert np.max(np.abs(new.u.values - expect)) < 1e-13


class TestSignFlipReduction:
    """ex2: alpha is +-1, so w = alpha_eps * v_eps obeys an eps-free system
    and u_eps is bit-identical across eps."""

    def test_u_identical_across_eps_bit_for_bit(self):
        preset = get_preset("ex2-step")
        coeffs = preset.coefficients
        grid = MacroGrid(150.0, 4096)
        u0 = 0.8 * np.exp(-((grid.x - 50.0) / 8.0) ** 2)
        w0 = 0.15 * 0.5 * (1.0 + np.tanh((grid.x - 66.0) / 8.0))
        cfg = SolverConfig(dt=0.01)
        finals = []
        for eps in (25.0, 5.0):
            frozen = freeze_eps_coefficients(coeffs, grid, eps)
            state = EpsState(0.0, Field1D(grid, u0.copy()),
                             Field1D(grid, frozen.alpha * w0))
            for _ in range(200):
                state = step_eps(state, frozen, coeffs, cfg)
            finals.append((state.u.values, frozen.alpha * state.v.values))
        assert np.array_equal(finals[0][0], finals[1][0])
        assert np.array_equal(finals[0][1], finals[1][1])
