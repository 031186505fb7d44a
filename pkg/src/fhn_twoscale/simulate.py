"""Time integration of the fast-coefficient system and its two-scale limit.

Both steppers share one convention: reaction terms are advanced with an
explicit Euler increment evaluated at the old iterate, diffusion is applied
implicitly afterwards (exactly, in Fourier space, when the diffusivity is
constant).  This keeps the stiff linear parts unconditionally stable while
the nonlinearity stays cheap.

The fast system evolves (u, v) on the macroscopic grid with coefficients
sampled at x/eps on the unit cell:

    u_t = u_xx + f(u) - alpha(x/eps) v
    v_t = (eps^2 d(x/eps) v_x)_x - b(x/eps) v + beta(x/eps) u

The two-scale limit evolves (U(x), V(x, y)):

    U_t = U_xx + f(U) - <alpha V>_y
    V_t = (d(y) V_y)_y - b(y) V + beta(y) U      (per macroscopic point x)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BlowUp
from .fields import (CellGrid, Field1D, MacroGrid, TwoScaleField,
                     _implicit_diffusion, cell_quadrature)
from .microcell import CoefficientSet, sample_coefficients

_CONST_TOL = 1e-12


def _eval(fn, y: np.ndarray) -> np.ndarray:
    out = np.broadcast_to(np.asarray(fn(y), dtype=float), y.shape).astype(float)
    if not np.all(np.isfinite(out)):
        raise ValueError("coefficient is not finite on the sample points")
    return out


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 0.01
    blowup_ceiling: float = 10.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")


@dataclass(frozen=True)
class EpsState:
    t: float
    u: Field1D
    v: Field1D

    @property
    def grid(self) -> MacroGrid:
        return self.u.grid


@dataclass(frozen=True)
class TwoScaleState:
    t: float
    u: Field1D
    v: TwoScaleField

    @property
    def grid(self) -> MacroGrid:
        return self.u.grid

    @property
    def cell(self) -> CellGrid:
        return self.v.cell


def _is_const(values: np.ndarray) -> bool:
    return float(np.ptp(values)) <= _CONST_TOL * max(1.0, float(np.max(np.abs(values))))


@dataclass(frozen=True)
class EpsCoefficients:
    """Coefficients frozen onto the macroscopic grid at y = x/eps (mod 1)."""

    eps: float
    alpha: np.ndarray
    beta: np.ndarray
    b: np.ndarray
    d: np.ndarray
    d_half: np.ndarray  # at half nodes, for the conservative flux
    d_const: float | None  # value when d is x-independent, else None


def freeze_eps_coefficients(coeffs: CoefficientSet, grid: MacroGrid,
                            eps: float) -> EpsCoefficients:
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    y = np.mod(grid.x / eps, 1.0)
    alpha, beta, b, d = (_eval(fn, y) for fn in
                         (coeffs.alpha, coeffs.beta, coeffs.b, coeffs.d))
    y_half = np.mod((grid.x + 0.5 * grid.dx) / eps, 1.0)
    d_half = _eval(coeffs.d, y_half)
    d_const = float(d[0]) if _is_const(d) and _is_const(d_half) else None
    return EpsCoefficients(eps, alpha, beta, b, d, d_half, d_const)


def step_eps(state: EpsState, frozen: EpsCoefficients,
             coeffs: CoefficientSet, cfg: SolverConfig) -> EpsState:
    grid, dt = state.grid, cfg.dt
    u, v = state.u.values, state.v.values
    f = coeffs.nonlinearity

    u_star = u + dt * (f(u) - frozen.alpha * v)
    u_new = _implicit_diffusion(u_star, dt, grid.wavenumbers)

    v_star = v + dt * (-frozen.b * v + frozen.beta * u)
    nu = frozen.eps ** 2
    if frozen.d_const is not None:
        if frozen.d_const > 0.0:
            v_new = _implicit_diffusion(v_star, nu * frozen.d_const * dt,
                                        grid.wavenumbers)
        else:
            v_new = v_star
    else:
        # conservative explicit flux for x-dependent diffusivity
        flux = frozen.d_half * (np.roll(v, -1) - v) / grid.dx
        v_new = v_star + dt * nu * (flux - np.roll(flux, 1)) / grid.dx

    new = EpsState(state.t + dt, Field1D(grid, u_new), Field1D(grid, v_new))
    sup = max(np.max(np.abs(u_new)), np.max(np.abs(v_new)))
    if not sup <= cfg.blowup_ceiling:
        raise BlowUp(f"eps-system sup norm {sup:.3g} at t={new.t:.6g} "
                     f"(eps={frozen.eps:g})")
    return new


@dataclass(frozen=True)
class CellCoefficients:
    """Coefficients sampled on the unit-cell grid for the two-scale stepper."""

    alpha: np.ndarray
    beta: np.ndarray
    b: np.ndarray
    d: np.ndarray
    d_half: np.ndarray
    d_const: float | None


def freeze_cell_coefficients(coeffs: CoefficientSet, cell: CellGrid) -> CellCoefficients:
    alpha, beta, b, d = sample_coefficients(coeffs, cell)
    y_half = np.mod(cell.y + 0.5 * cell.dy, 1.0)
    d_half = _eval(coeffs.d, y_half)
    d_const = float(d[0]) if _is_const(d) and _is_const(d_half) else None
    return CellCoefficients(alpha, beta, b, d, d_half, d_const)


def step_twoscale(state: TwoScaleState, frozen: CellCoefficients,
                  coeffs: CoefficientSet, cfg: SolverConfig) -> TwoScaleState:
    grid, cell, dt = state.grid, state.cell, cfg.dt
    u, v = state.u.values, state.v.values
    f = coeffs.nonlinearity

    coupling = cell_quadrature(cell, frozen.alpha * v)  # <alpha V>_y per x
    u_star = u + dt * (f(u) - coupling)
    u_new = _implicit_diffusion(u_star, dt, grid.wavenumbers)

    v_star = v + dt * (-frozen.b * v + frozen.beta * u[:, None])
    if frozen.d_const is not None:
        if frozen.d_const > 0.0:
            v_new = _implicit_diffusion(v_star, frozen.d_const * dt,
                                        cell.wavenumbers, axis=-1)
        else:
            v_new = v_star
    else:
        flux = frozen.d_half * (np.roll(v, -1, axis=-1) - v) / cell.dy
        v_new = v_star + dt * (flux - np.roll(flux, 1, axis=-1)) / cell.dy

    new = TwoScaleState(state.t + dt, Field1D(grid, u_new),
                        TwoScaleField(grid, cell, v_new))
    sup = max(np.max(np.abs(u_new)), np.max(np.abs(v_new)))
    if not sup <= cfg.blowup_ceiling:
        raise BlowUp(f"two-scale sup norm {sup:.3g} at t={new.t:.6g}")
    return new


def run(initial, stepper: Callable, t_end: float, *,
        dt: float, observe_every_time: float | None = None,
        observer: Callable | None = None) -> list:
    """Advance `initial` with `stepper` until t_end.

    Returns the observed states (always including the initial and final
    ones).  `observe_every_time` must be a multiple of dt; step counts are
    integer so accumulated float drift cannot skip an observation.  An
    `observer` callback, when given, sees every retained state as it is
    produced (useful for streaming instead of storing).
    """
    span = t_end - initial.t
    if span <= 0:
        raise ValueError(f"t_end={t_end} does not exceed initial time {initial.t}")
    n_steps = int(round(span / dt))
    if abs(n_steps * dt - span) > 1e-9 * max(1.0, abs(span)):
        raise ValueError(f"time span {span} is not a multiple of dt={dt}")
    if observe_every_time is None:
        stride = n_steps
    else:
        stride = int(round(observe_every_time / dt))
        if stride <= 0 or abs(stride * dt - observe_every_time) > 1e-9:
            raise ValueError(
                f"observe_every_time={observe_every_time} is not a multiple of dt={dt}")

    history = [initial]
    if observer is not None:
        observer(initial)
    state = initial
    for k in range(1, n_steps + 1):
        state = stepper(state)
        if k % stride == 0 or k == n_steps:
            history.append(state)
            if observer is not None:
                observer(state)
    return history


def final_state(history: Sequence):
    return history[-1]
