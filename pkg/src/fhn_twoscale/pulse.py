"""Two-scale traveling pulses assembled from a settled guiding profile.

A guiding run delivers a speed c, an activator profile U, and the evolved
inhibitor components along the guiding cell directions.  In the frame of
the wave every remaining cell direction obeys the scalar transport balance

    c w'(z) = -lambda w(z) + beta U(z)

on the periodic window, i.e. w is a causal exponential filter of U.
`convolve_mode` evaluates that filter exactly for the piecewise-linear
interpolant of U and closes it periodically through the one-traversal
fixed point.  `assemble` stacks guiding components (carried verbatim) and
filtered complement components into the full inhibitor field V(z, y);
`decay_report` fits the exponential localization of the result and
`comoving_residual` measures how well (c, U, V) solves the two-scale
traveling-wave system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import SpeedZero
from .fields import (CellGrid, Field1D, MacroGrid, NormReport, TwoScaleField,
                     cell_l2_norm, cell_quadrature, l2_norm, linf_norm)
from .guiding import SIGMA_BAND, GuidingPulse, tail_decay_rate
from .microcell import (CoefficientSet, EigenDecomposition, guiding_params,
                        sample_coefficients)

SPEED_FLOOR = 1e-6      # below this the frame is treated as stationary
COUPLING_SKIP = 1e-12   # complement directions beta feeds less than this
                        # are dropped from the assembly
_EXPANSION_TOL = 1e-10  # relative beta mass allowed outside all directions


def _filter_weights(x: float) -> tuple[float, float]:
    """Weights of the left/right samples for one grid cell of the filter.

    Exact integrals of e^{-x(1-s)} against the linear hat functions on
    s in [0, 1]; the closed forms cancel catastrophically as x -> 0, where
    their Taylor expansions take over.
    """
    if x < 1e-4:
        wa = 0.5 - x / 3.0 + x * x / 8.0
        wb = 0.5 - x / 6.0 + x * x / 24.0
    else:
        e = np.exp(-x)
        wa = (1.0 - e * (1.0 + x)) / (x * x)
        wb = (x - 1.0 + e) / (x * x)
    return wa, wb


def convolve_mode(u: Field1D, speed: float, eigenvalue: float,
                  coupling: float) -> Field1D:
    """Periodic solution of c w' = -lambda w + beta u along the window.

    The recurrence w_{j+1} = E w_j + y_j (E the per-cell decay, y_j the
    exactly integrated piecewise-linear forcing) is summed with a causal
    IIR filter; periodicity fixes the free constant through the
    one-traversal map.  Speeds below SPEED_FLOOR degenerate to the
    stationary balance w = (beta/lambda) u.  Negative or non-finite speeds
    have no causal orientation and raise SpeedZero.
    """
    if not np.isfinite(eigenvalue) or eigenvalue <= 0.0:
        raise ValueError(
            f"causal filter needs a positive eigenvalue, got {eigenvalue}")
    if not np.isfinite(speed) or speed < 0.0:
        raise SpeedZero(f"cannot orient the causal filter at speed {speed}")
    if speed < SPEED_FLOOR:
        return Field1D(u.grid, (coupling / eigenvalue) * u.values)

    grid = u.grid
    rate = eigenvalue / speed
    x = rate * grid.dx
    decay = float(np.exp(-x))
    wa, wb = _filter_weights(x)
    g = (coupling / speed) * u.values
    y = grid.dx * (wa * g + wb * np.roll(g, -1))
    partial = lfilter([1.0], [1.0, -decay], y)
    closure = -np.expm1(-rate * 2.0 * grid.half_length)
    w0 = partial[-1] / closure
    values = np.empty(grid.n_x)
    values[0] = w0
    values[1:] = partial[:-1] + np.power(decay, np.arange(1, grid.n_x)) * w0
    return Field1D(grid, values)


@dataclass(frozen=True)
class ModeProfile:
    """One cell direction of the assembled inhibitor with its z-profile."""

    label: str
    eigenvalue: float
    coupling: float   # component of beta feeding this direction
    profile: Field1D  # coefficient along the traveling coordinate
    shape: np.ndarray  # unit cell direction on the decomposition grid


@dataclass(frozen=True)
class TwoScalePulse:
    """Traveling-wave triple (c, U, V) of the two-scale system."""

    c: float
    u: Field1D
    v: TwoScaleField
    components: tuple[ModeProfile, ...]

    def component_norms(self) -> dict[str, float]:
        return {p.label: linf_norm(p.profile) for p in self.components}


def assemble(pulse: GuidingPulse, decomp: EigenDecomposition,
             coeffs: CoefficientSet) -> TwoScalePulse:
    """Lift a settled guiding pulse to the full inhibitor field V(z, y).

    Guiding directions carry the evolved components verbatim; complement
    directions fed by beta are reconstructed with the causal filter at the
    measured speed.  Raises ValueError when the pulse and decomposition
    disagree on the number of guiding components, or when beta has mass
    outside every tracked direction (increase the decomposition
    truncation).
    """
    if len(pulse.v) != decomp.m:
        raise ValueError(
            f"pulse carries {len(pulse.v)} inhibitor components but the "
            f"decomposition has {decomp.m} guiding directions")
    params = guiding_params(decomp, coeffs)
    cell = decomp.cell
    _, beta_s, _, _ = sample_coefficients(coeffs, cell)
    beta_sup = float(np.max(np.abs(beta_s)))
    if params.beta_plus_norm > _EXPANSION_TOL * max(1.0, beta_sup):
        raise ValueError(
            "beta has mass outside the tracked cell directions "
            f"(residual norm {params.beta_plus_norm:.3e}); increase the "
            "decomposition truncation")

    components: list[ModeProfile] = []
    for md, b_i, v_i in zip(decomp.modes, params.beta_i, pulse.v):
        components.append(ModeProfile(md.label, md.eigenvalue, b_i, v_i,
                                      md.values / md.norm))
    for md in decomp.guided_modes:
        coef = float(cell_quadrature(cell, beta_s * md.values))
        if abs(coef) < COUPLING_SKIP:
            continue
        profile = convolve_mode(pulse.u, pulse.c, md.eigenvalue, coef)
        components.append(ModeProfile(md.label, md.eigenvalue, coef, profile,
                                      md.values.copy()))

    grid = pulse.u.grid
    v_values = np.zeros((grid.n_x, cell.n_y))
    for part in components:
        v_values += part.profile.values[:, None] * part.shape[None, :]
    return TwoScalePulse(pulse.c, pulse.u,
                         TwoScaleField(grid, cell, v_values),
                         tuple(components))


@dataclass(frozen=True)
class DecayReport:
    """Exponential tail rates of the assembled pulse (all per unit z)."""

    u_rate: float
    v_rate: float           # of z -> L2(cell) norm of V(z, .)
    v_gradient_rate: float  # of z -> L2(cell) norm of dV/dz(z, .)


def _z_derivative(values: np.ndarray, grid: MacroGrid) -> np.ndarray:
    spec = np.fft.rfft(values, axis=0)
    spec *= 1j * grid.wavenumbers.reshape(-1, *([1] * (values.ndim - 1)))
    spec[-1] = 0.0
    return np.fft.irfft(spec, n=grid.n_x, axis=0)


def decay_report(pulse: TwoScalePulse,
                 band: tuple[float, float] = SIGMA_BAND) -> DecayReport:
    """Fit the two-sided exponential localization of (U, V, V_z).

    Raises TailTooShort when any of the three profiles has no usable
    exponential stretch in the fit band.
    """
    grid, cell = pulse.u.grid, pulse.v.cell
    v_norm = cell_l2_norm(cell, pulse.v.values, axis=1)
    vz_norm = cell_l2_norm(cell, _z_derivative(pulse.v.values, grid), axis=1)
    return DecayReport(
        u_rate=tail_decay_rate(pulse.u, band=band),
        v_rate=tail_decay_rate(Field1D(grid, v_norm), band=band),
        v_gradient_rate=tail_decay_rate(Field1D(grid, vz_norm), band=band))


@dataclass(frozen=True)
class ResidualReport:
    """Traveling-wave residuals of the assembled pair, by equation."""

    u: NormReport
    v: NormReport


def comoving_residual(pulse: TwoScalePulse,
                      coeffs: CoefficientSet) -> ResidualReport:
    """Residuals of the two-scale traveling-wave system at (c, U, V):

        r_u = U'' + f(U) - <alpha V> - c U'
        r_v = (d V_y)_y - b V + beta U - c V_z

    measured in L2 over the window (respectively window x cell) and sup.
    """
    grid, cell = pulse.u.grid, pulse.v.cell
    k = grid.wavenumbers
    spec_u = np.fft.rfft(pulse.u.values)
    d2u = np.fft.irfft(-(k ** 2) * spec_u, n=grid.n_x)
    du = _z_derivative(pulse.u.values, grid)
    alpha_s, beta_s, b_s, d_s = sample_coefficients(coeffs, cell)
    f = coeffs.nonlinearity
    coupling = cell_quadrature(cell, alpha_s * pulse.v.values, axis=1)
    r_u = d2u + f(pulse.u.values) - coupling - pulse.c * du

    v = pulse.v.values
    if np.any(d_s):
        ky = cell.wavenumbers
        spec_y = np.fft.rfft(v, axis=1)
        v_y = np.fft.irfft(1j * ky * spec_y, n=cell.n_y, axis=1)
        flux = np.fft.rfft(d_s * v_y, axis=1)
        div = np.fft.irfft(1j * ky * flux, n=cell.n_y, axis=1)
    else:
        div = np.zeros_like(v)
    r_v = div - b_s * v + beta_s * pulse.u.values[:, None] \
        - pulse.c * _z_derivative(v, grid)

    ru_field = Field1D(grid, r_u)
    return ResidualReport(
        u=NormReport(l2=l2_norm(ru_field), linf=linf_norm(ru_field)),
        v=NormReport(
            l2=float(np.sqrt(grid.dx * cell.dy * np.sum(r_v ** 2))),
            linf=float(np.max(np.abs(r_v)))))
