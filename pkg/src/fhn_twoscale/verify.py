"""Verification instruments for the two-scale limit.

Five groups of tools:

  * `reconstruct` / `unfold` translate between two-scale fields V(x, y)
    and direct fields v(x) by evaluating at y = x/eps (mod 1), with linear
    interpolation and periodic wrap in either direction.
  * `error_sample` / `error_series` / `sweep_error` / `fit_rate` measure
    the distance between a direct run and a reconstructed limit run across
    eps and fit the convergence order on a log-log scale.
  * `check_dual_norm_lemma` probes the bound "the H^-1-type dual norm of a
    mean-free rapidly oscillating field is O(eps)" on a concrete g.
  * `stability_experiment` perturbs a settled guiding pulse, evolves it,
    and fits the exponential return rate of the shift-minimized distance.
  * `growth_bound_check` assembles the a-priori growth constants of the
    reaction terms into the exponential bound rate kappa.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegenerateFit, NotDecaying
from .fields import (CellGrid, Field1D, MacroGrid, NormReport, TwoScaleField,
                     cell_derivative, cell_quadrature, h1_dual_norm, l2_norm,
                     linf_norm, same_grid, spectral_derivative)
from .guiding import GuidingPulse, GuidingState, fourier_shift, peak_position, step_guiding
from .microcell import (CoefficientSet, CubicNonlinearity, GuidingParams,
                        sample_coefficients)
from .simulate import EpsState, TwoScaleState, run


def reconstruct(field: TwoScaleField, eps: float) -> Field1D:
    """Direct-space trace v(x) = V(x, x/eps mod 1), linear in the cell."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    grid, cell = field.grid, field.cell
    pos = np.mod(grid.x / eps, 1.0) / cell.dy
    idx = np.floor(pos).astype(int)
    frac = pos - idx
    idx = np.mod(idx, cell.n_y)
    nxt = (idx + 1) % cell.n_y
    rows = np.arange(grid.n_x)
    values = (1.0 - frac) * field.values[rows, idx] \
        + frac * field.values[rows, nxt]
    return Field1D(grid, values)


def unfold(f: Field1D, eps: float, cell: CellGrid) -> TwoScaleField:
    """Two-scale unfolding V(x, y) = f(eps * (floor(x/eps) + y)).

    The sample points wrap periodically around the window; values between
    grid nodes are linearly interpolated.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    grid = f.grid
    base = eps * np.floor(grid.x / eps)
    s = base[:, None] + eps * cell.y[None, :]
    pos = np.mod((s - grid.x[0]) / grid.dx, grid.n_x)
    whole = np.floor(pos)
    frac = pos - whole
    idx = whole.astype(int) % grid.n_x
    nxt = (idx + 1) % grid.n_x
    values = (1.0 - frac) * f.values[idx] + frac * f.values[nxt]
    return TwoScaleField(grid, cell, values)


@dataclass(frozen=True)
class ErrorSample:
    """Distance between a direct state and a reconstructed limit state.

    `u_gradient_l2` is the plain gradient error |d/dx (u_eps - U)|_L2;
    `v_gradient_l2` is the micro-gradient error |eps * dv_eps/dx - R dV/dy|_L2,
    where R reconstructs the cell derivative at y = x/eps.  The eps weight
    makes the direct derivative commensurate with the cell derivative of
    the limit: d/dx acting on v(x) = V(x, x/eps) contributes dV/dy / eps.
    """

    eps: float
    u: NormReport
    v: NormReport
    u_gradient_l2: float
    v_gradient_l2: float


def error_sample(direct: EpsState, limit: TwoScaleState,
                 eps: float) -> ErrorSample:
    """Norms of u_eps - U and v_eps - (reconstruction of V) at equal times."""
    grid = same_grid(direct.u, limit.u)
    if abs(direct.t - limit.t) > 1e-9 * max(1.0, abs(limit.t)):
        raise ValueError(
            f"states are at different times: {direct.t} vs {limit.t}")
    du = Field1D(grid, direct.u.values - limit.u.values)
    dv = Field1D(grid, direct.v.values - reconstruct(limit.v, eps).values)
    dv_micro = Field1D(
        grid,
        eps * spectral_derivative(direct.v).values
        - reconstruct(cell_derivative(limit.v), eps).values)
    return ErrorSample(
        eps=eps,
        u=NormReport(l2=l2_norm(du), linf=linf_norm(du)),
        v=NormReport(l2=l2_norm(dv), linf=linf_norm(dv)),
        u_gradient_l2=l2_norm(spectral_derivative(du)),
        v_gradient_l2=l2_norm(dv_micro))


@dataclass(frozen=True)
class ErrorSeries:
    """Error norms stacked over a decreasing sequence of eps."""

    eps: np.ndarray
    u_l2: np.ndarray
    u_linf: np.ndarray
    v_l2: np.ndarray
    v_linf: np.ndarray
    u_gradient_l2: np.ndarray
    v_gradient_l2: np.ndarray

    @property
    def total_l2(self) -> np.ndarray:
        return self.u_l2 + self.v_l2


def error_series(samples: Sequence[ErrorSample]) -> ErrorSeries:
    ordered = sorted(samples, key=lambda s: -s.eps)
    eps = np.array([s.eps for s in ordered])
    if len(eps) != len(np.unique(eps)):
        raise ValueError("duplicate eps in the error series")
    return ErrorSeries(
        eps=eps,
        u_l2=np.array([s.u.l2 for s in ordered]),
        u_linf=np.array([s.u.linf for s in ordered]),
        v_l2=np.array([s.v.l2 for s in ordered]),
        v_linf=np.array([s.v.linf for s in ordered]),
        u_gradient_l2=np.array([s.u_gradient_l2 for s in ordered]),
        v_gradient_l2=np.array([s.v_gradient_l2 for s in ordered]))


def sweep_error(times: Sequence[float], samples: Sequence[ErrorSample]) -> float:
    """Combined error of one eps trajectory against the limit trajectory.

    This is the quantity the first-order a-priori estimate controls:
    the supremum in time of the field errors |u_eps - U|_L2 + |v_eps - R V|_L2
    plus the space-time L2 norms of the two gradient errors,

        sqrt( integral |d/dx (u_eps - U)|_L2^2 dt )
      + sqrt( integral |eps dv_eps/dx - R dV/dy|_L2^2 dt ).

    The plain field error alone typically decays faster than O(eps); the
    gradient terms are where the estimate is sharp, so a convergence-order
    fit should target this combination.  Time integrals use the trapezoid
    rule on the sampling instants `times`, which must be strictly increasing
    and aligned one-to-one with `samples`.
    """
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or len(t) != len(samples):
        raise ValueError("times and samples must align one-to-one")
    if len(t) < 2:
        raise ValueError("need at least two samples to integrate in time")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    fields_sup = max(s.u.l2 + s.v.l2 for s in samples)
    u_grad = np.array([s.u_gradient_l2 for s in samples])
    v_grad = np.array([s.v_gradient_l2 for s in samples])
    return float(fields_sup
                 + np.sqrt(np.trapezoid(u_grad ** 2, t))
                 + np.sqrt(np.trapezoid(v_grad ** 2, t)))


@dataclass(frozen=True)
class RateFit:
    """Least-squares power law error ~ C * eps^rate on log-log axes."""

    rate: float
    intercept: float
    r_squared: float


def fit_rate(eps: Sequence[float], errors: Sequence[float], *,
             increase_tol: float = 0.5) -> RateFit:
    """Fit the convergence order of an error sequence along decreasing eps.

    Raises DegenerateFit when an error is nonpositive or grows by more than
    `increase_tol` (relative) from one eps to the next smaller one - such a
    series has no credible rate.
    """
    eps = np.asarray(eps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if eps.shape != errors.shape or eps.ndim != 1 or eps.size < 2:
        raise ValueError("need equally many eps and errors, at least two")
    if not np.all(np.diff(eps) < 0) or np.any(eps <= 0):
        raise ValueError("eps must be positive and strictly decreasing")
    if np.any(errors <= 0):
        raise DegenerateFit("error series contains nonpositive entries")
    growth = errors[1:] / errors[:-1]
    if np.any(growth > 1.0 + increase_tol):
        raise DegenerateFit(
            "error grew by more than "
            f"{increase_tol:.0%} between consecutive eps "
            f"(max ratio {float(np.max(growth)):.3g})")
    coef = np.polyfit(np.log(eps), np.log(errors), 1)
    pred = np.polyval(coef, np.log(eps))
    ss_res = float(np.sum((np.log(errors) - pred) ** 2))
    ss_tot = float(np.sum((np.log(errors) - np.mean(np.log(errors))) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return RateFit(rate=float(coef[0]), intercept=float(coef[1]),
                   r_squared=r2)


@dataclass(frozen=True)
class DualNormReport:
    """Dual norms of a mean-free oscillatory trace across eps."""

    eps: np.ndarray
    dual_norms: np.ndarray
    constants: np.ndarray       # dual_norm / eps, should stay bounded
    halving_ratios: np.ndarray  # dual(eps/2) / dual(eps) where applicable
    passed: bool


def check_dual_norm_lemma(g: Callable[[np.ndarray, np.ndarray], np.ndarray],
                          grid: MacroGrid, eps_values: Sequence[float], *,
                          cell: CellGrid | None = None,
                          ratio_tol: float = 1.05,
                          halving_range: tuple[float, float] = (0.4, 0.6),
                          ) -> DualNormReport:
    """Probe ||g(x, x/eps) - <g>(x)||_dual = O(eps) on a concrete g(x, y).

    The cell mean <g> is removed, the dual norm is evaluated for each eps,
    and the report passes when the normalized constants dual/eps do not
    grow by more than `ratio_tol` between consecutive eps and every exact
    halving of eps scales the dual norm into `halving_range`.
    """
    eps = np.asarray(eps_values, dtype=float)
    if eps.ndim != 1 or eps.size < 2 or np.any(eps <= 0) \
            or not np.all(np.diff(eps) < 0):
        raise ValueError("eps values must be positive and strictly decreasing")
    cell = cell if cell is not None else CellGrid(256)
    x = grid.x
    mean = cell_quadrature(cell, np.asarray(
        g(x[:, None], cell.y[None, :]), dtype=float), axis=1)
    duals = []
    for e in eps:
        trace = np.asarray(g(x, np.mod(x / e, 1.0)), dtype=float) - mean
        duals.append(h1_dual_norm(Field1D(grid, trace)))
    duals = np.array(duals)
    if not np.all(duals > 0):
        raise DegenerateFit("oscillatory trace has vanishing dual norm")
    constants = duals / eps
    const_ok = bool(np.all(constants[1:] / constants[:-1] <= ratio_tol))
    halving = []
    halve_ok = True
    for i in range(len(eps) - 1):
        if abs(eps[i + 1] / eps[i] - 0.5) <= 1e-9:
            r = duals[i + 1] / duals[i]
            halving.append(r)
            halve_ok &= halving_range[0] <= r <= halving_range[1]
    return DualNormReport(eps=eps, dual_norms=duals, constants=constants,
                          halving_ratios=np.array(halving),
                          passed=const_ok and halve_ok)


@dataclass(frozen=True)
class StabilityReport:
    """Shift-minimized distance to the reference pulse over time."""

    times: np.ndarray
    distances: np.ndarray
    kappa: float      # fitted exponential return rate
    r_squared: float  # quality of the log-linear fit


def _profile_stack(u: Field1D, v: tuple[Field1D, ...]) -> np.ndarray:
    return np.vstack([u.values] + [f.values for f in v])


def _stack_distance(ref: np.ndarray, cand: np.ndarray) -> float:
    du = np.max(np.abs(ref[0] - cand[0]))
    if ref.shape[0] > 1:
        dv = ref[1:] - cand[1:]
        du += np.max(np.sqrt(np.sum(dv * dv, axis=0)))
    return float(du)


def _aligned_distance(ref: np.ndarray, cand: np.ndarray,
                      grid: MacroGrid, tau0: float) -> float:
    """min over shifts tau of the stack distance to ref(. ) vs cand(. + tau)."""
    k0 = int(round(tau0 / grid.dx))
    best_k, best = k0, np.inf
    for k in range(k0 - 8, k0 + 9):
        d = _stack_distance(ref, np.roll(cand, -k, axis=1))
        if d < best:
            best_k, best = k, d

    def at(tau: float) -> float:
        return _stack_distance(
            ref, fourier_shift(cand, tau, grid.half_length))

    lo, hi = (best_k - 1) * grid.dx, (best_k + 1) * grid.dx
    res = minimize_scalar(at, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-3 * grid.dx})
    return float(min(best, res.fun))


def stability_experiment(reference: GuidingPulse, params: GuidingParams,
                         nonlinearity: CubicNonlinearity, *,
                         delta: float = 0.01, t_end: float = 200.0,
                         dt: float = 0.01, observe_every: float = 5.0,
                         perturbation: Field1D | None = None,
                         fit_start_fraction: float = 0.25) -> StabilityReport:
    """Evolve a perturbed copy of a settled pulse and fit its return rate.

    The perturbation (default: a unit bump at the activator peak) is added
    to u with amplitude `delta`.  At each observation the distance to the
    reference is minimized over spatial shifts, so a pure translation of
    the pulse counts as zero.  Raises NotDecaying when the final distance
    is not below the initial one; the rate kappa is fitted on the log of
    the distances from `fit_start_fraction` of the horizon onwards.
    """
    grid = reference.grid
    if perturbation is None:
        bump = np.exp(-(grid.x / 4.0) ** 2)
    else:
        same_grid(perturbation, reference.u)
        bump = perturbation.values
    initial = GuidingState(
        0.0, Field1D(grid, reference.u.values + delta * bump), reference.v)
    history = run(initial,
                  lambda s: step_guiding(s, params, nonlinearity, dt),
                  t_end, dt=dt, observe_every_time=observe_every)

    ref_stack = _profile_stack(reference.u, reference.v)
    ref_peak = peak_position(reference.u)
    times, distances = [], []
    for state in history:
        tau0 = peak_position(state.u) - ref_peak
        times.append(state.t)
        distances.append(
            _aligned_distance(ref_stack,
                              _profile_stack(state.u, state.v), grid, tau0))
    times = np.array(times)
    distances = np.array(distances)

    if not distances[-1] < distances[0]:
        raise NotDecaying(
            f"distance went from {distances[0]:.3e} to {distances[-1]:.3e} "
            f"over {t_end} time units")
    mask = times >= fit_start_fraction * t_end
    if np.count_nonzero(mask) < 3:
        raise ValueError("too few observations beyond the fit start; "
                         "reduce observe_every or fit_start_fraction")
    if np.any(distances[mask] <= 0):
        raise DegenerateFit("distance reached zero; no rate to fit")
    coef = np.polyfit(times[mask], np.log(distances[mask]), 1)
    pred = np.polyval(coef, times[mask])
    resid = np.log(distances[mask]) - pred
    ss_tot = float(np.sum((np.log(distances[mask])
                           - np.mean(np.log(distances[mask]))) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 0.0
    return StabilityReport(times=times, distances=distances,
                           kappa=float(-coef[0]), r_squared=r2)


@dataclass(frozen=True)
class GrowthBound:
    """Constants of the a-priori exponential growth bound.

    The cubic satisfies f(u) >= c1 u - c2 for u <= 0 and f(u) <= c3 u + c4
    for u >= 0; together with the sup norms of the couplings this yields
    sup norms growing no faster than e^{kappa t} with
    kappa = max(2 c4, sup|alpha|, sup|beta|, sup|b|).
    """

    c1: float
    c2: float
    c3: float
    c4: float
    alpha_sup: float
    beta_sup: float
    b_sup: float
    kappa: float


def growth_bound_check(coeffs: CoefficientSet, *,
                       cell: CellGrid | None = None) -> GrowthBound:
    cell = cell if cell is not None else CellGrid(4096)
    alpha_s, beta_s, b_s, _ = sample_coefficients(coeffs, cell)
    c1, c2, c3, c4 = coeffs.nonlinearity.growth_constants()
    alpha_sup = float(np.max(np.abs(alpha_s)))
    beta_sup = float(np.max(np.abs(beta_s)))
    b_sup = float(np.max(np.abs(b_s)))
    return GrowthBound(c1=c1, c2=c2, c3=c3, c4=c4, alpha_sup=alpha_sup,
                       beta_sup=beta_sup, b_sup=b_sup,
                       kappa=max(2.0 * c4, alpha_sup, beta_sup, b_sup))
