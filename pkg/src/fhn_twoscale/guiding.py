"""The guiding system: a scalar activator coupled to m inhibitor amplitudes.

    u_t = u_xx + f(u) - sum_i alpha_i v_i
    (v_i)_t = -lambda_i v_i + beta_i u

Its traveling pulses carry all the macroscopic structure of the two-scale
problem: the pulse profile (c, u, v_1..v_m) extracted here seeds both the
two-scale pulse construction and the initial data of the direct runs.

Time stepping matches the PDE simulators: reaction terms explicit at the
old iterate, activator diffusion implicit and exact in Fourier space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BlowUp, NoPulse, NotSettled, TailTooShort
from .fields import Field1D, MacroGrid, implicit_diffusion_solve
from .microcell import CubicNonlinearity, GuidingParams

PULSE_FLOOR = 0.1
SETTLE_TOL = 1e-5
BOUNDARY_TOL = 1e-6
SIGMA_BAND = (1e-6, 1e-3)
MIN_TAIL_SAMPLES = 10
# a log-linear fit this far from a straight line is not an exponential tail
MIN_TAIL_RSQUARED = 0.98


@dataclass(frozen=True)
class GuidingState:
    t: float
    u: Field1D
    v: tuple[Field1D, ...]

    @property
    def grid(self) -> MacroGrid:
        return self.u.grid


@dataclass(frozen=True)
class GuidingPulse:
    """Settled co-moving profile.  z = 0 sits at the activator maximum; the
    wave moves leftward in the lab frame with speed c >= 0.

    sigma is None when the window has no credible exponential tail to fit
    — that is the expected outcome on a short window where the pulse has
    wrapped into a periodic wave and the far field is its own slow wake."""

    c: float
    u: Field1D
    v: tuple[Field1D, ...]
    sigma: float | None
    settle_residual: float

    @property
    def grid(self) -> MacroGrid:
        return self.u.grid

    @property
    def m(self) -> int:
        return len(self.v)


def seed_bump(grid: MacroGrid, m: int, center: float, width: float,
              height: float, preload: float = 0.0) -> GuidingState:
    """Gaussian activator bump, optionally shielded on the right.

    With preload > 0 the first inhibitor is preloaded ahead of the
    rightward front (a smoothed step centered at center + 2*width), so only
    the leftward front survives and a single left-moving pulse forms.
    """
    x = grid.x
    u = height * np.exp(-(((x - center) / width) ** 2))
    v = [np.zeros(grid.n_x) for _ in range(m)]
    if preload > 0.0 and m > 0:
        v[0] = preload * 0.5 * (1.0 + np.tanh((x - center - 2 * width) / width))
    return GuidingState(0.0, Field1D(grid, u),
                        tuple(Field1D(grid, vi) for vi in v))


def step_guiding(state: GuidingState, params: GuidingParams,
                 nonlinearity: CubicNonlinearity, dt: float,
                 blowup_ceiling: float = 10.0) -> GuidingState:
    """One semi-implicit Euler step; raises BlowUp above the ceiling."""
    u = state.u.values
    forcing = nonlinearity(u).copy()
    for a_i, v_i in zip(params.alpha_i, state.v):
        forcing -= a_i * v_i.values
    u_new = implicit_diffusion_solve(
        Field1D(state.grid, u + dt * forcing), dt, 1.0)
    v_new = tuple(
        Field1D(state.grid, v_i.values + dt * (-l_i * v_i.values + b_i * u))
        for l_i, b_i, v_i in zip(params.lambda_i, params.beta_i, state.v))
    new = GuidingState(state.t + dt, u_new, v_new)
    sup = max(np.max(np.abs(u_new.values)),
              max((np.max(np.abs(f.values)) for f in v_new), default=0.0))
    if not sup <= blowup_ceiling:  # NaN-safe comparison
        raise BlowUp(f"guiding state reached sup norm {sup:.3g} at t={new.t:.6g}")
    return new


def peak_position(f: Field1D) -> float:
    """Continuous peak location by a 3-point parabola through the argmax."""
    v = f.values
    j = int(np.argmax(v))
    left, mid, right = v[j - 1], v[j], v[(j + 1) % f.grid.n_x]
    denom = left - 2.0 * mid + right
    frac = 0.0 if denom == 0.0 else 0.5 * (left - right) / denom
    frac = float(np.clip(frac, -0.5, 0.5))
    return float(f.grid.x[0] + (j + frac) * f.grid.dx)


def fourier_shift(values: np.ndarray, shift: float, half_length: float) -> np.ndarray:
    """values(. + shift) by phase rotation in Fourier space."""
    n = values.shape[-1]
    k = np.pi * np.arange(n // 2 + 1) / half_length
    spec = np.fft.rfft(values, axis=-1) * np.exp(1j * k * shift)
    return np.fft.irfft(spec, n=n, axis=-1)


def _recenter(state: GuidingState) -> GuidingState:
    """Translate the state so the activator peak sits at z = 0 (sub-cell)."""
    grid = state.grid
    shift = peak_position(state.u)  # u(. + shift) puts the peak at 0
    roll = int(round(shift / grid.dx))
    frac = shift - roll * grid.dx
    fields = [state.u.values] + [f.values for f in state.v]
    out = []
    for vals in fields:
        vals = np.roll(vals, -roll)
        if frac != 0.0:
            vals = fourier_shift(vals, frac, grid.half_length)
        out.append(vals)
    return GuidingState(state.t, Field1D(grid, out[0]),
                        tuple(Field1D(grid, v) for v in out[1:]))


def _aligned_drift(a: GuidingState, b: GuidingState) -> float:
    """Sup-norm distance between two recentered states after removing the
    residual sub-cell translation (least-squares against the profile slope)."""
    grid = a.grid
    du = b.u.values - a.u.values
    slope = np.gradient(b.u.values, grid.dx)
    denom = float(np.dot(slope, slope))
    s = 0.0 if denom == 0.0 else float(np.dot(du, slope)) / denom
    s = float(np.clip(s, -grid.dx, grid.dx))
    drift = 0.0
    for fa, fb in zip([a.u, *a.v], [b.u, *b.v]):
        shifted = fourier_shift(fb.values, s, grid.half_length) if s else fb.values
        drift = max(drift, float(np.max(np.abs(shifted - fa.values))))
    return drift


def wave_speed(history: list[GuidingState], fit_fraction: float = 0.5) -> float:
    """Leftward speed from a least-squares fit of unwrapped peak positions."""
    if len(history) < 3:
        raise ValueError("need at least three observations to fit a speed")
    t = np.array([s.t for s in history])
    pos = np.array([peak_position(s.u) for s in history])
    pos = np.unwrap(pos, period=2 * history[0].grid.half_length)
    start = int(len(t) * (1.0 - fit_fraction))
    slope = np.polyfit(t[start:], pos[start:], 1)[0]
    return -float(slope)


def _tail_rate(z: np.ndarray, absu: np.ndarray, band=SIGMA_BAND) -> float | None:
    """Decay rate of one tail from a log-linear fit.

    Arrays are ordered peak -> outward.  The fit anchors at the quietest
    sample of the side and walks back toward the peak, collecting the
    contiguous run inside the band; whatever lies beyond the quiet point
    (seed remnants, an old wake, the window seam) never contaminates it.
    """
    lo, hi = band
    sel = []
    for idx in range(int(np.argmin(absu)), -1, -1):
        a = absu[idx]
        if a <= lo:
            if sel:
                break
            continue  # still in the far field
        if a >= hi:
            break
        sel.append(idx)
    if len(sel) < MIN_TAIL_SAMPLES:
        return None
    sel = np.array(sel)
    zz, yy = z[sel], np.log(absu[sel])
    coef = np.polyfit(zz, yy, 1)
    scatter = yy - np.polyval(coef, zz)
    spread = yy - np.mean(yy)
    r_squared = 1.0 - np.dot(scatter, scatter) / np.dot(spread, spread)
    if r_squared < MIN_TAIL_RSQUARED:
        return None  # not an exponential stretch (e.g. a wrapped wake ramp)
    rate = -float(coef[0])
    return rate if rate > 0 else None


def _side_rates(values: np.ndarray, x: np.ndarray, band) -> list[float]:
    half = len(values) // 2
    absu = np.abs(values)
    rates = []
    for z_out, a_out in ((-x[half::-1], absu[half::-1]),  # leading (z < 0)
                         (x[half:], absu[half:])):        # trailing (z > 0)
        r = _tail_rate(z_out, a_out, band)
        if r is not None:
            rates.append(r)
    return rates


def tail_decay_rate(profile: Field1D, band=SIGMA_BAND) -> float:
    """Exponential decay rate of the profile away from its peak (z = 0
    after recentering).  Each side is fitted separately and the slower rate
    wins.  On a window whose far field is a nonzero constant (the pulse
    has wrapped into a periodic wave, or an inhibitor preload never
    decayed) the band is applied to |u - u(-L)| instead, so the fit reads
    the approach toward the actual background.  Raises TailTooShort when
    neither side has enough samples either way."""
    x = profile.grid.x
    rates = _side_rates(profile.values, x, band)
    if not rates:
        rates = _side_rates(profile.values - profile.values[0], x, band)
    if not rates:
        raise TailTooShort(
            f"no tail with >= {MIN_TAIL_SAMPLES} samples in |u| band {band}, "
            "absolute or relative to the window-end value")
    return min(rates)


def extract_pulse(history: list[GuidingState], *,
                  settle_tol: float = SETTLE_TOL,
                  pulse_floor: float = PULSE_FLOOR,
                  boundary_tol: float = BOUNDARY_TOL,
                  fit_fraction: float = 0.5) -> GuidingPulse:
    """Settled traveling profile from an observed trajectory.

    The last two observations, recentered on the activator peak, bound the
    co-moving shape drift; the speed comes from the peak track.  Tolerances
    are arguments because small windows cannot reach the strict defaults:
    the slow inhibitor wake decays like exp(-lambda_1 z / c), so only a
    window longer than the wake admits near-zero boundary values.
    """
    if len(history) < 3:
        raise ValueError("need at least three observations")
    last = history[-1]
    if float(np.max(last.u.values)) < pulse_floor:
        raise NoPulse(
            f"activator maximum {float(np.max(last.u.values)):.3g} below the "
            f"pulse floor {pulse_floor}")

    c = wave_speed(history, fit_fraction)
    if c < -1e-6:
        raise NoPulse("profile travels rightward; reseed with a leftward bias")
    c = max(c, 0.0)
    if c < 1e-6:
        c = 0.0

    a, b = _recenter(history[-2]), _recenter(last)
    dt_obs = last.t - history[-2].t
    residual = _aligned_drift(a, b) / dt_obs
    if residual > settle_tol:
        raise NotSettled(
            f"co-moving drift {residual:.3e} per unit time exceeds "
            f"{settle_tol:.1e}; run longer or widen the window")

    edge = max(abs(b.u.values[0]), abs(b.u.values[-1]))
    if edge > boundary_tol:
        raise NoPulse(
            f"|u| = {edge:.3e} at the window ends (tolerance {boundary_tol:.1e}); "
            "the window does not contain the localized profile")

    try:
        sigma = tail_decay_rate(b.u)
    except TailTooShort:
        sigma = None
    return GuidingPulse(c=c, u=b.u, v=b.v, sigma=sigma,
                        settle_residual=residual)
