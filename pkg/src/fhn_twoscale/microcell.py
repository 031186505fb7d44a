"""The microscopic cell operator L = -(d phi')' + b phi on the unit circle.

Two coefficient families admit an explicit eigenbasis and are supported by
`decompose`:

  (i)  d and b both constant and positive: trigonometric eigenfunctions
       {1, sqrt(2) sin(2 pi n y), sqrt(2) cos(2 pi n y)} with eigenvalues
       b0 + d0 (2 pi n)^2;
  (ii) d identically zero, b constant and positive: L = b0 * Id, so every
       direction is an eigendirection and the decomposition is organized
       around alpha itself.

Everything else (in particular non-constant b with d = 0, which has
essential spectrum) is refused with UnsupportedOperator.

The inhibitor coupling alpha is split into eigencomponents alpha_i with
norms alpha_i = ||alpha_i||; these, together with beta_i = (beta, alpha_i)
/ ||alpha_i|| and the eigenvalues lambda_i, are the parameters of the
guiding system.  The orthogonal complement of the guiding directions is
tracked by a finite list of guided modes (unit vectors) so that the part of
beta invisible to the guiding system can be propagated too.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import UnsupportedOperator
from .fields import CellGrid, cell_l2_norm, cell_quadrature

_CONST_TOL = 1e-12  # relative sample spread below which a coefficient is constant
_MODE_TOL = 1e-8    # relative mass below which an eigencomponent of alpha is noise


@dataclass(frozen=True)
class CubicNonlinearity:
    """f(u) = scale * u (1 - u) (u - a) with 0 < a < 1."""

    a: float = 0.15
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.a < 1.0:
            raise ValueError("a must lie in (0, 1)")
        if self.scale <= 0.0:
            raise ValueError("scale must be positive")

    def __call__(self, u):
        return self.scale * u * (1.0 - u) * (u - self.a)

    def growth_constants(self) -> tuple[float, float, float, float]:
        """(c1, c2, c3, c4) with f(u) >= c1 u - c2 for u <= 0 and
        f(u) <= c3 u + c4 for u >= 0.

        The cubic is nonnegative on u <= 0 (each factor pattern -,+,-), so
        c1 = c2 = 0.  On u >= 0 it is bounded by its interior maximum at
        the larger critical point of -3u^2 + 2(1+a)u - a, so c3 = 0 and c4
        is that maximum value.
        """
        s = 1.0 + self.a
        u_star = (s + np.sqrt(s * s - 3.0 * self.a)) / 3.0
        return (0.0, 0.0, 0.0, float(self(u_star)))


@dataclass(frozen=True)
class CoefficientSet:
    """1-periodic coefficients of the inhibitor block plus the nonlinearity.

    alpha, beta, b, d are vectorized callables of y.  d must be either
    uniformly positive or identically zero; `zero_spectrum_excluded` records
    the (unverified for general coefficients) claim that 0 is not in the
    spectrum of L.
    """

    alpha: Callable[[np.ndarray], np.ndarray]
    beta: Callable[[np.ndarray], np.ndarray]
    b: Callable[[np.ndarray], np.ndarray]
    d: Callable[[np.ndarray], np.ndarray]
    nonlinearity: CubicNonlinearity = field(default_factory=CubicNonlinearity)
    zero_spectrum_excluded: bool = True


@dataclass(frozen=True)
class CellMode:
    """One cell function with its eigenvalue.

    For guiding modes `values` holds the (unnormalized) eigencomponent of
    alpha and `norm` its L2(cell) norm; guided modes are unit vectors with
    norm 1.  `fn` is an analytic evaluator used where sampling on a foreign
    grid must avoid interpolation error; it may be None for data-defined
    modes.
    """

    label: str
    values: np.ndarray
    eigenvalue: float
    norm: float
    fn: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, y: np.ndarray) -> np.ndarray:
        if self.fn is None:
            raise ValueError(f"mode {self.label} has no analytic form")
        return self.fn(y)


@dataclass(frozen=True)
class EigenDecomposition:
    cell: CellGrid
    modes: tuple[CellMode, ...]          # eigencomponents of alpha
    guided_modes: tuple[CellMode, ...]   # orthonormal complement directions
    spectral_gap: tuple[float, float]    # (below 0, above 0); inf if empty side

    @property
    def m(self) -> int:
        return len(self.modes)


@dataclass(frozen=True)
class GuidingParams:
    """Scalar parameters the guiding system sees."""

    alpha_i: tuple[float, ...]
    beta_i: tuple[float, ...]
    lambda_i: tuple[float, ...]
    beta_plus_norm: float

    @property
    def m(self) -> int:
        return len(self.alpha_i)


def sample_coefficients(coeffs: CoefficientSet, cell: CellGrid):
    """Evaluate (alpha, beta, b, d) on the cell nodes."""
    y = cell.y
    out = []
    for name in ("alpha", "beta", "b", "d"):
        v = np.asarray(getattr(coeffs, name)(y), dtype=float)
        v = np.broadcast_to(v, y.shape).copy()
        if not np.all(np.isfinite(v)):
            raise ValueError(f"coefficient {name} is not finite on the cell")
        out.append(v)
    return tuple(out)


def _constant_value(samples: np.ndarray) -> float | None:
    """The common value if the samples are constant to relative tolerance."""
    lo, hi = float(np.min(samples)), float(np.max(samples))
    if hi - lo <= _CONST_TOL * max(1.0, abs(lo), abs(hi)):
        return 0.5 * (lo + hi)
    return None


def apply_cell_operator(coeffs: CoefficientSet, cell: CellGrid,
                        phi: np.ndarray) -> np.ndarray:
    """L phi = -(d phi')' + b phi by Fourier collocation in y."""
    phi = np.asarray(phi, dtype=float)
    _, _, b_s, d_s = sample_coefficients(coeffs, cell)
    k = cell.wavenumbers
    dphi = np.fft.irfft(1j * k * np.fft.rfft(phi, axis=-1), n=cell.n_y, axis=-1)
    flux = d_s * dphi
    dflux = np.fft.irfft(1j * k * np.fft.rfft(flux, axis=-1), n=cell.n_y, axis=-1)
    return -dflux + b_s * phi


def decompose(coeffs: CoefficientSet, cell: CellGrid,
              truncation: int = 16) -> EigenDecomposition:
    """Split alpha into eigencomponents of L and collect complement modes.

    `truncation` caps the number of guided (complement) modes retained.
    Raises UnsupportedOperator outside families (i) and (ii).
    """
    alpha_s, beta_s, b_s, d_s = sample_coefficients(coeffs, cell)
    b0 = _constant_value(b_s)
    d0 = _constant_value(d_s)

    if b0 is None or b0 <= 0.0:
        raise UnsupportedOperator(
            "cell operator has no explicit eigenbasis: b must be a positive "
            "constant (non-constant b with d = 0 has continuous spectrum)")
    if d0 is None:
        raise UnsupportedOperator(
            "cell operator with non-constant diffusion d is not supported")
    if d0 < 0.0:
        raise UnsupportedOperator("diffusion d must be nonnegative")

    if d0 == 0.0:
        return _decompose_multiplier(coeffs, cell, alpha_s, beta_s, b0, truncation)
    return _decompose_trig(coeffs, cell, alpha_s, beta_s, b0, d0, truncation)


def _decompose_multiplier(coeffs, cell, alpha_s, beta_s, b0, truncation):
    """Family (ii): L = b0 * Id.  alpha itself is the single guiding mode;
    the only complement direction that ever matters is the part of beta
    orthogonal to alpha."""
    a_norm = float(cell_l2_norm(cell, alpha_s))
    if a_norm <= _MODE_TOL:
        raise UnsupportedOperator("alpha vanishes; no guiding mode exists")
    mode = CellMode("alpha", alpha_s.copy(), b0, a_norm, fn=coeffs.alpha)

    guided: list[CellMode] = []
    proj = cell_quadrature(cell, beta_s * alpha_s) / a_norm ** 2
    beta_perp = beta_s - proj * alpha_s
    bp_norm = float(cell_l2_norm(cell, beta_perp))
    if bp_norm > _MODE_TOL * max(1.0, float(cell_l2_norm(cell, beta_s))) \
            and truncation >= 1:
        alpha_fn, beta_fn = coeffs.alpha, coeffs.beta

        def perp_fn(y, _p=proj, _n=bp_norm):
            return (beta_fn(y) - _p * alpha_fn(y)) / _n

        guided.append(CellMode("beta-perp", beta_perp / bp_norm, b0, 1.0,
                               fn=perp_fn))
    return EigenDecomposition(cell, (mode,), tuple(guided),
                              spectral_gap=(np.inf, b0))


def _trig_basis(cell: CellGrid, n: int):
    y = cell.y
    s = np.sqrt(2.0) * np.sin(2 * np.pi * n * y)
    c = np.sqrt(2.0) * np.cos(2 * np.pi * n * y)
    return s, c


def _decompose_trig(coeffs, cell, alpha_s, beta_s, b0, d0, truncation):
    """Family (i): constant coefficients, trigonometric eigenbasis."""
    a_norm2 = float(cell_quadrature(cell, alpha_s ** 2))
    if a_norm2 <= _MODE_TOL ** 2:
        raise UnsupportedOperator("alpha vanishes; no guiding mode exists")

    n_max = cell.n_y // 2 - 1  # strictly below Nyquist
    mean = float(cell_quadrature(cell, alpha_s))
    modes: list[CellMode] = []
    guided: list[CellMode] = []
    captured = 0.0

    def eig(n):
        return b0 + d0 * (2 * np.pi * n) ** 2

    # constant eigendirection
    if mean ** 2 > _MODE_TOL * a_norm2:
        modes.append(CellMode("mean", np.full(cell.n_y, mean), b0, abs(mean),
                              fn=lambda y, _m=mean: np.full_like(
                                  np.asarray(y, dtype=float), _m)))
        captured += mean ** 2
    else:
        guided.append(CellMode("const", np.ones(cell.n_y), b0, 1.0,
                               fn=lambda y: np.ones_like(
                                   np.asarray(y, dtype=float))))

    for n in range(1, n_max + 1):
        s_vals, c_vals = _trig_basis(cell, n)
        a_s = float(cell_quadrature(cell, alpha_s * s_vals))
        a_c = float(cell_quadrature(cell, alpha_s * c_vals))
        mass = a_s ** 2 + a_c ** 2
        lam = eig(n)
        if mass > _MODE_TOL * a_norm2:
            r = np.sqrt(mass)

            def comp_fn(y, _n=n, _as=a_s, _ac=a_c):
                y = np.asarray(y, dtype=float)
                return np.sqrt(2.0) * (_as * np.sin(2 * np.pi * _n * y)
                                       + _ac * np.cos(2 * np.pi * _n * y))

            modes.append(CellMode(f"trig-{n}", a_s * s_vals + a_c * c_vals,
                                  lam, r, fn=comp_fn))
            captured += mass

            def orth_fn(y, _n=n, _as=a_s, _ac=a_c, _r=r):
                y = np.asarray(y, dtype=float)
                return np.sqrt(2.0) * (-_ac * np.sin(2 * np.pi * _n * y)
                                       + _as * np.cos(2 * np.pi * _n * y)) / _r

            guided.append(CellMode(f"trig-{n}-orth",
                                   (-a_c * s_vals + a_s * c_vals) / r,
                                   lam, 1.0, fn=orth_fn))
        else:
            def sin_fn(y, _n=n):
                return np.sqrt(2.0) * np.sin(2 * np.pi * _n * np.asarray(y, dtype=float))

            def cos_fn(y, _n=n):
                return np.sqrt(2.0) * np.cos(2 * np.pi * _n * np.asarray(y, dtype=float))

            guided.append(CellMode(f"sin-{n}", s_vals, lam, 1.0, fn=sin_fn))
            guided.append(CellMode(f"cos-{n}", c_vals, lam, 1.0, fn=cos_fn))

    if captured < (1.0 - 1e-8) * a_norm2:
        raise UnsupportedOperator(
            "alpha is not a finite combination of resolvable eigenfunctions "
            f"(captured {captured:.3e} of {a_norm2:.3e})")
    _check_no_aliased_mass(coeffs.alpha, cell, a_norm2)

    guided.sort(key=lambda md: md.eigenvalue)
    guided = guided[:truncation]
    return EigenDecomposition(cell, tuple(modes), tuple(guided),
                              spectral_gap=(np.inf, b0))


def _check_no_aliased_mass(alpha_fn, cell: CellGrid, a_norm2: float):
    """Guard against harmonic content of alpha hidden by aliasing.

    Sampling folds modes above the Nyquist frequency onto lower ones, so the
    discrete projections alone cannot distinguish a finite eigenfunction sum
    from one with an unresolved tail.  Re-projecting on a doubled grid makes
    the difference visible: coefficients of a genuinely finite sum are
    grid-independent, while aliased content shifts them and deposits mass in
    the newly resolvable band.
    """
    probe = CellGrid(2 * cell.n_y)
    alpha_p = np.asarray(alpha_fn(probe.y), dtype=float)
    alpha_p = np.broadcast_to(alpha_p, probe.y.shape)
    spec = np.fft.rfft(alpha_p) / probe.n_y
    # quadrature masses per mode: 2|c_n|^2 for 0 < n < Nyquist
    mass = 2.0 * np.abs(spec) ** 2
    mass[0] = np.abs(spec[0]) ** 2
    mass[-1] = np.abs(spec[-1]) ** 2
    hidden = float(np.sum(mass[cell.n_y // 2:]))
    if hidden > _MODE_TOL * a_norm2:
        raise UnsupportedOperator(
            "alpha has harmonic content at or above the cell Nyquist "
            f"frequency (hidden mass {hidden:.3e}); refine n_y or supply a "
            "finite eigenfunction sum")


def guiding_params(decomp: EigenDecomposition, coeffs: CoefficientSet) -> GuidingParams:
    """Scalar parameters (alpha_i, beta_i, lambda_i) plus the norm of the
    part of beta not represented by guiding or guided modes."""
    cell = decomp.cell
    _, beta_s, _, _ = sample_coefficients(coeffs, cell)
    alpha_i, beta_i, lambda_i = [], [], []
    residual = beta_s.copy()
    for md in decomp.modes:
        alpha_i.append(md.norm)
        coef = float(cell_quadrature(cell, beta_s * md.values)) / md.norm
        beta_i.append(coef)
        residual -= coef * md.values / md.norm
        lambda_i.append(md.eigenvalue)
    for md in decomp.guided_modes:
        coef = float(cell_quadrature(cell, beta_s * md.values))
        residual -= coef * md.values
    return GuidingParams(tuple(alpha_i), tuple(beta_i), tuple(lambda_i),
                         beta_plus_norm=float(cell_l2_norm(cell, residual)))


def project(decomp: EigenDecomposition, phi: np.ndarray):
    """Coefficients of phi on guiding modes (normalized), guided modes, and
    the norm of what remains.

    Returns (guiding, guided, residual_norm); guiding[i] is the coefficient
    with respect to the unit vector modes[i].values / modes[i].norm.
    """
    cell = decomp.cell
    phi = np.asarray(phi, dtype=float)
    rest = phi.copy()
    guiding = []
    for md in decomp.modes:
        c = float(cell_quadrature(cell, phi * md.values)) / md.norm
        guiding.append(c)
        rest -= c * md.values / md.norm
    guided = []
    for md in decomp.guided_modes:
        c = float(cell_quadrature(cell, phi * md.values))
        guided.append(c)
        rest -= c * md.values
    return guiding, guided, float(cell_l2_norm(cell, rest))


def eigen_residuals(decomp: EigenDecomposition, coeffs: CoefficientSet) -> list[float]:
    """Relative residual ||L m - lambda m|| / ||m|| for every stored mode."""
    out = []
    for md in (*decomp.modes, *decomp.guided_modes):
        lhs = apply_cell_operator(coeffs, decomp.cell, md.values)
        num = float(cell_l2_norm(decomp.cell, lhs - md.eigenvalue * md.values))
        out.append(num / md.norm)
    return out
