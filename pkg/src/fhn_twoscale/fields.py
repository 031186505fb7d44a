"""Periodic grids, fields, norms and Fourier primitives.

All macroscopic functions live on a uniform periodic grid over [-L, L);
microscopic (cell) functions live on a uniform grid over the unit circle
[0, 1).  Quadrature is the rectangle rule throughout, which is spectrally
accurate for smooth periodic integrands.  Fourier transforms use the real
FFT with physical wavenumbers pi*k/L (macro) and 2*pi*k (cell).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GridMismatch


@dataclass(frozen=True)
class MacroGrid:
    """Uniform periodic grid on [-L, L) with n_x nodes."""

    half_length: float
    n_x: int

    def __post_init__(self):
        if self.half_length <= 0:
            raise ValueError("half_length must be positive")
        if self.n_x < 8 or self.n_x % 2:
            raise ValueError("n_x must be an even integer >= 8")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.n_x

    @cached_property
    def x(self) -> np.ndarray:
        return -self.half_length + self.dx * np.arange(self.n_x)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        # physical wavenumbers for rfft modes on a domain of length 2L
        return np.pi * np.arange(self.n_x // 2 + 1) / self.half_length


@dataclass(frozen=True)
class CellGrid:
    """Uniform grid on the unit circle [0, 1) with n_y nodes."""

    n_y: int

    def __post_init__(self):
        if self.n_y < 8 or self.n_y % 2:
            raise ValueError("n_y must be an even integer >= 8")

    @property
    def dy(self) -> float:
        return 1.0 / self.n_y

    @cached_property
    def y(self) -> np.ndarray:
        return self.dy * np.arange(self.n_y)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_y // 2 + 1)


@dataclass(frozen=True)
class Field1D:
    """Real scalar field sampled on a MacroGrid."""

    grid: MacroGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_x,):
            raise GridMismatch(
                f"field has shape {v.shape}, grid expects ({self.grid.n_x},)")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class TwoScaleField:
    """Field on the product of a MacroGrid and a CellGrid, shape (n_x, n_y)."""

    grid: MacroGrid
    cell: CellGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_x, self.cell.n_y):
            raise GridMismatch(
                f"field has shape {v.shape}, grids expect "
                f"({self.grid.n_x}, {self.cell.n_y})")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class NormReport:
    l2: float
    linf: float
    h1_dual: float | None = None


def same_grid(f: Field1D, g: Field1D) -> MacroGrid:
    if f.grid != g.grid:
        raise GridMismatch("fields live on different macro grids")
    return f.grid


def l2_norm(f: Field1D) -> float:
    """Rectangle-rule L2 norm, sqrt(dx * sum f^2)."""
    return float(np.sqrt(f.grid.dx * np.sum(f.values ** 2)))


def linf_norm(f: Field1D) -> float:
    return float(np.max(np.abs(f.values)))


def _mode_energies(f: Field1D) -> np.ndarray:
    """|f_hat_k|^2 per rfft mode, normalized so the sum equals l2_norm^2."""
    n = f.grid.n_x
    spec = np.fft.rfft(f.values)
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0  # Nyquist mode is unpaired for even n
    return w * np.abs(spec) ** 2 * f.grid.dx / n


def h1_dual_norm(f: Field1D) -> float:
    """Dual-norm proxy sqrt(sum |f_hat_k|^2 / (1 + k^2)).

    Coefficients are Parseval-normalized against l2_norm, so constants give
    |c|*sqrt(2L) and each mode is damped by its physical wavenumber.
    """
    k = f.grid.wavenumbers
    return float(np.sqrt(np.sum(_mode_energies(f) / (1.0 + k ** 2))))


def norm_report(f: Field1D, with_dual: bool = True) -> NormReport:
    return NormReport(l2=l2_norm(f), linf=linf_norm(f),
                      h1_dual=h1_dual_norm(f) if with_dual else None)


def spectral_derivative(f: Field1D) -> Field1D:
    """d/dx by Fourier collocation; the unpaired Nyquist mode is dropped."""
    spec = np.fft.rfft(f.values)
    spec *= 1j * f.grid.wavenumbers
    spec[-1] = 0.0
    return Field1D(f.grid, np.fft.irfft(spec, n=f.grid.n_x))


def implicit_diffusion_solve(rhs: Field1D, dt: float, diffusivity: float) -> Field1D:
    """Solve (I - dt*nu*d2/dx2) w = rhs exactly in Fourier space."""
    if dt * diffusivity < 0:
        raise ValueError("dt*diffusivity must be nonnegative")
    return Field1D(rhs.grid, _implicit_diffusion(
        rhs.values, dt * diffusivity, rhs.grid.wavenumbers))


def _implicit_diffusion(values: np.ndarray, nudt: float,
                        wavenumbers: np.ndarray, axis: int = -1) -> np.ndarray:
    """Array-level implicit heat solve along `axis` (used by the steppers)."""
    n = values.shape[axis]
    spec = np.fft.rfft(values, axis=axis)
    shape = [1] * spec.ndim
    shape[axis] = spec.shape[axis]
    spec /= 1.0 + nudt * (wavenumbers ** 2).reshape(shape)
    return np.fft.irfft(spec, n=n, axis=axis)


def cell_quadrature(cell: CellGrid, values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Integral over the unit cell by the rectangle rule."""
    return cell.dy * np.sum(values, axis=axis)


def cell_l2_norm(cell: CellGrid, values: np.ndarray, axis: int = -1) -> np.ndarray:
    return np.sqrt(cell.dy * np.sum(values ** 2, axis=axis))


def cell_average(field: TwoScaleField) -> Field1D:
    """Average of a two-scale field over the cell variable, as a macro field."""
    return Field1D(field.grid, cell_quadrature(field.cell, field.values, axis=1))


def cell_derivative(field: TwoScaleField) -> TwoScaleField:
    """d/dy by Fourier collocation in the cell; Nyquist mode dropped."""
    spec = np.fft.rfft(field.values, axis=1)
    spec *= 1j * field.cell.wavenumbers[None, :]
    spec[:, -1] = 0.0
    return TwoScaleField(field.grid, field.cell,
                         np.fft.irfft(spec, n=field.cell.n_y, axis=1))
