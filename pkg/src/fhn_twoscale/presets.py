"""Named coefficient presets and the run protocols built on them.

Three presets cover the supported coefficient families plus the refusal
case:

  ex1-two-sines   two sine eigencomponents in alpha, constant b = d = 1e-4;
                  the workhorse preset for convergence and stability runs.
  ex2-step        piecewise-constant alpha of unit modulus, d = 0, tiny
                  constant b; admits an exact single-mode reduction.
  ex3-contspec    constant alpha, oscillating b, d = 0: the cell operator
                  has no discrete eigenbasis and must be refused, while the
                  direct simulator still runs it.

Grid defaults come in two scales: `desk` fits in laptop minutes, `paper`
reproduces the original resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedOperator
from .fields import CellGrid
from .microcell import (CoefficientSet, CubicNonlinearity, GuidingParams,
                        decompose, guiding_params)

DELTA_EX1 = 1e-4
B0_EX2 = 1e-5
ALPHA_STEP_AT = 0.7


def _ex1_alpha(y):
    y = np.asarray(y, dtype=float)
    return np.sqrt(2.0) * (np.sin(2 * np.pi * y) + np.sin(4 * np.pi * y))


def _ex1_beta(y):
    y = np.asarray(y, dtype=float)
    return 1e-3 * (_ex1_alpha(y) + np.sqrt(2.0) * np.sin(8 * np.pi * y))


def _ex2_alpha(y):
    y = np.asarray(y, dtype=float) % 1.0
    return np.where(y < ALPHA_STEP_AT, 1.0, -1.0)


def _ex2_beta(y):
    return 3e-3 * _ex2_alpha(y)


def _ex3_b(y):
    y = np.asarray(y, dtype=float)
    return 1e-3 * (5.0 + 3.0 * np.sin(2 * np.pi * y))


def _const(value):
    def f(y):
        return np.full_like(np.asarray(y, dtype=float), value)
    return f


@dataclass(frozen=True)
class GridScale:
    half_length: float
    n_x: int
    n_y: int


@dataclass(frozen=True)
class SeedProtocol:
    """How to ignite a single leftward pulse in the guiding system."""

    center: float
    width: float
    height: float
    preload: float


@dataclass(frozen=True)
class ExtractionProtocol:
    """Window, horizon and tolerances for settling a guiding pulse.

    The wide ex1 window is sized so the slow inhibitor wake neither wraps
    around the domain nor reaches the window ends within the horizon; the
    desk windows settle onto the periodic traveling wave of the small
    domain instead, with correspondingly relaxed boundary tolerances.
    """

    half_length: float
    n_x: int
    t_end: float
    observe_every_time: float
    seed: SeedProtocol
    settle_tol: float = 1e-5
    boundary_tol: float = 1e-6
    fit_fraction: float = 0.5


@dataclass(frozen=True)
class Preset:
    name: str
    coefficients: CoefficientSet
    desk: GridScale
    paper: GridScale
    epsilons: tuple[float, ...]
    extraction: ExtractionProtocol
    wide_extraction: ExtractionProtocol | None = None
    # m = 1 fallback used when decompose() refuses the operator
    fallback_beta1: float | None = None
    fallback_lambda1: float | None = None


_CUBIC = CubicNonlinearity(a=0.15, scale=1.0)

_EX1_SEED = SeedProtocol(center=50.0, width=8.0, height=0.8, preload=0.15)
_EX1_WIDE_SEED = SeedProtocol(center=400.0, width=8.0, height=0.8, preload=0.15)

EX1 = Preset(
    name="ex1-two-sines",
    coefficients=CoefficientSet(
        alpha=_ex1_alpha, beta=_ex1_beta,
        b=_const(DELTA_EX1), d=_const(DELTA_EX1),
        nonlinearity=_CUBIC),
    desk=GridScale(150.0, 4096, 128),
    paper=GridScale(300.0, 16384, 512),
    epsilons=(16.0, 8.0, 4.0, 2.0),
    # On the desk window the pulse laps the domain and settles onto the
    # periodic traveling wave; its own wake is the far field, hence the
    # loose boundary tolerance.  Settle decays at the slow inhibitor rate,
    # reaching ~1e-6 by t = 2600.
    extraction=ExtractionProtocol(
        half_length=150.0, n_x=4096, t_end=2600.0, observe_every_time=10.0,
        seed=_EX1_SEED, boundary_tol=0.1),
    # The wide window is sized so the strict defaults hold.  Two slow
    # transients set the horizon: the ignition remnant (the stalled
    # rightward front, parked near x = 416 where u ~ 0) decays at the bare
    # inhibitor rate lambda_1 ~ 0.004, and the co-moving shape drift decays
    # ever more slowly (measured 1.1e-5 at t=1800, 7.9e-6 at t=2400, so the
    # strict 1e-5 needs t_end past ~2200).  The window keeps the pulse (at
    # 400 - c*t ~ -736 at t_end, c = 0.47327) well clear of the seam: the
    # leading tail drops at rate ~0.70 over the remaining ~310 units, and
    # the measured seam value decays to |u| ~ 2e-8 by t_end.
    # dx matches the desk grid exactly: 2100/28672 = 300/4096 = 75/1024.
    wide_extraction=ExtractionProtocol(
        half_length=1050.0, n_x=28672, t_end=2400.0, observe_every_time=10.0,
        seed=_EX1_WIDE_SEED),
)

EX2 = Preset(
    name="ex2-step",
    coefficients=CoefficientSet(
        alpha=_ex2_alpha, beta=_ex2_beta,
        b=_const(B0_EX2), d=_const(0.0),
        nonlinearity=_CUBIC),
    # n_y a multiple of 10 so the rectangle rule hits the step at 0.7
    # exactly and the cell mean of alpha is exactly 2*0.7 - 1 = 0.4
    desk=GridScale(150.0, 4096, 160),
    paper=GridScale(300.0, 16384, 640),
    epsilons=(25.0, 5.0),
    # The wake edge keeps sweeping backward at speed c (recovery time
    # ~a/beta = 50 here), so the co-moving drift plateaus near 1e-2 and the
    # seam sits on the preload plateau: both tolerances are honest
    # measurements of that state, not of an unsettled run.
    extraction=ExtractionProtocol(
        half_length=150.0, n_x=4096, t_end=280.0, observe_every_time=10.0,
        seed=_EX1_SEED, settle_tol=2e-2, boundary_tol=0.5),
)

EX3 = Preset(
    name="ex3-contspec",
    coefficients=CoefficientSet(
        alpha=_const(1.0), beta=_const(3e-3),
        b=_ex3_b, d=_const(0.0),
        nonlinearity=_CUBIC, zero_spectrum_excluded=True),
    desk=GridScale(150.0, 4096, 128),
    paper=GridScale(700.0, 32768, 128),
    epsilons=(30.0, 3.0),
    # recovery rate lambda_1 + beta_1/a = 0.025: both the preload residue
    # and the oldest wake are far below 1e-6 by t_end on this window, so
    # the strict defaults hold.
    extraction=ExtractionProtocol(
        half_length=700.0, n_x=32768, t_end=1400.0, observe_every_time=20.0,
        seed=SeedProtocol(center=300.0, width=8.0, height=0.8, preload=0.15)),
    fallback_beta1=3e-3,
    fallback_lambda1=5e-3,
)

PRESETS: dict[str, Preset] = {p.name: p for p in (EX1, EX2, EX3)}


def guiding_parameters(preset: Preset, n_y: int | None = None) -> GuidingParams:
    """Guiding-system parameters for a preset.

    Uses the eigendecomposition of the cell operator when one exists.  A
    preset with pinned surrogate values (the continuous-spectrum case,
    where decompose refuses) falls back to a single mode with alpha_1 = 1
    and the pinned (beta_1, lambda_1)."""
    cell = CellGrid(n_y if n_y is not None else preset.desk.n_y)
    try:
        return guiding_params(decompose(preset.coefficients, cell),
                              preset.coefficients)
    except UnsupportedOperator:
        if preset.fallback_beta1 is None or preset.fallback_lambda1 is None:
            raise
        return GuidingParams(
            alpha_i=(1.0,), beta_i=(preset.fallback_beta1,),
            lambda_i=(preset.fallback_lambda1,), beta_plus_norm=0.0)


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise KeyError(f"unknown preset {name!r}; known presets: {known}") from None
