"""Session fixtures for the heavy experiment protocols.

The acceptance tests drive full protocols (long guiding settles, epsilon
sweeps, two-scale trajectories).  Each protocol result is reduced to small
arrays and cached on disk under ``.cache/`` at the repository root, keyed
by the complete protocol parameters — editing a protocol invalidates its
entry automatically.  Delete ``.cache/`` to force a cold rebuild; the
recorded ``elapsed`` seconds always refer to the cold run that produced
the entry.
"""
from __future__ import annotations

import hashlib
import time
from pathlib import Path

import numpy as np
import pytest

from fhn_twoscale.fields import (CellGrid, Field1D, MacroGrid, TwoScaleField,
                                 cell_quadrature)
from fhn_twoscale.guiding import GuidingPulse, extract_pulse, seed_bump, step_guiding
from fhn_twoscale.microcell import decompose
from fhn_twoscale.presets import ExtractionProtocol, Preset, get_preset, guiding_parameters
from fhn_twoscale.pulse import assemble
from fhn_twoscale.simulate import (EpsState, SolverConfig, TwoScaleState,
                                   freeze_cell_coefficients,
                                   freeze_eps_coefficients, run, step_eps,
                                   step_twoscale)
from fhn_twoscale.verify import (error_sample, reconstruct,
                                 stability_experiment, sweep_error)

CACHE_DIR = Path(__file__).resolve().parent.parent / ".cache"
CACHE_SALT = "v1"  # bump to invalidate every cached protocol at once

DT = 0.01
OBSERVE = 10.0

SWEEP_T_END = 100.0           # epsilon sweeps and twin runs
STABILITY_DELTA = 0.01
STABILITY_T_END = 200.0
STABILITY_OBSERVE = 5.0
PAPER_RUN_EPS = 30.0          # direct run on the paper-sized window
PAPER_RUN_T_END = 600.0


def _payload(*parts) -> str:
    return "|".join(repr(p) for p in parts)


def _cached(tag: str, payload: str, builder):
    digest = hashlib.sha256(f"{CACHE_SALT}|{payload}".encode()).hexdigest()[:16]
    path = CACHE_DIR / f"{tag}-{digest}.npz"
    if path.exists():
        with np.load(path) as data:
            return {key: data[key] for key in data.files}
    start = time.perf_counter()
    out = builder()
    out["elapsed"] = np.float64(time.perf_counter() - start)
    CACHE_DIR.mkdir(exist_ok=True)
    np.savez(path, **out)
    return out


def _sup(*arrays) -> float:
    return max(float(np.max(np.abs(a))) for a in arrays)


# --------------------------------------------------------------------------
# guiding-pulse settles
# --------------------------------------------------------------------------

def _settle(preset: Preset, proto: ExtractionProtocol) -> GuidingPulse:
    params = guiding_parameters(preset)
    grid = MacroGrid(proto.half_length, proto.n_x)
    s = proto.seed
    initial = seed_bump(grid, params.m, s.center, s.width, s.height, s.preload)
    f = preset.coefficients.nonlinearity
    history = run(initial, lambda st: step_guiding(st, params, f, DT),
                  proto.t_end, dt=DT,
                  observe_every_time=proto.observe_every_time)
    return extract_pulse(history, settle_tol=proto.settle_tol,
                         boundary_tol=proto.boundary_tol,
                         fit_fraction=proto.fit_fraction)


def _pulse_arrays(pulse: GuidingPulse) -> dict:
    return {
        "u": pulse.u.values,
        "v": np.stack([f.values for f in pulse.v]),
        "c": np.float64(pulse.c),
        "sigma": np.float64(np.nan if pulse.sigma is None else pulse.sigma),
        "settle": np.float64(pulse.settle_residual),
    }


def _pulse_from_arrays(data: dict, proto: ExtractionProtocol) -> GuidingPulse:
    grid = MacroGrid(proto.half_length, proto.n_x)
    sigma = float(data["sigma"])
    return GuidingPulse(
        c=float(data["c"]),
        u=Field1D(grid, np.asarray(data["u"])),
        v=tuple(Field1D(grid, np.asarray(row)) for row in data["v"]),
        sigma=None if np.isnan(sigma) else sigma,
        settle_residual=float(data["settle"]))


def _pulse_fixture(preset_name: str, proto: ExtractionProtocol, tag: str):
    preset = get_preset(preset_name)
    payload = _payload(preset_name, proto, DT, preset.desk.n_y)
    data = _cached(tag, payload, lambda: _pulse_arrays(_settle(preset, proto)))
    pulse = _pulse_from_arrays(data, proto)
    return pulse, float(data["elapsed"])


@pytest.fixture(scope="session")
def wide_pulse():
    """ex1 guiding pulse settled on the wide window with strict tolerances."""
    preset = get_preset("ex1-two-sines")
    pulse, _ = _pulse_fixture(preset.name, preset.wide_extraction, "wide-pulse")
    return pulse


@pytest.fixture(scope="session")
def desk_pulse():
    """ex1 guiding pulse settled on the desk window (periodic wave)."""
    preset = get_preset("ex1-two-sines")
    pulse, _ = _pulse_fixture(preset.name, preset.extraction, "desk-pulse")
    return pulse


@pytest.fixture(scope="session")
def wide_assembled(wide_pulse):
    preset = get_preset("ex1-two-sines")
    decomp = decompose(preset.coefficients, CellGrid(preset.desk.n_y))
    return assemble(wide_pulse, decomp, preset.coefficients)


@pytest.fixture(scope="session")
def desk_assembled(desk_pulse):
    preset = get_preset("ex1-two-sines")
    decomp = decompose(preset.coefficients, CellGrid(preset.desk.n_y))
    return assemble(desk_pulse, decomp, preset.coefficients)


# --------------------------------------------------------------------------
# epsilon sweep against the two-scale limit (ex1)
# --------------------------------------------------------------------------

@pytest.fixture(scope="session")
def sweep_data(desk_assembled):
    """ex1 epsilon sweep from the assembled pulse, with the limit run.

    errors[i, j] holds (u_l2, u_linf, v_l2, v_linf, u_gradient_l2,
    v_gradient_l2, total_l2) for epsilon i at observation j, and
    combined[i] is the sweep_error functional of trajectory i.  The
    cell-average reduction of the limit trajectory (largest |cell mean
    of V| anywhere, largest |V|) is included, as are sup norms for the
    growth-bound gate.
    """
    preset = get_preset("ex1-two-sines")

    def build():
        coeffs = preset.coefficients
        grid = desk_assembled.u.grid
        cell = desk_assembled.v.cell
        cfg = SolverConfig(dt=DT)
        frozen_cell = freeze_cell_coefficients(coeffs, cell)
        limit0 = TwoScaleState(0.0, desk_assembled.u, desk_assembled.v)
        limit_hist = run(
            limit0, lambda s: step_twoscale(s, frozen_cell, coeffs, cfg),
            SWEEP_T_END, dt=DT, observe_every_time=OBSERVE)

        vbar_max = max(
            float(np.max(np.abs(cell_quadrature(cell, st.v.values, axis=1))))
            for st in limit_hist)
        v_max = max(float(np.max(np.abs(st.v.values))) for st in limit_hist)
        times = np.array([st.t for st in limit_hist])
        limit_sups = np.array(
            [_sup(st.u.values, st.v.values) for st in limit_hist])

        n_eps, n_obs = len(preset.epsilons), len(limit_hist)
        errors = np.empty((n_eps, n_obs, 7))
        sups = np.empty((n_eps, n_obs))
        combined = np.empty(n_eps)
        for i, eps in enumerate(preset.epsilons):
            frozen = freeze_eps_coefficients(coeffs, grid, eps)
            initial = EpsState(0.0, desk_assembled.u,
                               reconstruct(desk_assembled.v, eps))
            hist = run(initial, lambda s: step_eps(s, frozen, coeffs, cfg),
                       SWEEP_T_END, dt=DT, observe_every_time=OBSERVE)
            samples = [error_sample(direct, limit, eps)
                       for direct, limit in zip(hist, limit_hist)]
            for j, smp in enumerate(samples):
                errors[i, j] = (smp.u.l2, smp.u.linf, smp.v.l2, smp.v.linf,
                                smp.u_gradient_l2, smp.v_gradient_l2,
                                smp.u.l2 + smp.v.l2)
                sups[i, j] = _sup(hist[j].u.values, hist[j].v.values)
            combined[i] = sweep_error(times, samples)
        return {"eps": np.array(preset.epsilons), "times": times,
                "errors": errors, "combined": combined, "sups": sups,
                "limit_sups": limit_sups, "vbar_max": np.float64(vbar_max),
                "v_max": np.float64(v_max)}

    payload = _payload("sweep", preset.name, preset.extraction, preset.desk,
                       preset.epsilons, SWEEP_T_END, OBSERVE, DT,
                       "columns=u_l2,u_linf,v_l2,v_linf,u_grad,v_grad,total"
                       ";combined=sweep_error")
    return _cached("sweep-ex1", payload, build)


# --------------------------------------------------------------------------
# rank-one preset: epsilon independence and cell-average identity (ex2)
# --------------------------------------------------------------------------

def _ignition(preset: Preset, grid: MacroGrid, cell: CellGrid):
    """Bump ignition with the inhibitor preloaded along alpha.

    The preload wall is scaled by 1/<alpha^2> so the projection onto the
    first guided direction matches the plain guiding-system seed.
    """
    s = preset.extraction.seed
    base = seed_bump(grid, 1, s.center, s.width, s.height, s.preload)
    alpha_y = np.asarray(preset.coefficients.alpha(cell.y), dtype=float)
    alpha_sq = float(cell_quadrature(cell, alpha_y ** 2))
    wall = base.v[0].values / alpha_sq
    return base, wall, alpha_y


@pytest.fixture(scope="session")
def pair_data():
    """ex2 direct runs at both preset epsilons from the exact rank-one data."""
    preset = get_preset("ex2-step")

    def build():
        coeffs = preset.coefficients
        grid = MacroGrid(preset.desk.half_length, preset.desk.n_x)
        cell = CellGrid(preset.desk.n_y)
        base, wall, _ = _ignition(preset, grid, cell)
        cfg = SolverConfig(dt=DT)
        histories = []
        for eps in preset.epsilons:
            frozen = freeze_eps_coefficients(coeffs, grid, eps)
            initial = EpsState(0.0, base.u, Field1D(grid, wall * frozen.alpha))
            histories.append(
                run(initial, lambda s: step_eps(s, frozen, coeffs, cfg),
                    SWEEP_T_END, dt=DT, observe_every_time=OBSERVE))
        first, second = histories
        times = np.array([st.t for st in first])
        u_diff = np.array([_sup(a.u.values - b.u.values)
                           for a, b in zip(first, second)])
        sups = np.stack([[_sup(st.u.values, st.v.values) for st in h]
                         for h in histories])
        return {"times": times, "u_diff": u_diff, "sups": sups,
                "eps": np.array(preset.epsilons)}

    payload = _payload("pair", preset.name, preset.desk, preset.epsilons,
                       preset.extraction.seed, SWEEP_T_END, OBSERVE, DT)
    return _cached("pair-ex2", payload, build)


@pytest.fixture(scope="session")
def twin_data():
    """ex2 two-scale run beside the guiding run it should shadow exactly."""
    preset = get_preset("ex2-step")

    def build():
        coeffs = preset.coefficients
        grid = MacroGrid(preset.desk.half_length, preset.desk.n_x)
        cell = CellGrid(preset.desk.n_y)
        base, wall, alpha_y = _ignition(preset, grid, cell)
        params = guiding_parameters(preset)
        f = coeffs.nonlinearity
        guiding_hist = run(base, lambda st: step_guiding(st, params, f, DT),
                           SWEEP_T_END, dt=DT, observe_every_time=OBSERVE)

        v0 = TwoScaleField(grid, cell, wall[:, None] * alpha_y[None, :])
        frozen_cell = freeze_cell_coefficients(coeffs, cell)
        cfg = SolverConfig(dt=DT)
        two_hist = run(TwoScaleState(0.0, base.u, v0),
                       lambda s: step_twoscale(s, frozen_cell, coeffs, cfg),
                       SWEEP_T_END, dt=DT, observe_every_time=OBSERVE)

        alpha_mean = float(cell_quadrature(cell, alpha_y))
        times = np.array([st.t for st in two_hist])
        diffs = np.array([
            _sup(cell_quadrature(cell, ts.v.values, axis=1)
                 - alpha_mean * gs.v[0].values)
            for ts, gs in zip(two_hist, guiding_hist)])
        sups = np.array([_sup(st.u.values, st.v.values) for st in two_hist])
        return {"times": times, "diffs": diffs, "sups": sups,
                "alpha_mean": np.float64(alpha_mean)}

    payload = _payload("twin", preset.name, preset.desk,
                       preset.extraction.seed, SWEEP_T_END, OBSERVE, DT)
    return _cached("twin-ex2", payload, build)


# --------------------------------------------------------------------------
# pulse stability under a small perturbation (ex1 desk)
# --------------------------------------------------------------------------

@pytest.fixture(scope="session")
def stability_data(desk_pulse):
    preset = get_preset("ex1-two-sines")

    def build():
        params = guiding_parameters(preset)
        report = stability_experiment(
            desk_pulse, params, preset.coefficients.nonlinearity,
            delta=STABILITY_DELTA, t_end=STABILITY_T_END, dt=DT,
            observe_every=STABILITY_OBSERVE)
        return {"times": report.times, "distances": report.distances,
                "kappa": np.float64(report.kappa),
                "r_squared": np.float64(report.r_squared)}

    payload = _payload("stability", preset.name, preset.extraction,
                       preset.desk.n_y, STABILITY_DELTA, STABILITY_T_END,
                       STABILITY_OBSERVE, DT)
    return _cached("stability-ex1", payload, build)


# --------------------------------------------------------------------------
# long direct run on the paper-sized window (ex3)
# --------------------------------------------------------------------------

@pytest.fixture(scope="session")
def paper_run_data():
    preset = get_preset("ex3-contspec")

    def build():
        coeffs = preset.coefficients
        grid = MacroGrid(preset.paper.half_length, preset.paper.n_x)
        cell = CellGrid(preset.paper.n_y)
        base, wall, _ = _ignition(preset, grid, cell)
        frozen = freeze_eps_coefficients(coeffs, grid, PAPER_RUN_EPS)
        cfg = SolverConfig(dt=DT)
        initial = EpsState(0.0, base.u, Field1D(grid, wall * frozen.alpha))
        hist = run(initial, lambda s: step_eps(s, frozen, coeffs, cfg),
                   PAPER_RUN_T_END, dt=DT, observe_every_time=OBSERVE)
        times = np.array([st.t for st in hist])
        max_u = np.array([float(np.max(st.u.values)) for st in hist])
        sups = np.array([_sup(st.u.values, st.v.values) for st in hist])
        return {"times": times, "max_u": max_u, "sups": sups}

    payload = _payload("paper-run", preset.name, preset.paper,
                       preset.extraction.seed, PAPER_RUN_EPS,
                       PAPER_RUN_T_END, OBSERVE, DT)
    return _cached("paper-ex3", payload, build)
