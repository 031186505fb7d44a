"""Command-line experiment runner.

Each invocation executes one experiment described by an INI file and writes
a deterministic artifact directory:

    manifest.txt    resolved configuration, library versions, wall time
    summary.csv     one row per check: name, value, bound, pass/fail
    *.csv           the experiment's data files (17 significant digits)

Exit status: 0 when every asserted check passes, 1 when one fails, and 2
when the experiment itself errors out (bad config, refused operator,
blow-up, no pulse).
"""

from __future__ import annotations

import argparse
import csv
import platform
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import ExperimentConfig, echo_config, load_config
from .errors import DegenerateFit, FhnTwoscaleError, UnsupportedOperator
from .fields import (CellGrid, Field1D, MacroGrid, TwoScaleField,
                     cell_average, cell_quadrature)
from .guiding import extract_pulse, peak_position, seed_bump, step_guiding
from .microcell import decompose, guiding_params
from .presets import guiding_parameters
from .pulse import assemble, comoving_residual, decay_report
from .simulate import (EpsState, TwoScaleState, freeze_cell_coefficients,
                       freeze_eps_coefficients, run, step_eps, step_twoscale)
from .verify import (check_dual_norm_lemma, error_sample, fit_rate,
                     growth_bound_check, reconstruct, stability_experiment,
                     sweep_error)

#: Fixed trace used by the dual-norm lemma check: a smooth localized
#: envelope times a mean-free cell oscillation.
def lemma_trace(x, y):
    return np.exp(-(x ** 2) / 100.0) * np.sin(2.0 * np.pi * y)


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


@dataclass
class Check:
    """One asserted or informational line of the run summary."""

    name: str
    value: float | str
    bound: str
    passed: bool | None  # None = informational, not asserted

    def row(self):
        status = "info" if self.passed is None else ("pass" if self.passed else "fail")
        return [self.name, _fmt(self.value), self.bound, status]


class Reporter:
    def __init__(self, quiet: bool):
        self.quiet = quiet
        self.checks: list[Check] = []

    def say(self, message: str) -> None:
        if not self.quiet:
            print(message, flush=True)

    def check(self, name: str, value, bound: str, passed: bool | None) -> None:
        self.checks.append(Check(name, value, bound, passed))
        status = "info" if passed is None else ("PASS" if passed else "FAIL")
        self.say(f"  [{status}] {name} = {_fmt(value)}  (bound: {bound})")

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks if c.passed is not None)


# --------------------------------------------------------------------------
# shared pipeline pieces
# --------------------------------------------------------------------------

def _guiding_setup(cfg: ExperimentConfig):
    """Guiding parameters plus (when the operator admits one) the cell
    eigendecomposition."""
    cell = CellGrid(cfg.grid.n_y)
    try:
        decomp = decompose(cfg.coefficients, cell)
    except UnsupportedOperator:
        if cfg.preset is None:
            raise
        # presets may pin surrogate (beta_1, lambda_1) values
        return guiding_parameters(cfg.preset, n_y=cfg.grid.n_y), None
    return guiding_params(decomp, cfg.coefficients), decomp


def _run_guiding(cfg: ExperimentConfig, params, report: Reporter):
    grid = MacroGrid(cfg.extraction.half_length, cfg.extraction.n_x)
    seed = cfg.extraction.seed
    initial = seed_bump(grid, len(params.lambda_i), seed.center, seed.width,
                        seed.height, preload=seed.preload)
    report.say(f"guiding run: m={len(params.lambda_i)} on "
               f"[-{grid.half_length:g}, {grid.half_length:g}] x {grid.n_x}, "
               f"t_end={cfg.extraction.t_end:g}")
    stepper = lambda s: step_guiding(s, params, cfg.coefficients.nonlinearity,
                                     cfg.solver.dt)
    return run(initial, stepper, cfg.extraction.t_end, dt=cfg.solver.dt,
               observe_every_time=cfg.extraction.observe_every_time)


def _build_pulse(cfg: ExperimentConfig, report: Reporter):
    """guiding run -> extraction -> (when possible) two-scale assembly."""
    params, decomp = _guiding_setup(cfg)
    history = _run_guiding(cfg, params, report)
    pulse = extract_pulse(
        history,
        settle_tol=cfg.extraction.settle_tol,
        boundary_tol=cfg.extraction.boundary_tol,
        fit_fraction=cfg.extraction.fit_fraction)
    assembled = None
    if decomp is not None:
        assembled = assemble(pulse, decomp, cfg.coefficients)
    return pulse, assembled, history, params, decomp


def _seed_direct(cfg: ExperimentConfig, grid: MacroGrid):
    """Ignition data shared by direct and two-scale runs.

    The activator bump comes with an inhibitor wall ahead of its right
    flank, laid along the alpha direction and scaled so the felt
    suppression <alpha v> equals the nominal preload.
    """
    seed = cfg.seed
    base = seed_bump(grid, 1, seed.center, seed.width, seed.height,
                     preload=seed.preload)
    cell = CellGrid(cfg.grid.n_y)
    alpha = cfg.coefficients.alpha(cell.y)
    alpha_sq = cell_quadrature(cell, alpha * alpha)
    if alpha_sq <= 0:
        raise UnsupportedOperator("alpha vanishes on the cell; nothing couples "
                                  "the inhibitor back to the activator")
    wall = base.v[0].values / alpha_sq  # preload * step / <alpha^2>
    return base.u, wall, cell


def _observation_count(cfg: ExperimentConfig) -> int:
    return int(round(cfg.t_end / cfg.observe_every_time)) + 1


# --------------------------------------------------------------------------
# experiment kinds
# --------------------------------------------------------------------------

def _growth_check(cfg: ExperimentConfig, states, sups, label: str,
                  report: Reporter) -> None:
    bound = growth_bound_check(cfg.coefficients)
    tiny = np.finfo(float).tiny
    c0 = max(sups[0], tiny)
    # log space: kappa * t overflows exp() on long horizons
    log_margin = max(np.log(max(s, tiny)) - np.log(c0) - bound.kappa * st.t
                     for st, s in zip(states, sups))
    margin = float(np.exp(min(log_margin, 700.0)))
    report.check(f"growth_bound_{label}", margin,
                 f"sup <= C exp({_fmt(bound.kappa)} t), ratio <= 1",
                 bool(log_margin <= np.log1p(1e-12)))


def _sup_eps(state: EpsState) -> float:
    return max(float(np.max(np.abs(state.u.values))),
               float(np.max(np.abs(state.v.values))))


def _sup_twoscale(state: TwoScaleState) -> float:
    return max(float(np.max(np.abs(state.u.values))),
               float(np.max(np.abs(state.v.values))))


def _kind_simulate_eps(cfg: ExperimentConfig, out: Path, report: Reporter):
    grid = MacroGrid(cfg.grid.half_length, cfg.grid.n_x)
    u0, wall, _ = _seed_direct(cfg, grid)
    for eps in cfg.epsilons:
        frozen = freeze_eps_coefficients(cfg.coefficients, grid, eps)
        v0 = Field1D(grid, wall * frozen.alpha)
        initial = EpsState(0.0, u0, v0)
        report.say(f"direct run eps={eps:g}: {_observation_count(cfg) - 1} "
                   f"observation intervals to t={cfg.t_end:g}")
        stepper = lambda s: step_eps(s, frozen, cfg.coefficients, cfg.solver)
        states = run(initial, stepper, cfg.t_end, dt=cfg.solver.dt,
                     observe_every_time=cfg.observe_every_time)
        rows = []
        for state in states:
            for x, u, v in zip(grid.x, state.u.values, state.v.values):
                rows.append([state.t, x, u, v])
        write_csv(out / f"simulate-eps_{cfg.label}_{eps:g}.csv",
                  ["t", "x", "u", "v"], rows)
        sups = [_sup_eps(s) for s in states]
        report.check(f"finite_eps_{eps:g}", sups[-1],
                     "final sup finite", bool(np.isfinite(sups[-1])))
        _growth_check(cfg, states, sups, f"eps_{eps:g}", report)


def _kind_simulate_twoscale(cfg: ExperimentConfig, out: Path, report: Reporter):
    grid = MacroGrid(cfg.grid.half_length, cfg.grid.n_x)
    u0, wall, cell = _seed_direct(cfg, grid)
    alpha = cfg.coefficients.alpha(cell.y)
    v0 = TwoScaleField(grid, cell, wall[:, None] * alpha[None, :])
    frozen = freeze_cell_coefficients(cfg.coefficients, cell)
    initial = TwoScaleState(0.0, u0, v0)
    report.say(f"two-scale run: {grid.n_x} x {cell.n_y} nodes to t={cfg.t_end:g}")
    stepper = lambda s: step_twoscale(s, frozen, cfg.coefficients, cfg.solver)
    states = run(initial, stepper, cfg.t_end, dt=cfg.solver.dt,
                 observe_every_time=cfg.observe_every_time)

    rows = []
    for state in states:
        vbar = cell_average(state.v)
        for x, u, vb in zip(grid.x, state.u.values, vbar.values):
            rows.append([state.t, x, u, vb])
    write_csv(out / f"simulate-twoscale_{cfg.label}.csv",
              ["t", "x", "U", "Vbar"], rows)

    for t_req in cfg.snapshot_times:
        state = min(states, key=lambda s: abs(s.t - t_req))
        rows = []
        for i, x in enumerate(grid.x):
            for j, y in enumerate(cell.y):
                rows.append([x, y, state.v.values[i, j]])
        write_csv(out / f"simulate-twoscale_{cfg.label}_snapshot_t{t_req:g}.csv",
                  ["x", "y", "V"], rows)

    sups = [_sup_twoscale(s) for s in states]
    report.check("finite_twoscale", sups[-1], "final sup finite",
                 bool(np.isfinite(sups[-1])))
    _growth_check(cfg, states, sups, "twoscale", report)

    # cell mean of V stays macroscopically negligible for mean-free beta
    beta_mean = abs(cell_quadrature(cell, cfg.coefficients.beta(cell.y)))
    if beta_mean <= 1e-12:
        worst = max(float(np.max(np.abs(cell_average(s.v).values))) for s in states)
        scale = max(float(np.max(np.abs(s.v.values))) for s in states)
        report.check("cell_mean_vanishes", worst,
                     f"<= 1e-08 * max|V| = {_fmt(1e-8 * scale)}",
                     bool(worst <= 1e-8 * scale))


def _pulse_csv_rows(pulse_u: Field1D, profiles: list[Field1D]):
    grid = pulse_u.grid
    columns = [pulse_u.values] + [p.values for p in profiles]
    for i, z in enumerate(grid.x):
        yield [z] + [col[i] for col in columns]


def _kind_build_pulse(cfg: ExperimentConfig, out: Path, report: Reporter):
    pulse, assembled, history, params, decomp = _build_pulse(cfg, report)

    # track: peak position and height over the run
    track = [[s.t, peak_position(s.u), float(np.max(s.u.values))]
             for s in history]
    write_csv(out / f"build-pulse_{cfg.label}_track.csv",
              ["t", "position", "max_u"], track)

    if assembled is not None:
        labels = [c.label for c in assembled.components]
        profiles = [c.profile for c in assembled.components]
        header = ["z", "u"] + [f"v_{label}" for label in labels]
        write_csv(out / f"build-pulse_{cfg.label}.csv", header,
                  _pulse_csv_rows(assembled.u, profiles))
        grid, cell = assembled.v.grid, assembled.v.cell
        rows = ([x, y, assembled.v.values[i, j]]
                for i, x in enumerate(grid.x) for j, y in enumerate(cell.y))
        write_csv(out / f"build-pulse_{cfg.label}_grid.csv", ["z", "y", "v"], rows)
    else:
        header = ["z", "u"] + [f"v_{i + 1}" for i in range(len(pulse.v))]
        write_csv(out / f"build-pulse_{cfg.label}.csv", header,
                  _pulse_csv_rows(pulse.u, list(pulse.v)))
        report.check("decomposition", "refused", "UnsupportedOperator path", None)

    report.check("settle_residual", pulse.settle_residual,
                 f"<= {_fmt(cfg.extraction.settle_tol)}",
                 bool(pulse.settle_residual <= cfg.extraction.settle_tol))
    report.check("wave_speed", pulse.c, "> 0", bool(pulse.c > 0))
    if pulse.sigma is not None:
        report.check("tail_rate_sigma", pulse.sigma, "> 0", bool(pulse.sigma > 0))
    else:
        report.check("tail_rate_sigma", "none", "no clean exponential tail", None)

    if assembled is not None:
        residual = comoving_residual(assembled, cfg.coefficients)
        report.check("residual_u_l2", residual.u.l2, "info", None)
        report.check("residual_v_l2", residual.v.l2, "info", None)
        try:
            decay = decay_report(assembled)
            report.check("decay_u_rate", decay.u_rate, "> 0",
                         bool(decay.u_rate > 0))
            report.check("decay_v_rate", decay.v_rate, "> 0",
                         bool(decay.v_rate > 0))
        except FhnTwoscaleError as exc:
            report.check("decay_rates", f"unavailable ({exc})", "info", None)
    return pulse, assembled


def _kind_verify_convergence(cfg: ExperimentConfig, out: Path, report: Reporter):
    pulse, assembled, _, params, decomp = _build_pulse(cfg, report)
    if assembled is None:
        raise UnsupportedOperator(
            "verify-convergence needs the two-scale limit, but the cell "
            "operator admits no eigendecomposition here")

    grid = assembled.u.grid
    cell = assembled.v.cell
    frozen_cell = freeze_cell_coefficients(cfg.coefficients, cell)
    limit0 = TwoScaleState(0.0, assembled.u, assembled.v)
    report.say(f"limit run to t={cfg.t_end:g}")
    limit_states = run(
        limit0, lambda s: step_twoscale(s, frozen_cell, cfg.coefficients,
                                        cfg.solver),
        cfg.t_end, dt=cfg.solver.dt, observe_every_time=cfg.observe_every_time)

    combined = []
    for eps in cfg.epsilons:
        frozen = freeze_eps_coefficients(cfg.coefficients, grid, eps)
        initial = EpsState(0.0, assembled.u, reconstruct(assembled.v, eps))
        report.say(f"direct run eps={eps:g} to t={cfg.t_end:g}")
        states = run(
            initial, lambda s: step_eps(s, frozen, cfg.coefficients, cfg.solver),
            cfg.t_end, dt=cfg.solver.dt, observe_every_time=cfg.observe_every_time)
        samples = [error_sample(d, l, eps) for d, l in zip(states, limit_states)]
        rows = [[s_state.t, smp.u.l2, smp.u.linf, smp.v.l2, smp.v.linf,
                 smp.u_gradient_l2, smp.v_gradient_l2, smp.u.l2 + smp.v.l2]
                for s_state, smp in zip(states, samples)]
        write_csv(out / f"verify-convergence_{cfg.label}_{eps:g}.csv",
                  ["t", "u_l2", "u_linf", "v_l2", "v_linf",
                   "u_gradient_l2", "v_gradient_l2", "total_l2"], rows)
        combined.append(sweep_error([s_state.t for s_state in states], samples))

    eps_arr = np.asarray(cfg.epsilons, dtype=float)
    fit_rows = [[f"combined_error_eps_{e:g}", m]
                for e, m in zip(cfg.epsilons, combined)]
    try:
        fit = fit_rate(eps_arr, combined)
    except DegenerateFit:
        write_csv(out / f"verify-convergence_{cfg.label}_fit.csv",
                  ["name", "value"], fit_rows)
        report.check("convergence_rate", "degenerate", "in [0.7, 1.3]", False)
    else:
        write_csv(out / f"verify-convergence_{cfg.label}_fit.csv",
                  ["name", "value"],
                  [["rate", fit.rate], ["intercept", fit.intercept],
                   ["r_squared", fit.r_squared]] + fit_rows)
        report.check("convergence_rate", fit.rate, "in [0.7, 1.3]",
                     bool(0.7 <= fit.rate <= 1.3))
    monotone = bool(np.all(np.diff(combined) < 0))
    report.check("errors_monotone", "yes" if monotone else "no",
                 "error decreases with eps", monotone)


def _kind_verify_stability(cfg: ExperimentConfig, out: Path, report: Reporter):
    pulse, _, _, params, _ = _build_pulse(cfg, report)
    report.say(f"stability run: delta={cfg.stability_delta:g} to "
               f"t={cfg.stability_t_end:g}")
    stability = stability_experiment(
        pulse, params, cfg.coefficients.nonlinearity,
        delta=cfg.stability_delta, t_end=cfg.stability_t_end,
        dt=cfg.solver.dt, observe_every=cfg.observe_every_time)
    write_csv(out / f"verify-stability_{cfg.label}.csv",
              ["t", "distance"],
              [[t, d] for t, d in zip(stability.times, stability.distances)])
    d0, d_end = stability.distances[0], stability.distances[-1]
    write_csv(out / f"verify-stability_{cfg.label}_fit.csv",
              ["name", "value"],
              [["kappa", stability.kappa], ["r_squared", stability.r_squared],
               ["d_initial", d0], ["d_final", d_end]])
    report.check("distance_halved", d_end, f"<= {_fmt(0.5 * d0)}",
                 bool(d_end <= 0.5 * d0))
    report.check("decay_rate_kappa", stability.kappa, "> 0",
                 bool(stability.kappa > 0))
    report.check("fit_r_squared", stability.r_squared, ">= 0.9",
                 bool(stability.r_squared >= 0.9))


def _kind_check_lemmas(cfg: ExperimentConfig, out: Path, report: Reporter):
    grid = MacroGrid(cfg.grid.half_length, cfg.grid.n_x)
    cell = CellGrid(cfg.grid.n_y)
    report.say(f"dual-norm lemma on {grid.n_x} x {cell.n_y}, eps="
               + ",".join(f"{e:g}" for e in cfg.epsilons))
    lemma = check_dual_norm_lemma(lemma_trace, grid, cfg.epsilons, cell=cell)
    rows = [[e, d, c] for e, d, c in
            zip(lemma.eps, lemma.dual_norms, lemma.constants)]
    write_csv(out / f"check-lemmas_{cfg.label}_dualnorm.csv",
              ["eps", "dual_norm", "constant"], rows)
    spread = max(lemma.constants) / min(lemma.constants)
    report.check("dual_norm_constant_spread", spread, "<= 1.05",
                 bool(spread <= 1.05))
    for (e_big, e_small), ratio in zip(
            zip(lemma.eps[:-1], lemma.eps[1:]), lemma.halving_ratios):
        report.check(f"halving_ratio_{e_big:g}_to_{e_small:g}", ratio,
                     "in [0.4, 0.6]", bool(0.4 <= ratio <= 0.6))

    bound = growth_bound_check(cfg.coefficients)
    write_csv(out / f"check-lemmas_{cfg.label}_growth.csv",
              ["name", "value"],
              [["c1", bound.c1], ["c2", bound.c2], ["c3", bound.c3],
               ["c4", bound.c4], ["alpha_sup", bound.alpha_sup],
               ["beta_sup", bound.beta_sup], ["b_sup", bound.b_sup],
               ["kappa", bound.kappa]])
    report.check("growth_kappa", bound.kappa, "> 0", bool(bound.kappa > 0))


_KIND_RUNNERS = {
    "simulate-eps": _kind_simulate_eps,
    "simulate-twoscale": _kind_simulate_twoscale,
    "build-pulse": _kind_build_pulse,
    "verify-convergence": _kind_verify_convergence,
    "verify-stability": _kind_verify_stability,
    "check-lemmas": _kind_check_lemmas,
}


# --------------------------------------------------------------------------
# entry points
# --------------------------------------------------------------------------

def run_experiment(cfg: ExperimentConfig, out_dir: str | Path,
                   quiet: bool = False) -> int:
    """Execute one experiment; returns the process exit status."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = Reporter(quiet)
    report.say(f"experiment: {cfg.kind} on {cfg.label}")
    started = time.perf_counter()
    _KIND_RUNNERS[cfg.kind](cfg, out, report)
    wall = time.perf_counter() - started

    write_csv(out / "summary.csv", ["name", "value", "bound", "status"],
              [c.row() for c in report.checks])
    manifest = (
        f"package = fhn_twoscale {__version__}\n"
        f"python = {platform.python_version()}\n"
        f"numpy = {np.__version__}\n"
        f"scipy = {scipy.__version__}\n"
        f"wall_seconds = {wall:.3f}\n"
        "\n"
        "# resolved configuration\n"
        + echo_config(cfg))
    (out / "manifest.txt").write_text(manifest, encoding="utf-8")

    failed = [c for c in report.checks if c.passed is False]
    report.say(f"artifacts in {out}  ({len(report.checks)} checks, "
               f"{len(failed)} failed, {wall:.1f}s)")
    return 0 if not failed else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fhn-twoscale",
        description="Simulate FitzHugh-Nagumo systems with rapidly "
                    "oscillating coefficients and verify their two-scale "
                    "limit.")
    parser.add_argument("--config", required=True, help="experiment INI file")
    parser.add_argument("--out", default=None,
                        help="artifact directory (default: from config, "
                             "else ./artifacts)")
    parser.add_argument("--paper-scale", action="store_true",
                        help="use the full-resolution grids instead of the "
                             "desk-scale defaults")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress progress output")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config,
                          paper_scale=True if args.paper_scale else None)
        out_dir = args.out or cfg.output or "artifacts"
        return run_experiment(cfg, out_dir, quiet=args.quiet)
    except FhnTwoscaleError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
