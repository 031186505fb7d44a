"""Experiment configuration: INI files parsed fail-closed into a typed plan.

The format is plain ``key = value`` lines under ``[section]`` headers.  Every
key must be known; unknown sections or keys are rejected rather than ignored,
so a typo cannot silently fall back to a default.  Coefficients come either
from a named preset or from inline expressions in ``y`` evaluated over a
restricted numpy namespace.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ParseError, ValidationError
from .microcell import CoefficientSet, CubicNonlinearity
from .presets import (ExtractionProtocol, GridScale, Preset, PRESETS,
                      SeedProtocol)
from .simulate import SolverConfig

KINDS = ("simulate-eps", "simulate-twoscale", "build-pulse",
         "verify-convergence", "verify-stability", "check-lemmas")

#: Window/extraction choices for build-pulse.
WINDOWS = ("desk", "wide")

#: Names an inline coefficient expression may use, besides ``y``.
EXPRESSION_NAMES = {
    "pi": np.pi,
    "e": np.e,
    "sin": np.sin, "cos": np.cos, "tan": np.tan,
    "sinh": np.sinh, "cosh": np.cosh, "tanh": np.tanh,
    "exp": np.exp, "log": np.log, "sqrt": np.sqrt,
    "abs": np.abs, "sign": np.sign,
    "floor": np.floor, "ceil": np.ceil, "mod": np.mod,
    "minimum": np.minimum, "maximum": np.maximum, "where": np.where,
}

_BOOLEAN_STATES = {"1": True, "yes": True, "true": True, "on": True,
                   "0": False, "no": False, "false": False, "off": False}

# Fallback window for lemma checks when no [grid] is given: the dual-norm
# trace oscillates at wavelength eps, so it needs a finer dx than the
# preset simulation grids provide.
LEMMA_GRID = GridScale(half_length=50.0, n_x=8192, n_y=128)
LEMMA_EPSILONS = (1.0, 0.5, 0.25)

DEFAULT_DT = 0.01
DEFAULT_T_END = 300.0
DEFAULT_SWEEP_T_END = 100.0
DEFAULT_OBSERVE = 10.0
DEFAULT_STABILITY_DELTA = 0.01
DEFAULT_STABILITY_T_END = 200.0


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved experiment plan.

    All defaults (preset grids, horizons, seeds, tolerances) have already
    been applied; consumers never look back at the file.
    """

    kind: str
    label: str
    preset: Preset | None
    coefficients: CoefficientSet
    grid: GridScale
    solver: SolverConfig
    t_end: float
    observe_every_time: float
    epsilons: tuple[float, ...]
    snapshot_times: tuple[float, ...]
    seed: SeedProtocol
    extraction: ExtractionProtocol
    window: str
    stability_delta: float
    stability_t_end: float
    output: str | None
    paper_scale: bool


def _parse_float(text: str, field: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValidationError(f"{field}: expected a number, got {text!r}") from None
    if not np.isfinite(value):
        raise ValidationError(f"{field}: value must be finite, got {text!r}")
    return value


def _parse_int(text: str, field: str) -> int:
    try:
        return int(text, 10)
    except ValueError:
        raise ValidationError(f"{field}: expected an integer, got {text!r}") from None


def _parse_bool(text: str, field: str) -> bool:
    try:
        return _BOOLEAN_STATES[text.strip().lower()]
    except KeyError:
        raise ValidationError(f"{field}: expected a boolean, got {text!r}") from None


def _parse_float_list(text: str, field: str) -> tuple[float, ...]:
    items = [part.strip() for part in text.split(",") if part.strip()]
    if not items:
        raise ValidationError(f"{field}: expected a comma-separated list of numbers")
    return tuple(_parse_float(item, field) for item in items)


def compile_coefficient(expression: str, field: str) -> Callable:
    """A vectorized function of y from a restricted arithmetic expression.

    Only the names in EXPRESSION_NAMES plus ``y`` may appear; anything else
    (attribute access, calls to other builtins, double underscores) is
    rejected before evaluation.
    """
    if "__" in expression:
        raise ValidationError(f"{field}: double underscores are not allowed")
    try:
        code = compile(expression, f"<{field}>", "eval")
    except SyntaxError as exc:
        raise ValidationError(f"{field}: {exc.msg} in {expression!r}") from None
    unknown = set(code.co_names) - set(EXPRESSION_NAMES) - {"y"}
    if unknown:
        raise ValidationError(
            f"{field}: unknown name(s) {sorted(unknown)} in {expression!r}; "
            f"allowed: y, {', '.join(sorted(EXPRESSION_NAMES))}")

    def fn(y):
        y = np.asarray(y, dtype=float)
        namespace = dict(EXPRESSION_NAMES)
        namespace["y"] = y
        out = eval(code, {"__builtins__": {}}, namespace)  # noqa: S307
        out = np.asarray(out, dtype=float)
        if out.shape != y.shape:
            out = np.broadcast_to(out, y.shape).copy()
        return out

    try:
        probe = fn(np.linspace(0.0, 1.0, 7))
    except Exception as exc:
        raise ValidationError(f"{field}: expression failed to evaluate: {exc}") from None
    if not np.all(np.isfinite(probe)):
        raise ValidationError(f"{field}: expression is not finite on [0, 1)")
    return fn


_SCHEMA: dict[str, set[str]] = {
    "experiment": {"kind", "preset", "output", "paper_scale"},
    "grid": {"half_length", "n_x", "n_y"},
    "solver": {"dt", "t_end", "observe_every", "snapshots"},
    "sweep": {"epsilon"},
    "seed": {"center", "width", "height", "preload"},
    "pulse": {"window", "settle_tol", "boundary_tol", "fit_fraction",
              "t_end", "observe_every"},
    "stability": {"delta", "t_end"},
    "coefficients": {"alpha", "beta", "b", "d", "a", "scale",
                     "zero_spectrum_excluded"},
}


def _read_ini(text: str, source: str) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case-sensitive, fail-closed
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError(f"{source}:{exc.lineno}: key outside any [section]") from None
    except configparser.DuplicateSectionError as exc:
        raise ParseError(
            f"{source}:{exc.lineno}: duplicate section [{exc.section}]") from None
    except configparser.DuplicateOptionError as exc:
        raise ParseError(
            f"{source}:{exc.lineno}: duplicate key {exc.option!r} in "
            f"[{exc.section}]") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ParseError(f"{source}:{lineno}: cannot parse {line!r}") from None

    if parser.defaults():
        raise ValidationError(
            "[DEFAULT] section is not allowed (its keys would leak into "
            "every section)")
    raw: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            known = ", ".join(sorted(_SCHEMA))
            raise ValidationError(
                f"unknown section [{section}]; known sections: {known}")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                known = ", ".join(sorted(_SCHEMA[section]))
                raise ValidationError(
                    f"unknown key {section}.{key}; known keys: {known}")
        raw[section] = dict(parser[section])
    return raw


def _inline_coefficients(block: dict[str, str]) -> CoefficientSet:
    for required in ("alpha", "beta", "b", "d"):
        if required not in block:
            raise ValidationError(f"coefficients.{required} is required when "
                                  "no preset is named")
    a = _parse_float(block.get("a", "0.15"), "coefficients.a")
    scale = _parse_float(block.get("scale", "1.0"), "coefficients.scale")
    try:
        nonlinearity = CubicNonlinearity(a=a, scale=scale)
    except ValueError as exc:
        raise ValidationError(f"coefficients.a: {exc}") from None
    excluded = _parse_bool(block.get("zero_spectrum_excluded", "true"),
                           "coefficients.zero_spectrum_excluded")
    return CoefficientSet(
        alpha=compile_coefficient(block["alpha"], "coefficients.alpha"),
        beta=compile_coefficient(block["beta"], "coefficients.beta"),
        b=compile_coefficient(block["b"], "coefficients.b"),
        d=compile_coefficient(block["d"], "coefficients.d"),
        nonlinearity=nonlinearity,
        zero_spectrum_excluded=excluded)


def load_config(path: str | Path, *,
                paper_scale: bool | None = None) -> ExperimentConfig:
    """Parse and validate an experiment file.

    Raises ParseError (with file:line) on malformed INI text and
    ValidationError (naming the field) on unknown/invalid/missing keys.
    `paper_scale=True` (the --paper-scale flag) overrides the file.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_config(text, source=path.name, paper_scale=paper_scale)


def parse_config(text: str, source: str = "<config>", *,
                 paper_scale: bool | None = None) -> ExperimentConfig:
    raw = _read_ini(text, source)

    experiment = raw.get("experiment", {})
    kind = experiment.get("kind")
    if kind is None:
        raise ValidationError("experiment.kind is required; one of: "
                              + ", ".join(KINDS))
    if kind not in KINDS:
        raise ValidationError(f"experiment.kind: unknown kind {kind!r}; "
                              "one of: " + ", ".join(KINDS))
    if paper_scale is None:
        paper_scale = _parse_bool(experiment.get("paper_scale", "false"),
                                  "experiment.paper_scale")
    output = experiment.get("output")

    preset: Preset | None = None
    if "preset" in experiment:
        name = experiment["preset"]
        if name not in PRESETS:
            known = ", ".join(sorted(PRESETS))
            raise ValidationError(
                f"experiment.preset: unknown preset {name!r}; known: {known}")
        preset = PRESETS[name]
        if "coefficients" in raw:
            raise ValidationError(
                "coefficients: give either experiment.preset or a "
                "[coefficients] section, not both")
        coefficients = preset.coefficients
        label = preset.name
    elif "coefficients" in raw:
        coefficients = _inline_coefficients(raw["coefficients"])
        label = "custom"
    else:
        raise ValidationError(
            "experiment.preset or a [coefficients] section is required")

    # --- grid -----------------------------------------------------------
    if preset is not None:
        base = preset.paper if paper_scale else preset.desk
    elif kind == "check-lemmas":
        base = LEMMA_GRID
    else:
        base = None
    grid_block = raw.get("grid", {})
    if base is None and kind != "check-lemmas":
        for required in ("half_length", "n_x", "n_y"):
            if required not in grid_block:
                raise ValidationError(
                    f"grid.{required} is required when no preset is named")
    if base is None:
        base = LEMMA_GRID
    half_length = (_parse_float(grid_block["half_length"], "grid.half_length")
                   if "half_length" in grid_block else base.half_length)
    n_x = (_parse_int(grid_block["n_x"], "grid.n_x")
           if "n_x" in grid_block else base.n_x)
    n_y = (_parse_int(grid_block["n_y"], "grid.n_y")
           if "n_y" in grid_block else base.n_y)
    if half_length <= 0:
        raise ValidationError(f"grid.half_length must be positive, got {half_length}")
    if n_y < 2:
        raise ValidationError(f"grid.n_y must be at least 2, got {n_y}")
    grid = GridScale(half_length=half_length, n_x=n_x, n_y=n_y)

    # --- extraction window (build-pulse) ---------------------------------
    pulse_block = raw.get("pulse", {})
    window = pulse_block.get("window", "desk")
    if window not in WINDOWS:
        raise ValidationError(f"pulse.window: unknown window {window!r}; "
                              "one of: " + ", ".join(WINDOWS))
    if preset is not None:
        if window == "wide":
            if preset.wide_extraction is None:
                raise ValidationError(
                    f"pulse.window: preset {preset.name!r} has no wide window")
            extraction = preset.wide_extraction
        else:
            extraction = preset.extraction
        # explicit [grid] keys also move the guiding window
        if "half_length" in grid_block or "n_x" in grid_block:
            extraction = replace(
                extraction,
                half_length=(half_length if "half_length" in grid_block
                             else extraction.half_length),
                n_x=(n_x if "n_x" in grid_block else extraction.n_x))
    else:
        extraction = ExtractionProtocol(
            half_length=grid.half_length, n_x=grid.n_x,
            t_end=DEFAULT_T_END, observe_every_time=DEFAULT_OBSERVE,
            seed=SeedProtocol(center=0.0, width=8.0, height=0.8, preload=0.15))
    overrides = {}
    if "settle_tol" in pulse_block:
        overrides["settle_tol"] = _parse_float(
            pulse_block["settle_tol"], "pulse.settle_tol")
    if "boundary_tol" in pulse_block:
        overrides["boundary_tol"] = _parse_float(
            pulse_block["boundary_tol"], "pulse.boundary_tol")
    if "fit_fraction" in pulse_block:
        fraction = _parse_float(pulse_block["fit_fraction"], "pulse.fit_fraction")
        if not 0.0 < fraction <= 1.0:
            raise ValidationError(
                f"pulse.fit_fraction must lie in (0, 1], got {fraction}")
        overrides["fit_fraction"] = fraction
    if overrides:
        extraction = replace(extraction, **overrides)

    # --- seed ------------------------------------------------------------
    seed_block = raw.get("seed", {})
    seed = extraction.seed
    seed = SeedProtocol(
        center=(_parse_float(seed_block["center"], "seed.center")
                if "center" in seed_block else seed.center),
        width=(_parse_float(seed_block["width"], "seed.width")
               if "width" in seed_block else seed.width),
        height=(_parse_float(seed_block["height"], "seed.height")
                if "height" in seed_block else seed.height),
        preload=(_parse_float(seed_block["preload"], "seed.preload")
                 if "preload" in seed_block else seed.preload))
    if seed.width <= 0:
        raise ValidationError(f"seed.width must be positive, got {seed.width}")
    extraction = replace(extraction, seed=seed)

    # --- solver ----------------------------------------------------------
    solver_block = raw.get("solver", {})
    dt = (_parse_float(solver_block["dt"], "solver.dt")
          if "dt" in solver_block else DEFAULT_DT)
    if dt <= 0:
        raise ValidationError(f"solver.dt must be positive, got {dt}")
    if "t_end" in solver_block:
        t_end = _parse_float(solver_block["t_end"], "solver.t_end")
    elif kind == "build-pulse":
        t_end = extraction.t_end
    elif kind == "verify-convergence":
        t_end = DEFAULT_SWEEP_T_END
    else:
        t_end = DEFAULT_T_END
    if t_end <= 0:
        raise ValidationError(f"solver.t_end must be positive, got {t_end}")
    if "observe_every" in solver_block:
        observe = _parse_float(solver_block["observe_every"], "solver.observe_every")
    elif kind == "build-pulse":
        observe = extraction.observe_every_time
    else:
        observe = DEFAULT_OBSERVE
    if observe <= 0:
        raise ValidationError(
            f"solver.observe_every must be positive, got {observe}")
    if kind == "build-pulse":
        extraction = replace(extraction, t_end=t_end, observe_every_time=observe)
    # the guiding run of the verify kinds has its own horizon knobs
    if "t_end" in pulse_block:
        guide_t_end = _parse_float(pulse_block["t_end"], "pulse.t_end")
        if guide_t_end <= 0:
            raise ValidationError(
                f"pulse.t_end must be positive, got {guide_t_end}")
        extraction = replace(extraction, t_end=guide_t_end)
    if "observe_every" in pulse_block:
        guide_observe = _parse_float(
            pulse_block["observe_every"], "pulse.observe_every")
        if guide_observe <= 0:
            raise ValidationError(
                f"pulse.observe_every must be positive, got {guide_observe}")
        extraction = replace(extraction, observe_every_time=guide_observe)

    if "snapshots" in solver_block:
        snapshots = _parse_float_list(solver_block["snapshots"], "solver.snapshots")
        observed = [observe * k for k in range(int(round(t_end / observe)) + 1)]
        for t_req in snapshots:
            if min(abs(t_req - t_obs) for t_obs in observed) > 1e-9 * max(1.0, t_req):
                raise ValidationError(
                    f"solver.snapshots: {t_req:g} is not an observation time "
                    f"(multiples of observe_every={observe:g} up to t_end)")
    else:
        snapshots = (t_end,)

    # --- epsilon sweep ----------------------------------------------------
    sweep_block = raw.get("sweep", {})
    if "epsilon" in sweep_block:
        epsilons = _parse_float_list(sweep_block["epsilon"], "sweep.epsilon")
    elif preset is not None and kind != "check-lemmas":
        epsilons = preset.epsilons
    elif kind == "check-lemmas":
        epsilons = LEMMA_EPSILONS
    else:
        epsilons = ()
    for eps in epsilons:
        if eps <= 0:
            raise ValidationError(f"sweep.epsilon: values must be positive, got {eps}")
    if len(set(epsilons)) != len(epsilons):
        raise ValidationError("sweep.epsilon: values must be distinct")
    epsilons = tuple(sorted(epsilons, reverse=True))

    if kind in ("simulate-eps", "verify-convergence") and not epsilons:
        raise ValidationError(f"sweep.epsilon is required for kind {kind}")
    if kind == "verify-convergence" and len(epsilons) < 2:
        raise ValidationError(
            "sweep.epsilon: verify-convergence needs at least two values")

    # --- stability ---------------------------------------------------------
    stability_block = raw.get("stability", {})
    delta = (_parse_float(stability_block["delta"], "stability.delta")
             if "delta" in stability_block else DEFAULT_STABILITY_DELTA)
    if delta <= 0:
        raise ValidationError(f"stability.delta must be positive, got {delta}")
    stability_t_end = (_parse_float(stability_block["t_end"], "stability.t_end")
                       if "t_end" in stability_block else DEFAULT_STABILITY_T_END)
    if stability_t_end <= 0:
        raise ValidationError(
            f"stability.t_end must be positive, got {stability_t_end}")

    try:
        solver = SolverConfig(dt=dt)
    except ValueError as exc:
        raise ValidationError(f"solver.dt: {exc}") from None

    return ExperimentConfig(
        kind=kind, label=label, preset=preset, coefficients=coefficients,
        grid=grid, solver=solver, t_end=t_end, observe_every_time=observe,
        epsilons=epsilons, snapshot_times=tuple(snapshots), seed=seed,
        extraction=extraction, window=window,
        stability_delta=delta, stability_t_end=stability_t_end,
        output=output, paper_scale=paper_scale)


def echo_config(cfg: ExperimentConfig) -> str:
    """Deterministic round-trippable text of the resolved plan."""
    lines = ["[experiment]", f"kind = {cfg.kind}"]
    if cfg.preset is not None:
        lines.append(f"preset = {cfg.preset.name}")
    else:
        lines.append("preset = (inline coefficients)")
    if cfg.output is not None:
        lines.append(f"output = {cfg.output}")
    lines += [
        f"paper_scale = {str(cfg.paper_scale).lower()}",
        "",
        "[grid]",
        f"half_length = {cfg.grid.half_length:.17g}",
        f"n_x = {cfg.grid.n_x}",
        f"n_y = {cfg.grid.n_y}",
        "",
        "[solver]",
        f"dt = {cfg.solver.dt:.17g}",
        f"t_end = {cfg.t_end:.17g}",
        f"observe_every = {cfg.observe_every_time:.17g}",
        "snapshots = " + ",".join(f"{t:.17g}" for t in cfg.snapshot_times),
    ]
    if cfg.epsilons:
        lines += ["", "[sweep]",
                  "epsilon = " + ",".join(f"{e:.17g}" for e in cfg.epsilons)]
    lines += [
        "",
        "[seed]",
        f"center = {cfg.seed.center:.17g}",
        f"width = {cfg.seed.width:.17g}",
        f"height = {cfg.seed.height:.17g}",
        f"preload = {cfg.seed.preload:.17g}",
        "",
        "[pulse]",
        f"window = {cfg.window}",
        f"t_end = {cfg.extraction.t_end:.17g}",
        f"observe_every = {cfg.extraction.observe_every_time:.17g}",
        f"settle_tol = {cfg.extraction.settle_tol:.17g}",
        f"boundary_tol = {cfg.extraction.boundary_tol:.17g}",
        f"fit_fraction = {cfg.extraction.fit_fraction:.17g}",
        "",
        "[stability]",
        f"delta = {cfg.stability_delta:.17g}",
        f"t_end = {cfg.stability_t_end:.17g}",
    ]
    return "\n".join(lines) + "\n"
