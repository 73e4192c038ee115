"""Config-driven experiment runner.

One INI-style config file describes one reproducible experiment: a model
section, a pulse section, a task (solve / surface / validate / moments /
represent) and an output section.  Artifacts are CSV (UTF-8, header row,
17 significant digits) plus a plain-text run report; identical configs
produce byte-identical CSVs.

Exit codes: 0 success, 2 schema or validation error, 3 numeric failure
(no roots where roots were required, integrator abort, quadrature
non-convergence).
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .engine import (
    ConditionError,
    CyclicityError,
    cosine_ising_domain,
    effective_hamiltonian,
    published_convention,
    solution_surface,
    solve_condition,
    square_ising_domain,
)
from .models import CouplingGraph, SpinModel, dipolar_couplings, nearest_neighbor_couplings
from .pulses import (
    Convention,
    PulseProfile,
    PulseShape,
    QuadratureError,
    compute_moments,
    is_factorizable,
    verify_cyclicity,
)
from .sim import SIM_SITE_CAP, SimConfig, SimulationError, compare_frames, evolve_effective, evolve_exact

OUTPUT_DIR_ENV = "SPINDRIVE_OUTPUT_DIR"

_TASKS = ("solve", "surface", "validate", "moments", "represent")


class ConfigError(ValueError):
    """The config file is unreadable, incomplete or inconsistent."""


class NumericFailure(RuntimeError):
    """A task ran but could not produce its required numeric result."""


# ---------------------------------------------------------------------------
# config loading
# ---------------------------------------------------------------------------


@dataclass
class Diagnostics:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    defaults: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


@dataclass
class ExperimentConfig:
    """Validated view of one experiment file."""

    task: str
    model: SpinModel | None
    profile: PulseProfile | None
    convention: Convention | None
    options: dict
    sweep: dict | None
    output_dir: Path
    seed: int
    raw: dict
    source: Path


def _read_ini(path: Path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # preserve key case
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    return parser


def _get(parser, section, key, diag, default=None, required=False, cast=str):
    if parser.has_option(section, key):
        raw = parser.get(section, key).strip()
        if raw:
            try:
                return cast(raw)
            except (TypeError, ValueError):
                diag.errors.append(f"[{section}] {key}: cannot interpret {raw!r}")
                return default
    if required:
        diag.errors.append(f"[{section}] missing required field {key!r}")
    elif default is not None:
        diag.defaults.append(f"[{section}] {key} = {default}")
    return default


def _parse_axes(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.replace(";", ",").split(",") if tok.strip())


def _build_model(parser, diag, base: Path) -> SpinModel | None:
    if not parser.has_section("model"):
        diag.errors.append("missing [model] section")
        return None
    n_sites = _get(parser, "model", "n_sites", diag, required=True, cast=int)
    geometry = _get(parser, "model", "geometry", diag, default="dipolar_chain")
    j_perp = _get(parser, "model", "j_perp", diag, required=True, cast=float)
    j_z = _get(parser, "model", "j_z", diag, required=True, cast=float)
    if diag.errors:
        return None
    if n_sites is None or n_sites < 2:
        diag.errors.append("[model] n_sites must be at least 2")
        return None
    try:
        if geometry == "dipolar_chain":
            graph = dipolar_couplings(n_sites)
        elif geometry == "nearest_neighbor_chain":
            graph = nearest_neighbor_couplings(n_sites)
        elif geometry == "explicit":
            cpath = _get(parser, "model", "coupling_file", diag, required=True)
            if cpath is None:
                return None
            matrix = np.loadtxt(base / cpath, delimiter=",")
            graph = CouplingGraph(matrix)
            if graph.n_sites != n_sites:
                diag.errors.append(f"[model] coupling_file is {graph.n_sites}x{graph.n_sites}, n_sites says {n_sites}")
                return None
        else:
            diag.errors.append(f"[model] unknown geometry {geometry!r}")
            return None
        return SpinModel.xxz(graph, j_perp, j_z)
    except (OSError, ValueError) as exc:
        diag.errors.append(f"[model] {exc}")
        return None


def _build_profile(parser, diag, base: Path) -> PulseProfile | None:
    if not parser.has_section("pulse"):
        diag.errors.append("missing [pulse] section")
        return None
    kind = _get(parser, "pulse", "shape", diag, required=True)
    strength = _get(parser, "pulse", "strength", diag, required=True, cast=float)
    t_sub = _get(parser, "pulse", "subcycle_time", diag, default=1.0, cast=float)
    amplitude = _get(parser, "pulse", "amplitude", diag, default=1.0, cast=float)
    axes_text = _get(parser, "pulse", "axes", diag, default="1,2")
    sites_text = _get(parser, "pulse", "sites", diag, default="global")
    if diag.errors or kind is None:
        return None
    try:
        if kind == "tabulated":
            spath = _get(parser, "pulse", "shape_file", diag, required=True)
            if spath is None:
                return None
            shape = PulseShape.from_file(base / spath, amplitude=amplitude)
        elif kind == "zero":
            shape = PulseShape.zero()
        else:
            shape = PulseShape(kind, amplitude)
        axes = _parse_axes(axes_text)
        sites = None if sites_text.strip().lower() == "global" else _parse_axes(sites_text)
        return PulseProfile.sequential(shape, strength, t_sub, axes=axes, sites=sites)
    except (OSError, ValueError) as exc:
        diag.errors.append(f"[pulse] {exc}")
        return None


def load_config(path, overrides: dict | None = None) -> tuple[ExperimentConfig | None, Diagnostics]:
    """Parse, validate and assemble an experiment config.

    Validation is schema plus physics: cyclicity of the pulse, the singular
    anisotropy for an Ising target, and the dense-simulation site cap.  Every
    applied default is recorded in the diagnostics.
    """
    path = Path(path)
    diag = Diagnostics()
    overrides = overrides or {}
    parser = _read_ini(path)
    base = path.parent

    task = _get(parser, "task", "kind", diag, required=True)
    if task is not None and task not in _TASKS:
        diag.errors.append(f"[task] unknown kind {task!r}; expected one of {', '.join(_TASKS)}")

    model = _build_model(parser, diag, base)
    profile = _build_profile(parser, diag, base)

    conv_text = overrides.get("convention") or _get(parser, "pulse", "convention", diag)
    convention = None
    if conv_text:
        try:
            convention = Convention(conv_text)
        except ValueError:
            diag.errors.append(f"[pulse] unknown convention {conv_text!r} (subcycle or full_cycle)")

    options: dict = {}
    if task == "solve":
        options["target"] = _get(parser, "task", "target", diag, default="ising")
        options["bracket"] = _get(parser, "task", "bracket", diag, default=5.0, cast=float)
        options["grid_step"] = _get(parser, "task", "grid_step", diag, default=0.01, cast=float)
        options["p_max"] = _get(parser, "task", "p_max", diag, cast=int)
        if options["target"] == "custom":
            xy = _get(parser, "task", "target_xy", diag, required=True, cast=float)
            zz = _get(parser, "task", "target_zz", diag, required=True, cast=float)
            options["target_factors"] = None if xy is None or zz is None else (xy, zz)
        if options["target"] not in ("ising", "xy", "heisenberg", "custom", None):
            diag.errors.append(f"[task] unknown target {options['target']!r}")
    elif task == "surface":
        text = _get(parser, "task", "p_max_list", diag, default="1,8,16,closed")
        p_list = []
        for tok in text.split(","):
            tok = tok.strip()
            if not tok:
                continue
            p_list.append(None if tok == "closed" else int(tok))
        options["p_max_list"] = tuple(p_list)
        options["v_min"] = _get(parser, "task", "v_min", diag, default=-5.0, cast=float)
        options["v_max"] = _get(parser, "task", "v_max", diag, default=5.0, cast=float)
        options["v_step"] = _get(parser, "task", "v_step", diag, default=0.01, cast=float)
    elif task == "moments":
        options["p_max"] = _get(parser, "task", "p_max", diag, default=20, cast=int)
    elif task == "validate":
        options["n_cycles"] = _get(parser, "task", "n_cycles", diag, default=16, cast=int)
        options["initial_state"] = _get(parser, "task", "initial_state", diag, default="neel")
        options["sample"] = _get(parser, "task", "sample", diag, default="stroboscopic")
        options["tolerance"] = _get(parser, "task", "tolerance", diag, default=1e-10, cast=float)
        options["p_max"] = _get(parser, "task", "p_max", diag, cast=int)
        options["total_time"] = _get(parser, "task", "total_time", diag, cast=float)
    if "p_max" in overrides and overrides["p_max"] is not None:
        options["p_max"] = overrides["p_max"]

    sweep = None
    if parser.has_section("sweep"):
        sweep = {
            "parameter": _get(parser, "sweep", "parameter", diag, required=True),
            "start": _get(parser, "sweep", "start", diag, required=True, cast=float),
            "stop": _get(parser, "sweep", "stop", diag, required=True, cast=float),
            "steps": _get(parser, "sweep", "steps", diag, required=True, cast=int),
        }
        if sweep["steps"] is not None and sweep["steps"] < 1:
            diag.errors.append("[sweep] steps must be positive")

    out_dir = overrides.get("output_dir") or _get(
        parser, "output", "directory", diag, default=os.environ.get(OUTPUT_DIR_ENV, "out")
    )
    seed = _get(parser, "output", "seed", diag, default=0, cast=int)

    # physics checks (diagnostics, not execution)
    if model is not None and task == "validate" and model.n_sites > SIM_SITE_CAP:
        diag.errors.append(f"[model] n_sites {model.n_sites} exceeds the dense simulation cap of {SIM_SITE_CAP}")
    if model is not None and task == "solve" and options.get("target") == "ising":
        s = model.anisotropy
        sweeping_s = sweep is not None and sweep.get("parameter") == "s"
        if not sweeping_s and s == 1.0:
            diag.errors.append(
                "[model] anisotropy ratio j_z/j_perp = 1 is singular for the Ising target: "
                "the condition response 1/(8(s-1)) has a pole there"
            )
    if profile is not None:
        report = verify_cyclicity(profile)
        if not report.passed:
            for c in report.checks:
                if not c.passed:
                    diag.errors.append(f"[pulse] cyclicity check {c.name} failed (residual {c.residual:.3e})")
    if profile is not None and convention is None:
        diag.defaults.append(
            f"[pulse] convention = {published_convention(profile.shape.kind).value} (published pairing for {profile.shape.kind})"
        )

    if not diag.ok:
        return None, diag
    config = ExperimentConfig(
        task=task,
        model=model,
        profile=profile,
        convention=convention,
        options=options,
        sweep=sweep,
        output_dir=Path(out_dir),
        seed=seed or 0,
        raw={s: dict(parser.items(s)) for s in parser.sections()},
        source=path,
    )
    return config, diag


def validate_config(path, overrides: dict | None = None) -> Diagnostics:
    """Schema and physics checks without running; lists every applied default."""
    try:
        _, diag = load_config(path, overrides)
    except ConfigError as exc:
        diag = Diagnostics(errors=[str(exc)])
    return diag


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, float):
        if np.isnan(value):
            return "nan"
        return format(value, ".17g")
    return str(value)


def _write_text_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    _write_text_atomic(path, "\n".join(lines) + "\n")


class Report:
    """Accumulates the run report; rendered as structured text."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.sections: list[tuple[str, list[str]]] = []
        self.warnings: list[str] = []
        self.timings: list[tuple[str, float]] = []
        self.artifacts: list[Path] = []

    def add(self, title: str, lines: list[str]) -> None:
        self.sections.append((title, list(lines)))

    def warn(self, text: str) -> None:
        self.warnings.append(text)

    def render(self) -> str:
        cfg = self.config
        out = [
            f"spindrive {__version__} run report",
            f"task: {cfg.task}",
            f"config: {cfg.source}",
            f"seed: {cfg.seed}",
            "",
            "[config echo]",
        ]
        for section, items in sorted(cfg.raw.items()):
            for key, val in sorted(items.items()):
                out.append(f"{section}.{key} = {val}")
        out.append("")
        if self.warnings:
            out.append("[warnings]")
            out.extend(f"- {w}" for w in self.warnings)
            out.append("")
        for title, lines in self.sections:
            out.append(f"[{title}]")
            out.extend(lines)
            out.append("")
        if self.artifacts:
            out.append("[artifacts]")
            out.extend(str(p) for p in self.artifacts)
            out.append("")
        out.append("[timings]")
        out.extend(f"{name}: {dt:.3f} s" for name, dt in self.timings)
        return "\n".join(out) + "\n"


def _family_of(profile: PulseProfile) -> str:
    return profile.shape.kind


def _convention_note(report: Report, convention: Convention, family: str) -> None:
    report.warn(
        f"averaging window: {convention.value}; the cosine and square closed forms pair with "
        "different windows (full_cycle vs subcycle, a factor of the subcycle count) and results "
        "carry the window used"
    )
    if family == "square" and convention is Convention.SUBCYCLE:
        report.warn("subcycle window reproduces the square family's published condition domain but is not the window the dynamics oracle confirms for sequential schedules")


# ---------------------------------------------------------------------------
# tasks
# ---------------------------------------------------------------------------


def _solve_values(config: ExperimentConfig):
    if config.sweep and config.sweep["parameter"] == "s":
        sw = config.sweep
        return list(np.linspace(sw["start"], sw["stop"], sw["steps"]))
    return [config.model.anisotropy]


def _run_solve(config: ExperimentConfig, report: Report, threads: int) -> int:
    family = _family_of(config.profile)
    if family not in ("cosine", "square"):
        raise ConfigError("solve currently supports the cosine and square families")
    opts = config.options
    s_values = _solve_values(config)

    def solve_one(s):
        try:
            return solve_condition(
                family,
                float(s),
                opts.get("target", "ising"),
                p_max=opts.get("p_max"),
                bracket=opts.get("bracket", 5.0),
                step=opts.get("grid_step", 0.01),
                target_factors=opts.get("target_factors"),
            )
        except ConditionError as exc:
            return exc

    if threads > 1 and len(s_values) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            solutions = list(pool.map(solve_one, s_values))
    else:
        solutions = [solve_one(s) for s in s_values]

    rows = []
    n_with_roots = 0
    boundary = None
    for s, sol in zip(s_values, solutions):
        if isinstance(sol, ConditionError):
            rows.append((family, float(s), opts.get("target", "ising"), "", -1, float("nan"), 0, str(sol)))
            continue
        if sol.roots:
            n_with_roots += 1
            boundary = max(boundary, s) if boundary is not None else s
            for i, root in enumerate(sol.roots):
                rows.append((family, float(s), sol.target, _fmt(sol.level), i, root, int(root == sol.preferred), sol.diagnostic))
        else:
            rows.append((family, float(s), sol.target, _fmt(sol.level), -1, float("nan"), 0, sol.diagnostic))

    path = config.output_dir / "solutions.csv"
    write_csv(path, ["family", "s", "target", "level", "root_index", "v", "preferred", "diagnostic"], rows)
    report.artifacts.append(path)

    conv = published_convention(family)
    _convention_note(report, conv, family)
    lines = [f"family: {family}", f"target: {opts.get('target', 'ising')}", f"s values: {len(s_values)}", f"s values with solutions: {n_with_roots}"]
    if len(s_values) > 1 and boundary is not None:
        lines.append(f"largest s with a solution: {_fmt(float(boundary))}")
        dom = cosine_ising_domain() if family == "cosine" else square_ising_domain()
        lines.append(f"family domain boundary (from the condition curve extremum): {_fmt(dom.s_boundary)}")
    if len(s_values) == 1 and solutions and not isinstance(solutions[0], ConditionError):
        sol = solutions[0]
        lines.append(f"roots: {', '.join(_fmt(r) for r in sol.roots) if sol.roots else 'none'}")
        if sol.preferred is not None:
            lines.append(f"preferred (smallest strength): {_fmt(sol.preferred)}")
        if sol.diagnostic:
            lines.append(f"diagnostic: {sol.diagnostic}")
    report.add("solve", lines)

    if n_with_roots == 0:
        raise NumericFailure("no engineering solutions found for any requested anisotropy")
    return 0


def _run_surface(config: ExperimentConfig, report: Report, threads: int) -> int:
    family = _family_of(config.profile)
    if family not in ("cosine", "square"):
        raise ConfigError("surface currently supports the cosine and square families")
    opts = config.options
    # grid points at exact integer multiples of the step
    lo = int(round(opts["v_min"] / opts["v_step"]))
    hi = int(round(opts["v_max"] / opts["v_step"]))
    v_grid = np.arange(lo, hi + 1, dtype=float) * opts["v_step"]
    surf = solution_surface(family, opts["p_max_list"], v_grid)
    path = config.output_dir / "surface.csv"
    write_csv(path, ["family", "p_max", "v", "s", "pole"], surf.rows())
    report.artifacts.append(path)
    _convention_note(report, surf.convention, family)
    lines = [f"family: {family}", f"orders: {', '.join(fr.label for fr in surf.frames)}", f"grid points per order: {v_grid.size}"]
    for fr in surf.frames:
        finite = np.isfinite(fr.s)
        positive = fr.v[(fr.s > 0) & finite & ~fr.pole]
        if positive.size:
            lines.append(f"order {fr.label}: spurious positive-anisotropy points appear from |v| = {_fmt(float(np.min(np.abs(positive))))}")
        else:
            lines.append(f"order {fr.label}: no positive-anisotropy points")
    report.add("surface", lines)
    return 0


def _run_moments(config: ExperimentConfig, report: Report, threads: int) -> int:
    conv = config.convention or published_convention(config.profile.shape.kind)
    table = compute_moments(config.profile, config.options["p_max"], conv)
    path = config.output_dir / "moments.csv"
    write_csv(path, ["p", "moment"], [(p, table.moment(p)) for p in range(1, table.p_max + 1)])
    report.artifacts.append(path)
    _convention_note(report, conv, config.profile.shape.kind)
    report.add("moments", [f"shape: {config.profile.shape.kind}", f"p_max: {table.p_max}", f"window: {conv.value}"])
    return 0


def _run_represent(config: ExperimentConfig, report: Report, threads: int) -> int:
    result = is_factorizable(config.profile)
    path = config.output_dir / "represent.csv"
    rows = [(int(result.factorizable), result.witness[0] if result.witness else float("nan"),
             result.witness[1] if result.witness else float("nan"), result.residual)]
    write_csv(path, ["factorizable", "witness_t1", "witness_t2", "residual"], rows)
    report.artifacts.append(path)
    lines = [f"single-profile form: {'yes' if result.factorizable else 'no'}", f"max relative residual: {_fmt(result.residual)}"]
    if result.witness:
        lines.append(f"witness times: {_fmt(result.witness[0])}, {_fmt(result.witness[1])}")
        lines.append("the amplitude vectors at the witness times are not proportional")
    report.add("represent", lines)
    return 0


def _run_validate(config: ExperimentConfig, report: Report, threads: int) -> int:
    opts = config.options
    model = config.model
    conv = config.convention

    def run_point(n_cycles: int, profile: PulseProfile):
        sim = SimConfig(
            model=model,
            profile=profile,
            n_cycles=n_cycles,
            initial_state=opts["initial_state"],
            sample=opts["sample"],
            tolerance=opts["tolerance"],
        )
        exact = evolve_exact(sim)
        em = effective_hamiltonian(model, profile, p_max=opts.get("p_max"), convention=conv)
        effective = evolve_effective(em, sim)
        return sim, exact, em, compare_frames(exact, effective)

    sweeping = config.sweep is not None and config.sweep.get("parameter") == "cycles"
    if sweeping:
        if not opts.get("total_time"):
            raise ConfigError("a cycles sweep needs [task] total_time to hold the physical time fixed")
        sw = config.sweep
        cycle_counts = [int(round(c)) for c in np.linspace(sw["start"], sw["stop"], sw["steps"])]
        cycle_counts = sorted(set(c for c in cycle_counts if c >= 1))
        points = []
        for c in cycle_counts:
            t_sub = opts["total_time"] / (c * config.profile.n_subcycles)
            prof = PulseProfile(config.profile.shape, config.profile.strength, t_sub, config.profile.schedule, config.profile.weak_terms)
            points.append((c, prof))
    else:
        points = [(opts["n_cycles"], config.profile)]

    def work(item):
        c, prof = item
        return (c, prof, run_point(c, prof))

    if threads > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, points))
    else:
        results = [work(p) for p in points]

    summary_rows = []
    lines = []
    for c, prof, (sim, exact, em, rep) in results:
        summary_rows.append((c, prof.omega, exact.substeps_per_subcycle, rep.max_infidelity, rep.mean_infidelity, rep.final_infidelity))
        if em.response is not None:
            lines.append(
                f"cycles={c} omega={_fmt(prof.omega)} response={_fmt(em.response)} "
                f"xy_factor={_fmt(em.xy_factor) if em.xy_factor is not None else 'n/a'} tail={_fmt(em.tail)}"
            )
        if em.tail > 0:
            report.warn(f"truncated series at p_max={em.p_max_used}: first dropped term magnitude {_fmt(em.tail)}")

    path = config.output_dir / "validate_summary.csv"
    write_csv(path, ["n_cycles", "omega", "substeps_per_subcycle", "max_infidelity", "mean_infidelity", "final_infidelity"], summary_rows)
    report.artifacts.append(path)

    # trajectory detail for the last (or only) point
    c, prof, (sim, exact, em, rep) = results[-1]
    mags = exact.magnetization(3, frame="gauge")
    header = ["time", "infidelity"] + [f"sz_{j}" for j in range(model.n_sites)]
    rows = [
        (exact.times[i], rep.infidelity[i], *mags[i]) for i in range(exact.times.size)
    ]
    tpath = config.output_dir / "trajectory.csv"
    write_csv(tpath, header, rows)
    report.artifacts.append(tpath)

    used_conv = em.convention
    _convention_note(report, used_conv, config.profile.shape.kind)
    lines.append(f"effective model truncation: {em.p_max_used}")
    if sweeping and len(summary_rows) >= 2:
        om = np.array([r[1] for r in summary_rows])
        fin = np.array([max(r[5], 1e-300) for r in summary_rows])
        slope = float(np.polyfit(np.log(om), np.log(fin), 1)[0])
        lines.append(f"final-infidelity log-log slope vs omega: {_fmt(slope)}")
        lines.append(f"state-error (sqrt-infidelity) slope vs omega: {_fmt(slope / 2)}")
    lines.append(f"max infidelity (last point): {_fmt(rep.max_infidelity)}")
    report.add("validate", lines)
    return 0


_RUNNERS = {
    "solve": _run_solve,
    "surface": _run_surface,
    "moments": _run_moments,
    "represent": _run_represent,
    "validate": _run_validate,
}


def run(config_path, overrides: dict | None = None, threads: int = 1) -> int:
    """Execute one experiment config; returns the process exit code."""
    try:
        config, diag = load_config(config_path, overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if config is None:
        for err in diag.errors:
            print(f"error: {err}", file=sys.stderr)
        return 2

    report = Report(config)
    for d in diag.defaults:
        report.warn(f"default applied: {d}")
    t0 = time.perf_counter()
    try:
        code = _RUNNERS[config.task](config, report, threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericFailure, SimulationError, QuadratureError, CyclicityError, ConditionError) as exc:
        report.add("failure", [str(exc)])
        report.timings.append(("total", time.perf_counter() - t0))
        _write_text_atomic(config.output_dir / "report.txt", report.render())
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    report.timings.append(("total", time.perf_counter() - t0))
    _write_text_atomic(config.output_dir / "report.txt", report.render())
    print(report.render())
    return code


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="spindrive", description="Pulse design and validation for driven spin systems")
    parser.add_argument("--version", action="version", version=f"spindrive {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment config")
    run_p.add_argument("config")
    run_p.add_argument("--output-dir", default=None)
    run_p.add_argument("--threads", type=int, default=1)
    run_p.add_argument("--p-max", type=int, default=None)
    run_p.add_argument("--convention", choices=[c.value for c in Convention], default=None)

    check_p = sub.add_parser("check", help="validate a config without running")
    check_p.add_argument("config")
    check_p.add_argument("--convention", choices=[c.value for c in Convention], default=None)

    args = parser.parse_args(argv)

    if args.command == "check":
        try:
            diag = validate_config(args.config, {"convention": args.convention})
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        for err in diag.errors:
            print(f"error: {err}")
        for warning in diag.warnings:
            print(f"warning: {warning}")
        for d in diag.defaults:
            print(f"default: {d}")
        print("config ok" if diag.ok else "config has errors")
        return 0

    overrides = {
        "output_dir": args.output_dir,
        "p_max": args.p_max,
        "convention": args.convention,
    }
    return run(args.config, overrides, threads=max(1, args.threads))


if __name__ == "__main__":
    sys.exit(main())
