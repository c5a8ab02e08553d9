"""Command-line entry point.

One binary, subcommand style: ``solve``, ``mms``, ``sweep``, ``probe``,
``gradient``, ``oracle1d``.  Experiments are configured by file; flags exist
for scripted overrides.  Every CSV artifact carries ``#``-prefixed metadata
(config hash, seed, version, timestamp) so it is self-describing, and only
the timestamp line changes between identical runs.
"""

from __future__ import annotations

import argparse
import datetime
import os
import sys
import traceback

import numpy as np

from . import __version__
from .assemble import constant_field
from .config import ConfigError, Settings, config_hash, parse_config
from .fixedpoint import discover_T_star, solve_nonlinear, write_iteration_csv
from .geometry import boundary_flags
from .problem import replace
from .verify import (ExperimentReport, brute_force_1d, convergence_study,
                     epsilon_sweep, interior_gradient_experiment, mesh_for,
                     mms_problem, uniqueness_probe, write_report)
from .presets import sinusoid
from .problem import constant as constant_coefficient

# exit codes are a function of the outcome only
EXIT_BY_OUTCOME = {
    "Converged": 0,
    "Pass": 0,
    "Fail": 2,
    "Diverged": 2,
    "MaxStepsExceeded": 2,
    "ClampSaturated": 2,
    "Inconclusive": 2,
}
EXIT_CONFIG_ERROR = 3
EXIT_INTERNAL_ERROR = 4

SUBCOMMANDS = ("solve", "mms", "sweep", "probe", "gradient", "oracle1d")


def _metadata(args, text_hash):
    return (
        f"config_hash={text_hash}",
        f"seed={args.seed}",
        f"version={__version__}",
        f"timestamp={datetime.datetime.now().isoformat()}",
    )


def _write_csv(path, header, rows, metadata):
    lines = [f"# {m}" for m in metadata]
    lines.append(",".join(header))
    for row in rows:
        cells = [repr(float(v)) if isinstance(v, float) else str(v) for v in row]
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_verdict(outdir, name, outcome, extra=()):
    path = os.path.join(outdir, f"{name}.verdict.txt")
    with open(path, "w") as fh:
        fh.write("\n".join([outcome, *extra]) + "\n")
    return path


def _prepare_spec(spec, settings: Settings, meta, outdir):
    """Resolve an automatic truncation ceiling before solving."""
    if not settings.t_star_auto:
        return spec
    mesh = mesh_for(spec, settings.divisions)
    T = discover_T_star(mesh, spec, safety=settings.safety,
                        **settings.solver_kwargs())
    _write_csv(os.path.join(outdir, "t_star.csv"), ["T_accepted", "T_star"],
               [(T, settings.safety * T)], meta)
    return replace(spec, T_star=settings.safety * T,
                   T_max=min(spec.T_max, settings.safety * T))


def _cmd_solve(spec, settings, args, meta, outdir, render):
    spec = _prepare_spec(spec, settings, meta, outdir)
    mesh = mesh_for(spec, settings.divisions)
    flags = boundary_flags(mesh)
    run = solve_nonlinear(mesh, spec, constant_field(mesh, spec.T_min),
                          **settings.solver_kwargs())

    field = run.final_field
    coord_cols = ["x1"] if mesh.dim == 1 else ["x1", "x2"]
    rows = [(i, *map(float, mesh.vertices[i]), float(field.values[i]))
            for i in range(mesh.num_vertices)]
    _write_csv(os.path.join(outdir, "field.csv"),
               ["vertex", *coord_cols, "value"], rows, meta)
    write_iteration_csv(run, os.path.join(outdir, "iterations.csv"), meta)
    notes = [f"flag {f}" for f in flags]
    notes.append(f"picard_steps {len(run.steps)}")
    notes.append(f"final_residual {run.final_residual!r}")
    _write_verdict(outdir, "solve", run.status.value, notes)
    if render:
        from . import plots
        plots.render_field(field, outdir)
        plots.render_iterations(run, outdir)
    return EXIT_BY_OUTCOME[run.status.value]


def _finish_experiment(report: ExperimentReport, meta, outdir, render, renderer):
    write_report(report, outdir, meta)
    if render:
        renderer(report, outdir)
    return EXIT_BY_OUTCOME[report.verdict]


def _cmd_mms(spec, settings, args, meta, outdir, render):
    from . import plots
    params = settings.mms
    if params["linear"]:
        spec = replace(spec, b=constant_coefficient(0.0))
    exact = sinusoid(params["offset"], params["amplitude"])
    manufactured = mms_problem(exact, spec, params["oracle_resolution"])
    report = convergence_study(manufactured, exact, params["divisions"],
                               **settings.solver_kwargs())
    return _finish_experiment(report, meta, outdir, render, plots.render_convergence)


def _cmd_sweep(spec, settings, args, meta, outdir, render):
    from . import plots
    report = epsilon_sweep(spec, settings.sweep["eps"],
                           settings.sweep["resolve_factor"],
                           **settings.solver_kwargs())
    return _finish_experiment(report, meta, outdir, render, plots.render_sweep)


def _cmd_probe(spec, settings, args, meta, outdir, render):
    from . import plots
    mesh = mesh_for(spec, settings.divisions)
    solver = settings.solver_kwargs()
    update_tol = solver.pop("update_tol")
    report = uniqueness_probe(mesh, spec, settings.probe["n_starts"], args.seed,
                              lambda_ladder=settings.probe["lambda_ladder"],
                              update_tol=update_tol, **solver)
    return _finish_experiment(report, meta, outdir, render, plots.render_probe)


def _cmd_gradient(spec, settings, args, meta, outdir, render):
    from . import plots
    if not spec.b.is_zero:
        raise ConfigError("the gradient experiment needs coefficients.b = constant(0)")
    report = interior_gradient_experiment(
        spec, settings.gradient["eps"], settings.gradient["margin"],
        settings.gradient["resolve_factor"], **settings.solver_kwargs())
    return _finish_experiment(report, meta, outdir, render, plots.render_gradient)


def _cmd_oracle1d(spec, settings, args, meta, outdir, render):
    from . import plots
    from .assemble import eval_field
    if spec.dim != 1:
        raise ConfigError("oracle1d needs a one-dimensional domain")
    params = settings.oracle1d
    oracle = brute_force_1d(spec, params["n_points"])
    mesh = mesh_for(spec, (params["fem_divisions"],))
    run = solve_nonlinear(mesh, spec, constant_field(mesh, spec.T_min),
                          **settings.solver_kwargs())
    report = ExperimentReport("oracle1d", parameters={
        "n_points": params["n_points"], "fem_divisions": params["fem_divisions"]})
    report.tolerances = {"max_diff": 5e-4}
    if run.converged:
        diff = float(np.max(np.abs(
            run.final_field.values - eval_field(oracle, mesh.vertices))))
        report.rows("comparison").append({
            "max_diff": diff, "picard_steps": len(run.steps),
            "fem_max": float(run.final_field.values.max()),
            "oracle_max": float(oracle.values.max())})
        report.verdict = "Pass" if diff <= 5e-4 else "Fail"
    else:
        report.rows("comparison").append({"status": run.status.value})
        report.verdict = "Fail"
    write_report(report, outdir, meta)
    if render and run.converged:
        plots.render_oracle1d(run.final_field, oracle, outdir)
    return EXIT_BY_OUTCOME[report.verdict]


_DISPATCH = {
    "solve": _cmd_solve,
    "mms": _cmd_mms,
    "sweep": _cmd_sweep,
    "probe": _cmd_probe,
    "gradient": _cmd_gradient,
    "oracle1d": _cmd_oracle1d,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rosseland",
        description="Solver and verification experiments for the "
                    "conduction-radiation equation on periodic composites.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="problem configuration file")
        p.add_argument("--set", action="append", default=[], metavar="SEC.KEY=VAL",
                       help="override a config entry (repeatable)")
        p.add_argument("--out", default=None, help="output directory (default runs/<subcommand>)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--no-plots", action="store_true",
                       help="skip figure rendering, keep CSV output only")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    outdir = args.out or os.path.join("runs", args.subcommand)
    try:
        os.makedirs(outdir, exist_ok=True)
        with open(args.config) as fh:
            text = fh.read()
        spec, settings = parse_config(args.config, args.set)
        meta = _metadata(args, config_hash(text, args.set, args.seed))
        return _DISPATCH[args.subcommand](spec, settings, args, meta, outdir,
                                          render=not args.no_plots)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
