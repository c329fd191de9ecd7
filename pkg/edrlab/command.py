import argparse
import datetime
import logging
import os
import sys

import pandas

from edrlab.config import ConfigError, RunConfig
from edrlab.grid import GridError
from edrlab.moments import AdmissibilityError
from edrlab.parse import (
    FAMILIES,
    FLOAT_FORMAT,
    SpecError,
    parse_family_values,
    parse_model_spec,
    parse_state_spec,
    write_wavefunction_csv,
    write_wavefunction_json,
)
from edrlab.report import (
    blw_summary,
    build_report,
    solve_summary,
    sweep_table,
    write_bundle,
    write_csv,
    write_json,
)
from edrlab.symplectic import DomainError

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_GRID = 4


def _add_common_args(p):
    p.add_argument(
        "--hbar",
        type=float,
        help="Reduced Planck constant (default: from config, else 1.0)",
    )
    p.add_argument(
        "--config",
        help=(
            "INI config file with named states, models and grid settings "
            "(default: $EDRLAB_CONFIG if set)"
        ),
    )
    p.add_argument("--verbose", action="store_true", help="Activate verbose mode.")


def _add_model_args(p):
    p.add_argument(
        "--preset",
        help=(
            "Model spec: von-neumann, contractive, printed-contractive, "
            "error-free:a=<x>, a raw triple alpha,beta,gamma, or a model "
            "name from the config file"
        ),
    )
    p.add_argument("--alpha", type=float, help="Coupling alpha (with --beta, --gamma)")
    p.add_argument("--beta", type=float, help="Coupling beta")
    p.add_argument("--gamma", type=float, help="Coupling gamma")


def _add_output_arg(p, help_text="Output file (default: standard output)"):
    p.add_argument("--output", help=help_text)


def build_parser():
    p = argparse.ArgumentParser(
        prog="edrlab",
        description="Error and disturbance of linear position measurements",
    )
    sub = p.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="Transfer matrix and regime of a coupling")
    _add_model_args(solve)
    _add_output_arg(solve)
    _add_common_args(solve)

    analyze = sub.add_parser(
        "analyze", help="RMS error, disturbance and uniform verdicts for one model"
    )
    _add_model_args(analyze)
    analyze.add_argument(
        "--psi", default="ground", help="Object state spec (default: %(default)s)"
    )
    analyze.add_argument(
        "--xi", default="ground", help="Probe state spec (default: %(default)s)"
    )
    analyze.add_argument(
        "--oracle",
        action="store_true",
        help="Cross-check the closed forms on a wavefunction grid",
    )
    analyze.add_argument("--grid-n", type=int, help="Grid points for --oracle")
    analyze.add_argument("--span", type=float, help="Grid half width in sigmas")
    analyze.add_argument("--csv", help="Also append the report as a CSV row")
    analyze.add_argument(
        "--save-wavefunctions",
        metavar="DIR",
        help="With --oracle, write the sampled psi and xi to DIR (CSV and JSON)",
    )
    _add_output_arg(analyze)
    _add_common_args(analyze)

    sweep = sub.add_parser("sweep", help="Tabulate a one-parameter family of models")
    sweep.add_argument(
        "--family", required=True, choices=FAMILIES, help="Parameter to sweep"
    )
    values = sweep.add_mutually_exclusive_group(required=True)
    values.add_argument("--values", help="Comma-separated values v1,v2,...")
    values.add_argument("--range", help="Evenly spaced values start:stop:num")
    sweep.add_argument("--alpha", type=float, default=0.0, help="Fixed alpha")
    sweep.add_argument("--beta", type=float, default=0.0, help="Fixed beta")
    sweep.add_argument("--gamma", type=float, default=1.0, help="Fixed gamma")
    sweep.add_argument("--psi", default="ground", help="Object state spec")
    sweep.add_argument("--xi", default="ground", help="Probe state spec")
    _add_output_arg(sweep, "Output CSV file (default: standard output)")
    _add_common_args(sweep)

    blw = sub.add_parser(
        "blw", help="Approximate-eigenstate estimates of the uniform error"
    )
    _add_model_args(blw)
    blw.add_argument("--xi", default="ground", help="Probe state spec")
    blw.add_argument(
        "--eps-eig",
        type=float,
        help="Approximate eigenstate tolerance (default: from config, 0.01)",
    )
    _add_output_arg(blw)
    _add_common_args(blw)

    report = sub.add_parser(
        "report", help="Run every reproduction check and write the result bundle"
    )
    report.add_argument("output_dir", help="Output directory for the bundle")
    _add_common_args(report)
    return p


def main(argv=None):
    p = build_parser()
    args = p.parse_args(argv)

    if args.verbose is True:
        logging.basicConfig(format="%(levelname)s: %(message)s", level=logging.INFO)

    logging.info(f"Starting {args.command} at {datetime.datetime.now()}")
    try:
        config = RunConfig.load(args.config)
        hbar = args.hbar if args.hbar is not None else config.hbar
        if not hbar > 0:
            raise ConfigError("hbar must be positive, got {0!r}".format(hbar))
        retval = COMMANDS[args.command](args, config, hbar)
    except (SpecError, ConfigError) as e:
        logging.error(str(e))
        return EXIT_USAGE
    except (DomainError, AdmissibilityError) as e:
        logging.error(str(e))
        return EXIT_DOMAIN
    except GridError as e:
        logging.error(str(e))
        return EXIT_GRID
    logging.info(f"Finished at {datetime.datetime.now()}")
    return retval


def _resolve_model(args, config, hbar):
    """Return (name, params) from --preset or the coupling flags."""
    couplings = [args.alpha, args.beta, args.gamma]
    if args.preset is not None:
        if any(x is not None for x in couplings):
            raise SpecError("Give either --preset or --alpha/--beta/--gamma")
        spec = config.models.get(args.preset, args.preset)
        return args.preset, parse_model_spec(spec, hbar)
    if any(x is None for x in couplings):
        raise SpecError("Need --preset or all of --alpha, --beta, --gamma")
    name = "{0!r},{1!r},{2!r}".format(*couplings)
    return name, parse_model_spec(name, hbar)


def _resolve_state(text, config, hbar):
    return parse_state_spec(config.states.get(text, text), hbar)


class _Output:
    """Open the --output file, or standard output when none is given."""

    def __init__(self, fp, newline=None):
        self.fp = fp
        self.newline = newline
        self.f = None

    def __enter__(self):
        if self.fp is None:
            return sys.stdout
        self.f = open(self.fp, "w", encoding="utf-8", newline=self.newline)
        return self.f

    def __exit__(self, *exc):
        if self.f is not None:
            self.f.close()


def cmd_solve(args, config, hbar):
    name, params = _resolve_model(args, config, hbar)
    summary = solve_summary(params)
    summary = dict([("model", name)] + list(summary.items()))
    with _Output(args.output) as f:
        write_json(f, summary)
    return EXIT_OK


def cmd_analyze(args, config, hbar):
    name, params = _resolve_model(args, config, hbar)
    psi_spec = _resolve_state(args.psi, config, hbar)
    xi_spec = _resolve_state(args.xi, config, hbar)
    grid_n = args.grid_n if args.grid_n is not None else config.grid_n
    span = args.span if args.span is not None else config.grid_span_sigmas
    report = build_report(
        params,
        psi_spec,
        xi_spec,
        model=name,
        psi=args.psi,
        xi=args.xi,
        oracle=args.oracle,
        grid_n=grid_n,
        span_sigmas=span,
        oracle_tolerance=config.tolerances.oracle,
    )
    with _Output(args.output) as f:
        write_json(f, report.to_dict())

    if args.csv:
        write_report_row(args.csv, report)

    if args.oracle and args.save_wavefunctions:
        save_wavefunctions(args.save_wavefunctions, psi_spec, xi_spec, grid_n, span)
    # Verdicts are results, not failures
    return EXIT_OK


REPORT_ROW_KEYS = [
    "model",
    "psi",
    "xi",
    "epsilon",
    "eta",
    "product",
    "sharp_bound",
    "heisenberg_bound",
    "violates_heisenberg",
    "oracle_epsilon",
    "oracle_eta",
]


def write_report_row(fp, report):
    row = dict((k, getattr(report, k)) for k in REPORT_ROW_KEYS)
    row["uniform_error"] = report.uniform_error.kind
    row["uniform_disturbance"] = report.uniform_disturbance.kind
    df = pandas.DataFrame([row])
    write_header = not os.path.exists(fp)
    with open(fp, "a", encoding="utf-8", newline="") as f:
        df.to_csv(f, index=False, header=write_header, float_format=FLOAT_FORMAT)


def save_wavefunctions(output_dir, psi_spec, xi_spec, grid_n, span):
    os.makedirs(output_dir, exist_ok=True)
    for label, spec in [("psi", psi_spec), ("xi", xi_spec)]:
        w = spec.wavefunction(n=grid_n, span_sigmas=span)
        with open(os.path.join(output_dir, label + ".csv"), "w", newline="") as f:
            write_wavefunction_csv(f, w)
        with open(os.path.join(output_dir, label + ".json"), "w") as f:
            write_wavefunction_json(f, w)


def cmd_sweep(args, config, hbar):
    text = args.values if args.values is not None else args.range
    values = parse_family_values(text)
    psi = _resolve_state(args.psi, config, hbar).moments()
    xi = _resolve_state(args.xi, config, hbar).moments()
    df = sweep_table(
        args.family,
        values,
        psi,
        xi,
        fixed=(args.alpha, args.beta, args.gamma),
        hbar=hbar,
    )
    with _Output(args.output, newline="") as f:
        write_csv(f, df)
    return EXIT_OK


def cmd_blw(args, config, hbar):
    name, params = _resolve_model(args, config, hbar)
    xi = _resolve_state(args.xi, config, hbar).moments()
    eps_eig = args.eps_eig if args.eps_eig is not None else config.sweep.eps_eig
    if not eps_eig > 0:
        raise ConfigError("--eps-eig must be positive, got {0!r}".format(eps_eig))
    sweep = config.sweep._replace(eps_eig=eps_eig)
    summary = blw_summary(params, xi, sweep, model=name, xi=args.xi)
    with _Output(args.output) as f:
        write_json(f, summary)
    return EXIT_OK


def cmd_report(args, config, hbar):
    if hbar != config.hbar:
        config.hbar = hbar
        config.validate()
    passed = write_bundle(config, args.output_dir)
    if not passed:
        logging.error("One or more reproduction checks failed")
        return EXIT_CHECK_FAILED
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
    "blw": cmd_blw,
    "report": cmd_report,
}
