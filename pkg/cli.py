# cli.py
"""
Command line front end for fracwell
Parses flags and config files, runs one experiment and writes its result table
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from typing import Optional

import numpy as np

from calibration_store import CalibrationStore
from config import Defaults, ExitCodes, RunConfig, Settings
from errors import ConfigurationError, DomainError, FracWellError, NumericalError
from groundstate import (ProfileMeta, decaying_bounds, fit_profile_band, groundstate_mc_rows, moment_lambda_p,
                         phi_at_a, unit_band)
from levy import density_rows, rate_constants, rate_function
from oracles import (brownian_dirichlet_eigenvalue, classical_groundstate_1d, classical_groundstate_radial,
                     dirichlet_eigenvalue, spectral_solve_1d)
from report import ReportBuilder, ResultTable, read_results, write_plot, write_results
from sampler import Brownian, ExitBall, HitBall, as_point, sample_rows, simulate
from stopping import ESTIMATE_COLUMNS, StoppingEstimator, survival_curve
from verify import CHECK_COLUMNS, SuiteContext, list_suites, run_all, run_suite

logger = logging.getLogger(__name__)

SAMPLE_COLUMNS = ["stream", "path_id", "tau_hat", "occupation", "x_after_norm", "truncated"]
DENSITY_COLUMNS = ["r", "j_m", "j_0", "sigma", "tail_mass"]
MC_COLUMNS = ["r", "estimate", "stderr", "branch", "profile_lower", "profile_upper"]
DECAYING_COLUMNS = ["x", "branch", "lower", "full", "upper"]


class UsageError(FracWellError):
    """Bad command line"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text: str) -> tuple:
    try:
        return tuple(float(item) for item in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}")


def _add_model_flags(p):
    p.add_argument("--d", type=int, help="dimension")
    p.add_argument("--alpha", type=float, help="stability index in (0, 2)")
    p.add_argument("--m", type=float, help="mass (0 for the stable process)")


def _add_well_flags(p):
    p.add_argument("--a", type=float, help="well or ball radius")
    p.add_argument("--v", type=float, help="well depth")
    p.add_argument("--potential", choices=["well", "exp"], help="potential shape")
    p.add_argument("--scale", type=float, help="decay length of the exponential potential")


def _add_mc_flags(p):
    p.add_argument("--x", type=_floats, help="start point, comma separated coordinates")
    p.add_argument("--n", type=int, help="number of paths")
    p.add_argument("--h", type=float, help="time step")
    p.add_argument("--tmax", type=float, help="time horizon")
    p.add_argument("--seed", type=int, help="root seed (FW_SEED overrides)")
    p.add_argument("--streams", type=int, help="number of substreams")
    p.add_argument("--workers", type=int, help="worker threads (default: physical cores)")
    p.add_argument("--brownian", action="store_true", help="simulate Brownian motion instead")


def _add_output_flags(p):
    p.add_argument("--out", help="output file, '-' for stdout")
    p.add_argument("--format", choices=["csv", "json"], help="output format")
    p.add_argument("--plot", help="also write an SVG plot to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=Settings.APP_NAME, description="Ground states of relativistic stable operators "
                                                         "with potential wells, by simulation and spectral solves")
    parser.add_argument("--config", help="key=value run configuration file")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    parser.add_argument("--quiet", action="store_true", help="warnings only")
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True

    for name, help_text in (("density", "jump kernels, sigma and tail mass on a radial grid"),
                            ("tailmass", "tail mass near the origin")):
        p = subparsers.add_parser(name, help=help_text)
        _add_model_flags(p)
        p.add_argument("--radii", type=_floats, help="radii to evaluate")
        _add_output_flags(p)

    p = subparsers.add_parser("rate", help="two-sided rate function bounds in d = 1")
    _add_model_flags(p)
    p.add_argument("--radii", type=_floats, help="radii to evaluate")
    p.add_argument("--cache", action="store_true", help="reuse and store calibrated constants on disk")
    _add_output_flags(p)

    p = subparsers.add_parser("sample", help="raw stopped paths")
    _add_model_flags(p)
    _add_well_flags(p)
    _add_mc_flags(p)
    _add_output_flags(p)

    p = subparsers.add_parser("survival", help="P(tau_a > t) at one or more times")
    _add_model_flags(p)
    _add_well_flags(p)
    _add_mc_flags(p)
    p.add_argument("--t", type=_floats, default=(1.0,), help="times, comma separated")
    _add_output_flags(p)

    for name, help_text in (("exit-mgf", "E[exp(lambda tau_a)]"), ("hit-laplace", "E[exp(-lambda T_a)]"),
                            ("mean-exit", "E[tau_a]")):
        p = subparsers.add_parser(name, help=help_text)
        _add_model_flags(p)
        _add_well_flags(p)
        _add_mc_flags(p)
        if name != "mean-exit":
            p.add_argument("--lambda", dest="lam", type=float, help="transform variable")
        if name == "exit-mgf":
            p.add_argument("--lambda-R", dest="lambda_R", type=float,
                           help="Dirichlet eigenvalue of B_a; needed in d >= 2 to flag divergence")
        _add_output_flags(p)

    gs = subparsers.add_parser("groundstate", help="ground state reconstructions")
    gs_sub = gs.add_subparsers(dest="mode", metavar="mode")
    gs_sub.required = True
    for name, help_text in (("mc", "Feynman-Kac estimates with the fitted profile band"),
                            ("spectral", "spectral solve in d = 1"),
                            ("classical", "classical Brownian ground state"),
                            ("profile", "closed-form profile band"),
                            ("moments", "bounds on the moments Lambda_p")):
        p = gs_sub.add_parser(name, help=help_text)
        _add_model_flags(p)
        _add_well_flags(p)
        _add_mc_flags(p)
        p.add_argument("--radii", type=_floats, help="radii to evaluate")
        p.add_argument("--lambda0", type=float, help="|lambda0|, required in d >= 2")
        p.add_argument("--lambda-a", dest="lambda_a", type=float, help="Dirichlet eigenvalue of B_a, required in d >= 2")
        p.add_argument("--nodes", type=int, default=Defaults.SPECTRAL_NODES, help="spectral grid size")
        if name == "mc":
            p.add_argument("--gamma", type=_floats,
                           help="potential levels for --potential exp: gamma inside, gamma1,gamma2 outside")
        if name == "moments":
            p.add_argument("--p", type=_floats, default=(0.5, 1.0, 2.0, 3.0, 4.0), help="moment orders")
        _add_output_flags(p)

    p = subparsers.add_parser("verify", help="run a verification suite ('list' or 'all' accepted)")
    p.add_argument("suite", help="suite name")
    p.add_argument("--seed", type=int, help="root seed")
    p.add_argument("--streams", type=int, help="number of substreams")
    p.add_argument("--workers", type=int, help="worker threads")
    p.add_argument("--scale", type=float, default=1.0, help="multiplier on every path count")
    _add_output_flags(p)

    p = subparsers.add_parser("report", help="plain-text summary of a result file")
    p.add_argument("path", help="CSV or JSON result file")
    p.add_argument("--out", help="report file, '-' for stdout")
    p.add_argument("--plot", help="also write an SVG plot to this path")
    return parser


# ---------------------------------------------------------------------------
# Helpers

_FLAG_FIELDS = {"d": "d", "alpha": "alpha", "m": "m", "a": "a", "v": "v", "potential": "potential",
                "scale": "scale", "x": "x", "lam": "lam", "n": "n", "h": "h", "tmax": "t_max", "seed": "seed",
                "streams": "streams", "workers": "workers", "out": "out", "format": "format", "plot": "plot"}


def resolve_config(args) -> RunConfig:
    """Config file values, then flags, then FW_SEED"""
    base = RunConfig.from_file(args.config) if args.config else RunConfig()
    flags = {field: getattr(args, flag) for flag, field in _FLAG_FIELDS.items() if hasattr(args, flag)}
    if args.command == "verify":
        flags.pop("scale", None)
    return base.merged(**flags)


def _process(config: RunConfig, args):
    return Brownian(config.d) if getattr(args, "brownian", False) else config.model()


def _emit(config: RunConfig, command: str, rows, columns, header: Optional[dict] = None) -> int:
    meta = {"command": command, **config.as_meta()}
    if not write_results(rows, columns, config.out, config.format, meta, header):
        return ExitCodes.USAGE
    if config.plot:
        write_plot(ResultTable(list(columns), list(rows), meta), config.plot, command)
    return ExitCodes.OK


def _radii(args, default) -> np.ndarray:
    radii = getattr(args, "radii", None)
    return np.asarray(radii if radii else default, dtype=float)


def _point(config: RunConfig):
    return as_point(config.x, config.d)


def _lambda_R(process, R: float, supplied: Optional[float] = None) -> float:
    """Dirichlet eigenvalue of B_R: the supplied value, else a deterministic one where available"""
    if supplied is not None:
        if not supplied > 0:
            raise UsageError(f"--lambda-R must be positive, got {supplied}")
        return supplied
    if isinstance(process, Brownian):
        return brownian_dirichlet_eigenvalue(R, process.d)
    if process.d == 1:
        return dirichlet_eigenvalue(process, R)
    logger.warning("no Dirichlet eigenvalue for d = %d; pass --lambda-R to flag divergence", process.d)
    return math.inf


def _require_lambda(config: RunConfig, command: str) -> float:
    if config.lam is None:
        raise UsageError(f"{command} needs --lambda")
    return config.lam


# ---------------------------------------------------------------------------
# Commands

def cmd_density(args, config):
    radii = _radii(args, np.logspace(-2.0, 1.0, 31))
    return _emit(config, args.command, density_rows(config.model(), radii), DENSITY_COLUMNS)


def cmd_tailmass(args, config):
    radii = _radii(args, np.logspace(-3.0, 0.0, 31))
    return _emit(config, args.command, density_rows(config.model(), radii), DENSITY_COLUMNS)


def cmd_rate(args, config):
    p = config.model()
    constants = None
    if p.is_massive:
        constants = rate_constants(p, store=CalibrationStore() if args.cache else None)
    rows = []
    for r in _radii(args, np.logspace(-2.0, 1.0, 31)):
        bound = rate_function(p, float(r), constants)
        rows.append({"r": float(r), "rate_lower": bound.lo, "rate_upper": bound.hi})
    return _emit(config, args.command, rows, ["r", "rate_lower", "rate_upper"])


def cmd_sample(args, config):
    process = _process(config, args)
    point = _point(config)
    region = ExitBall(config.a) if np.linalg.norm(point) < config.a else HitBall(config.a)
    batch = simulate(process, point, region, config.step_config(), config.seed, config.n, config.streams,
                     config.workers)
    return _emit(config, args.command, sample_rows(batch), SAMPLE_COLUMNS)


def _estimator(config, args) -> StoppingEstimator:
    return StoppingEstimator(_process(config, args), config.n, config.step_config(), config.seed,
                             config.streams, config.workers)


def cmd_survival(args, config):
    process = _process(config, args)
    point = _point(config)
    estimates = survival_curve(process, config.a, point, args.t, config.n, config.step_config(), config.seed,
                               config.streams, config.workers)
    r = float(np.linalg.norm(point))
    rows = [{"t": t, **est.row(r)} for t, est in zip(args.t, estimates)]
    return _emit(config, args.command, rows, ["t", *ESTIMATE_COLUMNS])


def cmd_exit_mgf(args, config):
    lam = _require_lambda(config, args.command)
    estimator = _estimator(config, args)
    point = _point(config)
    est = estimator.exit_mgf(config.a, point, lam, _lambda_R(estimator.process, config.a, args.lambda_R))
    return _emit(config, args.command, [est.row(np.linalg.norm(point))], ESTIMATE_COLUMNS)


def cmd_hit_laplace(args, config):
    lam = _require_lambda(config, args.command)
    point = _point(config)
    est = _estimator(config, args).hitting_laplace(config.a, point, lam)
    return _emit(config, args.command, [est.row(np.linalg.norm(point))], ESTIMATE_COLUMNS)


def cmd_mean_exit(args, config):
    point = _point(config)
    est = _estimator(config, args).mean_exit(config.a, point)
    return _emit(config, args.command, [est.row(np.linalg.norm(point))], ESTIMATE_COLUMNS)


def _eigenvalues(args, config, process):
    """(|lambda0|, lambda_a, spectral data or None) for the well"""
    if args.lambda0 is not None and args.lambda_a is not None:
        return args.lambda0, args.lambda_a, None
    if isinstance(process, Brownian):
        if config.d == 1:
            state = classical_groundstate_1d(config.a, config.v)
        else:
            state = classical_groundstate_radial(config.a, config.v, config.d)
        return abs(state.lambda0), brownian_dirichlet_eigenvalue(config.a, config.d), None
    if config.d != 1:
        raise UsageError("in d >= 2 both --lambda0 and --lambda-a are required")
    data = spectral_solve_1d(process, config.well(), N=args.nodes)
    lambda0_abs = args.lambda0 if args.lambda0 is not None else abs(data.lambda0)
    lambda_a = args.lambda_a if args.lambda_a is not None else data.lambda_a
    return lambda0_abs, lambda_a, data


def _meta(args, config, process):
    lambda0_abs, lambda_a, data = _eigenvalues(args, config, process)
    params = config.model()
    return ProfileMeta(params, config.well(), lambda0_abs, lambda_a), data


def _decaying_mc(args, config, process, radii):
    """Level-set bounds on phi0 for the exponential potential, one row per radius"""
    if not args.gamma:
        raise UsageError("groundstate mc --potential exp needs --gamma")
    pot = config.radial_potential()
    if args.lambda0 is not None:
        lambda0_abs = args.lambda0
    elif config.d == 1 and not isinstance(process, Brownian):
        lambda0_abs = abs(spectral_solve_1d(process, pot, N=args.nodes).lambda0)
    else:
        raise UsageError("--lambda0 is required for this process and dimension")
    rows = []
    for k, r in enumerate(radii):
        band = decaying_bounds(process, pot, lambda0_abs, args.gamma, float(r), config.n, config.step_config(),
                               config.seed + k, None, config.streams, config.workers)
        rows.append(band.row())
    header = {"lambda0": -lambda0_abs, "potential": "exp", "v0": pot.v0, "scale": pot.scale,
              "gamma": list(args.gamma)}
    return _emit(config, "groundstate mc", rows, DECAYING_COLUMNS, header)


def cmd_groundstate(args, config):
    mode = args.mode
    process = _process(config, args)
    radii = _radii(args, np.linspace(0.0, 3.0 * config.a, 13))

    if mode == "spectral":
        if config.d != 1:
            raise DomainError("the spectral solver works in d = 1")
        potential = config.well() if config.potential == "well" else config.radial_potential()
        data = spectral_solve_1d(config.model(), potential, N=args.nodes)
        return _emit(config, "groundstate spectral", data.rows(), ["r", "phi0"], data.header())

    if config.potential == "exp":
        if mode != "mc":
            raise ConfigurationError(f"groundstate {mode} works with the well only; "
                                     "--potential exp is supported by spectral and mc")
        return _decaying_mc(args, config, process, radii)

    if mode == "classical":
        if config.d == 1:
            state = classical_groundstate_1d(config.a, config.v)
        else:
            state = classical_groundstate_radial(config.a, config.v, config.d)
        rows = [{"r": float(r), "phi0": float(state(float(r)))} for r in radii]
        header = {"lambda0": state.lambda0,
                  "lambdaR": {format(config.a, "g"): brownian_dirichlet_eigenvalue(config.a, config.d)},
                  "grid": {"radii": len(rows)}}
        return _emit(config, "groundstate classical", rows, ["r", "phi0"], header)

    meta, data = _meta(args, config, process)
    if mode == "mc":
        rows = groundstate_mc_rows(process, meta, radii, config.n, config.step_config(), config.seed,
                                   config.streams, config.workers)
        return _emit(config, "groundstate mc", rows, MC_COLUMNS, meta.as_dict())
    if mode == "profile":
        rows = unit_band(meta).rows(radii)
        return _emit(config, "groundstate profile", rows, ["r", "lower", "upper"], meta.as_dict())

    # moments
    band = unit_band(meta)
    if data is not None:
        keep = data.r <= 5.0 * config.a
        band = fit_profile_band(meta, data.r[keep], data.phi[keep] / float(data.phi_at(config.a)))
    phi_a = phi_at_a(meta.params, meta.well, meta.lambda0_abs, meta.lambda_a)
    rows = [moment_lambda_p(band, phi_a, p_exp).row() for p_exp in args.p]
    return _emit(config, "groundstate moments", rows, ["p", "lower", "upper", "diverged"], meta.as_dict())


def cmd_verify(args, config):
    if args.suite == "list":
        for name, description in list_suites():
            print(f"{name:<25} {description}")
        return ExitCodes.OK
    ctx = SuiteContext(config.seed, config.streams, config.workers, args.scale)
    if args.suite == "all":
        results = run_all(ctx)
    else:
        try:
            results = [run_suite(args.suite, ctx)]
        except KeyError:
            raise UsageError(f"unknown suite {args.suite!r}; try 'verify list'")
    rows = [row for result in results for row in result.rows()]
    code = _emit(config, f"verify {args.suite}", rows, CHECK_COLUMNS)
    failed = [result.name for result in results if not result.passed]
    for result in results:
        if result.error:
            logger.error("suite %s: %s", result.name, result.error)
    if failed:
        logger.error("failed suites: %s", ", ".join(failed))
        return ExitCodes.VERIFICATION
    return code


def cmd_report(args, config):
    table = read_results(args.path)
    if args.plot:
        write_plot(table, args.plot, args.path)
    ok = ReportBuilder(table, args.path).export(args.out or "-")
    return ExitCodes.OK if ok else ExitCodes.USAGE


COMMANDS = {
    "density": cmd_density,
    "tailmass": cmd_tailmass,
    "rate": cmd_rate,
    "sample": cmd_sample,
    "survival": cmd_survival,
    "exit-mgf": cmd_exit_mgf,
    "hit-laplace": cmd_hit_laplace,
    "mean-exit": cmd_mean_exit,
    "groundstate": cmd_groundstate,
    "verify": cmd_verify,
    "report": cmd_report,
}


def configure_logging(args):
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.getLogger().setLevel(level)


def parse_and_dispatch(argv=None) -> int:
    """Run one command; returns the process exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return ExitCodes.USAGE
    except SystemExit as e:
        # --help and --version
        return int(e.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return ExitCodes.USAGE
    configure_logging(args)
    try:
        config = RunConfig() if args.command == "report" else resolve_config(args)
        return COMMANDS[args.command](args, config)
    except UsageError as e:
        print(f"{Settings.APP_NAME}: error: {e}", file=sys.stderr)
        return ExitCodes.USAGE
    except (DomainError, ConfigurationError) as e:
        logger.error("%s", e)
        return ExitCodes.USAGE
    except NumericalError as e:
        logger.error("numerical failure: %s", e)
        return ExitCodes.NUMERICAL
