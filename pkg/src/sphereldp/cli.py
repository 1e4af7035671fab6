import argparse
import logging
import sys

from .commands import rates, selfcheck, simulate, solve
from .config import Settings
from .ensembles import EIGENSOLVERS
from .errors import SphereLdpError
from .io import FORMATS
from .utils import HELP_DOC, error, get_version

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


def add_settings_arguments(parser):
    """Add the numeric settings flags shared by every subcommand."""
    parser.add_argument("--config", metavar="FILE", help="Settings file (key = value); also SPHERELDP_CONFIG")
    parser.add_argument("--eigensolver", choices=EIGENSOLVERS, help="Eigensolver for sampled matrices")
    parser.add_argument("--jacobi-tol", dest="jacobi_tol", type=float, help="Jacobi off-diagonal tolerance")
    parser.add_argument(
        "--atoms",
        dest="discretization_atoms",
        type=int,
        help="Atoms in the semicircle discretization used by the general solvers",
    )
    parser.add_argument("--workers", type=int, help="Worker processes for Monte Carlo runs")
    parser.add_argument("--chunk-size", dest="chunk_size", type=int, help="Samples per Monte Carlo work unit")
    parser.add_argument("--log-level", dest="log_level", help="Logging level (DEBUG, INFO, WARNING, ...)")
    parser.add_argument("--verbose", action="store_true", help="Debug logging on stderr")


def add_output_arguments(parser):
    parser.add_argument("--output", metavar="FILE", help="Write results to FILE instead of stdout")
    parser.add_argument("--format", choices=FORMATS, default="csv", help="Output format (default: csv)")


def create_parser() -> argparse.ArgumentParser:
    """Build the argument parser with all subcommands."""
    parser = argparse.ArgumentParser(
        prog="sphereldp",
        description="Large deviations of the spherical quadratic optimum with an external field",
        epilog=f"For comprehensive help, see: {HELP_DOC}",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {get_version()}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    # Rates command
    rates_parser = subparsers.add_parser(
        "rates",
        help="Tabulate quenched, annealed and replica-prediction rate functions over m",
        epilog=f"For details, see: {HELP_DOC}#command-rates",
    )
    rates_parser.add_argument("--gamma", type=float, help="Field strength |h|^2 (default: 1, or 10 for --fig2)")
    rates_parser.add_argument("--from", dest="m_from", type=float, help="First m of the grid (default: 1.01)")
    rates_parser.add_argument("--to", dest="m_to", type=float, help="Last m of the grid (default: 3)")
    rates_parser.add_argument("--step", type=float, help="Grid step (default: 0.005)")
    rates_parser.add_argument(
        "--flavors",
        help=f"Comma-separated subset of {', '.join(rates.FLAVORS)} (default: quenched-gauss,annealed-gauss)",
    )
    presets = rates_parser.add_mutually_exclusive_group()
    presets.add_argument("--fig1", action="store_true", help="Quenched and annealed Gaussian rates at gamma=1")
    presets.add_argument("--fig2", action="store_true", help="Replica prediction minus annealed rate on (m_c, m_L)")
    presets.add_argument("--fig3", action="store_true", help="Quenched Gaussian rate with theta and psi")
    presets.add_argument("--fig4", action="store_true", help="Quenched and annealed rates from m_U - 0.5 with t")
    presets.add_argument("--profile", type=float, metavar="M", help="Emit the optimal tilt measure at m = M")
    rates_parser.add_argument("--q", metavar="FILE", help="Limiting spectral measure as an atom,weight CSV")
    rates_parser.add_argument("--lambda-minus", dest="lambda_minus", type=float, help="Bottom edge (default: q's)")
    rates_parser.add_argument("--lambda-plus", dest="lambda_plus", type=float, help="Top edge (default: q's)")
    add_output_arguments(rates_parser)
    add_settings_arguments(rates_parser)
    rates_parser.set_defaults(handler=rates.run)

    # Solve command
    solve_parser = subparsers.add_parser(
        "solve",
        help="Solve one instance exactly through the secular equation",
        epilog=f"For details, see: {HELP_DOC}#command-solve",
    )
    solve_parser.add_argument("instance", nargs="?", metavar="INSTANCE", help="File with 'n gamma' then 'lambda h'")
    solve_parser.add_argument("--matrix", metavar="FILE", help="Matrix dump (alternative to INSTANCE)")
    solve_parser.add_argument("--field", metavar="FILE", help="Field vector, one value per line (with --matrix)")
    solve_parser.add_argument("--profile", action="store_true", help="Append the optimizer x*")
    add_output_arguments(solve_parser)
    add_settings_arguments(solve_parser)
    solve_parser.set_defaults(handler=solve.run)

    # Simulate command
    simulate_parser = subparsers.add_parser(
        "simulate",
        help="Estimate rates by Monte Carlo",
        epilog=f"For details, see: {HELP_DOC}#command-simulate",
    )
    simulate_parser.add_argument("config_file", nargs="?", metavar="EXPERIMENT", help="Experiment config (key = value)")
    simulate_parser.add_argument("--seed", type=int, help="Override the experiment seed")
    simulate_parser.add_argument("--samples", type=int, help="Override samples_per_n (or block-check samples)")
    simulate_parser.add_argument("--dump-samples", dest="dump_samples", metavar="FILE", help="Write per-sample rows")
    simulate_parser.add_argument("--blocks", metavar="FRACTIONS", help="Run the chi-square block check, e.g. 0.5,0.5")
    simulate_parser.add_argument("--n", type=int, help="Dimension for --blocks")
    simulate_parser.add_argument(
        "--bin-width", dest="bin_width", type=float, default=0.05, help="Bin width for --blocks (default: 0.05)"
    )
    add_output_arguments(simulate_parser)
    add_settings_arguments(simulate_parser)
    simulate_parser.set_defaults(handler=simulate.run)

    # Selfcheck command
    selfcheck_parser = subparsers.add_parser(
        "selfcheck",
        help="Cross-validate closed forms, solvers and oracles",
        epilog=f"For details, see: {HELP_DOC}#command-selfcheck",
    )
    selfcheck_parser.add_argument("--full", action="store_true", help="Also run the Monte Carlo acceptance checks")
    selfcheck_parser.add_argument("--only", metavar="NAMES", help="Comma-separated check names to run")
    add_settings_arguments(selfcheck_parser)
    selfcheck_parser.set_defaults(handler=selfcheck.run)

    return parser


def configure_logging(parsed: argparse.Namespace) -> int:
    """Set up stderr logging; returns a nonzero exit code if settings do not resolve."""
    try:
        level = logging.DEBUG if parsed.verbose else Settings.resolve(parsed).logging_level
    except SphereLdpError as e:
        error(str(e))
        return e.exit_code
    logging.basicConfig(level=level, stream=sys.stderr, format=LOG_FORMAT)
    return 0


def main(args=None):
    """Parse arguments and dispatch to appropriate command."""
    args = sys.argv[1:] if args is None else args
    parser = create_parser()

    try:
        parsed = parser.parse_args(args)
    except SystemExit as e:
        # argparse exits on usage errors and after --help/--version
        if e.code not in (0, None):
            print(f"\nFor comprehensive help, see: {HELP_DOC}", file=sys.stderr)
            raise SystemExit(1) from e
        raise

    status = configure_logging(parsed)
    if status:
        return status
    return parsed.handler(parsed)
