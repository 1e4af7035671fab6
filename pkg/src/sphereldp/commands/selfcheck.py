"""Selfcheck command - run the cross-validation suite."""

from argparse import Namespace

from ..config import Settings
from ..errors import SelfcheckFailure, SphereLdpError
from ..selfcheck import available_checks, run_checks
from ..utils import error


def run(args: Namespace) -> int:
    """
    Execute selfcheck command.

    Prints one PASS/FAIL line per check. --full adds the acceptance-scale
    Monte Carlo checks; --only restricts the run to named checks.

    Args:
        args: Parsed command-line arguments

    Returns:
        int: Exit code (0 if every check passed, 3 otherwise)
    """
    try:
        settings = Settings.resolve(args)
        only = [name.strip() for name in args.only.split(",")] if args.only else None
        if only:
            unknown = sorted(set(only) - set(available_checks(full=True)))
            if unknown:
                print(f"Available checks: {', '.join(available_checks(full=True))}")
                error(f"unknown check(s): {', '.join(unknown)}")
                return 1

        failed = []
        for result in run_checks(full=args.full, settings=settings, only=only):
            status = "PASS" if result.passed else "FAIL"
            print(f"{status}  {result.name:<26} {result.seconds:7.2f}s  {result.detail}", flush=True)
            if not result.passed:
                failed.append(result.name)

        if failed:
            raise SelfcheckFailure(failed)
        print("All checks passed.")
        return 0
    except SphereLdpError as e:
        error(str(e))
        return e.exit_code
