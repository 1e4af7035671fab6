"""Solve command - exact optimum of a single spherical quadratic instance."""

from argparse import Namespace

import numpy as np

from ..config import Settings
from ..ensembles import spectrum
from ..errors import SphereLdpError, UsageError
from ..io import read_instance, read_matrix_dump, read_vector_file, write_rows
from ..sphereopt import TOP_BLOCK_TOL, solve_secular
from ..utils import error, open_output

REPORT_COLUMNS = ["quantity", "value"]


def _load(args: Namespace, settings: Settings):
    """Return (spectrum, h in eigenbasis, basis or None, gamma from file or None)."""
    if args.instance:
        if args.matrix or args.field:
            raise UsageError("give either an instance file or --matrix/--field, not both")
        spec, h, gamma = read_instance(args.instance)
        return spec, h, None, gamma

    if not (args.matrix and args.field):
        raise UsageError("an instance file, or both --matrix and --field, are required")
    w = read_matrix_dump(args.matrix)
    h = read_vector_file(args.field)
    if h.size != w.n:
        raise UsageError(f"field has {h.size} entries but the matrix has order {w.n}")
    spec, basis = spectrum(w, settings.eigensolver, settings.jacobi_tol)
    return spec, basis @ h, basis, None


def optimizer(spec, h: np.ndarray, solution) -> np.ndarray:
    """x*; at the boundary the free mass goes to the first top eigenvector."""
    if solution.optimizer is not None:
        return solution.optimizer
    lam = spec.values
    top = lam > spec.lambda1 - TOP_BLOCK_TOL
    x = np.zeros_like(h)
    x[~top] = h[~top] / (spec.lambda1 - lam[~top])
    x[int(np.argmax(top))] = np.sqrt(max(0.0, 1.0 - float(x @ x)))
    return x


def report_rows(args: Namespace, settings: Settings):
    spec, h, basis, gamma = _load(args, settings)
    solution = solve_secular(spec, h)
    rows = [
        {"quantity": "n", "value": spec.n},
        {"quantity": "gamma", "value": float(h @ h) if gamma is None else gamma},
        {"quantity": "lambda1", "value": spec.lambda1},
        {"quantity": "theta_star", "value": solution.theta_star},
        {"quantity": "F_star", "value": solution.f_star},
        {"quantity": "boundary", "value": solution.boundary},
    ]
    if args.profile:
        x = optimizer(spec, h, solution)
        if basis is not None:
            x = basis.T @ x
        rows.extend({"quantity": f"x[{i}]", "value": float(v)} for i, v in enumerate(np.asarray(x)))
    return rows


def run(args: Namespace) -> int:
    """
    Execute solve command.

    Reports theta*, F* and whether the optimum sits on the boundary case
    (h_1 = 0 with a degenerate multiplier). With --profile the optimizer x*
    is appended, in the original coordinates for --matrix input.

    Args:
        args: Parsed command-line arguments

    Returns:
        int: Exit code (0 on success)
    """
    try:
        settings = Settings.resolve(args)
        rows = report_rows(args, settings)
        with open_output(args.output) as stream:
            write_rows(rows, REPORT_COLUMNS, stream, args.format)
        return 0
    except SphereLdpError as e:
        error(str(e))
        return e.exit_code
