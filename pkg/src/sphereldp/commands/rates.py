"""Rates command - tabulate rate functions over a grid of m."""

import math
import sys
from argparse import Namespace

import numpy as np

from ..config import Settings
from ..errors import SphereLdpError, UsageError
from ..io import read_measure_csv, write_measure_csv, write_rows
from ..rates_closed import RateCurvePoint, annealed_gauss, fld_rate, phase_constants, quenched_gauss_semicircle
from ..rates_variational import (
    annealed_general_haar,
    quenched_gauss_general,
    quenched_haar_general,
    solve_haar_shifted_edge,
    tilt_profile,
)
from ..semicircle import EDGE, discretize
from ..utils import error, open_output

FLAVORS = ("quenched-gauss", "annealed-gauss", "quenched-haar", "annealed-haar", "fld")
MEASURE_FLAVORS = ("quenched-gauss", "quenched-haar")
RATE_COLUMNS = ["flavor", "m", "phase", "value", "alpha", "beta", "theta", "psi", "t", "residual"]
FLD_GAP_COLUMNS = ["m", "fld", "annealed_gauss", "difference"]
FLD_GAP_POINTS = 200

VARIATIONAL_PHASE = "variational"
FLD_PHASE = "fld"

PRESETS = {
    "fig1": {"gamma": 1.0, "flavors": ("quenched-gauss", "annealed-gauss"), "m_from": 1.01, "m_to": 3.0},
    "fig3": {"flavors": ("quenched-gauss",), "m_from": 1.01, "m_to": 3.0},
    "fig4": {"flavors": ("quenched-gauss", "annealed-gauss"), "m_to": 3.0},
}
DEFAULT_STEP = 0.005


def m_grid(m_from: float, m_to: float, step: float) -> np.ndarray:
    """Points m_from + k*step up to m_to inclusive."""
    if not step > 0:
        raise UsageError(f"--step must be positive, got {step!r}")
    if m_to < m_from:
        raise UsageError(f"--to ({m_to!r}) is below --from ({m_from!r})")
    count = int(math.floor((m_to - m_from) / step + 1e-9)) + 1
    return m_from + step * np.arange(count)


def parse_flavors(text: str) -> tuple[str, ...]:
    flavors = tuple(f.strip() for f in text.split(",") if f.strip())
    if not flavors:
        raise UsageError("no flavors given")
    unknown = [f for f in flavors if f not in FLAVORS]
    if unknown:
        raise UsageError(f"unknown flavor(s) {', '.join(unknown)} (expected a subset of {', '.join(FLAVORS)})")
    return flavors


def _closed_row(flavor: str, point: RateCurvePoint) -> dict:
    return {"flavor": flavor, **point.as_row(), "residual": math.nan}


def _variational_row(flavor: str, m: float, value: float, state) -> dict:
    row = {"flavor": flavor, "m": m, "phase": VARIATIONAL_PHASE, "value": value, "alpha": math.nan, "beta": math.nan}
    if state is None:
        return {**row, "theta": math.nan, "psi": math.nan, "t": math.nan, "residual": math.nan}
    return {**row, "theta": state.theta, "psi": state.psi, "t": state.t, "residual": state.residual}


class RateTable:
    """Evaluates each flavor at a given m, on sigma or on a user measure q."""

    def __init__(self, gamma: float, settings: Settings, q=None, lambda_minus=None, lambda_plus=None):
        self.gamma = gamma
        self.settings = settings
        self.q = q
        if q is not None:
            self.lambda_minus = q.bottom if lambda_minus is None else lambda_minus
            self.lambda_plus = q.top if lambda_plus is None else lambda_plus
        else:
            self.lambda_minus, self.lambda_plus = -EDGE, EDGE

    @property
    def sigma(self):
        return discretize(self.settings.discretization_atoms)

    def solve_general(self, flavor: str, m: float):
        """(value, LagrangeState) from the general solver for a quenched flavor."""
        if flavor == "quenched-gauss":
            q = self.q if self.q is not None else self.sigma
            return quenched_gauss_general(q, self.lambda_minus, self.lambda_plus, self.gamma, m)
        if flavor == "quenched-haar":
            if self.q is None:
                return solve_haar_shifted_edge(self.sigma, EDGE, -EDGE, self.gamma, m)
            return quenched_haar_general(self.q, self.lambda_minus, self.lambda_plus, self.gamma, m)
        raise UsageError(f"flavor {flavor!r} has no tilt profile (use one of {', '.join(MEASURE_FLAVORS)})")

    def row(self, flavor: str, m: float) -> dict:
        if self.q is not None:
            if flavor not in MEASURE_FLAVORS:
                raise UsageError(f"--q supports only {', '.join(MEASURE_FLAVORS)}, got {flavor!r}")
            return _variational_row(flavor, m, *self.solve_general(flavor, m))
        if flavor == "quenched-gauss":
            return _closed_row(flavor, quenched_gauss_semicircle(m, self.gamma))
        if flavor == "annealed-gauss":
            return _closed_row(flavor, annealed_gauss(m, self.gamma))
        if flavor == "quenched-haar":
            return _variational_row(flavor, m, *self.solve_general(flavor, m))
        if flavor == "annealed-haar":
            result = annealed_general_haar(m, self.gamma, self.settings.discretization_atoms)
            return _variational_row(flavor, m, result.value, result.state)
        value = fld_rate(m, self.gamma)
        return {
            "flavor": flavor, "m": m, "phase": FLD_PHASE, "value": value, "alpha": math.nan, "beta": math.nan,
            "theta": math.nan, "psi": math.nan, "t": math.nan, "residual": math.nan,
        }  # fmt: skip


def fld_gap_rows(gamma: float):
    """fld minus annealed-gauss on the open interval (m_c, m_L)."""
    pc = phase_constants(gamma)
    for m in np.linspace(pc.m_c, pc.m_L, FLD_GAP_POINTS + 2)[1:-1]:
        fld, annealed = fld_rate(m, gamma), annealed_gauss(m, gamma).value
        yield {"m": m, "fld": fld, "annealed_gauss": annealed, "difference": fld - annealed}


def _apply_preset(args: Namespace) -> tuple[float, tuple[str, ...], float, float, float]:
    preset_name = next((name for name in ("fig1", "fig3", "fig4") if getattr(args, name, False)), None)
    preset = PRESETS.get(preset_name, {})
    gamma = args.gamma if args.gamma is not None else preset.get("gamma", 1.0)
    flavors = parse_flavors(args.flavors) if args.flavors is not None else preset.get("flavors")
    if flavors is None:
        flavors = ("quenched-gauss", "annealed-gauss")
    m_from = args.m_from
    if m_from is None:
        m_from = phase_constants(gamma).m_U - 0.5 if preset_name == "fig4" else preset.get("m_from", 1.01)
    m_to = args.m_to if args.m_to is not None else preset.get("m_to", 3.0)
    step = args.step if args.step is not None else DEFAULT_STEP
    return gamma, flavors, m_from, m_to, step


def run(args: Namespace) -> int:
    """
    Execute rates command.

    Writes one row per (m, flavor), the fld gap table for --fig2, or the
    optimal tilt measure for --profile.

    Args:
        args: Parsed command-line arguments

    Returns:
        int: Exit code (0 on success)
    """
    try:
        settings = Settings.resolve(args)
        gamma, flavors, m_from, m_to, step = _apply_preset(args)

        if args.fig2:
            gamma = args.gamma if args.gamma is not None else 10.0
            with open_output(args.output) as stream:
                write_rows(fld_gap_rows(gamma), FLD_GAP_COLUMNS, stream, args.format)
            return 0

        q = read_measure_csv(args.q) if args.q else None
        table = RateTable(gamma, settings, q, args.lambda_minus, args.lambda_plus)

        if args.profile is not None:
            flavor = flavors[0]
            value, state = table.solve_general(flavor, args.profile)
            if state is None:
                raise UsageError(f"m={args.profile!r} lies outside the finite domain of {flavor}")
            q_used = q if q is not None else table.sigma
            print(f"# {flavor} m={args.profile!r} value={value!r}", file=sys.stderr)
            with open_output(args.output) as stream:
                write_measure_csv(tilt_profile(state, q_used), stream)
            return 0

        rows = [table.row(flavor, m) for m in m_grid(m_from, m_to, step) for flavor in flavors]
        with open_output(args.output) as stream:
            write_rows(rows, RATE_COLUMNS, stream, args.format)
        return 0
    except SphereLdpError as e:
        error(str(e))
        return e.exit_code
