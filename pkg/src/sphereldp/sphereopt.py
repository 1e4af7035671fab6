"""Exact solution of max_{|x|=1} 1/2 <lambda, x^2> + <h, x> and the functional F(xi, nu; gamma).

Both reduce to the same scalar problem: find theta above an edge with
sum c_i / (theta - x_i)^2 = 1. The left side is strictly decreasing on the
open half line above the edge, so a bracketed root is unique.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import NumericError, UsageError
from .measures import ATOM_TOL, DiscreteMeasure

logger = logging.getLogger(__name__)

TOP_BLOCK_TOL = 1e-12
NEWTON_POLISH_STEPS = 3


@dataclass(frozen=True)
class OrderedSpectrum:
    """Eigenvalues in non-increasing order."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.size == 0:
            raise UsageError("a spectrum needs at least one eigenvalue")
        if not np.all(np.isfinite(values)):
            raise UsageError("spectrum values must be finite")
        if np.any(np.diff(values) > 0):
            raise UsageError("spectrum values must be non-increasing")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_unsorted(cls, values) -> tuple[OrderedSpectrum, np.ndarray]:
        """Sort descending; also return the permutation applied."""
        values = np.asarray(values, dtype=float).reshape(-1)
        order = np.argsort(-values, kind="stable")
        return cls(values[order]), order

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def lambda1(self) -> float:
        return float(self.values[0])

    @property
    def lambda_n(self) -> float:
        return float(self.values[-1])

    def shifted(self, c: float) -> OrderedSpectrum:
        return OrderedSpectrum(self.values + c)

    def empirical_measure(self) -> DiscreteMeasure:
        return DiscreteMeasure.uniform(self.values)


@dataclass(frozen=True)
class SecularSolution:
    theta_star: float
    f_star: float
    optimizer: np.ndarray | None
    boundary: bool


@dataclass(frozen=True)
class FMinimum:
    """Value and minimizing theta of 1/2 (theta + gamma int nu(dx)/(theta - x))."""

    value: float
    theta: float
    boundary: bool


def _stationary_theta(edge: float, atoms: np.ndarray, coeffs: np.ndarray, edge_mass: float) -> float | None:
    """Root of sum coeffs / (theta - atoms)^2 = 1 above ``edge``; None when the sum at the edge is <= 1.

    ``atoms`` must lie strictly below ``edge``; ``edge_mass`` is the coefficient sitting at the edge itself.
    """

    def excess(theta: float) -> float:
        lhs = float(np.sum(coeffs / (theta - atoms) ** 2))
        if edge_mass > 0:
            lhs += edge_mass / (theta - edge) ** 2
        return lhs - 1.0

    if edge_mass <= 0:
        at_edge = float(np.sum(coeffs / (edge - atoms) ** 2)) - 1.0 if atoms.size else -1.0
        if at_edge <= 0:
            return None

    total = float(np.sum(coeffs)) + edge_mass
    # sum c/(theta - x)^2 <= total/(theta - edge)^2, so edge + sqrt(total) already has excess <= 0
    step = math.sqrt(total) if total > 0 else 1.0
    hi = edge + step
    for _ in range(200):
        if excess(hi) < 0:
            break
        step *= 2.0
        hi = edge + step
    else:
        raise NumericError("secular bracket: no sign change above the edge")

    gap = step
    lo = edge + gap
    for _ in range(2000):
        gap *= 0.5
        lo = edge + gap
        if lo <= edge:
            raise NumericError("secular bracket collapsed onto the edge")
        if excess(lo) > 0:
            break
    else:
        raise NumericError("secular bracket: no positive excess near the edge")

    scale = max(1.0, abs(edge))
    theta = brentq(excess, lo, hi, xtol=1e-14 * scale, rtol=4 * np.finfo(float).eps, maxiter=500)

    # Newton polish, accepted only while it stays in the bracket and improves the residual
    for _ in range(NEWTON_POLISH_STEPS):
        residual = excess(theta)
        slope = -2.0 * float(np.sum(coeffs / (theta - atoms) ** 3))
        if edge_mass > 0:
            slope -= 2.0 * edge_mass / (theta - edge) ** 3
        if slope == 0.0 or residual == 0.0:
            break
        candidate = theta - residual / slope
        if not lo <= candidate <= hi or abs(excess(candidate)) >= abs(residual):
            break
        theta = candidate
    return theta


def solve_secular(spectrum: OrderedSpectrum, h) -> SecularSolution:
    """Maximize 1/2 <lambda, x^2> + <h, x> over the unit sphere.

    Args:
        spectrum: Eigenvalues, descending
        h: External field in the eigenbasis (same length)

    Returns:
        SecularSolution with theta*, the optimum and the optimizer x_i = h_i/(theta* - lambda_i).
        At the boundary theta* = lambda_1 no optimizer is returned.
    """
    lam = spectrum.values
    h = np.asarray(h, dtype=float).reshape(-1)
    if h.size != lam.size:
        raise UsageError(f"field has length {h.size}, spectrum has {lam.size}")
    if not np.all(np.isfinite(h)):
        raise UsageError("field entries must be finite")

    lambda1 = float(lam[0])
    h2 = h * h
    top = lam > lambda1 - TOP_BLOCK_TOL
    top_mass = float(h2[top].sum())
    rest_atoms, rest_coeffs = lam[~top], h2[~top]

    theta = _stationary_theta(lambda1, rest_atoms, rest_coeffs, top_mass)
    if theta is None:
        f_star = 0.5 * (lambda1 + float(np.sum(rest_coeffs / (lambda1 - rest_atoms))))
        logger.debug("secular solve: boundary case at lambda1=%r", lambda1)
        return SecularSolution(theta_star=lambda1, f_star=f_star, optimizer=None, boundary=True)

    x = h / (theta - lam)
    f_star = 0.5 * (theta + float(np.sum(h2 / (theta - lam))))
    return SecularSolution(theta_star=theta, f_star=f_star, optimizer=x, boundary=False)


def solve_secular_batch(spectrum: OrderedSpectrum, fields: np.ndarray, iterations: int = 80) -> np.ndarray:
    """Optimum values for many fields at once against a single spectrum (rows of ``fields``).

    Vectorized bisection followed by bracketed Newton steps; rows whose top-block field
    component vanishes fall back to ``solve_secular``.
    """
    lam = spectrum.values
    fields = np.atleast_2d(np.asarray(fields, dtype=float))
    if fields.shape[1] != lam.size:
        raise UsageError(f"fields have {fields.shape[1]} columns, spectrum has {lam.size} values")
    h2 = fields * fields
    lambda1 = float(lam[0])
    norms = np.sqrt(h2.sum(axis=1))
    top = lam > lambda1 - TOP_BLOCK_TOL
    regular = h2[:, top].sum(axis=1) > 0

    lo = np.full(fields.shape[0], lambda1)
    hi = lambda1 + np.maximum(norms, 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            excess = np.sum(h2 / (mid[:, None] - lam) ** 2, axis=1) - 1.0
            above = excess > 0
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        theta = 0.5 * (lo + hi)
        for _ in range(NEWTON_POLISH_STEPS):
            gap = theta[:, None] - lam
            excess = np.sum(h2 / gap**2, axis=1) - 1.0
            slope = -2.0 * np.sum(h2 / gap**3, axis=1)
            candidate = theta - excess / slope
            ok = np.isfinite(candidate) & (candidate > lo) & (candidate < hi)
            theta = np.where(ok, candidate, theta)
        values = 0.5 * (theta + np.sum(h2 / (theta[:, None] - lam), axis=1))

    for row in np.flatnonzero(~regular):
        values[row] = solve_secular(spectrum, fields[row]).f_star
    return values


def minimize_f(xi: float, nu: DiscreteMeasure, gamma: float) -> FMinimum:
    """Infimum over theta > xi of 1/2 (theta + gamma int nu(dx)/(theta - x)) with its minimizer."""
    if not gamma > 0:
        raise UsageError(f"gamma must be positive, got {gamma!r}")
    if nu.size and nu.top > xi + ATOM_TOL:
        raise UsageError(f"measure has an atom at {nu.top!r} above the edge {xi!r}")

    coeffs = gamma * nu.weights
    at_edge = nu.atoms >= xi - ATOM_TOL
    edge_mass = float(coeffs[at_edge].sum())
    below = ~at_edge
    theta = _stationary_theta(xi, nu.atoms[below], coeffs[below], edge_mass)
    if theta is None:
        value = 0.5 * (xi + float(np.sum(coeffs[below] / (xi - nu.atoms[below]))))
        return FMinimum(value=value, theta=xi, boundary=True)
    value = 0.5 * (theta + float(np.sum(coeffs / (theta - nu.atoms))))
    return FMinimum(value=value, theta=theta, boundary=False)


def big_f(xi: float, nu: DiscreteMeasure, gamma: float) -> float:
    """F(xi, nu; gamma) = 1/2 inf_{theta > xi} [theta + gamma int nu(dx)/(theta - x)]."""
    return minimize_f(xi, nu, gamma).value


def mbar(q: DiscreteMeasure, lambda_plus: float, gamma: float) -> float:
    """The common zero of the quenched rate functions, F(lambda_plus, q; gamma)."""
    if not q.is_probability:
        raise UsageError("mbar needs a probability measure")
    return big_f(lambda_plus, q, gamma)


def m_star_plus(lambda_plus: float, gamma: float) -> float:
    """Largest value of F(lambda_plus, nu; gamma) over probability nu, attained at a unit atom at the edge."""
    return 0.5 * lambda_plus + math.sqrt(gamma)


def m_star_minus(lambda_minus: float, lambda_plus: float, gamma: float) -> float:
    """Smallest value of F(lambda_plus, nu; gamma) over probability nu on [lambda_minus, lambda_plus]."""
    theta = max(lambda_plus, lambda_minus + math.sqrt(gamma))
    return 0.5 * (theta + gamma / (theta - lambda_minus))
