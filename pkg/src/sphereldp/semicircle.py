"""The semicircle law sigma on [-2, 2]: closed-form transforms and discretizations.

Positions are parametrized by the angle phi in [0, pi] with x = 2 cos(phi);
the sigma-mass above x is (phi - sin(phi) cos(phi)) / pi.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import stats
from scipy.optimize import brentq

from .errors import UsageError
from .measures import DiscreteMeasure
from .sphereopt import OrderedSpectrum

EDGE = 2.0

# frozen scipy distribution for sigma (density sqrt(4 - x^2) / (2 pi))
law = stats.semicircular(loc=0.0, scale=EDGE)


def _check_outside(xi: float) -> None:
    if abs(xi) < EDGE:
        raise UsageError(f"semicircle transforms need |xi| >= 2, got {xi!r}")


def alpha_of(xi: float) -> float:
    """The root alpha >= 1 of alpha + 1/alpha = |xi|, i.e. 1 / G(|xi|)."""
    _check_outside(xi)
    a = abs(xi)
    return 0.5 * (a + math.sqrt(max(a * a - 4.0, 0.0)))


def stieltjes(xi: float) -> float:
    """G(xi) = int sigma(dx) / (xi - x), odd in xi."""
    return math.copysign(1.0 / alpha_of(xi), xi)


def logpot(xi: float) -> float:
    """L(xi) = int log|xi - x| sigma(dx) = alpha^-2 / 2 + log(alpha), even in xi."""
    alpha = alpha_of(xi)
    return 0.5 / (alpha * alpha) + math.log(alpha)


def _mass_above(phi: float) -> float:
    return (phi - math.sin(phi) * math.cos(phi)) / math.pi


@lru_cache(maxsize=64)
def _angles_for_mass(masses: tuple[float, ...]) -> np.ndarray:
    """Angles phi with sigma-mass above 2 cos(phi) equal to each requested mass."""
    out = np.empty(len(masses))
    for i, mass in enumerate(masses):
        if mass <= 0.0:
            out[i] = 0.0
        elif mass >= 1.0:
            out[i] = math.pi
        else:
            out[i] = brentq(lambda phi, m=mass: _mass_above(phi) - m, 0.0, math.pi, xtol=1e-15, rtol=1e-15)
    return out


def quantiles(n: int) -> OrderedSpectrum:
    """The semicircle-quantile spectrum: lambda_j at upper-tail mass (j - 1/2)/n, descending."""
    if n < 1:
        raise UsageError("n must be at least 1")
    masses = (np.arange(1, n + 1) - 0.5) / n
    return OrderedSpectrum(law.isf(masses))


@lru_cache(maxsize=16)
def discretize(n_atoms: int = 2000) -> DiscreteMeasure:
    """Equal-mass discretization of sigma that keeps the edge transforms accurate.

    Each of the ``n_atoms`` cells gets weight 1/n_atoms. Its atom is the point whose
    1/(e - x) equals the cell average of 1/(e - x), with e the nearer edge (+2 for the
    upper half of the cells, -2 for the lower half). The singular half of G(+-2) is then
    exact and the smooth half carries only a quadratic cell error.
    """
    if n_atoms < 2:
        raise UsageError("a semicircle discretization needs at least 2 atoms")
    boundaries = _angles_for_mass(tuple(k / n_atoms for k in range(n_atoms + 1)))
    # cell k lies between angles boundaries[k] (upper end) and boundaries[k+1] (lower end)
    upper_phi, lower_phi = boundaries[:-1], boundaries[1:]
    upper_avg = n_atoms * ((lower_phi + np.sin(lower_phi)) - (upper_phi + np.sin(upper_phi))) / math.pi
    lower_avg = n_atoms * ((lower_phi - np.sin(lower_phi)) - (upper_phi - np.sin(upper_phi))) / math.pi
    upper_half = np.arange(n_atoms) < n_atoms / 2
    atoms = np.where(upper_half, EDGE - 1.0 / upper_avg, -EDGE + 1.0 / lower_avg)
    weights = np.full(n_atoms, 1.0 / n_atoms)
    return DiscreteMeasure.build(atoms, weights)
