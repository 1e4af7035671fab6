"""Discrete measures and the transforms the rate functions are built from.

Measures keep their atoms in ascending order. Spectra (see ``sphereopt``)
are stored descending; ``OrderedSpectrum.empirical_measure`` converts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError

ATOM_TOL = 1e-12
PROBABILITY_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite nonnegative measure: strictly ascending atoms with weights."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float).reshape(-1)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if atoms.shape != weights.shape:
            raise UsageError("atoms and weights must have the same length")
        if not (np.all(np.isfinite(atoms)) and np.all(np.isfinite(weights))):
            raise UsageError("measure atoms and weights must be finite")
        if np.any(weights < 0):
            raise UsageError("measure weights must be nonnegative")
        if atoms.size > 1 and np.any(np.diff(atoms) <= 0):
            raise UsageError("measure atoms must be strictly ascending (use DiscreteMeasure.build to merge)")
        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def build(cls, atoms, weights) -> DiscreteMeasure:
        """Sort atoms and merge locations closer than ATOM_TOL by summing weights."""
        atoms = np.asarray(atoms, dtype=float).reshape(-1)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if atoms.shape != weights.shape:
            raise UsageError("atoms and weights must have the same length")
        if atoms.size == 0:
            return cls(atoms, weights)
        order = np.argsort(atoms, kind="stable")
        atoms, weights = atoms[order], weights[order]
        # start a new group wherever the gap to the previous atom exceeds the tolerance
        starts = np.concatenate(([True], np.diff(atoms) > ATOM_TOL))
        group = np.cumsum(starts) - 1
        merged_weights = np.bincount(group, weights=weights)
        return cls(atoms[starts], merged_weights)

    @classmethod
    def dirac(cls, x: float, mass: float = 1.0) -> DiscreteMeasure:
        return cls(np.array([x]), np.array([mass]))

    @classmethod
    def uniform(cls, atoms) -> DiscreteMeasure:
        """Empirical (probability) measure of a sample; repeated values are merged."""
        atoms = np.asarray(atoms, dtype=float).reshape(-1)
        return cls.build(atoms, np.full(atoms.size, 1.0 / atoms.size))

    @property
    def size(self) -> int:
        return int(self.atoms.size)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def is_probability(self) -> bool:
        return abs(self.total_mass - 1.0) <= PROBABILITY_TOL

    @property
    def top(self) -> float:
        """Largest atom carrying positive weight (-inf for the zero measure)."""
        support = self.atoms[self.weights > 0]
        return float(support[-1]) if support.size else -math.inf

    @property
    def bottom(self) -> float:
        support = self.atoms[self.weights > 0]
        return float(support[0]) if support.size else math.inf

    def scaled(self, factor: float) -> DiscreteMeasure:
        if factor < 0:
            raise UsageError("scale factor must be nonnegative")
        return DiscreteMeasure(self.atoms, self.weights * factor)

    def with_atom(self, x: float, mass: float) -> DiscreteMeasure:
        """Return this measure plus ``mass`` at ``x``."""
        if mass < 0:
            raise UsageError("atom mass must be nonnegative")
        if mass == 0:
            return self
        return DiscreteMeasure.build(np.append(self.atoms, x), np.append(self.weights, mass))

    def mass_at(self, x: float) -> float:
        hit = np.abs(self.atoms - x) <= ATOM_TOL
        return float(self.weights[hit].sum())


def _require_probability(q: DiscreteMeasure, name: str = "q") -> None:
    if not q.is_probability:
        raise UsageError(f"{name} must be a probability measure (total mass {q.total_mass!r})")


def relative_entropy(q: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """H(q|nu) = sum q log(q/nu) + nu(R) - 1 for probability q and finite nu.

    Returns +inf when q is not absolutely continuous with respect to nu.
    """
    _require_probability(q)
    mask = q.weights > 0
    q_atoms, q_weights = q.atoms[mask], q.weights[mask]
    if q_atoms.size == 0:
        return nu.total_mass - 1.0
    if nu.size == 0:
        return math.inf

    idx = np.searchsorted(nu.atoms, q_atoms)
    left = np.clip(idx - 1, 0, nu.size - 1)
    right = np.clip(idx, 0, nu.size - 1)
    use_right = np.abs(nu.atoms[right] - q_atoms) <= np.abs(nu.atoms[left] - q_atoms)
    nearest = np.where(use_right, right, left)
    matched = np.abs(nu.atoms[nearest] - q_atoms) <= ATOM_TOL
    nu_weights = np.where(matched, nu.weights[nearest], 0.0)
    if np.any(nu_weights <= 0):
        return math.inf

    value = float(np.sum(q_weights * np.log(q_weights / nu_weights))) + nu.total_mass - 1.0
    return max(value, 0.0)


def j1(y):
    """J1(y) = (y - 1 - log y) / 2, +inf at y = 0. Accepts scalars or arrays."""
    arr = np.asarray(y, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise UsageError("j1 is defined for y >= 0")
    with np.errstate(divide="ignore"):
        out = np.where(arr > 0, 0.5 * (arr - 1.0 - np.log(np.where(arr > 0, arr, 1.0))), math.inf)
    return float(out) if out.ndim == 0 else out


def j_alpha(y, alpha: float):
    """J_alpha(y) = (y - alpha + alpha log(alpha / y)) / 2 with 0 log(0/y) = 0."""
    if not 0.0 <= alpha <= 1.0:
        raise UsageError(f"alpha must lie in [0, 1], got {alpha!r}")
    arr = np.asarray(y, dtype=float)
    if np.any(arr < 0):
        raise UsageError("j_alpha is defined for y >= 0")
    if alpha == 0.0:
        out = 0.5 * arr
    else:
        with np.errstate(divide="ignore"):
            safe = np.where(arr > 0, arr, 1.0)
            out = np.where(arr > 0, 0.5 * (arr - alpha + alpha * np.log(alpha / safe)), math.inf)
    return float(out) if np.ndim(out) == 0 else out


def _outside_side(nu: DiscreteMeasure, xi: float) -> int:
    """+1 when xi is strictly above every atom, -1 when strictly below, else error."""
    if nu.size == 0 or xi > nu.atoms[-1]:
        return 1
    if xi < nu.atoms[0]:
        return -1
    raise UsageError(f"point {xi!r} lies inside or on the atom range [{nu.atoms[0]!r}, {nu.atoms[-1]!r}]")


def stieltjes_discrete(nu: DiscreteMeasure, xi: float) -> float:
    """G(xi) = sum w / (xi - x) for xi outside the atom range."""
    _outside_side(nu, xi)
    return float(np.sum(nu.weights / (xi - nu.atoms)))


def logpot_diff_discrete(nu: DiscreteMeasure, a: float, b: float) -> float:
    """L(b) - L(a) with L(xi) = sum w log|xi - x|; a and b on the same side of the atoms."""
    side_a = _outside_side(nu, a)
    side_b = _outside_side(nu, b)
    if side_a != side_b:
        raise UsageError("logpot_diff_discrete needs both points on the same side of the atoms")
    if a == b:
        return 0.0
    return float(np.sum(nu.weights * np.log1p((b - a) / (a - nu.atoms))))
