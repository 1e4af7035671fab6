"""Unit tests for sphereldp.measures module."""

import math

import numpy as np
import pytest
from scipy import integrate

from sphereldp.errors import UsageError
from sphereldp.measures import (
    DiscreteMeasure,
    j1,
    j_alpha,
    logpot_diff_discrete,
    relative_entropy,
    stieltjes_discrete,
)


class TestDiscreteMeasure:
    """Tests for DiscreteMeasure construction and accessors."""

    def test_build_sorts_and_merges(self):
        """Should sort atoms and merge coincident locations."""
        nu = DiscreteMeasure.build([1.0, -1.0, 1.0], [0.25, 0.5, 0.25])

        assert list(nu.atoms) == [-1.0, 1.0]
        assert list(nu.weights) == [0.5, 0.5]

    def test_rejects_unsorted_atoms(self):
        """Should refuse unsorted atoms in the raw constructor."""
        with pytest.raises(UsageError):
            DiscreteMeasure(np.array([1.0, 0.0]), np.array([0.5, 0.5]))

    def test_rejects_negative_weights(self):
        """Should refuse negative weights."""
        with pytest.raises(UsageError):
            DiscreteMeasure.build([0.0, 1.0], [1.5, -0.5])

    def test_top_and_bottom_ignore_zero_weights(self):
        """Should report the support extremes of positive weight."""
        nu = DiscreteMeasure.build([-3.0, -1.0, 2.0, 5.0], [0.0, 0.5, 0.5, 0.0])

        assert nu.top == 2.0
        assert nu.bottom == -1.0

    def test_probability_flag(self, make_measure):
        """Should flag total mass one."""
        assert make_measure([0.0, 1.0, 2.0]).is_probability
        assert not DiscreteMeasure.dirac(0.0, 0.5).is_probability

    def test_with_atom_adds_mass(self, make_measure):
        """Should add a new atom or increase an existing one."""
        q = make_measure([0.0, 1.0])

        assert q.with_atom(3.0, 0.25).mass_at(3.0) == 0.25
        assert q.with_atom(1.0, 0.5).mass_at(1.0) == 1.0
        assert q.with_atom(2.0, 0.0) is q


class TestRelativeEntropy:
    """Tests for relative_entropy."""

    def test_zero_for_identical_measures(self, make_measure):
        """Should vanish when nu equals q."""
        q = make_measure([-1.0, 0.0, 2.0], [0.2, 0.3, 0.5])

        assert relative_entropy(q, q) == pytest.approx(0.0, abs=1e-15)

    def test_scaled_measure(self, make_measure):
        """Should equal c - 1 - log c for nu = c q."""
        q = make_measure([-1.0, 0.0, 2.0], [0.2, 0.3, 0.5])

        assert relative_entropy(q, q.scaled(2.0)) == pytest.approx(1.0 - math.log(2.0), rel=1e-14)

    def test_infinite_without_absolute_continuity(self, make_measure):
        """Should be +inf when q charges a point nu does not."""
        q = make_measure([0.0, 1.0])
        nu = DiscreteMeasure.dirac(0.0)

        assert relative_entropy(q, nu) == math.inf

    def test_extra_mass_in_nu_counts_once(self, make_measure):
        """Should add nu's mass outside q's support linearly."""
        q = make_measure([0.0])

        assert relative_entropy(q, q.with_atom(5.0, 0.3)) == pytest.approx(0.3, rel=1e-14)

    def test_requires_probability(self):
        """Should reject a q that is not a probability measure."""
        with pytest.raises(UsageError):
            relative_entropy(DiscreteMeasure.dirac(0.0, 2.0), DiscreteMeasure.dirac(0.0))


class TestEntropyFunctions:
    """Tests for j1 and j_alpha."""

    def test_j1_zero_at_one(self):
        """Should vanish at y = 1 and be infinite at 0."""
        assert j1(1.0) == 0.0
        assert j1(0.0) == math.inf

    def test_j1_arrays(self):
        """Should evaluate elementwise on arrays."""
        out = j1(np.array([0.5, 2.0]))

        assert out == pytest.approx([0.5 * (-0.5 + math.log(2.0)), 0.5 * (1.0 - math.log(2.0))])

    def test_j_alpha_minimum_at_alpha(self):
        """Should vanish at y = alpha."""
        assert j_alpha(0.3, 0.3) == pytest.approx(0.0, abs=1e-16)
        assert j_alpha(0.6, 0.3) > 0

    def test_j_alpha_zero_alpha_is_linear(self):
        """Should reduce to y/2 when alpha = 0."""
        assert j_alpha(0.8, 0.0) == pytest.approx(0.4)

    def test_j_alpha_one_matches_j1(self):
        """Should coincide with j1 when alpha = 1."""
        assert j_alpha(2.5, 1.0) == pytest.approx(j1(2.5), rel=1e-15)

    def test_j_alpha_rejects_bad_alpha(self):
        """Should reject alpha outside [0, 1]."""
        with pytest.raises(UsageError):
            j_alpha(1.0, 1.5)


class TestTransforms:
    """Tests for stieltjes_discrete and logpot_diff_discrete."""

    def test_stieltjes_value(self, make_measure):
        """Should sum w/(xi - x)."""
        q = make_measure([-1.0, 1.0])

        assert stieltjes_discrete(q, 3.0) == pytest.approx(0.5 / 4.0 + 0.5 / 2.0)

    def test_stieltjes_below_support_is_negative(self, make_measure):
        """Should be negative to the left of the atoms."""
        assert stieltjes_discrete(make_measure([-1.0, 1.0]), -3.0) < 0

    def test_stieltjes_rejects_inside_point(self, make_measure):
        """Should refuse points within the atom range."""
        with pytest.raises(UsageError):
            stieltjes_discrete(make_measure([-1.0, 1.0]), 0.0)

    def test_logpot_difference(self, make_measure):
        """Should equal the difference of log-potentials."""
        q = make_measure([-1.0, 1.0])
        expected = 0.5 * (math.log(4.0) + math.log(2.0)) - 0.5 * (math.log(3.0) + math.log(1.0))

        assert logpot_diff_discrete(q, 2.0, 3.0) == pytest.approx(expected, rel=1e-14)

    def test_stieltjes_decreasing_outside_support(self, random_measure):
        """Should strictly decrease on each side of the atoms."""
        q = random_measure(size=25, seed=15)
        above = [stieltjes_discrete(q, xi) for xi in np.linspace(q.top + 0.01, q.top + 5.0, 50)]
        below = [stieltjes_discrete(q, xi) for xi in np.linspace(q.bottom - 5.0, q.bottom - 0.01, 50)]

        assert np.all(np.diff(above) < 0)
        assert np.all(np.diff(below) < 0)

    @pytest.mark.parametrize("a,b", [(0.3, 2.0), (0.05, 4.0)])
    def test_logpot_is_integral_of_stieltjes(self, random_measure, a, b):
        """Should equal the integral of G between the two points."""
        q = random_measure(size=25, seed=16)
        lo, hi = q.top + a, q.top + b

        area, _ = integrate.quad(lambda xi: stieltjes_discrete(q, xi), lo, hi, epsabs=1e-13, epsrel=1e-13)

        assert logpot_diff_discrete(q, lo, hi) == pytest.approx(area, abs=1e-10)

    def test_logpot_rejects_opposite_sides(self, make_measure):
        """Should refuse points on opposite sides of the atoms."""
        with pytest.raises(UsageError):
            logpot_diff_discrete(make_measure([-1.0, 1.0]), -2.0, 2.0)
