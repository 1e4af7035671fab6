"""Unit tests for sphereldp.sphereopt module."""

import math

import numpy as np
import pytest

from sphereldp.errors import UsageError
from sphereldp.measures import DiscreteMeasure
from sphereldp.selfcheck import fibonacci_sphere, sphere_oracle
from sphereldp.semicircle import discretize
from sphereldp.sphereopt import (
    OrderedSpectrum,
    big_f,
    m_star_minus,
    m_star_plus,
    mbar,
    minimize_f,
    solve_secular,
    solve_secular_batch,
)


class TestOrderedSpectrum:
    """Tests for OrderedSpectrum."""

    def test_rejects_increasing_values(self):
        """Should refuse values that are not non-increasing."""
        with pytest.raises(UsageError):
            OrderedSpectrum(np.array([0.0, 1.0]))

    def test_from_unsorted_returns_permutation(self):
        """Should sort descending and return the permutation applied."""
        spec, order = OrderedSpectrum.from_unsorted([0.5, 2.0, -1.0])

        assert list(spec.values) == [2.0, 0.5, -1.0]
        assert list(order) == [1, 0, 2]

    def test_empirical_measure_is_ascending(self):
        """Should convert to a uniform measure with ascending atoms."""
        nu = OrderedSpectrum(np.array([1.0, 0.0, -1.0])).empirical_measure()

        assert list(nu.atoms) == [-1.0, 0.0, 1.0]
        assert nu.is_probability


class TestSolveSecular:
    """Tests for solve_secular."""

    def test_two_dimensional_example(self):
        """Should give theta*=2 and F*=1.5 for lambda=(1,-1), h=(1,0)."""
        solution = solve_secular(OrderedSpectrum(np.array([1.0, -1.0])), [1.0, 0.0])

        assert solution.theta_star == pytest.approx(2.0, rel=1e-14)
        assert solution.f_star == pytest.approx(1.5, rel=1e-14)
        assert not solution.boundary
        assert solution.optimizer == pytest.approx([1.0, 0.0])

    def test_boundary_case(self):
        """Should stop at lambda1 when the secular sum there is at most one."""
        solution = solve_secular(OrderedSpectrum(np.array([1.0, -1.0])), [0.0, 0.5])

        assert solution.boundary
        assert solution.theta_star == 1.0
        assert solution.f_star == pytest.approx(0.5 * (1.0 + 0.25 / 2.0))
        assert solution.optimizer is None

    def test_degenerate_top_eigenvalue(self):
        """Should pool the field mass of a repeated top eigenvalue."""
        solution = solve_secular(OrderedSpectrum(np.array([1.0, 1.0, -1.0])), [0.6, 0.8, 0.0])

        assert solution.theta_star == pytest.approx(2.0, rel=1e-13)
        assert solution.f_star == pytest.approx(1.5, rel=1e-13)

    def test_optimizer_on_unit_sphere(self):
        """Should return an optimizer of unit norm attaining F*."""
        rng = np.random.default_rng(7)
        spec, _ = OrderedSpectrum.from_unsorted(rng.normal(size=8))
        h = rng.normal(size=8)

        solution = solve_secular(spec, h)
        x = solution.optimizer

        assert np.linalg.norm(x) == pytest.approx(1.0, rel=1e-12)
        assert 0.5 * spec.values @ x**2 + h @ x == pytest.approx(solution.f_star, rel=1e-12)

    def test_matches_sphere_oracle(self):
        """Should agree with grid search plus ascent on the 2-sphere."""
        rng = np.random.default_rng(11)
        points = fibonacci_sphere(50_000)
        for _ in range(5):
            spec, _ = OrderedSpectrum.from_unsorted(rng.normal(size=3))
            h = rng.normal(size=3)
            assert solve_secular(spec, h).f_star == pytest.approx(sphere_oracle(spec.values, h, points), abs=1e-3)

    def test_sandwich_bounds(self):
        """Should lie between lambda1/2 and lambda1/2 + |h|."""
        rng = np.random.default_rng(3)
        spec, _ = OrderedSpectrum.from_unsorted(rng.normal(size=20))
        h = rng.normal(size=20)

        f_star = solve_secular(spec, h).f_star

        assert 0.5 * spec.lambda1 <= f_star <= 0.5 * spec.lambda1 + np.linalg.norm(h)

    def test_shift_covariance(self):
        """Should shift F* by c/2 when every eigenvalue shifts by c."""
        spec = OrderedSpectrum(np.array([1.5, 0.2, -0.7]))
        h = np.array([0.3, -0.4, 1.1])

        shifted = solve_secular(spec.shifted(0.8), h).f_star

        assert shifted == pytest.approx(solve_secular(spec, h).f_star + 0.4, rel=1e-12)

    def test_depends_on_field_magnitudes_only(self):
        """Should give the same F* for h, -h and |h|."""
        rng = np.random.default_rng(5)
        spec, _ = OrderedSpectrum.from_unsorted(rng.normal(size=10))
        h = rng.normal(size=10)

        f_star = solve_secular(spec, h).f_star

        assert solve_secular(spec, np.abs(h)).f_star == pytest.approx(f_star, rel=1e-14)
        assert solve_secular(spec, -h).f_star == pytest.approx(f_star, rel=1e-14)

    def test_rejects_length_mismatch(self):
        """Should refuse a field of the wrong length."""
        with pytest.raises(UsageError):
            solve_secular(OrderedSpectrum(np.array([1.0, 0.0])), [1.0])


class TestSolveSecularBatch:
    """Tests for solve_secular_batch."""

    def test_matches_scalar_solver(self):
        """Should reproduce solve_secular row by row, including boundary rows."""
        rng = np.random.default_rng(5)
        spec, _ = OrderedSpectrum.from_unsorted(rng.normal(size=6))
        fields = rng.normal(size=(10, 6))
        fields[3, 0] = 0.0
        fields[3, 1:] *= 1e-3

        values = solve_secular_batch(spec, fields)

        expected = [solve_secular(spec, row).f_star for row in fields]
        assert values == pytest.approx(expected, rel=1e-11, abs=1e-12)


class TestBigF:
    """Tests for big_f, minimize_f and the edge bounds."""

    def test_identity_with_secular_solver(self):
        """Should equal F* for nu = sum h_i^2/gamma delta_{lambda_i} at xi = lambda1."""
        rng = np.random.default_rng(9)
        spec, _ = OrderedSpectrum.from_unsorted(rng.normal(size=12))
        h = rng.normal(size=12)
        h[0] = 0.0
        gamma = float(h @ h)
        nu = DiscreteMeasure.build(spec.values, h * h / gamma)

        assert big_f(spec.lambda1, nu, gamma) == pytest.approx(solve_secular(spec, h).f_star, rel=1e-10)

    def test_unit_atom_at_edge_gives_upper_bound(self):
        """Should attain m*_+ with a unit atom at the edge."""
        assert big_f(2.0, DiscreteMeasure.dirac(2.0), 4.0) == pytest.approx(m_star_plus(2.0, 4.0), rel=1e-12)

    def test_boundary_minimizer(self):
        """Should report the edge as minimizer when the stationary point does not exist."""
        result = minimize_f(2.0, DiscreteMeasure.dirac(-2.0), 1.0)

        assert result.boundary
        assert result.theta == 2.0
        assert result.value == pytest.approx(0.5 * (2.0 + 0.25))

    def test_increasing_in_added_mass(self, random_measure):
        """Should not decrease when mass is added below the edge."""
        q = random_measure(size=20, seed=12)
        base = big_f(2.0, q, 1.0)

        for x, mass in [(-1.5, 0.1), (0.0, 0.3), (1.9, 0.05)]:
            assert big_f(2.0, q.with_atom(x, mass), 1.0) >= base

    @pytest.mark.parametrize("t", [0.25, 0.5, 0.75])
    def test_concave_in_measure(self, random_measure, t):
        """Should lie above the chord between two measures."""
        first = random_measure(size=15, seed=13)
        second = random_measure(size=15, seed=14)
        mixed = DiscreteMeasure.build(
            np.concatenate((first.atoms, second.atoms)),
            np.concatenate((t * first.weights, (1.0 - t) * second.weights)),
        )

        chord = t * big_f(2.0, first, 0.7) + (1.0 - t) * big_f(2.0, second, 0.7)

        assert big_f(2.0, mixed, 0.7) >= chord - 1e-12

    def test_rejects_atom_above_edge(self):
        """Should refuse a measure charging points above xi."""
        with pytest.raises(UsageError):
            big_f(1.0, DiscreteMeasure.dirac(1.5), 1.0)

    def test_mbar_for_semicircle(self):
        """Should approach sqrt(1 + gamma) on the semicircle discretization."""
        assert mbar(discretize(2000), 2.0, 1.0) == pytest.approx(math.sqrt(2.0), abs=1e-3)

    def test_lower_edge_bound(self):
        """Should use theta = lambda_minus + sqrt(gamma) when it exceeds lambda_plus."""
        assert m_star_minus(-2.0, 2.0, 1.0) == pytest.approx(0.5 * (2.0 + 1.0 / 4.0))
        assert m_star_minus(-2.0, 2.0, 25.0) == pytest.approx(0.5 * (3.0 + 5.0))

    def test_mbar_between_edge_bounds(self, random_measure):
        """Should place mbar strictly inside (m*_-, m*_+)."""
        q = random_measure(size=30, seed=4)

        m_bar = mbar(q, q.top, 1.3)

        assert m_star_minus(q.bottom, q.top, 1.3) < m_bar < m_star_plus(q.top, 1.3)
