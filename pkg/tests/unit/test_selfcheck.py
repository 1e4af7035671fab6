"""Unit tests for sphereldp.selfcheck module."""

import numpy as np
import pytest

from sphereldp.errors import NumericError
from sphereldp.rates_closed import ie
from sphereldp.selfcheck import (
    CheckFailed,
    _Check,
    available_checks,
    expect,
    ie_quadrature,
    random_probability_measure,
    run_checks,
)


class TestHelpers:
    """Tests for selfcheck helpers."""

    def test_expect_raises_with_message(self):
        """Should raise CheckFailed carrying the message."""
        with pytest.raises(CheckFailed, match="off by 1"):
            expect(False, "off by 1")

    def test_ie_quadrature_matches_closed_form(self):
        """Should agree with the closed-form edge cost."""
        assert ie_quadrature(2.0) == 0.0
        assert ie_quadrature(3.5) == pytest.approx(ie(3.5), abs=1e-10)

    def test_random_probability_measure(self):
        """Should draw a probability measure inside the given interval."""
        q = random_probability_measure(np.random.default_rng(4), 30, low=-1.0, high=1.5)

        assert q.total_mass == pytest.approx(1.0)
        assert q.atoms.min() >= -1.0
        assert q.atoms.max() <= 1.5


class TestRegistry:
    """Tests for available_checks and run_checks."""

    def test_full_checks_extend_default(self):
        """Should list the Monte Carlo checks only in the full suite."""
        quick = available_checks()
        full = available_checks(full=True)

        assert set(quick) < set(full)
        assert "mc-concentration" in full
        assert "mc-concentration" not in quick

    def test_only_filters(self):
        """Should run only the named check."""
        (result,) = run_checks(only=["phase-constants"])

        assert result.name == "phase-constants"
        assert result.passed
        assert result.seconds >= 0.0

    def test_failures_become_results(self, mocker):
        """Should turn check and numeric failures into failed results."""

        def failing(settings):
            raise CheckFailed("max deviation 1e-3")

        def diverging(settings):
            raise NumericError("bracket expansion failed")

        mocker.patch(
            "sphereldp.selfcheck._CHECKS",
            [_Check("ok", lambda settings: "fine", False), _Check("a", failing, False), _Check("b", diverging, False)],
        )

        results = list(run_checks())

        assert [r.passed for r in results] == [True, False, False]
        assert results[0].detail == "fine"
        assert results[1].detail == "max deviation 1e-3"
        assert "bracket expansion failed" in results[2].detail

    def test_full_only_skipped_by_default(self, mocker):
        """Should skip full-only checks unless full is set."""
        mocker.patch("sphereldp.selfcheck._CHECKS", [_Check("slow", lambda settings: "", True)])

        assert list(run_checks()) == []
        assert [r.name for r in run_checks(full=True)] == ["slow"]
