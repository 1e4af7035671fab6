"""Shared pytest fixtures for sphereldp tests."""

from argparse import Namespace

import numpy as np
import pytest

from sphereldp.measures import DiscreteMeasure


@pytest.fixture
def mock_env(mocker):
    """
    Fixture to mock os.environ with clean state.

    Usage:
        def test_something(mock_env):
            mock_env({'SPHERELDP_WORKERS': '4'})
    """

    def _mock_env(env_dict: dict[str, str] | None = None):
        if env_dict is None:
            env_dict = {}
        # Start with empty environment
        mocker.patch.dict("os.environ", env_dict, clear=True)
        return env_dict

    return _mock_env


@pytest.fixture
def make_measure():
    """
    Fixture building a DiscreteMeasure; weights default to uniform probability.

    Usage:
        def test_something(make_measure):
            q = make_measure([-1.0, 0.5, 1.0])
    """

    def _make_measure(atoms, weights=None):
        atoms = np.asarray(atoms, dtype=float)
        if weights is None:
            weights = np.full(atoms.size, 1.0 / atoms.size)
        return DiscreteMeasure.build(atoms, weights)

    return _make_measure


@pytest.fixture
def random_measure():
    """
    Fixture drawing a random probability measure on [-2, 2] from a seeded generator.

    Usage:
        def test_something(random_measure):
            q = random_measure(size=50, seed=3)
    """

    def _random_measure(size: int = 50, seed: int = 0):
        rng = np.random.default_rng(seed)
        weights = rng.dirichlet(np.ones(size))
        return DiscreteMeasure.build(rng.uniform(-2.0, 2.0, size), weights / weights.sum())

    return _random_measure


@pytest.fixture
def write_file(tmp_path):
    """
    Fixture writing text to a file under tmp_path and returning its path.

    Usage:
        def test_something(write_file):
            path = write_file("instance.txt", "2 1\\n1 1\\n-1 0\\n")
    """

    def _write_file(name: str, text: str):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write_file


@pytest.fixture
def example_instance(write_file):
    """The n=2 instance lambda=(1, -1), h=(1, 0): theta*=2, F*=1.5."""
    return write_file("example.txt", "2 1\n1 1\n-1 0\n")


COMMAND_DEFAULTS = {
    "rates": {
        "gamma": None, "m_from": None, "m_to": None, "step": None, "flavors": None,
        "fig1": False, "fig2": False, "fig3": False, "fig4": False, "profile": None,
        "q": None, "lambda_minus": None, "lambda_plus": None,
    },
    "solve": {"instance": None, "matrix": None, "field": None, "profile": False},
    "simulate": {
        "config_file": None, "seed": None, "samples": None, "dump_samples": None,
        "blocks": None, "n": None, "bin_width": 0.05,
    },
    "selfcheck": {"full": False, "only": None},
}  # fmt: skip


@pytest.fixture
def make_args():
    """
    Fixture building the Namespace a subcommand handler receives.

    Usage:
        def test_something(make_args):
            args = make_args("rates", flavors="fld", m_from=1.5, m_to=1.6)
    """

    def _make_args(command: str, **overrides):
        values = {
            "command": command, "output": None, "format": "csv", "config": None, "eigensolver": None,
            "jacobi_tol": None, "discretization_atoms": None, "workers": None, "chunk_size": None,
            "log_level": None, "verbose": False,
        }  # fmt: skip
        values.update(COMMAND_DEFAULTS[command])
        values.update(overrides)
        return Namespace(**values)

    return _make_args
