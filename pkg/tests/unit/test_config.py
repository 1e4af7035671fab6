"""Unit tests for sphereldp.config module."""

import logging
from argparse import Namespace

import pytest

from sphereldp.config import Settings, read_key_value_file
from sphereldp.errors import ParseError, UsageError


class TestReadKeyValueFile:
    """Tests for read_key_value_file function."""

    def test_skips_comments_and_blanks(self, write_file):
        """Should ignore blank lines and '#' comments and record line numbers."""
        path = write_file("settings.conf", "# numeric settings\n\nworkers = 4\n  chunk_size=128  \n")

        values = read_key_value_file(path)

        assert values["workers"] == ("4", 3)
        assert values["chunk_size"] == ("128", 4)

    def test_last_value_wins(self, write_file):
        """Should keep the last value of a repeated key."""
        path = write_file("settings.conf", "workers = 2\nworkers = 6\n")

        assert read_key_value_file(path)["workers"].text == "6"

    def test_value_may_contain_equals(self, write_file):
        """Should split on the first '=' only."""
        path = write_file("settings.conf", "diag_dist = gaussian:2=x\n")

        assert read_key_value_file(path)["diag_dist"].text == "gaussian:2=x"

    def test_missing_separator(self, write_file):
        """Should report the offending line."""
        path = write_file("settings.conf", "workers = 2\nverbose\n")

        with pytest.raises(ParseError) as excinfo:
            read_key_value_file(path)

        assert excinfo.value.line == 2

    def test_missing_file(self, tmp_path):
        """Should raise UsageError for an unreadable file."""
        with pytest.raises(UsageError, match="cannot read"):
            read_key_value_file(tmp_path / "absent.conf")


class TestSettingsResolve:
    """Tests for Settings.resolve priority order."""

    def test_defaults(self, mock_env):
        """Should fall back to built-in defaults."""
        mock_env({})

        settings = Settings.resolve(Namespace(config=None))

        assert settings == Settings()
        assert settings.eigensolver == "lapack"

    def test_flag_beats_environment(self, mock_env):
        """Should prefer a command-line flag over SPHERELDP_WORKERS."""
        mock_env({"SPHERELDP_WORKERS": "5"})

        settings = Settings.resolve(Namespace(config=None, workers=3))

        assert settings.workers == 3

    def test_environment_beats_file(self, mock_env, write_file):
        """Should prefer the environment over the config file."""
        mock_env({"SPHERELDP_WORKERS": "5"})
        path = write_file("settings.conf", "workers = 7\n")

        settings = Settings.resolve(Namespace(config=str(path), workers=None))

        assert settings.workers == 5

    def test_file_beats_default(self, mock_env, write_file):
        """Should read values from the --config file."""
        mock_env({})
        path = write_file("settings.conf", "jacobi_tol = 1e-10\neigensolver = jacobi\n")

        settings = Settings.resolve(Namespace(config=str(path)))

        assert settings.jacobi_tol == 1e-10
        assert settings.eigensolver == "jacobi"

    def test_config_from_environment(self, mock_env, write_file):
        """Should use SPHERELDP_CONFIG when --config is absent."""
        path = write_file("settings.conf", "chunk_size = 256\n")
        mock_env({"SPHERELDP_CONFIG": str(path)})

        assert Settings.resolve(Namespace(config=None)).chunk_size == 256

    def test_empty_environment_value_ignored(self, mock_env):
        """Should skip an empty environment variable."""
        mock_env({"SPHERELDP_EIGENSOLVER": ""})

        assert Settings.resolve(Namespace()).eigensolver == "lapack"

    def test_unknown_file_key(self, mock_env, write_file):
        """Should reject unknown keys with their line number."""
        mock_env({})
        path = write_file("settings.conf", "workers = 2\nthreads = 4\n")

        with pytest.raises(ParseError) as excinfo:
            Settings.resolve(Namespace(config=str(path)))

        assert excinfo.value.line == 2

    def test_bad_environment_value(self, mock_env):
        """Should name the environment variable holding a bad value."""
        mock_env({"SPHERELDP_DISCRETIZATION_ATOMS": "many"})

        with pytest.raises(UsageError, match="SPHERELDP_DISCRETIZATION_ATOMS"):
            Settings.resolve(Namespace(config=None))

    def test_bad_file_value(self, mock_env, write_file):
        """Should report the line of a value that does not convert."""
        mock_env({})
        path = write_file("settings.conf", "workers = two\n")

        with pytest.raises(ParseError) as excinfo:
            Settings.resolve(Namespace(config=str(path)))

        assert excinfo.value.line == 1


class TestSettingsValidate:
    """Tests for Settings.validate and logging_level."""

    @pytest.mark.parametrize(
        "overrides",
        [{"eigensolver": "qr"}, {"jacobi_tol": 0.0}, {"workers": 0}, {"chunk_size": 0}, {"log_level": "LOUD"}],
    )
    def test_rejects_invalid(self, overrides):
        """Should refuse out-of-range settings."""
        with pytest.raises(UsageError):
            Settings(**overrides).validate()

    def test_logging_level_case_insensitive(self):
        """Should map a lower-case level name to the logging constant."""
        assert Settings(log_level="debug").logging_level == logging.DEBUG
