"""Shared helpers for sphereldp commands."""

import sys
from contextlib import contextmanager
from importlib.metadata import version
from pathlib import Path

from .errors import UsageError

# Help documentation (shipped alongside the sources)
HELP_DOC = "sphereldp-help.md"


def get_version() -> str:
    """Get the package version from package metadata."""
    try:
        return version("sphere-ldp")
    except Exception:
        return "unknown"


def warn(message: str) -> None:
    print(f"Warning: {message}", file=sys.stderr)


def error(message: str) -> None:
    print(f"Error: {message}", file=sys.stderr)


@contextmanager
def open_output(path: str | None):
    """Yield a text stream for ``path``, or stdout when path is None or '-'."""
    if path is None or path == "-":
        yield sys.stdout
        return
    try:
        stream = Path(path).open("w", encoding="utf-8", newline="")
    except OSError as e:
        raise UsageError(f"cannot write {path}: {e.strerror or e}") from e
    with stream:
        yield stream
