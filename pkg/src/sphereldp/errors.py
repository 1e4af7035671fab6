"""Exception hierarchy shared by the library and the command-line surface.

Every error carries the process exit code the CLI reports for it.
"""


class SphereLdpError(Exception):
    """Base class for sphereldp failures."""

    exit_code = 1


class UsageError(SphereLdpError, ValueError):
    """Invalid arguments, ranges or preconditions."""

    exit_code = 1


class ParseError(UsageError):
    """Malformed input file."""

    def __init__(self, path, line: int | None, message: str):
        """
        Initialize parse error.

        Args:
            path: File being parsed
            line: 1-based line number (None when the error is not tied to a line)
            message: Description of the problem
        """
        self.path = str(path)
        self.line = line
        location = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{location}: {message}")


class NumericError(SphereLdpError, ArithmeticError):
    """Non-convergence or a failed root bracket."""

    exit_code = 2


class SelfcheckFailure(SphereLdpError):
    """One or more self-check assertions failed."""

    exit_code = 3

    def __init__(self, failed: list[str]):
        self.failed = list(failed)
        super().__init__(f"{len(self.failed)} check(s) failed: {', '.join(self.failed)}")
