"""Text formats: result rows (CSV/JSON), solver instances, measures, matrix dumps."""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np

from .ensembles import SymmetricMatrix
from .errors import ParseError, UsageError
from .measures import DiscreteMeasure
from .sphereopt import OrderedSpectrum
from .utils import warn

FORMATS = ("csv", "json")
GAMMA_CONSISTENCY_TOL = 1e-9


def format_number(x) -> str:
    """Full-precision text for a number; infinities and NaN spelled inf, -inf, nan."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.17g}"
    return str(x)


def _json_value(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else format_number(x)
    return x


def write_rows(rows: Iterable[dict], header: Sequence[str], stream, fmt: str = "csv") -> None:
    """Write row dicts in the column order of ``header``."""
    if fmt == "csv":
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(row[key]) for key in header])
    elif fmt == "json":
        payload = [{key: _json_value(row[key]) for key in header} for row in rows]
        json.dump(payload, stream, indent=2)
        stream.write("\n")
    else:
        raise UsageError(f"unknown format {fmt!r} (expected one of {', '.join(FORMATS)})")


def _data_lines(path: Path):
    """(line number, stripped text) for non-blank, non-comment lines."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror or e}") from e
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield number, line


def _floats(path: Path, number: int, tokens: list[str]) -> list[float]:
    try:
        values = [float(tok) for tok in tokens]
    except ValueError as e:
        raise ParseError(path, number, f"non-numeric token in {' '.join(tokens)!r}") from e
    if not all(math.isfinite(v) for v in values):
        raise ParseError(path, number, "values must be finite")
    return values


def read_instance(path) -> tuple[OrderedSpectrum, np.ndarray, float]:
    """
    Read a solver instance: a line "n gamma" followed by n lines "lambda_i h_i".

    Unsorted eigenvalues are sorted descending with h permuted alongside.

    Args:
        path: Instance file

    Returns:
        Tuple of (spectrum, h in the sorted order, gamma)
    """
    path = Path(path)
    lines = list(_data_lines(path))
    if not lines:
        raise ParseError(path, None, "empty instance file")

    header_line, header = lines[0]
    tokens = header.split()
    if len(tokens) != 2:
        raise ParseError(path, header_line, "expected 'n gamma'")
    try:
        n = int(tokens[0])
    except ValueError as e:
        raise ParseError(path, header_line, f"n must be an integer, got {tokens[0]!r}") from e
    (gamma,) = _floats(path, header_line, tokens[1:])
    if n < 1:
        raise ParseError(path, header_line, "n must be at least 1")
    if len(lines) - 1 != n:
        raise ParseError(path, lines[-1][0], f"expected {n} data lines, found {len(lines) - 1}")

    lam = np.empty(n)
    h = np.empty(n)
    for i, (number, text) in enumerate(lines[1:]):
        tokens = text.split()
        if len(tokens) != 2:
            raise ParseError(path, number, "expected 'lambda h'")
        lam[i], h[i] = _floats(path, number, tokens)

    norm2 = float(h @ h)
    if abs(norm2 - gamma) > GAMMA_CONSISTENCY_TOL * max(1.0, abs(gamma)):
        raise ParseError(path, header_line, f"gamma={gamma!r} does not match |h|^2={norm2!r}")

    if np.any(np.diff(lam) > 0):
        warn(f"{path}: eigenvalues not in descending order, sorting")
    spec, order = OrderedSpectrum.from_unsorted(lam)
    return spec, h[order], gamma


def read_vector_file(path) -> np.ndarray:
    """One number per line."""
    path = Path(path)
    values = []
    for number, text in _data_lines(path):
        tokens = text.split()
        if len(tokens) != 1:
            raise ParseError(path, number, "expected a single value per line")
        values.extend(_floats(path, number, tokens))
    if not values:
        raise ParseError(path, None, "no values found")
    return np.array(values)


def read_spectrum_file(path) -> OrderedSpectrum:
    values = read_vector_file(path)
    if np.any(np.diff(values) > 0):
        warn(f"{path}: eigenvalues not in descending order, sorting")
    return OrderedSpectrum.from_unsorted(values)[0]


def write_measure_csv(measure: DiscreteMeasure, stream) -> None:
    rows = ({"atom": x, "weight": w} for x, w in zip(measure.atoms, measure.weights))
    write_rows(rows, ["atom", "weight"], stream)


def read_measure_csv(path) -> DiscreteMeasure:
    """Measure from an ``atom,weight`` CSV; atoms are sorted and merged."""
    path = Path(path)
    lines = list(_data_lines(path))
    if not lines or lines[0][1].replace(" ", "") != "atom,weight":
        raise ParseError(path, lines[0][0] if lines else None, "expected header 'atom,weight'")
    atoms, weights = [], []
    for number, text in lines[1:]:
        tokens = [tok.strip() for tok in text.split(",")]
        if len(tokens) != 2:
            raise ParseError(path, number, "expected 'atom,weight'")
        x, w = _floats(path, number, tokens)
        if w < 0:
            raise ParseError(path, number, "weights must be nonnegative")
        atoms.append(x)
        weights.append(w)
    if not atoms:
        raise ParseError(path, None, "measure has no atoms")
    return DiscreteMeasure.build(atoms, weights)


def write_matrix_dump(w: SymmetricMatrix, stream) -> None:
    """``n`` on the first line, then the upper triangle row by row."""
    stream.write(f"{w.n}\n")
    rows, _ = np.triu_indices(w.n)
    for i in range(w.n):
        stream.write(" ".join(format_number(v) for v in w.upper[rows == i]) + "\n")


def read_matrix_dump(path) -> SymmetricMatrix:
    path = Path(path)
    lines = list(_data_lines(path))
    if not lines:
        raise ParseError(path, None, "empty matrix dump")
    first_line, first = lines[0]
    try:
        n = int(first)
    except ValueError as e:
        raise ParseError(path, first_line, f"expected the matrix order, got {first!r}") from e
    if n < 1:
        raise ParseError(path, first_line, "matrix order must be at least 1")
    entries: list[float] = []
    for number, text in lines[1:]:
        entries.extend(_floats(path, number, text.split()))
    expected = n * (n + 1) // 2
    if len(entries) != expected:
        raise ParseError(path, lines[-1][0], f"expected {expected} upper-triangle entries, found {len(entries)}")
    return SymmetricMatrix(n, np.array(entries))
