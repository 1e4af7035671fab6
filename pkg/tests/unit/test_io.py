"""Unit tests for sphereldp.io module."""

import io
import json
import math

import numpy as np
import pytest

from sphereldp.ensembles import SymmetricMatrix
from sphereldp.errors import ParseError, UsageError
from sphereldp.io import (
    format_number,
    read_instance,
    read_matrix_dump,
    read_measure_csv,
    read_spectrum_file,
    write_matrix_dump,
    write_measure_csv,
    write_rows,
)


class TestFormatNumber:
    """Tests for format_number function."""

    @pytest.mark.parametrize(
        "value,text",
        [(1.0, "1"), (0.1, "0.10000000000000001"), (math.inf, "inf"), (-math.inf, "-inf"),
         (math.nan, "nan"), (True, "true"), (np.int64(3), "3"), ("window", "window")],
    )  # fmt: skip
    def test_format(self, value, text):
        """Should print full precision and spell non-finite values."""
        assert format_number(value) == text


class TestWriteRows:
    """Tests for write_rows function."""

    ROWS = [{"m": 1.5, "value": math.inf, "phase": "I"}]

    def test_csv_follows_header_order(self):
        """Should write the header and the columns in header order."""
        out = io.StringIO()

        write_rows(self.ROWS, ["phase", "m", "value"], out)

        assert out.getvalue() == "phase,m,value\nI,1.5,inf\n"

    def test_json_spells_infinity(self):
        """Should emit non-finite numbers as strings in JSON."""
        out = io.StringIO()

        write_rows(self.ROWS, ["m", "value"], out, "json")

        assert json.loads(out.getvalue()) == [{"m": 1.5, "value": "inf"}]

    def test_unknown_format(self):
        """Should refuse formats other than csv and json."""
        with pytest.raises(UsageError):
            write_rows(self.ROWS, ["m"], io.StringIO(), "xml")


class TestReadInstance:
    """Tests for read_instance function."""

    def test_example(self, example_instance):
        """Should read lambda=(1, -1), h=(1, 0) with gamma 1."""
        spec, h, gamma = read_instance(example_instance)

        assert list(spec.values) == [1.0, -1.0]
        assert list(h) == [1.0, 0.0]
        assert gamma == 1.0

    def test_sorts_with_warning(self, write_file, capsys):
        """Should sort descending, permute h alongside and warn."""
        path = write_file("unsorted.txt", "# lambda h\n2 1\n-1 0\n1 1\n")

        spec, h, _ = read_instance(path)

        assert list(spec.values) == [1.0, -1.0]
        assert list(h) == [1.0, 0.0]
        assert "not in descending order" in capsys.readouterr().err

    def test_gamma_mismatch(self, write_file):
        """Should reject a header gamma that differs from |h|^2."""
        path = write_file("bad.txt", "2 2\n1 1\n-1 0\n")

        with pytest.raises(ParseError) as excinfo:
            read_instance(path)

        assert excinfo.value.line == 1

    def test_non_numeric_token(self, write_file):
        """Should report the line of a non-numeric value."""
        path = write_file("bad.txt", "2 1\n1 x\n-1 0\n")

        with pytest.raises(ParseError) as excinfo:
            read_instance(path)

        assert excinfo.value.line == 2

    def test_wrong_line_count(self, write_file):
        """Should reject a data line count different from n."""
        path = write_file("bad.txt", "3 1\n1 1\n-1 0\n")

        with pytest.raises(ParseError, match="expected 3 data lines"):
            read_instance(path)

    def test_missing_file(self, tmp_path):
        """Should raise UsageError for an unreadable file."""
        with pytest.raises(UsageError):
            read_instance(tmp_path / "absent.txt")


class TestSpectrumAndMeasureFiles:
    """Tests for read_spectrum_file and the measure CSV format."""

    def test_spectrum_file_sorted(self, write_file):
        """Should return a descending spectrum."""
        spec = read_spectrum_file(write_file("spec.txt", "0.5\n2\n-1\n"))

        assert list(spec.values) == [2.0, 0.5, -1.0]

    def test_spectrum_file_one_value_per_line(self, write_file):
        """Should refuse two values on one line."""
        with pytest.raises(ParseError):
            read_spectrum_file(write_file("spec.txt", "0.5 2\n"))

    def test_measure_csv(self, make_measure, tmp_path):
        """Should read back a written measure."""
        q = make_measure([-1.0, 0.25, 2.0], [0.2, 0.3, 0.5])
        path = tmp_path / "q.csv"
        with path.open("w", encoding="utf-8") as stream:
            write_measure_csv(q, stream)

        back = read_measure_csv(path)

        assert list(back.atoms) == list(q.atoms)
        assert list(back.weights) == list(q.weights)

    def test_measure_csv_header(self, write_file):
        """Should require the atom,weight header."""
        with pytest.raises(ParseError, match="atom,weight"):
            read_measure_csv(write_file("q.csv", "x,w\n0,1\n"))

    def test_measure_csv_negative_weight(self, write_file):
        """Should reject negative weights with their line."""
        with pytest.raises(ParseError) as excinfo:
            read_measure_csv(write_file("q.csv", "atom,weight\n0,1.5\n1,-0.5\n"))

        assert excinfo.value.line == 3


class TestMatrixDump:
    """Tests for write_matrix_dump and read_matrix_dump."""

    def test_layout(self):
        """Should write n followed by the upper triangle row by row."""
        w = SymmetricMatrix.from_dense(np.array([[1.0, 2.0], [2.0, 3.0]]))
        out = io.StringIO()

        write_matrix_dump(w, out)

        assert out.getvalue() == "2\n1 2\n3\n"

    def test_read(self, write_file):
        """Should rebuild the matrix from its dump."""
        w = read_matrix_dump(write_file("w.txt", "2\n1 2\n3\n"))

        assert np.array_equal(w.to_dense(), np.array([[1.0, 2.0], [2.0, 3.0]]))

    def test_wrong_entry_count(self, write_file):
        """Should reject a dump with too few entries."""
        with pytest.raises(ParseError, match="expected 3"):
            read_matrix_dump(write_file("w.txt", "2\n1 2\n"))
