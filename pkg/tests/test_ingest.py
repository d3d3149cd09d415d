"""
Tests for CSV ingestion
"""

import numpy as np
import pytest

from dackrr.errors import ParseError
from dackrr.ingest import ingest_csv


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_ingest_single_row(tmp_path):
    """Test header x,y with one row"""
    X, y = ingest_csv(_write(tmp_path, "x,y\n0.5,1.0\n"))
    np.testing.assert_array_equal(X, [[0.5]])
    np.testing.assert_array_equal(y, [1.0])


def test_ingest_infers_dimension(tmp_path):
    """Test a 3-column header gives d = 2 and keeps row order"""
    X, y = ingest_csv(_write(tmp_path, "x1,x2,y\n1,2,3\n4,5,6\n7,8,9\n"))
    assert X.shape == (3, 2)
    np.testing.assert_array_equal(X[:, 0], [1.0, 4.0, 7.0])
    np.testing.assert_array_equal(y, [3.0, 6.0, 9.0])


def test_ingest_skips_blank_lines(tmp_path):
    """Test blank lines are ignored"""
    X, y = ingest_csv(_write(tmp_path, "x,y\n\n0.1,0.2\n\n0.3,0.4\n"))
    assert X.shape == (2, 1)


def test_ingest_no_rows(tmp_path):
    """Test an empty data section"""
    with pytest.raises(ParseError) as info:
        ingest_csv(_write(tmp_path, "x,y\n"))
    assert "no rows" in str(info.value)


def test_ingest_missing_file(tmp_path):
    """Test a missing file is a parse error"""
    with pytest.raises(ParseError):
        ingest_csv(tmp_path / "absent.csv")


def test_ingest_non_numeric_cell_line_number(tmp_path):
    """Test the 1-based line of a non-numeric cell is reported"""
    with pytest.raises(ParseError) as info:
        ingest_csv(_write(tmp_path, "x,y\n0.1,0.2\n0.3,abc\n"))
    assert info.value.line == 3


def test_ingest_column_count_line_number(tmp_path):
    """Test an inconsistent column count reports its line"""
    with pytest.raises(ParseError) as info:
        ingest_csv(_write(tmp_path, "x1,x2,y\n1,2,3\n4,5\n"))
    assert info.value.line == 3


def test_ingest_rejects_non_finite(tmp_path):
    """Test nan and inf values are rejected"""
    with pytest.raises(ParseError) as info:
        ingest_csv(_write(tmp_path, "x,y\n0.1,nan\n"))
    assert info.value.line == 2


def test_ingest_requires_target_column(tmp_path):
    """Test the last header column must be y"""
    with pytest.raises(ParseError) as info:
        ingest_csv(_write(tmp_path, "a,b\n1,2\n"))
    assert info.value.line == 1


def test_ingest_empty_file(tmp_path):
    """Test a file without a header"""
    with pytest.raises(ParseError):
        ingest_csv(_write(tmp_path, ""))


def test_ingest_rejects_non_utf8(tmp_path):
    """Test undecodable bytes are a parse error"""
    path = tmp_path / "data.csv"
    path.write_bytes(b"x,y\n0.1,\xff\xfe\n")
    with pytest.raises(ParseError):
        ingest_csv(path)
