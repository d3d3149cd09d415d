"""
Dataset ingestion - CSV files with feature columns followed by a `y` column
"""

import csv
import math
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from dackrr.errors import ParseError
from dackrr.logger import get_logger

logger = get_logger(__name__)

TARGET_COLUMN = "y"


def ingest_csv(path: Union[str, Path]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Read covariates and responses from a CSV file

    The header names d feature columns and then the target column `y`.
    Row order is preserved; blank lines are skipped.

    Args:
        path: CSV file path

    Returns:
        (X, y) with X of shape n×d

    Raises:
        ParseError: with the 1-based line number of the offending row
    """
    path = Path(path)
    if not path.exists():
        raise ParseError(f"file not found: {path}", path=str(path))

    try:
        with open(path, "r", newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            header = None
            rows: List[List[float]] = []
            for row in reader:
                line = reader.line_num
                if not row or all(not cell.strip() for cell in row):
                    continue
                if header is None:
                    header = [cell.strip() for cell in row]
                    if len(header) < 2 or header[-1] != TARGET_COLUMN:
                        raise ParseError(
                            f"header must list feature columns followed by '{TARGET_COLUMN}'",
                            line=line,
                            path=str(path),
                        )
                    continue
                if len(row) != len(header):
                    raise ParseError(
                        f"expected {len(header)} columns, found {len(row)}", line=line, path=str(path)
                    )
                values = []
                for column, cell in zip(header, row):
                    try:
                        value = float(cell)
                    except ValueError:
                        raise ParseError(
                            f"non-numeric value {cell.strip()!r} in column '{column}'",
                            line=line,
                            path=str(path),
                        )
                    if not math.isfinite(value):
                        raise ParseError(
                            f"non-finite value {cell.strip()!r} in column '{column}'",
                            line=line,
                            path=str(path),
                        )
                    values.append(value)
                rows.append(values)
    except UnicodeDecodeError as e:
        raise ParseError(f"file is not valid UTF-8 text: {e.reason}", path=str(path))
    except OSError as e:
        raise ParseError(f"cannot read file: {e.strerror or e}", path=str(path))

    if header is None:
        raise ParseError("missing header", line=1, path=str(path))
    if not rows:
        raise ParseError("no rows", path=str(path))

    data = np.asarray(rows, dtype=float)
    logger.debug(f"Read {data.shape[0]} rows with {data.shape[1] - 1} feature(s) from {path}")
    return data[:, :-1].copy(), data[:, -1].copy()
