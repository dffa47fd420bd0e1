"""CSV import and export of log-likelihood matrices, datasets, draws and LOO vectors.

Every numeric table has one header row. Cells are read as text in chunks and
converted to floats afterwards, so a bad cell can be reported by row and
column. Floats are written in shortest round-trip form.
"""

import logging
import os
import re
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from loo_subsample.errors import InputValidationError
from loo_subsample.formats.reports import atomic_write_text
from loo_subsample.models.blr import BlrDataset
from loo_subsample.surrogates.types import LogLikMatrix, SurrogateVector

logger = logging.getLogger(__name__)

LARGE_INPUT_CELLS = 10**8
CHUNK_ROWS = 2000

# Rows are numbered in the file, the header being row 1.
_FIRST_DATA_ROW = 2


def _check_exists(path: str) -> None:
    if not os.path.exists(path):
        raise FileNotFoundError(f"Input file {path} not found")


def _text_options() -> dict:
    return {"dtype": str, "keep_default_na": False, "on_bad_lines": "error"}


def _parser_error(path: str, exc: Exception) -> InputValidationError:
    match = re.search(r"line (\d+)", str(exc))
    where = f"row {match.group(1)}" if match else "malformed row"
    return InputValidationError(f"{path}: {where}: {exc}")


def _finite_values(chunk: pd.DataFrame, path: str, first_column: int = 1) -> np.ndarray:
    """
    Convert a chunk of text cells to floats.

    Raises:
        InputValidationError: Naming the first cell that is missing, not a
            number or not finite, by file row and 1-based column.
    """
    missing = (chunk.isna() | chunk.eq("")).to_numpy()
    if missing.any():
        row, col = np.argwhere(missing)[0]
        raise InputValidationError(
            f"{path}: row {chunk.index[row] + _FIRST_DATA_ROW}, column {col + first_column} is missing"
        )
    try:
        values = chunk.to_numpy(dtype=float)
    except ValueError:
        values = chunk.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise InputValidationError(
            f"{path}: row {chunk.index[row] + _FIRST_DATA_ROW}, column {col + first_column}: "
            f"'{chunk.iat[row, col]}' is not a finite number"
        )
    return values


def _read_header(path: str) -> List[str]:
    try:
        first = pd.read_csv(path, header=None, nrows=1, **_text_options())
    except pd.errors.EmptyDataError:
        raise InputValidationError(f"{path}: file is empty")
    return [str(name).strip() for name in first.iloc[0]]


def _data_chunks(path: str, width: int) -> Iterator[pd.DataFrame]:
    try:
        reader = pd.read_csv(path, header=None, skiprows=1, chunksize=CHUNK_ROWS, **_text_options())
        for chunk in reader:
            if chunk.shape[1] != width:
                raise InputValidationError(
                    f"{path}: row {chunk.index[0] + _FIRST_DATA_ROW} has {chunk.shape[1]} columns, "
                    f"header has {width}"
                )
            yield chunk
    except pd.errors.EmptyDataError:
        return
    except pd.errors.ParserError as exc:
        raise _parser_error(path, exc)


def read_numeric_table(path: str) -> Tuple[List[str], np.ndarray]:
    """
    Stream a numeric CSV with a header row into a float matrix.

    Args:
        path: CSV file path.

    Returns:
        Tuple (header names, rows x columns array).

    Raises:
        FileNotFoundError: If the file does not exist.
        InputValidationError: On an empty file, a header without rows ("no draws"),
            ragged rows or bad cells; messages give the 1-based row and column.
    """
    _check_exists(path)
    header = _read_header(path)
    width = len(header)
    if any(not name for name in header):
        raise InputValidationError(f"{path}: header row has empty column names")

    blocks: List[np.ndarray] = []
    cells = 0
    warned = False
    for chunk in _data_chunks(path, width):
        blocks.append(_finite_values(chunk, path))
        cells += chunk.size
        if not warned and cells > LARGE_INPUT_CELLS:
            logger.warning(f"{path}: input exceeds {LARGE_INPUT_CELLS} cells; consider fewer draws")
            warned = True
    if not blocks:
        raise InputValidationError(f"{path}: no draws (header only)")
    return header, np.vstack(blocks)


def ingest_loglik_csv(path: str) -> LogLikMatrix:
    """
    Read a log-likelihood matrix: header = observation ids, one row per draw.

    Raises:
        InputValidationError: On malformed content, see ``read_numeric_table``.
    """
    header, values = read_numeric_table(path)
    matrix = LogLikMatrix(values, obs_ids=header)
    logger.info(f"Ingested {path}: {matrix.draw_count} draws x {matrix.obs_count} observations")
    return matrix


def _write_frame(path: str, frame: pd.DataFrame) -> None:
    atomic_write_text(path, frame.to_csv(index=False, lineterminator="\n"))


def write_numeric_table(path: str, header: Sequence[str], values: np.ndarray) -> None:
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[1] != len(header):
        raise InputValidationError(f"Table shape {values.shape} does not match {len(header)} header columns")
    _write_frame(path, pd.DataFrame(values, columns=list(header)))


def export_loglik_csv(matrix: LogLikMatrix, path: str) -> None:
    """Write a log-likelihood matrix in the format read by ``ingest_loglik_csv``."""
    write_numeric_table(path, matrix.obs_ids, matrix.values)


def write_dataset_csv(data: BlrDataset, path: str) -> None:
    """Columns y, x0, ..., x{P-1}."""
    header = ["y"] + [f"x{j}" for j in range(data.p)]
    write_numeric_table(path, header, np.column_stack([data.response, data.design]))


def read_dataset_csv(path: str) -> BlrDataset:
    header, values = read_numeric_table(path)
    if header[0] != "y" or len(header) < 2:
        raise InputValidationError(f"{path}: dataset header must start with 'y' followed by covariates")
    return BlrDataset(design=values[:, 1:], response=values[:, 0])


def draws_header(p: int) -> List[str]:
    return [f"beta{j}" for j in range(p)] + ["log_sigma"]


def write_draws_csv(draws: np.ndarray, path: str) -> None:
    """Columns beta0, ..., beta{P-1}, log_sigma."""
    draws = np.asarray(draws, dtype=float)
    write_numeric_table(path, draws_header(draws.shape[1] - 1), draws)


def read_draws_csv(path: str) -> np.ndarray:
    header, values = read_numeric_table(path)
    if header != draws_header(len(header) - 1):
        raise InputValidationError(f"{path}: draws header must be beta0..beta{{P-1}},log_sigma")
    return values


def write_loo_vector_csv(
    path: str,
    obs_ids: Sequence[str],
    values: np.ndarray,
    pareto_k: Optional[np.ndarray] = None,
) -> None:
    """Columns obs_id, value and, when given, pareto_k (written as -inf for degenerate tails)."""
    values = np.asarray(values, dtype=float)
    if len(obs_ids) != values.shape[0]:
        raise InputValidationError(f"Got {len(obs_ids)} ids for {values.shape[0]} values")
    frame = pd.DataFrame({"obs_id": [str(i) for i in obs_ids], "value": values})
    if pareto_k is not None:
        frame["pareto_k"] = np.asarray(pareto_k, dtype=float)
    _write_frame(path, frame)


def write_surrogate_csv(surrogate: SurrogateVector, obs_ids: Sequence[str], path: str) -> None:
    write_loo_vector_csv(path, obs_ids, surrogate.values, surrogate.diagnostics)


def read_exact_csv(path: str, obs_ids: Optional[Sequence[str]] = None) -> np.ndarray:
    """
    Read an obs_id,value file of exact LOO values.

    Args:
        path: CSV path.
        obs_ids: When given, the file's ids must match these in order.

    Raises:
        InputValidationError: On bad cells or mismatched identifiers.
    """
    _check_exists(path)
    try:
        frame = pd.read_csv(path, **_text_options())
    except pd.errors.EmptyDataError:
        raise InputValidationError(f"{path}: header must start with obs_id,value")
    except pd.errors.ParserError as exc:
        raise _parser_error(path, exc)
    if [str(c).strip() for c in frame.columns[:2]] != ["obs_id", "value"]:
        raise InputValidationError(f"{path}: header must start with obs_id,value")
    if frame.empty:
        raise InputValidationError(f"{path}: no values")
    values = _finite_values(frame.iloc[:, [1]], path, first_column=2)[:, 0]
    ids = frame.iloc[:, 0].tolist()
    if obs_ids is not None and tuple(ids) != tuple(obs_ids):
        raise InputValidationError(f"{path}: observation ids do not match the log-likelihood columns")
    return values
