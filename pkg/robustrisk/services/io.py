"""File readers and report writers.

Returns file: one value per line, comma or whitespace separated single
column, lines starting with '#' ignored, UTF-8.

Spectrum file: CSV rows `u_start,u_end,phi`, optional header row, '#'
comments ignored.
"""

import csv
import io
import json
import re
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

from robustrisk.services.empirical import EmpiricalDistribution, make_distribution
from robustrisk.services.errors import InputFormatError
from robustrisk.services.measures import SpectralFunction
from robustrisk.utils.helpers import format_number, json_number

PathLike = Union[str, Path]
_SEPARATORS = re.compile(r"[,\s]+")


def _data_lines(path: PathLike):
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def read_returns(path: PathLike) -> EmpiricalDistribution:
    """Load a returns file into a distribution.

    Args:
        path: File with one return per line

    Returns:
        EmpiricalDistribution of the returns

    Raises:
        InputFormatError: If a data line is not exactly one number
        EmptySample: If the file holds no data
        NonFiniteValue: If a value is NaN or infinite
        OSError: If the file cannot be read
    """
    samples: List[float] = []
    for lineno, line in _data_lines(path):
        tokens = [token for token in _SEPARATORS.split(line) if token]
        if len(tokens) != 1:
            raise InputFormatError(f"{path}:{lineno}: expected one value per line, got {len(tokens)}")
        try:
            samples.append(float(tokens[0]))
        except ValueError:
            raise InputFormatError(f"{path}:{lineno}: not a number: {tokens[0]!r}") from None
    return make_distribution(samples)


def read_spectrum(path: PathLike) -> SpectralFunction:
    """Load a step spectrum from `u_start,u_end,phi` rows.

    Raises:
        InputFormatError: If a row is malformed
        InvalidSpectrum: If the rows do not define a valid spectrum
    """
    rows: List[Tuple[float, float, float]] = []
    for index, (lineno, line) in enumerate(_data_lines(path)):
        fields = [field.strip() for field in next(csv.reader([line]))]
        if len(fields) != 3:
            raise InputFormatError(f"{path}:{lineno}: expected u_start,u_end,phi")
        try:
            rows.append((float(fields[0]), float(fields[1]), float(fields[2])))
        except ValueError:
            if index == 0:
                continue  # header row
            raise InputFormatError(f"{path}:{lineno}: not a number in {line!r}") from None
    return SpectralFunction.from_intervals(rows)


def write_values(path: PathLike, d: EmpiricalDistribution):
    """Write atom values one per line at full precision."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for value in d.values:
            handle.write(f"{float(value)!r}\n")


# ============================================================================
# REPORT RENDERING
# ============================================================================


def _flatten(payload: Dict[str, Any]) -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in payload.items():
        if isinstance(value, dict):
            for inner, inner_value in value.items():
                flat[f"{key}_{inner}"] = inner_value
        else:
            flat[key] = value
    return flat


def _text(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, float):
        return format_number(value)
    return str(value)


def _json_ready(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _json_ready(inner) for key, inner in value.items()}
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        return json_number(value)
    return str(value)


def render(payload: Dict[str, Any], fmt: str) -> str:
    """Render a flat-or-nested report dict as json, csv or plain text.

    Args:
        payload: Ordered report fields
        fmt: 'json', 'csv' or 'plain'

    Returns:
        Text ending in a newline
    """
    if fmt == "json":
        return json.dumps(_json_ready(payload)) + "\n"
    flat = _flatten(payload)
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(list(flat))
        writer.writerow([_text(value) for value in flat.values()])
        return buffer.getvalue()
    if fmt == "plain":
        return "".join(f"{key}: {_text(value)}\n" for key, value in flat.items())
    raise ValueError(f"unknown output format {fmt!r}")
