"""
CSV spectrum files.

    # comment lines start with '#'
    T,Q[,var_eps]
    400,0.1
    500,0.2

Temperatures in K, decimal point, comma separator. The optional var_eps
column must hold one constant value. Every error names the physical line
it was found on.
"""
import codecs
import io
import logging
from pathlib import Path
from typing import BinaryIO, List, Optional, TextIO, Tuple, Union

import numpy as np
import pandas as pd

from exceptions import SpectrumFormatError
from models import Spectrum
from repository import SpectrumRepository

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ["T", "Q"]
VAR_EPS_COLUMN = "var_eps"

Source = Union[str, Path, TextIO, BinaryIO]


def _read_text(source: Source) -> str:
    """Decode UTF-8, dropping a leading byte-order mark."""
    raw = source.read() if hasattr(source, "read") else Path(source).read_bytes()
    if isinstance(raw, str):
        return raw[1:] if raw.startswith("\ufeff") else raw
    if raw.startswith(codecs.BOM_UTF8):
        raw = raw[len(codecs.BOM_UTF8):]
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise SpectrumFormatError(
            f"byte 0x{raw[exc.start]:02x} is not valid UTF-8", raw.count(b"\n", 0, exc.start) + 1
        ) from None


def _record_lines(text: str) -> List[Tuple[int, str]]:
    """Non-blank, non-comment lines with their 1-based physical line numbers."""
    records = []
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            records.append((number, stripped))
    return records


def _to_float(value: str) -> float:
    try:
        return float(value)
    except ValueError:
        return float("nan")


def _numeric_column(frame: pd.DataFrame, column: str, line_numbers: List[int]) -> pd.Series:
    raw = frame[column].astype(str).str.strip()
    values = raw.map(_to_float).astype(float)
    bad = ~np.isfinite(values.to_numpy())
    if bad.any():
        row = int(np.argmax(bad))
        raise SpectrumFormatError(
            f"{column} value {raw.iloc[row]!r} is not a finite number", line_numbers[row]
        )
    return values


def read_spectrum_csv(source: Source) -> Spectrum:
    records = _record_lines(_read_text(source))
    if not records:
        raise SpectrumFormatError("no header row found")

    header_line, header = records[0]
    columns = [name.strip() for name in header.split(",")]
    if columns not in (REQUIRED_COLUMNS, REQUIRED_COLUMNS + [VAR_EPS_COLUMN]):
        raise SpectrumFormatError(
            f"header must be 'T,Q' or 'T,Q,var_eps', got {header!r}", header_line
        )

    rows = records[1:]
    for number, line in rows:
        fields = line.count(",") + 1
        if fields != len(columns):
            raise SpectrumFormatError(f"expected {len(columns)} fields, found {fields}", number)
    line_numbers = [number for number, _ in rows]

    body = "\n".join([header] + [line for _, line in rows])
    frame = pd.read_csv(io.StringIO(body), dtype=str, keep_default_na=False, skipinitialspace=True)
    frame.columns = columns

    temperatures = _numeric_column(frame, "T", line_numbers)
    intensities = _numeric_column(frame, "Q", line_numbers)

    non_positive = (temperatures <= 0).to_numpy()
    if non_positive.any():
        row = int(np.argmax(non_positive))
        raise SpectrumFormatError(f"temperature {temperatures.iloc[row]} is not positive", line_numbers[row])

    duplicated = temperatures.duplicated().to_numpy()
    if duplicated.any():
        row = int(np.argmax(duplicated))
        raise SpectrumFormatError(f"duplicate temperature {temperatures.iloc[row]}", line_numbers[row])

    var_eps = None
    if VAR_EPS_COLUMN in columns:
        variances = _numeric_column(frame, VAR_EPS_COLUMN, line_numbers)
        if len(variances):
            differs = (variances != variances.iloc[0]).to_numpy()
            if differs.any():
                row = int(np.argmax(differs))
                raise SpectrumFormatError("var_eps column must be constant", line_numbers[row])
            var_eps = float(variances.iloc[0])
            if var_eps < 0:
                raise SpectrumFormatError("var_eps must be non-negative", line_numbers[0])

    data = pd.DataFrame({"T": temperatures, "Q": intensities})
    if not data["T"].is_monotonic_increasing:
        logger.warning("spectrum rows are not in ascending temperature order; sorting them")
        data = data.sort_values("T", kind="mergesort")

    return Spectrum(data["T"].to_numpy(), data["Q"].to_numpy(), var_eps)


def write_spectrum_csv(spectrum: Spectrum, destination: Source, comments: Optional[List[str]] = None):
    """Write a spectrum in the format read_spectrum_csv accepts; floats round-trip exactly."""
    frame = pd.DataFrame({"T": spectrum.temperatures, "Q": spectrum.intensities})
    if spectrum.var_eps is not None:
        frame[VAR_EPS_COLUMN] = spectrum.var_eps

    def write(handle: TextIO):
        for comment in comments or []:
            handle.write(f"# {comment}\n")
        frame.to_csv(handle, index=False, float_format="%.17g", lineterminator="\n")

    if hasattr(destination, "write"):
        write(destination)
    else:
        with open(destination, "w", encoding="utf-8", newline="") as handle:
            write(handle)


class CsvSpectrumRepository(SpectrumRepository):
    """Spectrum stored in a CSV file. A var_eps override wins over the file's column."""

    def __init__(self, path: Union[str, Path], var_eps_override: Optional[float] = None):
        self.path = Path(path)
        self.var_eps_override = var_eps_override

    def load(self) -> Spectrum:
        spectrum = read_spectrum_csv(self.path)
        if self.var_eps_override is None:
            return spectrum
        if spectrum.var_eps is not None and spectrum.var_eps != self.var_eps_override:
            logger.warning(
                "var_eps %.6g from the command line overrides %.6g from %s",
                self.var_eps_override, spectrum.var_eps, self.path,
            )
        return spectrum.with_var_eps(self.var_eps_override)

    def describe(self) -> str:
        return str(self.path)
