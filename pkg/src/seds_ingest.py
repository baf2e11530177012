"""
SEDS-style data ingestion.

Reads wide annual CSV files (`Data_Status,State,MSN,<year>,...`), decodes MSN
codes through the bundled code table, loads `year,value` side files
(population, precipitation, temperature, deflator), and assembles aligned
modeling panels in trillion Btu.
"""

import io
import logging
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from errors import (
    ArgumentError,
    CoverageError,
    FormatError,
    GapError,
    InputOutputError,
    MissingSeriesError,
    ParseError,
    UnknownMsnError,
)
from exog_arima import ExogMatrix
from series_core import TimeSeries, align_panel

logger = logging.getLogger(__name__)

DEFAULT_CODE_TABLE = Path(__file__).resolve().parent / "data" / "msn_codes.csv"
SEDS_KEY_COLUMNS = ["Data_Status", "State", "MSN"]
CODE_TABLE_COLUMNS = ["code", "source", "sector_or_type", "unit"]
MSN_PATTERN = re.compile(r"^[A-Z0-9]{5}$")
BILLION_BTU = "billion Btu"
TRILLION_BTU = "trillion Btu"
PRICE_UNIT = "dollars per million Btu"
SIDE_FILE_PREFIX = "file:"

Source = Union[str, os.PathLike, io.IOBase, bytes]


@dataclass(frozen=True)
class MsnKey:
    code: str
    source: str
    sector_or_type: str
    unit: str


@dataclass(frozen=True, eq=False)
class SedsRecord:
    msn: MsnKey
    state: str
    values_by_year: Dict[int, float]

    def series(self) -> TimeSeries:
        years = sorted(self.values_by_year)
        return TimeSeries(years[0], [self.values_by_year[y] for y in years], label=self.msn.code)


@dataclass(frozen=True)
class UnitPolicy:
    """How raw units are converted while building a panel"""

    to_trillion_btu: bool = True
    inflation_adjust: bool = False
    deflator: Optional[TimeSeries] = None


@dataclass(frozen=True, eq=False)
class Panel:
    response: TimeSeries
    exog: ExogMatrix
    metadata: Dict = field(default_factory=dict)

    @property
    def start_year(self) -> int:
        return self.response.start_year

    @property
    def end_year(self) -> int:
        return self.response.end_year


def _read_csv(source: Source, what: str) -> pd.DataFrame:
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    try:
        return pd.read_csv(source, dtype=str, keep_default_na=False, encoding="utf-8")
    except (FileNotFoundError, PermissionError, IsADirectoryError) as e:
        raise InputOutputError(f"cannot read {what} {source}: {e.strerror or e}")
    except pd.errors.EmptyDataError:
        raise FormatError(f"{what} is empty", line=1)
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise FormatError(f"{what} is not a well-formed UTF-8 CSV: {e}")


def _edit_distance(a: str, b: str) -> int:
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        for j, cb in enumerate(b, 1):
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb)))
        previous = current
    return previous[-1]


def load_code_table(path: Optional[Source] = None, extra: Optional[Source] = None) -> Dict[str, MsnKey]:
    """Bundled MSN code table, optionally extended (and overridden) by a user table"""
    table = {}
    for source in [path or DEFAULT_CODE_TABLE] + ([extra] if extra else []):
        frame = _read_csv(source, "MSN code table")
        if list(frame.columns) != CODE_TABLE_COLUMNS:
            raise FormatError(f"MSN code table header must be {','.join(CODE_TABLE_COLUMNS)}", line=1)
        for row in frame.itertuples(index=False):
            code = row.code.strip().upper()
            if not MSN_PATTERN.match(code):
                raise FormatError(f"malformed MSN code {row.code!r} in code table")
            table[code] = MsnKey(code, row.source.strip(), row.sector_or_type.strip(), row.unit.strip())
    return table


def decode_msn(code: str, table: Optional[Dict[str, MsnKey]] = None) -> MsnKey:
    table = table if table is not None else load_code_table()
    normalized = code.strip()
    if MSN_PATTERN.match(normalized) and normalized in table:
        return table[normalized]
    nearest = sorted(table, key=lambda known: (_edit_distance(normalized.upper(), known), known))[:3]
    raise UnknownMsnError(code, nearest)


def parse_seds_csv(source: Source, table: Optional[Dict[str, MsnKey]] = None) -> List[SedsRecord]:
    """One record per row; blanks are allowed only before a series' first value"""
    table = table if table is not None else load_code_table()
    frame = _read_csv(source, "SEDS file")
    header = list(frame.columns)
    if header[:3] != SEDS_KEY_COLUMNS:
        raise FormatError(f"header must start with {','.join(SEDS_KEY_COLUMNS)}, got {','.join(header[:3])}",
                          line=1)
    try:
        years = [int(col) for col in header[3:]]
    except ValueError:
        raise FormatError(f"year columns must be integers, got {header[3:]}", line=1)
    if not years or any(b != a + 1 for a, b in zip(years, years[1:])):
        raise FormatError("year columns must be present and strictly consecutive", line=1)

    records = []
    seen = set()
    for offset, row in enumerate(frame.itertuples(index=False)):
        line = offset + 2
        cells = ["" if not isinstance(cell, str) else cell.strip() for cell in row]
        state, code = cells[1], cells[2]
        msn = decode_msn(code, table)
        if (state, code) in seen:
            raise FormatError(f"duplicate row for {code} in {state}", line=line)
        seen.add((state, code))

        values = {}
        started = False
        for year, cell in zip(years, cells[3:]):
            if not cell:
                if started:
                    raise GapError(code, year)
                continue
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(f"line {line}: non-numeric value {cell!r} for {code} in {year}",
                                 line=line, msn=code, year=year)
            if not np.isfinite(value):
                raise ParseError(f"line {line}: non-finite value {cell!r} for {code} in {year}", line=line)
            values[year] = value
            started = True
        if not values:
            raise FormatError(f"row for {code} holds no values", line=line)
        records.append(SedsRecord(msn, state, values))
    logger.info(f"parsed {len(records)} SEDS records covering {years[0]}-{years[-1]}")
    return records


def serialize_seds_csv(records: Sequence[SedsRecord], data_status: str = "X") -> str:
    """Write records back in the wide layout, values at 12 significant digits"""
    first = min(min(r.values_by_year) for r in records)
    last = max(max(r.values_by_year) for r in records)
    years = list(range(first, last + 1))
    lines = [",".join(SEDS_KEY_COLUMNS + [str(y) for y in years])]
    for record in records:
        cells = [format(record.values_by_year[y], ".12g") if y in record.values_by_year else "" for y in years]
        lines.append(",".join([data_status, record.state, record.msn.code] + cells))
    return "\n".join(lines) + "\n"


def _consecutive_years(frame: pd.DataFrame, what: str) -> List[int]:
    try:
        years = [int(y) for y in frame["year"]]
    except ValueError:
        raise ParseError(f"{what}: year column holds non-integer values")
    if not years:
        raise FormatError(f"{what} has no rows", line=2)
    for offset, (a, b) in enumerate(zip(years, years[1:])):
        if b != a + 1:
            raise FormatError(f"{what}: years must be strictly consecutive ({a} then {b})", line=offset + 3)
    return years


def _numeric_column(frame: pd.DataFrame, column: str, what: str) -> np.ndarray:
    values = pd.to_numeric(frame[column].str.strip(), errors="coerce")
    bad = values.isna() | ~np.isfinite(values.astype(float))
    if bad.any():
        line = int(np.argmax(bad.to_numpy())) + 2
        raise ParseError(f"{what}: non-numeric {column} value {frame[column].iloc[line - 2]!r} on line {line}")
    return values.to_numpy(dtype=float)


def load_side_file(source: Source, name: str) -> TimeSeries:
    """A `year,value` CSV such as population, precipitation or a price deflator"""
    frame = _read_csv(source, f"side file {name!r}")
    if list(frame.columns) != ["year", "value"]:
        raise FormatError(f"side file {name!r} header must be year,value", line=1)
    years = _consecutive_years(frame, f"side file {name!r}")
    return TimeSeries(years[0], _numeric_column(frame, "value", f"side file {name!r}"), label=name)


def load_scenario_csv(source: Source) -> ExogMatrix:
    """Future exogenous paths: header `year,<col1>,<col2>,...`, one row per consecutive year"""
    frame = _read_csv(source, "scenario file")
    if not len(frame.columns) or frame.columns[0] != "year" or len(frame.columns) < 2:
        raise FormatError("scenario header must be year,<col1>,<col2>,...", line=1)
    years = _consecutive_years(frame, "scenario file")
    return ExogMatrix(tuple(
        TimeSeries(years[0], _numeric_column(frame, col, "scenario file"), label=col)
        for col in frame.columns[1:]
    ))


def summarize_records(records: Sequence[SedsRecord]) -> pd.DataFrame:
    rows = []
    for record in records:
        series = record.series()
        rows.append({
            "msn": record.msn.code,
            "state": record.state,
            "source": record.msn.source,
            "sector_or_type": record.msn.sector_or_type,
            "unit": record.msn.unit,
            "first_year": series.start_year,
            "last_year": series.end_year,
            "n": len(series),
            "mean": float(series.values.mean()),
            "min": float(series.values.min()),
            "max": float(series.values.max()),
        })
    return pd.DataFrame(rows)


def _records_for_state(records: Sequence[SedsRecord], state: Optional[str]) -> Dict[str, SedsRecord]:
    states = sorted({r.state for r in records})
    if state is None:
        if len(states) > 1:
            raise ArgumentError(f"records hold several states {states}; choose one")
        state = states[0] if states else None
    return {r.msn.code: r for r in records if r.state == state}


def _convert(series: TimeSeries, key: MsnKey, policy: UnitPolicy, conversions: Dict[str, str]) -> TimeSeries:
    if key.unit == BILLION_BTU and policy.to_trillion_btu:
        conversions[series.label] = f"{BILLION_BTU} -> {TRILLION_BTU} (/1000)"
        return series.with_values(series.values / 1000.0)
    if key.unit == PRICE_UNIT and policy.inflation_adjust:
        deflator = policy.deflator
        if deflator is None:
            raise CoverageError(f"inflation adjustment of {series.label} requested without a deflator")
        if deflator.start_year > series.start_year or deflator.end_year < series.end_year:
            raise CoverageError(
                f"deflator covers {deflator.start_year}-{deflator.end_year}, price {series.label} "
                f"covers {series.start_year}-{series.end_year}"
            )
        factors = deflator.slice_years(series.start_year, series.end_year).values
        conversions[series.label] = "divided by deflator"
        return series.with_values(series.values / factors)
    return series


def _resolve(reference: str, by_code: Dict[str, SedsRecord], side_files: Dict[str, TimeSeries],
             policy: UnitPolicy, conversions: Dict[str, str]) -> TimeSeries:
    reference = reference.strip()
    if reference.startswith(SIDE_FILE_PREFIX):
        name = reference[len(SIDE_FILE_PREFIX):]
        if name not in side_files:
            raise MissingSeriesError(f"side file series {name!r} not loaded (have {sorted(side_files)})")
        return side_files[name].with_values(side_files[name].values, label=name)

    parts = [code.strip() for code in reference.split("+")]
    missing = [code for code in parts if code not in by_code]
    if missing:
        raise MissingSeriesError(f"series {missing} not present in the data file")
    units = {by_code[code].msn.unit for code in parts}
    if len(units) > 1:
        raise ArgumentError(f"cannot sum series with different units: {reference} ({sorted(units)})")
    components = align_panel([by_code[code].series() for code in parts])
    total = components[0].with_values(np.sum([c.values for c in components], axis=0), label=reference)
    return _convert(total, by_code[parts[0]].msn, policy, conversions)


def build_panel(records: Sequence[SedsRecord], response_msn: str, exog_specs: Sequence[str],
                unit_policy: UnitPolicy = UnitPolicy(), side_files: Optional[Dict[str, TimeSeries]] = None,
                state: Optional[str] = None) -> Panel:
    """
    Resolve the response (an MSN or an `MSN+MSN` sum) and every exogenous reference
    (an MSN or `file:<name>`), convert units and align everything to the common years.
    """
    side_files = side_files or {}
    by_code = _records_for_state(records, state)
    conversions = {}
    response = _resolve(response_msn, by_code, side_files, unit_policy, conversions)
    exog = [_resolve(ref, by_code, side_files, unit_policy, conversions) for ref in exog_specs]
    aligned = align_panel([response, *exog])
    if aligned[0].start_year != response.start_year or len(aligned[0]) != len(response):
        logger.info(f"panel for {response_msn} trimmed to {aligned[0].start_year}-{aligned[0].end_year}")
    metadata = {
        "response": response_msn,
        "exog": list(exog_specs),
        "unit": TRILLION_BTU if unit_policy.to_trillion_btu else "native",
        "conversions": conversions,
        "inflation_adjusted": bool(unit_policy.inflation_adjust),
        "excluded_after": None,
    }
    return Panel(aligned[0], ExogMatrix(tuple(aligned[1:])), metadata)


def exclude_years(panel: Panel, cutoff_year: int) -> Panel:
    """Drop every year after cutoff_year (the pre-COVID scenario uses 2019)"""
    if cutoff_year < panel.start_year:
        raise ArgumentError(f"cutoff {cutoff_year} precedes the panel start {panel.start_year}")
    last = min(cutoff_year, panel.end_year)
    response = panel.response.slice_years(panel.start_year, last)
    exog = panel.exog.slice_years(panel.start_year, last) if panel.exog.columns else panel.exog
    previous = panel.metadata.get("excluded_after")
    metadata = dict(panel.metadata)
    metadata["excluded_after"] = cutoff_year if previous is None else min(previous, cutoff_year)
    return replace(panel, response=response, exog=exog, metadata=metadata)
