"""
Run configuration.

A run is described by a KEY=VALUE file (read with python-dotenv) plus optional
command-line overrides; flags win over the file, the file wins over defaults.
Relative paths in a file resolve against the file's directory (or an explicit
base directory, which the suite uses to point its configs at a data directory).
"""

import logging
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple

from dotenv import dotenv_values

from arima_engine import ArimaSpec
from errors import ConfigError, ForecastError, InputOutputError
from holt_damped import PHI_MODES

logger = logging.getLogger(__name__)

MODELS = ("arima", "arimax", "holt")
AUTO = "auto"
DEFAULT_OUT_DIR = "forecast_out"

# config-file key -> RunConfig field
CONFIG_KEYS = {
    "SEDS_CSV": "seds_csv",
    "SIDE_FILES": "side_files",
    "SCENARIO": "scenario",
    "RESPONSE": "response",
    "EXOG": "exog",
    "MODEL": "model",
    "SPEC": "spec",
    "HOLDOUT": "holdout",
    "HORIZON": "horizon",
    "LEVEL": "level",
    "EXCLUDE_AFTER": "exclude_after",
    "INFLATION_ADJUST": "inflation_adjust",
    "DEFLATOR": "deflator",
    "PHI_MODE": "phi_mode",
    "EXOG_LAG": "exog_lag",
    "P_MAX": "p_max",
    "Q_MAX": "q_max",
    "MAX_D": "max_d",
    "SEED": "seed",
    "OUT": "out",
    "LABEL": "label",
    "MSN_TABLE": "msn_table",
}
PATH_FIELDS = ("seds_csv", "scenario", "out", "msn_table")


@dataclass(frozen=True)
class RunConfig:
    seds_csv: Path
    response: str
    side_files: Dict[str, Path] = field(default_factory=dict)
    scenario: Optional[Path] = None
    exog: Tuple[str, ...] = ()
    model: str = "arimax"
    spec: str = AUTO
    holdout: int = 10
    horizon: int = 10
    level: float = 0.95
    exclude_after: Optional[int] = None
    inflation_adjust: bool = False
    deflator: Optional[str] = None
    phi_mode: str = "fixed"
    exog_lag: int = 0
    p_max: int = 5
    q_max: int = 5
    max_d: int = 2
    seed: int = 0
    out: Path = Path(DEFAULT_OUT_DIR)
    label: str = ""
    msn_table: Optional[Path] = None
    source: Optional[Path] = None

    def __post_init__(self):
        object.__setattr__(self, "exog", tuple(self.exog))
        if not self.response:
            raise ConfigError("RESPONSE is required")
        if self.model not in MODELS:
            raise ConfigError(f"MODEL must be one of {MODELS}, got {self.model!r}")
        if self.model == "arimax" and not self.exog:
            raise ConfigError("MODEL=arimax needs at least one EXOG series")
        if self.model != "arimax" and self.exog:
            raise ConfigError(f"MODEL={self.model} takes no EXOG series, got {list(self.exog)}")
        if self.spec != AUTO:
            try:
                ArimaSpec.parse(self.spec)
            except ForecastError as e:
                raise ConfigError(f"SPEC: {e.message}")
        if self.horizon < 1:
            raise ConfigError(f"HORIZON must be at least 1, got {self.horizon}")
        if not 0.0 < self.level < 1.0:
            raise ConfigError(f"LEVEL must lie in (0, 1), got {self.level}")
        if self.holdout < 1:
            raise ConfigError(f"HOLDOUT must be at least 1, got {self.holdout}")
        if self.phi_mode not in PHI_MODES:
            raise ConfigError(f"PHI_MODE must be one of {PHI_MODES}, got {self.phi_mode!r}")
        if self.exog_lag < 0:
            raise ConfigError(f"EXOG_LAG must be non-negative, got {self.exog_lag}")
        if min(self.p_max, self.q_max) < 0 or not 0 <= self.max_d <= 2:
            raise ConfigError(f"grid bounds out of range: P_MAX={self.p_max} Q_MAX={self.q_max} MAX_D={self.max_d}")
        if self.inflation_adjust and not self.deflator:
            raise ConfigError("INFLATION_ADJUST=true needs DEFLATOR naming a side file")
        if self.deflator and self.deflator not in self.side_files:
            raise ConfigError(f"DEFLATOR {self.deflator!r} is not among SIDE_FILES {sorted(self.side_files)}")

    @property
    def arima_spec(self) -> Optional[ArimaSpec]:
        return None if self.spec == AUTO else ArimaSpec.parse(self.spec)

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        return self.source.stem if self.source else self.response


def _parse_bool(text: str, key: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"{key} must be true or false, got {text!r}")


def _parse_int(text: str, key: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {text!r}")


def _parse_float(text: str, key: str) -> float:
    try:
        return float(text.strip())
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {text!r}")


def _resolve_path(text, base_dir: Optional[Path]) -> Path:
    path = Path(os.path.expanduser(str(text).strip()))
    if base_dir is not None and not path.is_absolute():
        path = base_dir / path
    return path


def parse_side_files(text: str, base_dir: Optional[Path] = None) -> Dict[str, Path]:
    """`population:population.csv,precipitation:precip.csv` -> {name: path}"""
    side_files = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        name, sep, path = item.partition(":")
        if not sep or not name.strip() or not path.strip():
            raise ConfigError(f"SIDE_FILES entries must look like name:path, got {item!r}")
        side_files[name.strip()] = _resolve_path(path, base_dir)
    return side_files


def _field_values(raw: Mapping[str, str], base_dir: Optional[Path]) -> Dict:
    values = {}
    for key, text in raw.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown configuration key {key!r}")
        if text is None:
            continue
        name = CONFIG_KEYS[key]
        if name in PATH_FIELDS:
            values[name] = _resolve_path(text, base_dir) if text.strip() else None
        elif name == "side_files":
            values[name] = parse_side_files(text, base_dir)
        elif name == "exog":
            values[name] = tuple(filter(None, (part.strip() for part in text.split(","))))
        elif name in ("holdout", "horizon", "exog_lag", "p_max", "q_max", "max_d", "seed"):
            values[name] = _parse_int(text, key)
        elif name == "exclude_after":
            values[name] = _parse_int(text, key) if text.strip() else None
        elif name == "level":
            values[name] = _parse_float(text, key)
        elif name == "inflation_adjust":
            values[name] = _parse_bool(text, key)
        else:
            values[name] = text.strip()
    return values


def read_config_file(path, base_dir: Optional[Path] = None) -> Dict:
    """Field values from a KEY=VALUE file, paths resolved against base_dir or the file's directory"""
    path = Path(path)
    if not path.is_file():
        raise InputOutputError(f"cannot read config file {path}")
    raw = dotenv_values(path, interpolate=False)
    values = _field_values(raw, Path(base_dir) if base_dir is not None else path.resolve().parent)
    values["source"] = path
    return values


def build_config(config_file=None, overrides: Optional[Mapping] = None,
                 base_dir: Optional[Path] = None) -> RunConfig:
    """Merge defaults, an optional config file and flag overrides (None means 'not given')"""
    values = read_config_file(config_file, base_dir) if config_file else {}
    for name, value in (overrides or {}).items():
        if value is None:
            continue
        if name == "side_files" and isinstance(value, str):
            value = parse_side_files(value)
        if name in PATH_FIELDS:
            value = Path(value)
        values[name] = value
    if "seds_csv" not in values or values["seds_csv"] is None:
        raise ConfigError("SEDS_CSV (or --seds) is required")
    if "out" not in values and os.getenv("FORECAST_OUT_DIR"):
        values["out"] = Path(os.getenv("FORECAST_OUT_DIR"))
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown configuration fields {unknown}")
    try:
        config = RunConfig(**values)
    except TypeError as e:
        raise ConfigError(f"incomplete configuration: {e}")
    logger.debug(f"run config {config.name}: {config}")
    return config
