import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from enum import Enum
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from edrsim.counting.counts import DEFAULT_REPETITIONS, DEFAULT_TOTAL, Normalization
from edrsim.edr.relations import Method
from edrsim.simulation.circuit import named_signal
from edrsim.simulation.optics import ApparatusSpec, PbsSpec

logger = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 21
DEFAULT_WP_STRENGTH = 0.104
DEFAULT_SIGNAL = "y+"

EXIT_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3


class ConfigError(ValueError):
    """Raised for unreadable or invalid sweep configurations."""

    pass


class StatisticsMode(str, Enum):
    EXACT = "exact"
    MONTE_CARLO = "mc"


def default_grid(points: int = DEFAULT_GRID_POINTS) -> list[float]:
    return [round(i / (points - 1), 12) for i in range(points)]


class PbsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    e_r: float = Field(gt=1)
    e_t: float = Field(gt=1)

    def to_spec(self) -> PbsSpec:
        return PbsSpec(e_r=self.e_r, e_t=self.e_t)


_EXPERIMENTAL = ApparatusSpec.experimental()


class ApparatusConfig(BaseModel):
    """Extinction ratios per PBS; unset stages take the quoted experimental values."""

    model_config = ConfigDict(extra="forbid")

    wp: PbsConfig = PbsConfig(e_r=_EXPERIMENTAL.wp_pbs.e_r, e_t=_EXPERIMENTAL.wp_pbs.e_t)
    ma: PbsConfig = PbsConfig(e_r=_EXPERIMENTAL.ma_pbs.e_r, e_t=_EXPERIMENTAL.ma_pbs.e_t)
    post: PbsConfig = PbsConfig(e_r=_EXPERIMENTAL.post_pbs.e_r, e_t=_EXPERIMENTAL.post_pbs.e_t)

    def to_spec(self) -> ApparatusSpec:
        return ApparatusSpec(
            wp_pbs=self.wp.to_spec(), ma_pbs=self.ma.to_spec(), post_pbs=self.post.to_spec()
        )


class SweepConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    grid: list[float] = Field(default_factory=default_grid)
    wp_strength: float = Field(default=DEFAULT_WP_STRENGTH, gt=0, le=1)
    signal: str = DEFAULT_SIGNAL
    apparatus: Literal["ideal"] | ApparatusConfig = "ideal"
    mode: StatisticsMode = StatisticsMode.EXACT
    total: int = Field(default=DEFAULT_TOTAL, gt=0)
    reps: int = Field(default=DEFAULT_REPETITIONS, ge=1)
    seed: int = Field(default=0, ge=0)
    methods: list[Method] = Field(default_factory=lambda: list(Method))
    norm: Normalization = Normalization.GRAND_TOTAL

    @field_validator("grid")
    @classmethod
    def _grid_in_range(cls, grid: list[float]) -> list[float]:
        for value in grid:
            if not 0 <= value <= 1:
                raise ValueError(f"strength {value} is outside [0, 1]")
        return grid

    @field_validator("signal")
    @classmethod
    def _known_signal(cls, signal: str) -> str:
        named_signal(signal)
        return signal

    @field_validator("methods")
    @classmethod
    def _unique_methods(cls, methods: list[Method]) -> list[Method]:
        return list(dict.fromkeys(methods))

    def apparatus_spec(self) -> Optional[ApparatusSpec]:
        if self.apparatus == "ideal":
            return None
        return self.apparatus.to_spec()


def _describe(error: ValidationError) -> str:
    problems = []
    for detail in error.errors():
        field = ".".join(str(part) for part in detail["loc"]) or "config"
        problems.append(f"{field}: {detail['msg']}")
    return "; ".join(problems)


def _load_file(path: Path) -> dict[str, Any]:
    try:
        text = path.read_text(encoding="utf-8")
        if path.suffix == ".toml":
            return tomllib.loads(text)
        return json.loads(text)
    except (OSError, json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e


def parse_config(
    path: Optional[Path] = None, defaults: Optional[dict[str, Any]] = None, **overrides: Any
) -> SweepConfig:
    """Build a SweepConfig from an optional JSON/TOML file and flag overrides.

    Precedence is overrides, then the file, then `defaults`, then model defaults.
    Overrides set to None are ignored, so unset CLI flags leave file values alone.
    An apparatus override given as a table is merged into the file's table.

    Raises:
        ConfigError: If the file cannot be read or a value is invalid; the
            message names the offending field
    """
    loaded = _load_file(path) if path is not None else {}
    if not isinstance(loaded, dict):
        raise ConfigError(f"Config file {path} must hold a table of settings")
    data = {**(defaults or {}), **loaded}
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "apparatus" and isinstance(value, dict) and isinstance(data.get(key), dict):
            value = {**data[key], **value}
        data[key] = value
    try:
        config = SweepConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid sweep config: {_describe(e)}") from e
    logger.debug(f"Parsed sweep config: {config.model_dump_json()}")
    return config


def emit_config(config: SweepConfig, path: Path):
    path.write_text(config.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(f"Effective config written to {path}")


def _split(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _pbs_table(name: str, text: str) -> dict[str, float]:
    try:
        spec = PbsSpec.parse(text)
    except ValueError as e:
        raise ConfigError(f"Invalid {name}: {e}") from e
    return {"e_r": spec.e_r, "e_t": spec.e_t}


def flag_overrides(
    grid: Optional[str] = None,
    wp_strength: Optional[float] = None,
    signal: Optional[str] = None,
    experimental_optics: bool = False,
    pbs_wp: Optional[str] = None,
    pbs_ma: Optional[str] = None,
    pbs_post: Optional[str] = None,
    mode: Optional[StatisticsMode] = None,
    total: Optional[int] = None,
    reps: Optional[int] = None,
    seed: Optional[int] = None,
    methods: Optional[str] = None,
    norm: Optional[Normalization] = None,
) -> dict[str, Any]:
    """Translate command-line strings into parse_config overrides.

    --grid and --methods are comma-separated; an empty --grid is an empty sweep.
    Any --pbs-* flag (or --experimental-optics) switches to the imperfect apparatus.
    """
    overrides: dict[str, Any] = {
        "wp_strength": wp_strength,
        "signal": signal,
        "mode": mode,
        "total": total,
        "reps": reps,
        "seed": seed,
        "norm": norm,
    }
    if grid is not None:
        try:
            overrides["grid"] = [float(value) for value in _split(grid)]
        except ValueError as e:
            raise ConfigError(f"Invalid grid: {e}") from e
    if methods is not None:
        overrides["methods"] = _split(methods)

    apparatus = {
        stage: _pbs_table(f"pbs_{stage}", text)
        for stage, text in (("wp", pbs_wp), ("ma", pbs_ma), ("post", pbs_post))
        if text is not None
    }
    if apparatus or experimental_optics:
        overrides["apparatus"] = apparatus
    return overrides
