"""
TOML experiment configuration.

A config names the experiment ``kind`` and carries one table of parameters named after it:

    kind = "threshold"
    seed = 1
    threads = 4

    [code]
    lambda = [[3, 1.0]]
    rho = [[6, 1.0]]

    [threshold]
    sigma2_d = [0.0, 1.0, 2.0, 3.0]

    [output]
    csv = "table1.csv"
"""

import dataclasses
import tomllib
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Type, TypeVar, Union

from .degree import NAMED_CODES, DegreeDistribution, validate

KINDS = ("threshold", "exit", "design", "ber")

S = TypeVar("S")


class ConfigError(ValueError):
    """Invalid configuration; ``key_path`` is the dotted path of the offending key."""

    def __init__(self, message: str, key_path: str):
        super().__init__(f"{key_path}: {message}")
        self.key_path = key_path


@dataclass
class OutputSection:
    csv: Optional[str] = None
    json: Optional[str] = None
    manifest: Optional[str] = None


@dataclass
class CodeSection:
    """A degree distribution, a named reference code, or an alist file."""

    distribution: Optional[DegreeDistribution] = None
    alist: Optional[Path] = None


@dataclass
class ThresholdSection:
    sigma2_d: List[float]
    tol_db: float = 0.01
    mc_samples: int = 100_000
    max_iterations: int = 2000
    convergence_mean: float = 50.0
    method: str = "semi_gaussian"
    bracket_low_db: float = -2.0
    bracket_high_db: float = 10.0


@dataclass
class ExitSection:
    snr_db: float
    sigma2_d: float = 0.0
    n_trials: int = 100_000
    grid_points: int = 100
    margin: float = 1e-3


@dataclass
class DesignSection:
    sigma2_d: float
    dc: int = 5
    dv_max: int = 4
    rate: float = 0.5
    delta_db: float = 0.05
    alpha_grid_size: int = 100
    margin: float = 1e-3
    initial_snr_db: Optional[float] = None
    snr_floor_db: float = -2.0
    n_trials: int = 100_000


@dataclass
class BerSection:
    snr_db: List[float]
    sigma2_d: List[float] = field(default_factory=lambda: [0.0])
    n: int = 1008
    block_errors: int = 50
    max_bits: int = 10_000_000
    max_iterations: int = 80
    llr_clamp: float = 30.0
    remove_cycles: bool = True


SECTIONS: Dict[str, type] = {
    "threshold": ThresholdSection,
    "exit": ExitSection,
    "design": DesignSection,
    "ber": BerSection,
}

# Kinds that cannot run without a [code] table.
NEEDS_CODE = ("threshold", "exit", "ber")


@dataclass
class ExperimentConfig:
    kind: str
    params: Any
    seed: int = 0
    threads: int = 1
    cache_dir: Optional[str] = None
    code: Optional[CodeSection] = None
    output: OutputSection = field(default_factory=OutputSection)
    source: Optional[Path] = None

    def to_dict(self) -> Dict[str, Any]:
        code: Optional[Dict[str, Any]] = None
        if self.code is not None:
            code = (
                {"alist": str(self.code.alist)}
                if self.code.alist
                else self.code.distribution.to_dict() if self.code.distribution else None
            )
        return {
            "kind": self.kind,
            "seed": self.seed,
            "threads": self.threads,
            "code": code,
            "params": dataclasses.asdict(self.params),
        }


def _coerce(value: Any, hint: Any, key_path: str) -> Any:
    origin = typing.get_origin(hint)
    if origin is Union:
        options = [a for a in typing.get_args(hint) if a is not type(None)]
        if value is None:
            return None
        return _coerce(value, options[0], key_path)
    if origin in (list, List):
        if not isinstance(value, list):
            raise ConfigError(f"expected a list, got {type(value).__name__}", key_path)
        (item,) = typing.get_args(hint)
        return [_coerce(v, item, f"{key_path}[{i}]") for i, v in enumerate(value)]
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"expected a boolean, got {type(value).__name__}", key_path)
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {type(value).__name__}", key_path)
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {type(value).__name__}", key_path)
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {type(value).__name__}", key_path)
        return value
    raise ConfigError(f"unsupported value type {hint}", key_path)


def build_section(cls: Type[S], table: Any, path: str) -> S:
    """Map a TOML table onto dataclass ``cls``, rejecting unknown, missing and mistyped keys."""
    if not isinstance(table, dict):
        raise ConfigError("expected a table", path)
    hints = typing.get_type_hints(cls)
    fields = {f.name: f for f in dataclasses.fields(cls)}  # type: ignore[arg-type]

    unknown = sorted(set(table) - set(fields))
    if unknown:
        raise ConfigError("unknown key", f"{path}.{unknown[0]}")

    values = {}
    for name, spec in fields.items():
        key_path = f"{path}.{name}"
        if name not in table:
            has_default = (
                spec.default is not dataclasses.MISSING
                or spec.default_factory is not dataclasses.MISSING
            )
            if not has_default:
                raise ConfigError("missing required key", key_path)
            continue
        values[name] = _coerce(table[name], hints[name], key_path)

    try:
        return cls(**values)
    except ValueError as e:
        raise ConfigError(str(e), path)


def _build_code(table: Any, base_dir: Path) -> CodeSection:
    if not isinstance(table, dict):
        raise ConfigError("expected a table", "code")
    unknown = sorted(set(table) - {"lambda", "rho", "alist", "name"})
    if unknown:
        raise ConfigError("unknown key", f"code.{unknown[0]}")

    given = [k for k in ("alist", "name") if k in table] + (
        ["lambda/rho"] if "lambda" in table or "rho" in table else []
    )
    if len(given) != 1:
        raise ConfigError("exactly one of lambda/rho, name or alist is required", "code")

    if "alist" in table:
        path = Path(_coerce(table["alist"], str, "code.alist"))
        return CodeSection(alist=path if path.is_absolute() else base_dir / path)

    if "name" in table:
        name = _coerce(table["name"], str, "code.name")
        if name not in NAMED_CODES:
            raise ConfigError(f"unknown code {name!r}; known: {sorted(NAMED_CODES)}", "code.name")
        return CodeSection(distribution=NAMED_CODES[name])

    for key in ("lambda", "rho"):
        if key not in table:
            raise ConfigError("missing required key", f"code.{key}")
    try:
        dist = DegreeDistribution.from_dict(table)
    except ValueError as e:
        raise ConfigError(str(e), "code")
    problems = validate(dist)
    if problems:
        raise ConfigError(problems[0], "code")
    return CodeSection(distribution=dist)


def parse_config(data: Mapping[str, Any], base_dir: Path = Path(".")) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from an already-decoded TOML document."""
    if "kind" not in data:
        raise ConfigError("missing required key", "kind")
    kind = _coerce(data["kind"], str, "kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {KINDS}", "kind")

    allowed = {"kind", "seed", "threads", "cache_dir", "code", "output", kind}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError("unknown key", unknown[0])

    seed = _coerce(data.get("seed", 0), int, "seed")
    if seed < 0:
        raise ConfigError("must be non-negative", "seed")
    threads = _coerce(data.get("threads", 1), int, "threads")
    if threads < 1:
        raise ConfigError("must be at least 1", "threads")
    cache_dir = _coerce(data.get("cache_dir"), Optional[str], "cache_dir")

    params = build_section(SECTIONS[kind], data.get(kind, {}), kind)
    code = _build_code(data["code"], base_dir) if "code" in data else None
    if code is None and kind in NEEDS_CODE:
        raise ConfigError("missing required table", "code")
    output = build_section(OutputSection, data.get("output", {}), "output")

    return ExperimentConfig(kind, params, seed, threads, cache_dir, code, output)


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError("file not found", str(path))
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"invalid TOML: {e}", str(path))

    config = parse_config(data, path.parent)
    config.source = path
    return config
