# File: app/config/config_file.py
"""
Experiment config files.

Format: dotenv KEY=VALUE lines, '#' comments, keys are the lower-case field
names of ExperimentSpec and SolverConfig. Lists are comma separated:

    kind=figure1
    dim=1
    p=1.3
    mass=15
    grid_n=2048
    el_tol=1e-8
"""

import logging
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

from dotenv import dotenv_values
from pydantic import ValidationError

from app.config.solver_config import SolverConfig
from app.core.entities.experiment import FIGURE_DEFAULTS, ExperimentSpec
from app.core.errors import ConfigError

logger = logging.getLogger(__name__)

LIST_FIELDS = {"masses", "p_list", "r_list"}
SPEC_FIELDS = set(ExperimentSpec.model_fields) - {"solver"}
SOLVER_FIELDS = set(SolverConfig.model_fields) - SPEC_FIELDS


def _key_lines(path: Path) -> Dict[str, int]:
    """Line number of the last assignment of every key."""
    lines: Dict[str, int] = {}
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        text = raw.strip()
        if not text or text.startswith("#") or "=" not in text:
            continue
        key = text.split("=", 1)[0].strip()
        if key.startswith("export "):
            key = key[len("export "):].strip()
        lines[key] = number
    return lines


def _parse_value(key: str, value: Optional[str]):
    if value is None or value == "":
        return None
    if key in LIST_FIELDS:
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


def split_fields(values: Mapping[str, object], lines: Optional[Dict[str, int]] = None) -> Tuple[dict, dict]:
    """
    Route raw key/values to ExperimentSpec and SolverConfig.

    Raises:
        ConfigError: unknown key.
    """
    lines = lines or {}
    spec_values, solver_values = {}, {}
    for key, value in values.items():
        name = key.strip().lower()
        if name in SPEC_FIELDS:
            spec_values[name] = value
        elif name in SOLVER_FIELDS:
            solver_values[name] = value
        else:
            raise ConfigError("unknown key", field=key, line=lines.get(key))
    return spec_values, solver_values


def build_spec(values: Mapping[str, object], lines: Optional[Dict[str, int]] = None) -> ExperimentSpec:
    """
    Validate raw values into an ExperimentSpec; figure kinds fill unset model fields.

    Raises:
        ConfigError: unknown key or a failed validation, naming the field and line.
    """
    lines = lines or {}
    spec_values, solver_values = split_fields(values, lines)
    kind = spec_values.get("kind")
    for name, default in FIGURE_DEFAULTS.get(str(kind), {}).items():
        spec_values.setdefault(name, default)
    try:
        solver = SolverConfig(**solver_values)
        return ExperimentSpec(solver=solver, **spec_values)
    except ValidationError as exc:
        error = exc.errors()[0]
        field = str(error["loc"][0]) if error["loc"] else None
        message = error["msg"]
        if len(exc.errors()) > 1:
            message += f" (and {len(exc.errors()) - 1} more)"
        raise ConfigError(message, field=field, line=lines.get(field) if field else None) from exc


def load_config(path: Union[str, Path], overrides: Optional[Mapping[str, object]] = None) -> ExperimentSpec:
    """
    Read a config file, apply overrides (CLI flags win), validate.

    Raises:
        ConfigError: unreadable file, unknown key or invalid value.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    lines = _key_lines(path)
    raw = {key: _parse_value(key.strip().lower(), value) for key, value in dotenv_values(path).items()}
    raw = {key: value for key, value in raw.items() if value is not None}
    raw.update({key: value for key, value in (overrides or {}).items() if value is not None})
    logger.debug("Loaded %d keys from %s", len(raw), path)
    return build_spec(raw, lines)


def effective_config(spec: ExperimentSpec) -> Dict[str, object]:
    """Every field with defaults resolved, solver fields flattened, as plain JSON values."""
    values = spec.model_dump(mode="json", exclude={"solver"})
    values.update(spec.solver.model_dump(mode="json", exclude={"seed", "threads"}))
    return values
