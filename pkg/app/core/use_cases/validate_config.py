# File: app/core/use_cases/validate_config.py

"""
Config validation without running anything: parse, validate every field,
resolve defaults and return the effective configuration.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Union

from app.config.config_file import effective_config, load_config
from app.core.entities.experiment import ExperimentSpec
from app.core.services.box_policy import resolve_grid
from app.core.services.theory_bounds import resolve_c_lt


@dataclass
class ConfigReport:
    """
    Outcome of validate_config.

    Attributes:
        spec (ExperimentSpec): The validated experiment.
        effective (Dict[str, object]): Every field with defaults resolved.
        notes (List[str]): Derived quantities (grid, c_LT source).
    """

    spec: ExperimentSpec
    effective: Dict[str, object]
    notes: List[str]


def validate_config(path: Union[str, Path], overrides: Optional[Mapping[str, object]] = None) -> ConfigReport:
    """
    Raises:
        ConfigError: unknown key or invalid value, with field and line.
    """
    spec = load_config(path, overrides)
    config = spec.solver_config()
    grid = resolve_grid(config.grid_policy(), spec.dim, spec.p, spec.mass)
    c_lt, source = resolve_c_lt(spec.dim, config.c_lt)
    notes = [
        f"grid for mass {spec.mass:g}: L={grid.L:g}, n={grid.n}, h={grid.h:.4g}",
        f"c_LT = {c_lt:.6f} ({source})",
    ]
    return ConfigReport(spec=spec, effective=effective_config(spec), notes=notes)
