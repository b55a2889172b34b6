# File: app/infrastructure/storage/orbital_dump.py
"""
Orbital dumps: raw little-endian float64 arrays (C order, shape (N, n, ..., n))
with a JSON sidecar describing grid, shape and occupations.
"""

import json
from pathlib import Path
from typing import Tuple

import numpy as np

from app.core.entities.grid import Grid
from app.core.entities.model import OrbitalSet

DTYPE = "<f8"


def dump_orbitals(orbitals: OrbitalSet, stem: Path) -> Tuple[Path, Path]:
    """Writes <stem>.bin and <stem>.json; returns both paths."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    data_path = stem.with_suffix(".bin")
    meta_path = stem.with_suffix(".json")
    np.ascontiguousarray(orbitals.values, dtype=DTYPE).tofile(data_path)
    meta = {
        "dtype": DTYPE,
        "order": "C",
        "shape": list(orbitals.values.shape),
        "grid": {"d": orbitals.grid.d, "L": orbitals.grid.L, "n": orbitals.grid.n},
        "occupations": [float(x) for x in orbitals.occupations],
        "data": data_path.name,
    }
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return data_path, meta_path


def load_orbitals(meta_path: Path) -> OrbitalSet:
    meta_path = Path(meta_path)
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    grid = Grid(**meta["grid"])
    values = np.fromfile(meta_path.parent / meta["data"], dtype=meta["dtype"]).reshape(meta["shape"])
    return OrbitalSet(grid, values, np.asarray(meta["occupations"]))
