# File: app/infrastructure/storage/csv_export.py

import csv
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence

# One line of documentation per column, repeated in summary.txt
COLUMN_DOCS: Dict[str, str] = {
    "x": "grid coordinate along x1",
    "y": "grid coordinate along x2",
    "r": "distance to the density centre (shell average)",
    "rho": "density sum_i nu_i |u_i|^2",
    "mass": "lambda",
    "N": "number of orbitals",
    "J": "ground state energy J(lambda)",
    "J_per_mass": "J(lambda) / lambda",
    "mu_last": "mu_N, last filled multiplier",
    "converged": "1 if the solve met its tolerances",
    "K": "split N = K + (N - K)",
    "margin": "J(K) + J(N-K) - J(N)",
    "holds": "1 if the check passes (binding: margin above the slack)",
    "check": "name of a shape check on J(lambda)",
    "violations": "masses where the check fails, ; separated",
    "e_LT": "Lieb-Thirring lower bound per particle",
    "e_LT_rigorous": "0 when e_LT rests on a calibrated c_LT (heuristic, not a proven bound)",
    "I1": "scalar energy I(d, p, 1)",
    "c_rescaled": "constant of the rescaled inequality",
    "R": "separation of the dimer halves",
    "interaction": "E(dimer) - E(left) - E(right)",
    "fitted_rate": "fitted decay rate of |interaction|",
    "theory_rate_attract": "2 p eps eps' / (eps + eps')",
    "theory_rate_orth": "2 eps'",
    "gram_condition": "condition number of the Gram matrix",
    "p": "nonlinearity exponent",
    "J1": "J(1)",
    "JN": "J(N)",
    "gap": "J(N) - N J(1)",
}


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Mapping[str, object]]) -> Path:
    """Header row then one line per row; '.' decimals, LF line ends, empty cell for None."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format(row.get(column)) for column in columns])
    return path


def read_csv(path: Path) -> List[Dict[str, str]]:
    with Path(path).open(encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def describe_columns(columns: Sequence[str]) -> List[str]:
    return [f"  {column}: {COLUMN_DOCS.get(column, column)}" for column in columns]
