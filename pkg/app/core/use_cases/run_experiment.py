# File: app/core/use_cases/run_experiment.py

"""
Experiment driver: runs one ExperimentSpec and writes the run directory

    <output>/record.json    RunRecord (versioned JSON)
    <output>/<name>.csv     curves and tables, one header row each
    <output>/summary.txt    plain-text summary with column documentation
    <output>/orbitals/      optional binary orbital dumps

Solver failures never abort a run: the record is written with converged=False
entries and the caller turns that into the exit status.
"""

import logging
import time
from pathlib import Path
from typing import Callable, Dict, List, Sequence, Tuple

from app.core.entities.experiment import ExperimentSpec, RunRecord
from app.core.entities.ledger import BindingLedger
from app.core.entities.model import ModelParams
from app.core.entities.results import GroundStateResult
from app.core.errors import NLSLabError, ParameterError
from app.core.services import binding_ledger as ledger_service
from app.core.services.box_policy import resolve_grid
from app.core.services.diagnostics import radial_profile
from app.core.services.dimer_lab import (
    binding_gap_vs_p,
    exponential_overlap_envelope,
    exponential_overlap_integral,
    gap_trend_violations,
    interaction_curve,
)
from app.core.services.fermi_solver import MassSweep, solve_ground_state, sweep_mass
from app.core.services.soliton_oracle import radial_ground_state, soliton_ground_state_1d
from app.core.services.spectral_grid import coordinates
from app.core.services.theory_bounds import (
    bounds_context,
    energy_shape,
    p_critical,
    per_particle_monotone,
    plane_wave_upper_bound,
    rescaled_constants,
    sandwich_report,
    tf_density,
)
from app.infrastructure.storage.csv_export import describe_columns, write_csv
from app.infrastructure.storage.ledger_repository import LedgerRepository
from app.infrastructure.storage.orbital_dump import dump_orbitals
from app.infrastructure.storage.run_repository import RunRecordRepository

logger = logging.getLogger(__name__)

FIGURE4_MASSES = [0.25 * k for k in range(1, 13)]
GAP_P_LIST = [1.3, 1.5, 1.7, 1.9, 1.95]
DIMER_R_LIST = [float(R) for R in range(4, 32, 2)]
PLANE_WAVE_SHELLS = [1, 9, 33, 129, 513]


class RunContext:
    """Mutable state of one run: record under construction, files and summary lines."""

    def __init__(self, spec: ExperimentSpec):
        self.spec = spec
        self.config = spec.solver_config()
        self.directory = Path(spec.output)
        self.record = RunRecord(spec=spec)
        self.summary: List[str] = []

    def csv(self, name: str, columns: Sequence[str], rows) -> None:
        write_csv(self.directory / name, columns, rows)
        self.record.files.append(name)
        self.summary.append(f"{name}:")
        self.summary.extend(describe_columns(columns))

    def state(self, label: str, result: GroundStateResult) -> Dict[str, object]:
        self.record.converged[label] = result.converged
        if self.config.dump_orbitals:
            stem = Path("orbitals") / label.replace("=", "_")
            dump_orbitals(result.orbitals, self.directory / stem)
            self.record.files.extend([str(stem.with_suffix(".bin")), str(stem.with_suffix(".json"))])
        return summarize_state(result)

    def sweep(self, sweep: MassSweep) -> List[Dict[str, object]]:
        states = [self.state(f"mass={r.params.mass:g}", r) for r in sweep]
        for mass, reason in sweep.failures.items():
            self.record.converged[f"mass={mass:g}"] = False
            self.summary.append(f"FAILED mass={mass:g}: {reason}")
        return states


# ----------------------------------------------------------------------------
# Result payloads
# ----------------------------------------------------------------------------

def summarize_state(result: GroundStateResult) -> Dict[str, object]:
    """Plain JSON view of a ground state (no arrays beyond the multipliers)."""
    grid = result.grid
    return {
        "mass": result.params.mass,
        "N": result.N,
        "J": result.energy,
        "J_per_mass": result.energy / result.params.mass,
        "mu": [float(m) for m in result.mu],
        "converged": result.converged,
        "iterations": result.iterations,
        "engine": result.engine,
        "grid": {"d": grid.d, "L": grid.L, "n": grid.n},
        "restart_energies": list(result.restart_energies),
        "flags": list(result.flags),
        "diagnostics": result.diagnostics.model_dump(mode="json") if result.diagnostics else None,
        "box_check": result.box_check.model_dump(mode="json") if result.box_check else None,
    }


def density_rows(result: GroundStateResult) -> Tuple[List[str], List[Dict[str, float]]]:
    """x, rho in 1D; x, y, rho in 2D; radial average r, rho in 3D."""
    grid = result.grid
    rho = result.density.values
    if grid.d == 1:
        return ["x", "rho"], [{"x": float(x), "rho": float(r)} for x, r in zip(grid.axis(), rho)]
    if grid.d == 2:
        xs, ys = coordinates(grid)
        return ["x", "y", "rho"], [
            {"x": float(x), "y": float(y), "rho": float(r)} for x, y, r in zip(xs.ravel(), ys.ravel(), rho.ravel())
        ]
    r, avg = radial_profile(result.density)
    return ["r", "rho"], [{"r": float(a), "rho": float(b)} for a, b in zip(r, avg)]


def sweep_rows(sweep: MassSweep) -> List[Dict[str, object]]:
    return [
        {
            "mass": r.params.mass,
            "N": r.N,
            "J": r.energy,
            "J_per_mass": r.energy / r.params.mass,
            "mu_last": r.mu_last,
            "converged": r.converged,
        }
        for r in sweep
    ]


def ledger_from_sweep(ctx: RunContext, sweep: MassSweep, name: str = "ledger.json") -> BindingLedger:
    spec = ctx.spec
    e_lt = bounds_context(spec.dim, spec.p, ctx.config.c_lt).e_LT
    repository = LedgerRepository(ctx.directory / name)
    ledger = BindingLedger(d=spec.dim, p=spec.p)
    for r in sweep:
        try:
            ledger = repository.record(ledger, r.params.mass, r.energy, f"{spec.kind}/mass={r.params.mass:g}", e_lt)
        except NLSLabError as exc:
            logger.warning("Ledger refused mass %.4g: %s", r.params.mass, exc)
            ctx.summary.append(f"ledger refused mass={r.params.mass:g}: {exc}")
    if name not in ctx.record.files:
        ctx.record.files.append(name)
    return ledger


def scalar_reference(d: int, p: float):
    return soliton_ground_state_1d(p) if d == 1 else radial_ground_state(d, p)


# ----------------------------------------------------------------------------
# Experiments
# ----------------------------------------------------------------------------

def _solve(ctx: RunContext) -> None:
    spec = ctx.spec
    result = solve_ground_state(ModelParams(d=spec.dim, p=spec.p, mass=spec.mass), ctx.config)
    ctx.record.results["state"] = ctx.state(f"mass={spec.mass:g}", result)
    columns, rows = density_rows(result)
    ctx.csv("density.csv", columns, rows)
    ctx.summary.append(f"J({spec.mass:g}) = {result.energy:.12f}  converged={result.converged}")


def _sweep_lambda(ctx: RunContext) -> None:
    spec = ctx.spec
    masses = spec.masses or [float(N) for N in range(1, spec.n_max + 1)]
    sweep = sweep_mass(spec.dim, spec.p, masses, ctx.config)
    ctx.record.results["states"] = ctx.sweep(sweep)
    ctx.csv("sweep.csv", ["mass", "N", "J", "J_per_mass", "mu_last", "converged"], sweep_rows(sweep))


def _integer_sweep(ctx: RunContext) -> Tuple[MassSweep, BindingLedger]:
    spec = ctx.spec
    sweep = sweep_mass(spec.dim, spec.p, [float(N) for N in range(1, spec.n_max + 1)], ctx.config)
    ctx.record.results["states"] = ctx.sweep(sweep)
    return sweep, ledger_from_sweep(ctx, sweep)


def _binding_table(ctx: RunContext) -> None:
    sweep, ledger = _integer_sweep(ctx)
    all_verdicts = ledger_service.verdicts(ledger)
    rows = [
        {"N": v.N, "K": K, "margin": margin, "holds": v.holds}
        for v in all_verdicts
        for K, margin in sorted(v.margins.items())
    ]
    ctx.record.results["verdicts"] = [v.model_dump(mode="json") for v in all_verdicts]
    ctx.record.results["binding_set"] = ledger_service.binding_set(ledger)
    ctx.record.results["decompositions"] = [
        ledger_service.binding_set_decompose(ledger, v.N).model_dump(mode="json")
        for v in all_verdicts if not v.holds
    ]
    ctx.csv("binding.csv", ["N", "K", "margin", "holds"], rows)
    ctx.summary.append(f"binding set: {ctx.record.results['binding_set']}")


def _bounds_report(ctx: RunContext) -> None:
    spec = ctx.spec
    d, p = spec.dim, spec.p
    scalar = scalar_reference(d, p)
    context = bounds_context(d, p, ctx.config.c_lt, I1=scalar.I1)
    report: Dict[str, object] = {
        "c_TF": context.c_TF,
        "c_LT": context.c_LT,
        "c_LT_source": context.c_LT_source,
        "e_TF": context.e_TF,
        "e_LT": context.e_LT,
        "e_LT_rigorous": context.e_LT_rigorous,
        "I1": scalar.I1,
        "mu1": scalar.mu1,
    }
    if not context.e_LT_rigorous:
        report["e_LT_note"] = (
            f"heuristic: c_LT is calibrated ({context.c_LT_source}), so e_LT is not a proven lower bound in d={d}"
        )
    try:
        report["p_critical"] = p_critical(d, ctx.config.c_lt).model_dump(mode="json")
    except NLSLabError as exc:
        report["p_critical"] = {"error": str(exc)}

    density = tf_density(d, p)
    plane_waves = []
    for N in PLANE_WAVE_SHELLS:
        L = (N / density) ** (1.0 / d)
        try:
            bound = plane_wave_upper_bound(d, p, N, L)
        except ParameterError:
            continue
        plane_waves.append(bound.model_dump(mode="json"))
    report["plane_wave"] = plane_waves

    sweep, ledger = _integer_sweep(ctx)
    sandwich = sandwich_report(ledger, context)
    constants = rescaled_constants(ledger)
    report["sandwich"] = [row.model_dump(mode="json") for row in sandwich]
    report["per_particle_violations"] = [list(v) for v in per_particle_monotone(ledger)]
    report["rescaled_constants"] = {str(N): c for N, c in constants.items()}
    ctx.record.results["bounds"] = report

    rows = [
        {"mass": row.mass, "J_per_mass": row.J_over_mass, "e_LT": row.e_LT,
         "e_LT_rigorous": context.e_LT_rigorous, "I1": row.I1,
         "c_rescaled": constants.get(int(round(row.mass)))}
        for row in sandwich
    ]
    ctx.csv("bounds.csv", ["mass", "J_per_mass", "e_LT", "e_LT_rigorous", "I1", "c_rescaled"], rows)
    ctx.summary.extend([
        f"c_TF = {context.c_TF:.6f}  c_LT = {context.c_LT:.6f} ({context.c_LT_source})",
        f"e_TF = {context.e_TF:.8f}  e_LT = {context.e_LT:.8f}  I(d,p,1) = {scalar.I1:.8f}",
    ])
    if not context.e_LT_rigorous:
        ctx.summary.append(f"e_LT and p_critical are heuristic in d={d}: c_LT is calibrated, not a proven constant")


def _dimer_curve(ctx: RunContext) -> None:
    spec = ctx.spec
    R_list = spec.r_list or DIMER_R_LIST
    params = ModelParams(d=spec.dim, p=spec.p, mass=spec.mass)
    base = resolve_grid(ctx.config.grid_policy(), spec.dim, spec.p, spec.mass)
    # both halves on one fixed grid long enough for the largest separation
    box = max(base.L, 2.5 * max(R_list))
    config = ctx.config.model_copy(update={"box_l": box, "box_check": False})
    state = solve_ground_state(params, config)
    ctx.record.results["state"] = ctx.state(f"mass={spec.mass:g}", state)

    curve = interaction_curve(state, state, R_list, workers=ctx.config.threads, rotation=spec.rotation)
    payload = curve.model_dump(mode="json")
    payload["exponential_integrals"] = [
        {
            "R": R,
            "value": exponential_overlap_integral(curve.eps, curve.eps_prime, R, spec.dim),
            "envelope": exponential_overlap_envelope(curve.eps, curve.eps_prime, R, spec.dim),
        }
        for R in R_list
    ]
    ctx.record.results["curve"] = payload
    ctx.csv(
        "dimer.csv",
        ["R", "interaction", "fitted_rate", "theory_rate_attract", "theory_rate_orth", "gram_condition"],
        curve.rows(),
    )
    for point in curve.failures:
        ctx.summary.append(f"FAILED R={point.R:g}: {point.error}")
    ctx.summary.append(
        f"fitted rate {curve.fitted_rate}  markers: attraction {curve.rate_attract:.5f}, "
        f"orthogonalisation {curve.rate_orth:.5f}; attraction condition holds: {curve.condition.holds}"
    )


def _figure1(ctx: RunContext) -> None:
    _solve(ctx)
    peaks = ctx.record.results["state"]["diagnostics"]
    count = peaks["local_maxima"] if peaks else None
    ctx.record.results["local_maxima"] = count
    ctx.summary.append(f"local maxima of rho: {count}")


def _figure2(ctx: RunContext) -> None:
    spec = ctx.spec
    sweep = sweep_mass(spec.dim, spec.p, [float(N) for N in range(1, spec.n_max + 1)], ctx.config)
    ctx.record.results["states"] = ctx.sweep(sweep)
    for result in sweep:
        columns, rows = density_rows(result)
        ctx.csv(f"figure2_N{result.N}.csv", columns, rows)
        peaks = result.diagnostics.local_maxima if result.diagnostics else None
        ctx.summary.append(f"N={result.N}: J={result.energy:.10f}  local maxima={peaks}")


def _figure3(ctx: RunContext) -> None:
    sweep, ledger = _integer_sweep(ctx)
    violations = per_particle_monotone(ledger)
    ctx.record.results["per_particle_violations"] = [list(v) for v in violations]
    rows = [{"N": r.N, "J": r.energy, "J_per_mass": r.energy / r.params.mass} for r in sweep]
    ctx.csv("figure3.csv", ["N", "J", "J_per_mass"], rows)
    ctx.summary.append(f"J(N)/N non-increasing within slack: {not violations}")


def _figure4(ctx: RunContext) -> None:
    spec = ctx.spec
    masses = spec.masses or FIGURE4_MASSES
    sweep = sweep_mass(spec.dim, spec.p, masses, ctx.config)
    ctx.record.results["states"] = ctx.sweep(sweep)
    ratios = [(r.params.mass, r.energy / r.params.mass) for r in sweep]
    # J/lambda is decreasing on integers but not in between
    increases = [[a, b] for (a, ja), (b, jb) in zip(ratios, ratios[1:]) if jb > ja]
    ctx.record.results["ratio_increases"] = increases
    shape = energy_shape([(r.params.mass, r.energy) for r in sweep])
    ctx.record.results["shape"] = shape.model_dump(mode="json")
    ctx.record.results["strictly_decreasing"] = shape.strictly_decreasing
    ctx.record.results["concave_pieces"] = shape.concave_pieces
    ctx.csv("figure4.csv", ["mass", "N", "J", "J_per_mass", "mu_last", "converged"], sweep_rows(sweep))
    ctx.csv("figure4_verdicts.csv", ["check", "holds", "violations"], [
        {"check": "strictly_decreasing", "holds": shape.strictly_decreasing,
         "violations": ";".join(f"{a:g}-{b:g}" for a, b in shape.increases)},
        {"check": "concave_pieces", "holds": shape.concave_pieces,
         "violations": ";".join(f"{m:g}:{e:.3e}" for m, e in shape.concavity_violations)},
    ])
    ctx.summary.extend([
        f"J strictly decreasing: {shape.strictly_decreasing}"
        + (f" (increases {shape.increases})" if shape.increases else ""),
        f"J concave on every [N-1, N] within slack {shape.slack:g}: {shape.concave_pieces}"
        + (f" (violations at {[m for m, _ in shape.concavity_violations]})" if shape.concavity_violations else ""),
        f"mass intervals where J/lambda increases: {increases}",
    ])


def _gap_vs_p(ctx: RunContext) -> None:
    spec = ctx.spec
    p_list = spec.p_list or GAP_P_LIST
    points = binding_gap_vs_p(p_list, N=2, config=ctx.config, d=spec.dim, workers=1)
    for pt in points:
        ctx.record.converged[f"p={pt.p:g}"] = pt.converged
    ctx.record.results["gaps"] = [pt.model_dump(mode="json") for pt in points]
    ctx.record.results["trend_violations"] = [list(v) for v in gap_trend_violations(points)]
    ctx.csv("gap_vs_p.csv", ["p", "J1", "JN", "gap"], [pt.model_dump() for pt in points])
    for pt in points:
        ctx.summary.append(f"p={pt.p:g}: gap={pt.gap}" + (f"  FAILED: {pt.error}" if pt.error else ""))


EXPERIMENTS: Dict[str, Callable[[RunContext], None]] = {
    "solve": _solve,
    "sweep-lambda": _sweep_lambda,
    "binding-table": _binding_table,
    "bounds-report": _bounds_report,
    "dimer-curve": _dimer_curve,
    "figure1": _figure1,
    "figure2": _figure2,
    "figure3": _figure3,
    "figure4": _figure4,
    "gap-vs-p": _gap_vs_p,
}


def run(spec: ExperimentSpec) -> RunRecord:
    """
    Execute one experiment and write its run directory.

    Workflow:
      1. Dispatch on spec.kind.
      2. Write the CSV files as they are produced.
      3. Write record.json and summary.txt, also after a failure.

    Returns:
        The RunRecord; record.all_converged tells whether every solve converged.
    """
    ctx = RunContext(spec)
    ctx.directory.mkdir(parents=True, exist_ok=True)
    logger.info("Running %s (d=%d, p=%.4g) into %s", spec.kind, spec.dim, spec.p, ctx.directory)
    start = time.perf_counter()
    try:
        EXPERIMENTS[spec.kind](ctx)
    except NLSLabError as exc:
        logger.error("Experiment %s failed: %s", spec.kind, exc)
        ctx.record.results["error"] = str(exc)
        ctx.record.converged["run"] = False
    ctx.record.wall_time = time.perf_counter() - start

    header = [
        f"experiment: {spec.kind}",
        f"d={spec.dim} p={spec.p:g} seed={spec.seed} code_version={ctx.record.code_version}",
        f"all converged: {ctx.record.all_converged}",
        f"wall time: {ctx.record.wall_time:.2f} s",
        "",
    ]
    repository = RunRecordRepository(ctx.directory)
    repository.save(ctx.record)
    repository.write_summary(header + ctx.summary)
    return ctx.record
