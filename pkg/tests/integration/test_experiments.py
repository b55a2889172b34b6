# fermi-nls-lab/tests/integration/test_experiments.py
import json

import pytest

from app.config.solver_config import SolverConfig
from app.core.entities.experiment import ExperimentSpec
from app.core.use_cases.run_experiment import EXPERIMENTS, run
from app.infrastructure.storage.csv_export import read_csv
from app.infrastructure.storage.run_repository import RunRecordRepository

SMALL = SolverConfig(box_check=False, el_tol=1e-8, box_l=50.0, grid_n=512)


def spec_for(kind, output, **fields):
    return ExperimentSpec(kind=kind, output=output, solver=SMALL, **fields)


def stable_view(path):
    """record.json without the fields that change between identical runs."""
    record = json.loads(path.read_text(encoding="utf-8"))
    record.pop("created_at")
    record.pop("wall_time")
    record["spec"].pop("output")
    return json.dumps(record, sort_keys=True)


@pytest.mark.integration
def test_every_kind_has_a_runner():
    assert set(EXPERIMENTS) == {
        "solve", "sweep-lambda", "binding-table", "bounds-report", "dimer-curve",
        "figure1", "figure2", "figure3", "figure4", "gap-vs-p",
    }


@pytest.mark.integration
def test_solve_writes_a_run_directory(tmp_path):
    record = run(spec_for("solve", tmp_path, mass=1.0))
    assert record.all_converged
    assert record.files == ["density.csv"]
    state = record.results["state"]
    assert state["N"] == 1
    assert state["J"] == pytest.approx(-0.353947, abs=1e-4)
    rows = read_csv(tmp_path / "density.csv")
    assert len(rows) == 512
    assert list(rows[0]) == ["x", "rho"]
    loaded = RunRecordRepository(tmp_path).load()
    assert loaded.results["state"]["J"] == state["J"]
    summary = (tmp_path / "summary.txt").read_text(encoding="utf-8")
    assert "experiment: solve" in summary
    assert "rho: density" in summary


@pytest.mark.integration
def test_identical_runs_write_identical_records(tmp_path):
    first = run(spec_for("solve", tmp_path / "a", mass=2.0, seed=3))
    second = run(spec_for("solve", tmp_path / "b", mass=2.0, seed=3))
    assert first.results["state"]["J"] == second.results["state"]["J"]
    assert stable_view(tmp_path / "a" / "record.json") == stable_view(tmp_path / "b" / "record.json")


@pytest.mark.integration
def test_orbital_dumps_are_listed(tmp_path):
    spec = ExperimentSpec(
        kind="solve", output=tmp_path, mass=2.0, solver=SMALL.model_copy(update={"dump_orbitals": True})
    )
    record = run(spec)
    assert "orbitals/mass_2.bin" in record.files
    assert (tmp_path / "orbitals" / "mass_2.json").is_file()


@pytest.mark.integration
def test_sweep_lambda_table(tmp_path):
    record = run(spec_for("sweep-lambda", tmp_path, masses=[0.5, 1.0, 1.5]))
    rows = read_csv(tmp_path / "sweep.csv")
    assert [float(r["mass"]) for r in rows] == [0.5, 1.0, 1.5]
    assert [int(r["N"]) for r in rows] == [1, 1, 2]
    energies = [float(r["J"]) for r in rows]
    assert energies == sorted(energies, reverse=True)
    assert len(record.converged) == 3


@pytest.mark.integration
def test_binding_table(tmp_path):
    record = run(spec_for("binding-table", tmp_path, n_max=3))
    assert record.results["binding_set"][0] == 1
    assert (tmp_path / "ledger.json").is_file()
    rows = read_csv(tmp_path / "binding.csv")
    assert {(int(r["N"]), int(r["K"])) for r in rows} == {(2, 1), (3, 1), (3, 2)}


@pytest.mark.integration
def test_bounds_report(tmp_path):
    record = run(spec_for("bounds-report", tmp_path, n_max=2))
    bounds = record.results["bounds"]
    assert bounds["e_LT"] <= bounds["I1"] < 0
    assert bounds["I1"] == pytest.approx(-0.353947, abs=1e-5)
    assert 1.629 < bounds["p_critical"]["root"] < 1.66
    assert bounds["plane_wave"]
    assert all(row["lower_ok"] for row in bounds["sandwich"])
    assert len(read_csv(tmp_path / "bounds.csv")) == 2
    assert bounds["e_LT_rigorous"] is False
    assert bounds["e_LT_note"].startswith("heuristic")
    assert {row["e_LT_rigorous"] for row in read_csv(tmp_path / "bounds.csv")} == {"0"}
    assert "heuristic" in (tmp_path / "summary.txt").read_text(encoding="utf-8")


@pytest.mark.integration
@pytest.mark.slow
def test_dimer_curve_run(tmp_path):
    record = run(spec_for("dimer-curve", tmp_path, r_list=[14.0, 16.0, 18.0, 20.0]))
    curve = record.results["curve"]
    assert curve["condition"]["holds"]
    assert len(curve["exponential_integrals"]) == 4
    rows = read_csv(tmp_path / "dimer.csv")
    assert [float(r["R"]) for r in rows] == [14.0, 16.0, 18.0, 20.0]
    assert all(r["interaction"] != "" for r in rows)


@pytest.mark.integration
@pytest.mark.slow
def test_gap_vs_p_run(tmp_path):
    record = run(spec_for("gap-vs-p", tmp_path, p_list=[1.3, 1.5]))
    gaps = record.results["gaps"]
    assert [g["p"] for g in gaps] == [1.3, 1.5]
    assert all(g["gap"] <= 1e-6 for g in gaps)
    assert len(read_csv(tmp_path / "gap_vs_p.csv")) == 2


@pytest.mark.integration
@pytest.mark.slow
def test_fifteen_fermions_show_fifteen_peaks(tmp_path):
    spec = ExperimentSpec(kind="figure1", output=tmp_path, solver=SolverConfig(box_check=False))
    record = run(spec)
    assert record.spec.mass == 15.0
    assert record.results["local_maxima"] == 15


@pytest.mark.integration
@pytest.mark.slow
def test_figure4_verdicts(tmp_path):
    spec = ExperimentSpec(kind="figure4", output=tmp_path, solver=SolverConfig(el_tol=1e-8))
    record = run(spec)
    assert [state["mass"] for state in record.results["states"]] == [0.25 * k for k in range(1, 13)]
    assert record.results["strictly_decreasing"]
    assert record.results["concave_pieces"]
    assert record.results["shape"]["concavity_violations"] == []
    verdicts = read_csv(tmp_path / "figure4_verdicts.csv")
    assert [(row["check"], row["holds"]) for row in verdicts] == [
        ("strictly_decreasing", "1"), ("concave_pieces", "1"),
    ]
    summary = (tmp_path / "summary.txt").read_text(encoding="utf-8")
    assert "J strictly decreasing: True" in summary
