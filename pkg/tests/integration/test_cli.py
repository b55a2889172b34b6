# fermi-nls-lab/tests/integration/test_cli.py
import pytest

from app.cli.main import EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_OK, main

SOLVE = "kind=solve\ndim=1\np=1.3\nmass=1\nbox_check=false\nbox_l=40\ngrid_n=256\n"


@pytest.fixture
def config_file(tmp_path):
    def write(text: str):
        path = tmp_path / "run.env"
        path.write_text(text, encoding="utf-8")
        return str(path)

    return write


@pytest.mark.integration
def test_validate_config_accepts_a_good_file(config_file):
    assert main(["validate-config", "--config", config_file(SOLVE)]) == EXIT_OK


@pytest.mark.integration
def test_validate_config_rejects_a_bad_file(config_file):
    assert main(["validate-config", "--config", config_file("kind=solve\np=3\n")]) == EXIT_CONFIG


@pytest.mark.integration
def test_validate_config_needs_a_file():
    assert main(["validate-config"]) == EXIT_CONFIG


@pytest.mark.integration
def test_solve_from_the_command_line(config_file, tmp_path):
    out = tmp_path / "out"
    assert main(["solve", "--config", config_file(SOLVE), "--out", str(out)]) == EXIT_OK
    assert (out / "record.json").is_file()
    assert (out / "density.csv").is_file()


@pytest.mark.integration
def test_flags_override_the_defaults(tmp_path):
    out = tmp_path / "flags"
    code = main(["solve", "--mass", "0.5", "--box-l", "40", "--grid-n", "256", "--out", str(out)])
    assert code == EXIT_OK
    assert (out / "summary.txt").read_text(encoding="utf-8").count("J(0.5)") == 1


@pytest.mark.integration
def test_unconverged_solve_sets_the_exit_status(config_file, tmp_path):
    out = tmp_path / "capped"
    path = config_file(SOLVE.replace("mass=1", "mass=2") + "max_iter=2\n")
    assert main(["solve", "--config", path, "--out", str(out)]) == EXIT_NOT_CONVERGED
    assert (out / "record.json").is_file()
