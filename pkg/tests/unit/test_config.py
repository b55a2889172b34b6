# fermi-nls-lab/tests/unit/test_config.py
import pytest

from app.config.config_file import build_spec, effective_config, load_config
from app.config.settings import Settings
from app.config.solver_config import SolverConfig
from app.core.errors import ConfigError
from app.core.use_cases.validate_config import validate_config


@pytest.fixture
def write_config(tmp_path):
    def write(text: str):
        path = tmp_path / "run.env"
        path.write_text(text, encoding="utf-8")
        return path

    return write


@pytest.mark.unit
def test_unknown_key_names_field_and_line(write_config):
    path = write_config("# test\nkind=solve\ndim=1\nfoo=3\n")
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.field == "foo"
    assert info.value.line == 4
    assert "unknown key" in str(info.value)


@pytest.mark.unit
def test_exponent_outside_range_is_rejected(write_config):
    path = write_config("kind=solve\ndim=1\np=3\n")
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.field == "p"
    assert info.value.line == 3
    assert "(1, 3)" in str(info.value)


@pytest.mark.unit
def test_odd_grid_points_are_rejected(write_config):
    path = write_config("kind=solve\ngrid_n=513\n")
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.field == "grid_n"
    assert info.value.line == 2


@pytest.mark.unit
def test_descending_masses_are_rejected(write_config):
    with pytest.raises(ConfigError) as info:
        load_config(write_config("kind=sweep-lambda\nmasses=2, 1\n"))
    assert info.value.field == "masses"


@pytest.mark.unit
def test_minimal_config_uses_defaults(write_config):
    spec = load_config(write_config("kind=solve\n"))
    assert (spec.dim, spec.p, spec.mass) == (1, 1.3, 1.0)
    assert spec.solver == SolverConfig()
    effective = effective_config(spec)
    assert effective["el_tol"] == SolverConfig().el_tol
    assert effective["kind"] == "solve"
    assert effective["seed"] == 0


@pytest.mark.unit
def test_values_are_parsed_and_routed(write_config):
    path = write_config(
        "kind=sweep-lambda\ndim=2\np=1.5\nmasses=0.5, 1, 1.5\nseed=7\nthreads=2\n"
        "el_tol=1e-9\nbox_check=false\nengine=flow+scf\n"
    )
    spec = load_config(path)
    assert spec.dim == 2
    assert spec.masses == [0.5, 1.0, 1.5]
    assert spec.solver.el_tol == 1e-9
    assert spec.solver.box_check is False
    assert spec.solver.engine == "flow+scf"
    config = spec.solver_config()
    assert (config.seed, config.threads) == (7, 2)


@pytest.mark.unit
def test_overrides_win(write_config):
    spec = load_config(write_config("kind=solve\nmass=2\n"), {"mass": 3.0, "p": None})
    assert spec.mass == 3.0
    assert spec.p == 1.3


@pytest.mark.unit
def test_figure_defaults_fill_unset_fields():
    spec = build_spec({"kind": "figure1"})
    assert (spec.dim, spec.p, spec.mass) == (1, 1.3, 15.0)
    assert build_spec({"kind": "figure1", "mass": 5}).mass == 5.0
    assert build_spec({"kind": "figure3"}).dim == 2


@pytest.mark.unit
def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.env")


@pytest.mark.unit
def test_validate_config_reports_derived_values(write_config):
    report = validate_config(write_config("kind=solve\ndim=1\np=1.3\nmass=2\n"))
    assert report.spec.mass == 2.0
    assert any(note.startswith("grid for mass 2") for note in report.notes)
    assert any("c_LT" in note for note in report.notes)


@pytest.mark.unit
def test_settings_read_the_environment(monkeypatch):
    monkeypatch.setenv("NLS_THREADS", "3")
    monkeypatch.setenv("NLS_LOG_LEVEL", "DEBUG")
    settings = Settings()
    assert settings.THREADS == 3
    assert settings.LOG_LEVEL == "DEBUG"
