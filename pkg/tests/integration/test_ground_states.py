# fermi-nls-lab/tests/integration/test_ground_states.py
import pytest

from app.config.solver_config import SolverConfig
from app.core.entities.ledger import BindingLedger
from app.core.services import binding_ledger as ledger_service
from app.core.services.dimer_lab import binding_gap_vs_p, gap_trend_violations
from app.core.services.fermi_solver import sweep_mass
from app.core.services.theory_bounds import per_particle_monotone

DEFAULT = SolverConfig(el_tol=1e-8)


def ledger_of(sweep, d, p):
    ledger = BindingLedger(d=d, p=p)
    for state in sweep:
        ledger = ledger_service.record(ledger, state.params.mass, state.energy, "test")
    return ledger


@pytest.mark.integration
@pytest.mark.slow
def test_two_particle_gap_shrinks_towards_p_two():
    points = binding_gap_vs_p([1.3, 1.6, 1.9], N=2, config=DEFAULT)
    assert all(pt.error is None and pt.converged for pt in points)
    gaps = [pt.gap for pt in points]
    assert all(gap < 0 for gap in gaps)
    assert abs(gaps[0]) > abs(gaps[1]) > abs(gaps[2])
    assert gap_trend_violations(points, slack=0.0) == []


@pytest.mark.integration
@pytest.mark.slow
def test_binding_holds_up_to_four_particles_at_small_p():
    sweep = sweep_mass(1, 1.3, [1.0, 2.0, 3.0, 4.0], DEFAULT)
    assert not sweep.failures
    assert all(state.converged and state.diagnostics.virial_ok for state in sweep)
    ledger = ledger_of(sweep, 1, 1.3)
    verdicts = ledger_service.verdicts(ledger)
    assert [v.N for v in verdicts] == [1, 2, 3, 4]
    assert all(v.holds for v in verdicts)
    assert ledger_service.binding_set(ledger) == [1, 2, 3, 4]


@pytest.mark.integration
@pytest.mark.slow
def test_two_dimensional_clusters():
    sweep = sweep_mass(2, 1.5, [1.0, 2.0, 3.0, 4.0], SolverConfig(el_tol=1e-7))
    assert not sweep.failures
    for state in sweep:
        report = state.diagnostics
        assert state.converged
        assert report.virial_residual < 1e-5
        assert report.aufbau_verified
        assert report.local_maxima == state.N
    assert per_particle_monotone(ledger_of(sweep, 2, 1.5)) == []
