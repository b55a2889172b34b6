# fermi-nls-lab/tests/unit/test_theory_bounds.py
import math

import pytest

from app.core.entities.ledger import BindingLedger, LedgerEntry
from app.core.errors import ConvergenceError, ParameterError
from app.core.services.mean_field import energy_terms
from app.core.services.scalar_nls import scalar_as_ground_state
from app.core.services.soliton_oracle import soliton_ground_state_1d
from app.core.services.theory_bounds import (
    bounds_context,
    c_TF,
    default_c_lt,
    e_LT,
    e_TF,
    energy_shape,
    fill_shells,
    lt_min_value,
    lt_min_value_numeric,
    mu_last_bounds,
    optimal_dilation_energy,
    p_critical,
    per_particle_monotone,
    plane_wave_upper_bound,
    rescaled_constant,
    rescaled_constants,
    sandwich_report,
    tf_density,
)


def soliton_energy(p: float) -> float:
    return soliton_ground_state_1d(p).I1


@pytest.mark.unit
@pytest.mark.parametrize("d, expected", [(1, math.pi ** 2 / 3), (2, 2 * math.pi), (3, 9.1156)])
def test_thomas_fermi_constant(d, expected):
    assert c_TF(d) == pytest.approx(expected, rel=1e-4)


@pytest.mark.unit
def test_lt_energy_at_the_thomas_fermi_constant_is_e_TF():
    for d, p in [(1, 1.3), (2, 1.5), (3, 1.4)]:
        assert e_LT(d, p, c_TF(d)) == pytest.approx(e_TF(d, p), rel=1e-14)
        assert e_TF(d, p) < 0


@pytest.mark.unit
def test_lt_energy_increases_with_the_constant():
    values = [e_LT(1, 1.3, C) for C in (0.5, 1.0, 2.0, c_TF(1))]
    assert values == sorted(values)


@pytest.mark.unit
def test_default_constants_do_not_exceed_thomas_fermi():
    for d in (1, 2, 3):
        default = default_c_lt(d)
        assert 0 < default.value <= c_TF(d)
        assert default.source


@pytest.mark.unit
@pytest.mark.parametrize("d, p, C", [(1, 1.3, 1.0), (2, 1.5, 3.0), (3, 1.2, 5.0)])
def test_lt_minimum_matches_numeric_minimisation(d, p, C):
    closed = lt_min_value(C, d, p, 1.0)
    assert lt_min_value_numeric(C, d, p, 1.0) == pytest.approx(closed, rel=1e-8)
    assert lt_min_value(C, d, p, 3.0) == pytest.approx(3 * closed, rel=1e-14)
    assert lt_min_value(C, d, p, 0.0) == 0.0
    assert lt_min_value_numeric(C, d, p, 0.0) == 0.0


@pytest.mark.unit
def test_lt_minimum_rejects_bad_inputs():
    with pytest.raises(ParameterError):
        lt_min_value(0.0, 1, 1.3, 1.0)
    with pytest.raises(ParameterError):
        lt_min_value(1.0, 1, 3.5, 1.0)


@pytest.mark.unit
def test_tf_density_minimises_the_bang_bang_energy():
    d, p = 1, 1.3
    level = tf_density(d, p)
    per_particle = c_TF(d) * level ** (2 / d) - level ** (p - 1) / p
    assert per_particle == pytest.approx(e_TF(d, p), rel=1e-12)


@pytest.mark.unit
def test_scalar_energy_lies_above_e_LT():
    for p in (1.3, 1.5, 1.9):
        context = bounds_context(1, p, I1=soliton_energy(p))
        assert context.e_LT <= context.I1 < 0


@pytest.mark.unit
def test_multiplier_bounds():
    lower, upper = mu_last_bounds(1, 1.3, 2.0, -0.8, -0.35)
    assert lower == pytest.approx((2.6 - 0.3) / (2 - 0.3) * -0.4)
    assert upper == pytest.approx(-0.35)
    _, half = mu_last_bounds(1, 1.3, 1.5, -0.5, -0.35)
    assert half == pytest.approx(-0.35 * 0.5 ** (0.6 / 1.7))
    assert mu_last_bounds(1, 1.3, 2.0, -0.8, None)[1] is None


@pytest.mark.unit
def test_critical_exponent_in_one_dimension():
    result = p_critical(1, I1_of_p=soliton_energy)
    assert 1.629 < result.root < 1.66
    assert result.bracket[0] <= result.root <= result.bracket[1]
    assert result.c_LT == pytest.approx(default_c_lt(1).value)


@pytest.mark.unit
def test_critical_exponent_grows_with_the_constant():
    default = p_critical(1, I1_of_p=soliton_energy).root
    semiclassical = p_critical(1, c_lt=c_TF(1), I1_of_p=soliton_energy).root
    assert semiclassical > default


@pytest.mark.unit
def test_critical_exponent_without_sign_change():
    with pytest.raises(ConvergenceError):
        p_critical(1, I1_of_p=lambda p: -1e-12)


@pytest.mark.unit
@pytest.mark.slow
@pytest.mark.parametrize("d, lower_bound", [(2, 1.560), (3, 1.402)])
def test_critical_exponent_with_radial_shooting(d, lower_bound):
    result = p_critical(d)
    # bisection stops at 1e-4 in p
    assert lower_bound - 1e-4 <= result.root <= lower_bound + 0.05
    assert result.root < min(2.0, 1 + 2 / d)
    assert result.c_LT == pytest.approx(default_c_lt(d).value)


@pytest.mark.unit
def test_rescaled_constant_matches_the_optimal_dilation(scalar_13):
    state = scalar_as_ground_state(scalar_13)
    T, P = energy_terms(state.orbitals, 1.3)
    a = 0.3
    c = rescaled_constant(1, 1.3, 1, scalar_13.I1)
    assert c == pytest.approx(T / P ** (2 / a), rel=1e-5)
    best, alpha = optimal_dilation_energy(T, P, 1, 1.3)
    assert best == pytest.approx(scalar_13.I1, rel=1e-8)
    assert alpha == pytest.approx(1.0, abs=1e-4)


@pytest.mark.unit
def test_rescaled_constant_scaling():
    assert rescaled_constant(1, 1.3, 2, -0.8) == pytest.approx(rescaled_constant(1, 1.3, 1, -0.4))
    with pytest.raises(ParameterError):
        rescaled_constant(1, 1.3, 1, 0.0)


@pytest.mark.unit
def test_fill_shells_and_degeneracy():
    ks, degenerate = fill_shells(1, 2, 2 * math.pi)
    assert ks[:, 0].tolist() == [0.0, -1.0]
    assert degenerate
    _, degenerate = fill_shells(1, 3, 2 * math.pi)
    assert not degenerate
    _, degenerate = fill_shells(2, 5, 2 * math.pi)
    assert not degenerate


@pytest.mark.unit
def test_plane_waves_approach_thomas_fermi():
    d, p, N = 1, 1.3, 513
    L = N / tf_density(d, p)
    bound = plane_wave_upper_bound(d, p, N, L)
    target = e_TF(d, p)
    assert bound.energy_per_particle > target
    assert bound.energy_per_particle == pytest.approx(target, rel=0.05)
    assert bound.interaction > 0 and bound.mollifier_kinetic > 0


@pytest.mark.unit
def test_plane_wave_input_errors():
    with pytest.raises(ParameterError):
        plane_wave_upper_bound(1, 1.3, 0, 10.0)
    with pytest.raises(ParameterError):
        plane_wave_upper_bound(1, 1.3, 4, 2.0, mollifier_width=1.0)


@pytest.mark.unit
def test_ledger_checks():
    ledger = BindingLedger(d=1, p=1.3, entries=[
        LedgerEntry(mass=1.0, J=-0.35),
        LedgerEntry(mass=2.0, J=-0.75),
        LedgerEntry(mass=3.0, J=-1.02),
    ])
    context = bounds_context(1, 1.3, I1=-0.35)
    rows = sandwich_report(ledger, context)
    assert [row.mass for row in rows] == [1.0, 2.0, 3.0]
    assert all(row.lower_ok for row in rows)
    assert [row.upper_ok for row in rows] == [True, True, False]
    assert per_particle_monotone(ledger) == [(2, 3)]
    assert set(rescaled_constants(ledger)) == {1, 2, 3}


@pytest.mark.unit
def test_calibrated_constants_make_e_LT_heuristic():
    assert not bounds_context(1, 1.3).e_LT_rigorous
    assert not bounds_context(2, 1.5).e_LT_rigorous
    assert bounds_context(3, 1.2).e_LT_rigorous
    assert bounds_context(1, 1.3, c_lt=c_TF(1)).e_LT_rigorous


@pytest.mark.unit
def test_energy_shape_accepts_concave_decreasing_pieces():
    I1 = soliton_energy(1.3)
    # I(lambda) below one, then the chord-like pieces of a concave curve on [1, 2]
    points = [(m, I1 * m ** (1 + 0.6 / 1.7)) for m in (0.25, 0.5, 0.75, 1.0)]
    points += [(1.25, -0.42), (1.5, -0.50), (1.75, -0.59), (2.0, -0.69)]
    verdict = energy_shape(points)
    assert verdict.strictly_decreasing
    assert verdict.concave_pieces
    assert verdict.increases == [] and verdict.concavity_violations == []


@pytest.mark.unit
def test_energy_shape_reports_each_failure():
    points = [(1.0, -0.35), (1.25, -0.37), (1.5, -0.40), (1.75, -0.40), (2.0, -0.49)]
    verdict = energy_shape(points)
    assert not verdict.strictly_decreasing
    assert verdict.increases == [(1.5, 1.75)]
    # -0.40 at 1.5 lies below the chord from -0.37 to -0.40
    assert not verdict.concave_pieces
    assert [m for m, _ in verdict.concavity_violations] == [1.5]
    assert verdict.concavity_violations[0][1] == pytest.approx(0.015)


@pytest.mark.unit
def test_energy_shape_allows_kinks_at_integers():
    # concave on [0, 1] and [1, 2], convex across the kink at 1
    points = [(0.5, -0.1), (0.75, -0.19), (1.0, -0.3), (1.5, -0.33), (2.0, -0.40)]
    verdict = energy_shape(points, slack=0.0)
    assert verdict.concave_pieces
    assert verdict.slack == 0.0
