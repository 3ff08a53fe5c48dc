import numpy as np
import pytest

from weakkam import (ConfigurationError, LagrangianSystem,
                     MinimizationSettings, action_potential, curve_action,
                     discrete_el_residual, minimal_action)

FREE = LagrangianSystem(family="free")
MECH = LagrangianSystem(family="mechanical-cos")


def free_oracle(x, y, duration):
    return min((y - x + k) ** 2 / (2.0 * duration) for k in range(-3, 4))


def test_free_short_way():
    value, curve = minimal_action(FREE, 0.0, 0.0, 0.4, 1.0)
    assert abs(value - 0.08) < 1e-12
    assert curve.winding == 0


def test_free_other_way_around():
    value, curve = minimal_action(FREE, 0.0, 0.0, 0.6, 1.0)
    assert abs(value - 0.08) < 1e-12
    assert curve.winding == -1


def test_free_longer_window():
    value, _ = minimal_action(FREE, 0.0, 0.0, 0.4, 2.0)
    assert abs(value - 0.04) < 1e-12


def test_free_tie_prefers_smaller_winding():
    _, curve = minimal_action(FREE, 0.0, 0.0, 0.5, 1.0)
    assert curve.winding == 0


def test_mech_loop_at_maximum():
    value, curve = minimal_action(MECH, 0.0, 0.0, 0.0, 1.0)
    assert value <= -1.0 + 1e-3
    assert abs(value - (-1.0)) < 1e-12


def test_minimizer_contract():
    value, curve = minimal_action(MECH, 0.3, 0.0, 0.8, 1.5)
    assert curve.samples[0] == 0.3
    assert curve.samples[-1] - curve.winding == 0.8
    assert curve_action(MECH, curve) == value
    assert discrete_el_residual(MECH, curve) <= 1e-9


def test_free_oracle_equivalence_grid():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(20):
        x, y = rng.uniform(0, 1, 2)
        for duration in (0.5, 1.0, 2.0):
            value, _ = minimal_action(FREE, x, 0.0, y, duration)
            worst = max(worst, abs(value - free_oracle(x, y, duration)))
    assert worst < 1e-6


def test_subadditivity():
    rng = np.random.default_rng(4)
    for _ in range(12):
        x, y, z = rng.uniform(0, 1, 3)
        whole, _ = minimal_action(MECH, x, 0.0, z, 2.0)
        first, _ = minimal_action(MECH, x, 0.0, y, 1.0)
        second, _ = minimal_action(MECH, y, 1.0, z, 2.0)
        assert whole <= first + second + 1e-8


def test_refinement_is_second_order():
    values = {}
    for n_seg in (16, 32, 64, 128):
        settings = MinimizationSettings(n_segments=n_seg)
        values[n_seg], _ = minimal_action(MECH, 0.1, 0.0, 0.35, 1.0, settings)
    change_coarse = abs(values[32] - values[16])
    change_fine = abs(values[64] - values[32])
    assert 3.0 <= change_coarse / change_fine <= 6.0


def test_action_potential_free_horizon():
    value = action_potential(FREE, 0.0, 0.0, 0.4, 0.0, 0.0, horizon=5)
    assert abs(value - 0.016) < 1e-12


def test_action_potential_single_window():
    got = action_potential(MECH, 0.2, 0.0, 0.6, 0.0, 0.7, horizon=1)
    direct, _ = minimal_action(MECH, 0.2, 0.0, 0.6, 1.0)
    assert got == direct + 0.7


def test_action_potential_critical_loop():
    value = action_potential(MECH, 0.0, 0.0, 0.0, 0.0, 1.0, horizon=3)
    assert value <= 1e-9


def test_settings_validation():
    with pytest.raises(ConfigurationError):
        MinimizationSettings(n_segments=1)
    with pytest.raises(ConfigurationError):
        MinimizationSettings(winding_range=-1)
    with pytest.raises(ConfigurationError):
        MinimizationSettings(gradient_tolerance=2.0)
    with pytest.raises(ConfigurationError):
        minimal_action(FREE, 0.0, 1.0, 0.5, 1.0)


def test_restarts_do_not_regress():
    base, _ = minimal_action(MECH, 0.1, 0.0, 0.45, 1.0)
    multi, _ = minimal_action(MECH, 0.1, 0.0, 0.45, 1.0,
                              MinimizationSettings(n_restarts=3))
    assert multi <= base + 1e-12


def test_loop_at_potential_minimum_escapes_the_saddle_start():
    # the constant lift at a symmetric potential minimum is a critical
    # point of the discrete action but not a minimum; the minimizer must
    # leave it rather than report it
    two_well = LagrangianSystem(family="mechanical-cos", freq=2)
    value, curve = minimal_action(two_well, 0.25, 0.0, 0.25, 1.0)
    rest_cost = curve_action(two_well, type(curve)(0.0, 1.0,
                                                   np.full(33, 0.25), 0))
    assert value < rest_cost - 1.0  # swinging to a well beats sitting still
    assert np.max(np.abs(curve.samples - 0.25)) > 0.1
    assert value == pytest.approx(-0.3606722128, abs=1e-6)
    # loops at a potential maximum stay exactly at rest
    at_max, _ = minimal_action(MECH, 0.0, 0.0, 0.0, 1.0)
    assert at_max == -1.0
