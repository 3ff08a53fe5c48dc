"""Full-scale acceptance matrix. Every test prints one pass/fail line and
asserts the criterion at its stated tolerance.

The context is session scoped: kernels, barriers, and orbits are assembled
once and shared by all criteria, as the command line bundle does.
"""
import pytest

from weakkam.acceptance import (AcceptanceContext, criterion_01_critical_value,
                                criterion_02_barrier_oracle,
                                criterion_03_aubry_detection,
                                criterion_04_floquet,
                                criterion_05_converge_crosscheck,
                                criterion_06_main_theorem,
                                criterion_07_reduction, criterion_08_tilt,
                                criterion_09_tropical_core,
                                criterion_10_connection_graph,
                                criterion_11_dwell,
                                criterion_12_determinism)


@pytest.fixture(scope="module")
def ctx():
    return AcceptanceContext()


def _check(result):
    print(result.line())
    assert result.passed, result.line()


def test_criterion_01_critical_value_oracle(ctx):
    _check(criterion_01_critical_value(ctx))


def test_criterion_02_barrier_oracle(ctx):
    _check(criterion_02_barrier_oracle(ctx))


def test_criterion_03_aubry_detection(ctx):
    _check(criterion_03_aubry_detection(ctx))


def test_criterion_04_floquet_oracle(ctx):
    _check(criterion_04_floquet(ctx))


def test_criterion_05_semigroup_limit_crosscheck(ctx):
    _check(criterion_05_converge_crosscheck(ctx))


def test_criterion_06_main_theorem_experiment(ctx):
    _check(criterion_06_main_theorem(ctx))


def test_criterion_07_reduction_identities(ctx):
    _check(criterion_07_reduction(ctx))


def test_criterion_08_tilt_identities(ctx):
    _check(criterion_08_tilt(ctx))


def test_criterion_09_tropical_core(ctx):
    _check(criterion_09_tropical_core(ctx))


def test_criterion_10_connection_graph(ctx):
    _check(criterion_10_connection_graph(ctx))


def test_criterion_11_dwell_diagnostics(ctx):
    _check(criterion_11_dwell(ctx))


def test_criterion_12_determinism(ctx):
    _check(criterion_12_determinism(ctx))
