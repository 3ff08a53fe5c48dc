import math

import numpy as np
import pytest

from weakkam import (ConfigurationError, EmptyAubrySetError, Grid,
                     LagrangianSystem, NotConjugateError, aubry_set,
                     assemble_kernel, backward_solution, connection_graph,
                     conjugate_pair_coincidence, critical_value,
                     default_aubry_tolerance, forward_solution,
                     karp_eigenvalue, minimizing_chain, minplus_apply,
                     peierls_barrier, semigroup_limit)

FREE = LagrangianSystem(family="free")
MECH = LagrangianSystem(family="mechanical-cos")

N = 64


@pytest.fixture(scope="module")
def mech_kernel():
    return assemble_kernel(MECH, Grid(N), 0.0, 1.0)


@pytest.fixture(scope="module")
def mech_barrier(mech_kernel):
    c = karp_eigenvalue(mech_kernel)
    return peierls_barrier(MECH, Grid(N), c, horizon=24, kernel=mech_kernel)


@pytest.fixture(scope="module")
def free_kernel():
    return assemble_kernel(FREE, Grid(N), 0.0, 1.0)


def test_critical_value_free(free_kernel):
    assert abs(karp_eigenvalue(free_kernel)) <= 1e-9
    assert abs(critical_value(FREE, Grid(16))) <= 1e-9


def test_critical_value_mech(mech_kernel):
    assert abs(karp_eigenvalue(mech_kernel) - 1.0) <= 1e-2


def test_barrier_free_dies_out(free_kernel):
    barrier = peierls_barrier(FREE, Grid(N), 0.0, horizon=12, kernel=free_kernel)
    assert np.min(barrier.values) >= -1e-12
    assert np.max(barrier.values) <= 2e-2
    assert not barrier.stabilized  # decays like 1/horizon, never snaps


def test_barrier_oracle_small_grid(mech_barrier):
    oracle = lambda x: (2 / math.pi) * (1 - math.cos(math.pi * x))
    for x in (0.25, 0.5):
        j = int(round(x * N))
        assert abs(mech_barrier.values[0, j] - oracle(x)) < 2e-2
    assert mech_barrier.stabilized and mech_barrier.defect == 0.0


def test_barrier_diagonal_and_triangle(mech_barrier):
    h = mech_barrier.values
    assert np.min(np.diag(h)) >= -1e-9
    assert h[0, 0] == 0.0
    rng = np.random.default_rng(6)
    for _ in range(60):
        i, j, k = rng.integers(0, N, 3)
        assert h[i, k] <= h[i, j] + h[j, k] + 2 * mech_barrier.defect + 1e-9


def test_barrier_monotone_in_horizon_past_turnpike(mech_kernel):
    c = karp_eigenvalue(mech_kernel)
    barriers = [peierls_barrier(MECH, Grid(N), c, horizon=hz, kernel=mech_kernel)
                for hz in (12, 16, 24)]
    for coarse, fine in zip(barriers, barriers[1:]):
        assert np.all(fine.values <= coarse.values + 1e-12)


def test_barrier_requires_horizon():
    with pytest.raises(ConfigurationError):
        peierls_barrier(MECH, Grid(N), 1.0, horizon=1)


def test_aubry_detection(mech_barrier):
    detected = aubry_set(mech_barrier, 2e-2)
    assert len(detected.clusters) == 1
    assert detected.representatives == [0]
    tight = aubry_set(mech_barrier, 1e-9)
    assert tight.representatives == [0]


def test_aubry_free_all_points(free_kernel):
    barrier = peierls_barrier(FREE, Grid(N), 0.0, horizon=12, kernel=free_kernel)
    detected = aubry_set(barrier, 1e-2)
    assert detected.indices.size == N
    assert len(detected.clusters) == 1


def test_aubry_empty_raises(mech_barrier):
    with pytest.raises(EmptyAubrySetError):
        aubry_set(mech_barrier, -1.0)


def test_aubry_requires_equal_offsets(mech_kernel):
    c = karp_eigenvalue(mech_kernel)
    shifted = peierls_barrier(MECH, Grid(N), c, horizon=12, t_frac=0.5,
                              kernel=mech_kernel)
    with pytest.raises(ConfigurationError):
        aubry_set(shifted, 1e-2)


def test_default_aubry_tolerance_scale():
    tol = default_aubry_tolerance(Grid(16))
    assert 0 < tol < 1e-6


def test_backward_forward_solutions(mech_barrier):
    u_minus = backward_solution(mech_barrier, 0)
    u_plus = forward_solution(mech_barrier, 0)
    assert u_minus.values[0] == 0.0 and u_plus.values[0] == 0.0
    oracle = (2 / math.pi) * (1 - math.cos(math.pi * 0.25))
    assert abs(u_minus.values[N // 4] - oracle) < 2e-2


def test_conjugate_pair_coincidence(mech_barrier):
    detected = aubry_set(mech_barrier, 1e-9)
    u_minus = backward_solution(mech_barrier, 0)
    u_plus = forward_solution(mech_barrier, 0)
    indices, aligned = conjugate_pair_coincidence(u_minus, u_plus, detected, 1e-6)
    assert 0 in indices
    assert set(detected.representatives) <= set(indices.tolist())
    # coincidence is essentially the Aubry point at this tolerance
    assert indices.size <= 3


@pytest.fixture(scope="module")
def two_well_barrier():
    sys = LagrangianSystem(family="mechanical-cos", freq=2)
    kernel = assemble_kernel(sys, Grid(32), 0.0, 1.0)
    return peierls_barrier(sys, Grid(32), karp_eigenvalue(kernel), horizon=24,
                           kernel=kernel)


def test_conjugate_pair_rejects_two_well_single_base(two_well_barrier):
    # a backward/forward pair based at one of two Aubry orbits disagrees on
    # the other orbit by twice the inter-well barrier, constants cannot fix it
    detected = aubry_set(two_well_barrier, 1e-9)
    assert sorted(detected.representatives) == [0, 16]
    u_minus = backward_solution(two_well_barrier, 0)
    u_plus = forward_solution(two_well_barrier, 0)
    with pytest.raises(NotConjugateError):
        conjugate_pair_coincidence(u_minus, u_plus, detected, 1e-2)


def test_two_well_graph_roots(two_well_barrier):
    detected = aubry_set(two_well_barrier, 1e-9)
    graph = connection_graph(two_well_barrier, detected,
                             Grid(32).nearest_index(0.25), tol=1e-3)
    assert graph.edges == []
    assert sorted(graph.roots) == [0, 1]
    assert graph.cycles == []


def test_semigroup_limit_examples(mech_barrier, free_kernel):
    free_barrier = peierls_barrier(FREE, Grid(N), 0.0, horizon=12,
                                   kernel=free_kernel)
    flat = semigroup_limit(np.zeros(N), free_barrier)
    assert np.max(np.abs(flat.values)) <= 2e-2

    spike = np.full(N, 10.0)
    spike[0] = 0.0
    limit = semigroup_limit(spike, mech_barrier)
    u_minus = backward_solution(mech_barrier, 0)
    assert np.max(np.abs(limit.values - np.minimum(u_minus.values, 10.0))) < 1e-12

    const = semigroup_limit(np.full(N, 3.0), mech_barrier)
    base = semigroup_limit(np.zeros(N), mech_barrier)
    assert np.max(np.abs(const.values - base.values - 3.0)) < 1e-12


def test_semigroup_limit_matches_iteration(mech_kernel, mech_barrier):
    rng = np.random.default_rng(7)
    u0 = rng.uniform(0, 5, N)
    c = mech_barrier.c
    limit = semigroup_limit(u0, mech_barrier).values
    w = u0.copy()
    for k in range(1, 31):
        w, _ = minplus_apply(mech_kernel.matrix, w)
    assert np.max(np.abs(w + c * 30 - limit)) <= 1e-9


def test_minimizing_chain_calibration(mech_kernel, mech_barrier):
    c = mech_barrier.c
    u_minus = backward_solution(mech_barrier, 0).values
    target = N // 2
    steps = 8
    chain = minimizing_chain(mech_kernel.matrix, c, 0, target, steps)
    assert chain[0] == 0 and chain[-1] == target
    partial = 0.0
    for r in range(steps):
        partial += mech_kernel.matrix[chain[r], chain[r + 1]] + c
        assert abs((u_minus[chain[r + 1]] - u_minus[chain[0]]) - partial) < 5e-2


def test_connection_graph_single_orbit(mech_barrier):
    detected = aubry_set(mech_barrier, 1e-9)
    graph = connection_graph(mech_barrier, detected, N // 4, tol=1e-3)
    assert graph.vertices == [0]
    assert graph.edges == [] and graph.roots == [0] and graph.cycles == []
