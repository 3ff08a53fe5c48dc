import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from weakkam import (ConfigurationError, Grid, GridFunction, LagrangianSystem,
                     assemble_kernel, karp_eigenvalue, min_cycle_mean,
                     minplus_apply, minplus_matmul, minplus_power,
                     tropical_eigenvector)

FREE = LagrangianSystem(family="free")
MECH = LagrangianSystem(family="mechanical-cos")

int_kernels = arrays(np.float64, (6, 6),
                     elements=st.integers(-9, 9).map(float))
int_vectors = arrays(np.float64, (6,), elements=st.integers(-9, 9).map(float))


@pytest.fixture(scope="module")
def free_kernel():
    return assemble_kernel(FREE, Grid(8), 0.0, 1.0)


def test_grid_validation():
    with pytest.raises(ConfigurationError):
        Grid(4)
    grid = Grid(8)
    assert grid.nearest_index(0.26) == 2
    with pytest.raises(ConfigurationError):
        GridFunction(grid, np.zeros(5))


def test_free_kernel_closed_form(free_kernel):
    pts = Grid(8).points
    diff = pts[None, :] - pts[:, None]
    exact = np.minimum.reduce([0.5 * (diff + k) ** 2 for k in (-1, 0, 1)])
    assert np.max(np.abs(free_kernel.matrix - exact)) < 1e-12
    assert free_kernel.matrix[0, 2] == pytest.approx(0.03125, abs=1e-12)


def test_free_kernel_symmetric_circulant(free_kernel):
    mat = free_kernel.matrix
    assert np.max(np.abs(mat - mat.T)) < 1e-10
    rolled = np.array([np.roll(mat[i], -i) for i in range(mat.shape[0])])
    assert np.max(np.abs(rolled - rolled[0])) < 1e-10


def test_kernel_independent_of_integer_start_shift():
    eps_sys = LagrangianSystem(family="mechanical-cos", eps=0.1)
    k0 = assemble_kernel(eps_sys, Grid(16), 0.0, 1.0)
    k1 = assemble_kernel(eps_sys, Grid(16), 1.0, 1.0)
    assert np.array_equal(k0.matrix, k1.matrix)


def test_mech_kernel_rest_loop():
    kernel = assemble_kernel(MECH, Grid(64), 0.0, 1.0)
    assert abs(kernel.matrix[0, 0] - (-1.0)) < 2e-2
    assert kernel.matrix[0, 0] == pytest.approx(-1.0, abs=1e-12)


def test_kernel_duration_validation():
    with pytest.raises(ConfigurationError):
        assemble_kernel(FREE, Grid(8), 0.0, 1.5)


def test_minplus_apply_examples():
    kernel = np.array([[0.0, 3.0], [1.0, 5.0]])
    out, arg = minplus_apply(kernel, np.zeros(2))
    assert np.array_equal(out, [0.0, 3.0])
    out, _ = minplus_apply(kernel, np.array([10.0, 0.0]))
    assert np.array_equal(out, [1.0, 5.0])
    identity_like = np.array([[0.0, np.inf], [np.inf, 0.0]])
    u = np.array([2.5, -1.0])
    out, _ = minplus_apply(identity_like, u)
    assert np.array_equal(out, u)


def test_karp_examples():
    assert karp_eigenvalue(np.array([[0.0, 3.0], [1.0, 5.0]]), 1.0) == 0.0
    assert karp_eigenvalue(np.array([[2.0, 1.0], [4.0, 3.0]]), 1.0) == -2.0


def test_karp_free_kernel(free_kernel):
    assert abs(karp_eigenvalue(free_kernel)) < 1e-12


@given(int_kernels, st.integers(-5, 5))
def test_karp_shift_equivariance(kernel, shift):
    # the cycle-mean division rounds, so exactness holds only to an ulp
    assert min_cycle_mean(kernel + shift) == pytest.approx(
        min_cycle_mean(kernel) + shift, abs=1e-12)


@given(int_kernels)
def test_karp_matches_enumeration(kernel):
    import itertools
    n = kernel.shape[0]
    best = math.inf
    for length in range(1, n + 1):
        for nodes in itertools.permutations(range(n), length):
            if nodes[0] != min(nodes):
                continue
            weight = sum(kernel[nodes[i], nodes[(i + 1) % length]]
                         for i in range(length))
            best = min(best, weight / length)
    assert min_cycle_mean(kernel) == best


@given(int_kernels, int_vectors)
def test_minplus_associativity(kernel, u):
    left = minplus_apply(minplus_matmul(kernel, kernel), u)[0]
    right = minplus_apply(kernel, minplus_apply(kernel, u)[0])[0]
    assert np.array_equal(left, right)


@given(int_kernels, int_vectors, int_vectors)
def test_minplus_monotone_and_nonexpansive(kernel, u, w):
    if np.all(u <= w):
        assert np.all(minplus_apply(kernel, u)[0] <= minplus_apply(kernel, w)[0])
    du = minplus_apply(kernel, u)[0] - minplus_apply(kernel, w)[0]
    assert np.max(np.abs(du)) <= np.max(np.abs(u - w))


def test_minplus_power_matches_repeated_apply():
    rng = np.random.default_rng(5)
    kernel = rng.integers(-5, 6, size=(7, 7)).astype(float)
    u = rng.integers(-5, 6, size=7).astype(float)
    cubed = minplus_power(kernel, 3)
    stepped = u.copy()
    for _ in range(3):
        stepped, _ = minplus_apply(kernel, stepped)
    assert np.array_equal(minplus_apply(cubed, u)[0], stepped)


def test_tropical_eigenvector_free(free_kernel):
    fixed = tropical_eigenvector(free_kernel, 0.0)
    assert fixed.converged
    assert np.max(np.abs(fixed.values)) <= 1e-12


def test_tropical_eigenvector_two_point():
    fixed = tropical_eigenvector(np.array([[0.0, 3.0], [1.0, 5.0]]), 0.0)
    assert fixed.converged and fixed.defect <= 1e-12
    assert np.array_equal(fixed.values, [0.0, 3.0])


def test_tropical_eigenvector_negative_eigenvalue():
    kernel = np.array([[2.0, 1.0], [4.0, 3.0]])
    fixed = tropical_eigenvector(kernel, karp_eigenvalue(kernel, 1.0))
    assert fixed.converged and fixed.defect <= 1e-12


@given(arrays(np.float64, (5, 5), elements=st.integers(-6, 6).map(float)))
def test_normalized_iteration_eventually_periodic(kernel):
    u = np.zeros(5)
    seen = {}
    for step in range(500):
        key = tuple(u)
        if key in seen:
            return
        seen[key] = step
        u, _ = minplus_apply(kernel, u)
        u -= u.min()
    pytest.fail("no periodicity within 500 sweeps")
