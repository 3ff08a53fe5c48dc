"""Min-plus linear algebra over action kernels.

A kernel K[i][j] holds the minimal action from grid point i at time s to
grid point j at time s + delta. Applying it to a grid function is an
inf-convolution; its powers iterate the solution operator of the
evolutionary Hamilton-Jacobi equation; its minimum cycle mean gives the
critical value. The unit-time kernel is assembled once and reused for all
integer steps, which turns semigroup iteration into tropical matrix-vector
products.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .action import (MinimizationSettings, exact_row_actions,
                     minimize_straight_batch, segments_for, winding_candidates,
                     _straight_lifts)
from .errors import ConfigurationError, MinimizationError

MATMUL_CHUNK_BYTES = 1 << 25


@dataclass(frozen=True)
class Grid:
    """Uniform spatial grid on the torus: points i/n for i = 0..n-1."""

    n: int

    def __post_init__(self):
        if self.n < 8:
            raise ConfigurationError("grid needs at least 8 points")

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.n) / self.n

    def nearest_index(self, x) -> int:
        return int(round(float(x) * self.n)) % self.n


@dataclass(frozen=True)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise ConfigurationError("grid function shape mismatch")
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("grid function values must be finite")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class TropicalKernel:
    """K[i][j] = minimal action from x_i at time s to x_j at time s + delta."""

    grid: Grid
    s: float
    delta: float
    matrix: np.ndarray


def _as_matrix(kernel) -> np.ndarray:
    if isinstance(kernel, TropicalKernel):
        return kernel.matrix
    return np.asarray(kernel, dtype=float)


def assemble_kernel(sys, grid: Grid, s, delta,
                    settings: MinimizationSettings | None = None,
                    row_chunk: int | None = None) -> TropicalKernel:
    """Minimal action between all grid-point pairs over [s, s + delta].

    All (start, end, winding) problems in a chunk of start rows are solved
    as one batch; this is the hot loop of the whole toolkit. The
    zero-winding problems run first, and a nonzero winding row whose
    rigorous lower bound (Cauchy-Schwarz kinetic term minus the potential
    ceiling) exceeds the converged zero-winding energy can never win its
    entry, so it is pruned before any descent.
    """
    if settings is None:
        settings = MinimizationSettings()
    if not (0.0 < delta <= 1.0):
        raise ConfigurationError("kernel duration must lie in (0, 1]")
    n = grid.n
    pts = grid.points
    windings = winding_candidates(delta, settings)
    n_wind = len(windings)
    n_seg = segments_for(delta, settings)
    if row_chunk is None:
        row_chunk = max(1, int(2_000_000 // (n * n_wind * (n_seg + 1))) or 1)
        row_chunk = min(n, max(1, row_chunk))

    a, b = float(s), float(s) + float(delta)
    qsys = sys.quadrature_system()
    kin_coeff = float(qsys.lagrangian_vv(0.0, 0.0, a))
    pot_ceiling = getattr(qsys, "potential_upper_bound", lambda: 0.0)()
    matrix = np.empty((n, n))
    nonzero = [k for k in windings if k != 0]
    for i0 in range(0, n, row_chunk):
        i1 = min(n, i0 + row_chunk)
        rows_i = np.arange(i0, i1)
        m_pairs = rows_i.size * n
        starts0 = np.repeat(pts[rows_i], n)
        ends0 = np.tile(pts, rows_i.size)

        # phase one: the zero-winding problems, whose converged energies
        # upper-bound the entries
        z0 = _straight_lifts(starts0, ends0, n_seg)
        z, e0, gsup, conv0, _ = minimize_straight_batch(sys, a, b, n_seg, z0,
                                                        settings)
        best_e = e0.copy()
        best_rows = z
        best_winding = np.zeros(m_pairs, dtype=int)
        best_conv = conv0.copy()

        # phase two: other windings, pruned where their rigorous lower
        # bound already exceeds the zero-winding value
        for k in nonzero:
            ends_k = ends0 + k
            lower = (kin_coeff * (ends_k - starts0) ** 2 / (2.0 * (b - a))
                     - (b - a) * pot_ceiling)
            keep = np.flatnonzero(lower <= best_e)
            if keep.size == 0:
                continue
            zk_init = _straight_lifts(starts0[keep], ends_k[keep], n_seg)
            zk, ek, _, convk, _ = minimize_straight_batch(
                sys, a, b, n_seg, zk_init, settings)
            better = ek < best_e[keep]  # strict: ties keep smaller |winding|
            rows = keep[better]
            best_e[rows] = ek[better]
            best_rows[rows] = zk[better]
            best_winding[rows] = k
            best_conv[rows] = convk[better]

        if not best_conv.all():
            flat = int(np.flatnonzero(~best_conv)[0])
            raise MinimizationError(
                "kernel entry failed to converge",
                where=(int(rows_i[flat // n]), int(flat % n)),
                best_value=float(best_e[flat]))

        values = exact_row_actions(sys, a, b, best_rows)
        values += np.asarray(sys.action_offset(starts0, ends0 + best_winding,
                                               a, b), dtype=float)
        matrix[i0:i1] = values.reshape(rows_i.size, n)
    return TropicalKernel(grid=grid, s=a, delta=float(delta), matrix=matrix)


def minplus_apply(kernel, u):
    """u'[j] = min_i u[i] + K[i][j]; returns (u', argmin indices)."""
    mat = _as_matrix(kernel)
    u = np.asarray(u, dtype=float)
    if u.shape != (mat.shape[0],):
        raise ConfigurationError("shape mismatch in min-plus apply")
    stacked = u[:, None] + mat
    arg = np.argmin(stacked, axis=0)
    return stacked[arg, np.arange(mat.shape[1])], arg


def minplus_matmul(a, b):
    """C[i][j] = min_m A[i][m] + B[m][j], chunked over rows of A."""
    amat, bmat = _as_matrix(a), _as_matrix(b)
    if amat.shape[1] != bmat.shape[0]:
        raise ConfigurationError("shape mismatch in min-plus matmul")
    out = np.empty((amat.shape[0], bmat.shape[1]))
    chunk = max(1, MATMUL_CHUNK_BYTES // (8 * amat.shape[1] * bmat.shape[1]))
    for r0 in range(0, amat.shape[0], chunk):
        r1 = min(amat.shape[0], r0 + chunk)
        out[r0:r1] = np.min(amat[r0:r1, :, None] + bmat[None, :, :], axis=1)
    return out


def minplus_power(kernel, k: int):
    mat = _as_matrix(kernel)
    if k < 1:
        raise ConfigurationError("power must be positive")
    out = mat.copy()
    for _ in range(k - 1):
        out = minplus_matmul(out, mat)
    return out


def min_cycle_mean(kernel) -> float:
    """Minimum mean weight over cycles of the kernel graph (Karp's DP).

    D[k][v] is the least weight of a k-edge walk ending at v (any start);
    the answer is min_v max_k (D[n][v] - D[k][v]) / (n - k).
    """
    mat = _as_matrix(kernel)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ConfigurationError("kernel must be square")
    if not np.all(np.isfinite(mat)):
        raise ConfigurationError("kernel entries must be finite")
    n = mat.shape[0]
    d = np.empty((n + 1, n))
    d[0] = 0.0
    for k in range(1, n + 1):
        d[k] = np.min(d[k - 1][:, None] + mat, axis=0)
    denom = (n - np.arange(n)).astype(float)
    ratios = (d[n][None, :] - d[:n]) / denom[:, None]
    return float(np.min(np.max(ratios, axis=0)))


def karp_eigenvalue(kernel, delta: float | None = None) -> float:
    """Critical value per unit time: minus the minimum cycle mean over the
    kernel duration."""
    if delta is None:
        delta = kernel.delta if isinstance(kernel, TropicalKernel) else 1.0
    return -min_cycle_mean(kernel) / float(delta)


@dataclass(frozen=True)
class TropicalFixedPoint:
    values: np.ndarray
    converged: bool
    defect: float
    iterations: int


def tropical_eigenvector(kernel, c, delta: float | None = None,
                         tol: float = 1e-12, max_iter: int = 10_000) -> TropicalFixedPoint:
    """Fixed point of u -> (K tropically applied to u) + c*delta, normalized
    so min u = 0. With c from ``karp_eigenvalue`` this is the discrete
    time-periodic solution."""
    mat = _as_matrix(kernel)
    if delta is None:
        delta = kernel.delta if isinstance(kernel, TropicalKernel) else 1.0
    shift = float(c) * float(delta)
    u = np.zeros(mat.shape[0])
    iterations = 0
    for it in range(max_iter):
        iterations = it + 1
        nxt, _ = minplus_apply(mat, u)
        nxt += shift
        nxt -= nxt.min()
        change = float(np.max(np.abs(nxt - u)))
        u = nxt
        if change <= tol:
            applied, _ = minplus_apply(mat, u)
            defect = float(np.max(np.abs(applied + shift - u)))
            return TropicalFixedPoint(values=u, converged=True, defect=defect,
                                      iterations=iterations)
    applied, _ = minplus_apply(mat, u)
    defect = float(np.max(np.abs(applied + shift - u)))
    return TropicalFixedPoint(values=u, converged=False, defect=defect,
                              iterations=iterations)
