"""Critical value, Peierls barrier, Aubry set, weak KAM solutions, and the
connection graph between Aubry classes.

The barrier is realized as the entrywise running minimum over the tail of
the tropical powers of the c-shifted unit kernel; for the built-in systems
the powers reach an exact fixed matrix after finitely many steps (a
tropical turnpike), the tail minimum is then that limit, and the reported
defect quantifies trust.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .action import MinimizationSettings
from .errors import ConfigurationError, EmptyAubrySetError, NotConjugateError
from .systems import LagrangianSystem
from .tropical import (Grid, GridFunction, TropicalKernel, assemble_kernel,
                       karp_eigenvalue, minplus_apply, minplus_matmul)

STABILIZATION_TOL = 1e-8


@dataclass(frozen=True)
class BarrierMatrix:
    """h[i][j] approximates the barrier from (x_i, [s_frac]) to (x_j, [t_frac])."""

    grid: Grid
    s_frac: float
    t_frac: float
    values: np.ndarray
    horizon: int
    defect: float
    stabilized: bool
    c: float


@dataclass(frozen=True)
class AubrySet:
    grid: Grid
    tol: float
    indices: np.ndarray
    clusters: list
    representatives: list

    @property
    def points(self) -> np.ndarray:
        return np.asarray(self.representatives) / self.grid.n


@dataclass(frozen=True)
class ConnectionGraph:
    """Directed segments between Aubry representatives, relative to a target.

    An edge (j, k) means the barrier from vertex k to the target decomposes
    through vertex j within tolerance; a root receives no edge. Cycles are
    reported, never asserted away.
    """

    vertices: list
    positions: np.ndarray
    target_index: int
    tol: float
    edges: list
    roots: list
    cycles: list


def critical_value(sys: LagrangianSystem, grid: Grid,
                   settings: MinimizationSettings | None = None,
                   kernel: TropicalKernel | None = None) -> float:
    """Critical value from the minimum cycle mean of the unit-time kernel."""
    if kernel is None:
        kernel = assemble_kernel(sys, grid, 0.0, 1.0, settings)
    return karp_eigenvalue(kernel)


BARRIER_TAIL_WINDOW = 4


def peierls_barrier(sys, grid: Grid, c: float, horizon: int,
                    settings: MinimizationSettings | None = None,
                    s_frac: float = 0.0, t_frac: float = 0.0,
                    kernel: TropicalKernel | None = None,
                    fractional_kernel: TropicalKernel | None = None,
                    stab_tol: float = STABILIZATION_TOL) -> BarrierMatrix:
    """Tail running minimum of tropical powers of the c-shifted unit kernel.

    The barrier is a liminf over long time windows, so short windows must
    not contribute: at generic entry pairs the early powers dip below the
    eventual limit (they realize the least c-corrected action over a few
    units, which can undercut the barrier by order 1e-2 on the built-in
    systems), and a minimum over all powers would return that smaller
    quantity instead of the barrier. The entrywise running minimum is
    therefore taken over the last few powers only; once the powers reach
    their finite fixed matrix the tail minimum is that limit, and the
    defect (change of the tail minimum over the final step) reports any
    residual drift.

    For offsets (s_frac, t_frac) with t_frac != s_frac the powers are
    post-composed with the fractional kernel over [s_frac, s_frac + df]
    shifted by c*df, where df = (t_frac - s_frac) mod 1.
    """
    if horizon < 2:
        raise ConfigurationError("barrier horizon must be at least 2")
    if kernel is None:
        kernel = assemble_kernel(sys, grid, s_frac, 1.0, settings)
    shifted = kernel.matrix + c
    tail = [shifted.copy()]
    power = shifted
    for _ in range(horizon - 1):
        power = minplus_matmul(power, shifted)
        tail.append(power)
        if len(tail) > BARRIER_TAIL_WINDOW + 1:
            tail.pop(0)
    running = np.minimum.reduce(tail[-BARRIER_TAIL_WINDOW:])
    prev = np.minimum.reduce(tail[:-1][-BARRIER_TAIL_WINDOW:])
    defect = float(np.max(np.abs(running - prev)))
    values = running
    if t_frac != s_frac:
        df = (t_frac - s_frac) % 1.0
        if fractional_kernel is None:
            fractional_kernel = assemble_kernel(sys, grid, s_frac, df, settings)
        values = minplus_matmul(running, fractional_kernel.matrix + c * df)
    return BarrierMatrix(grid=grid, s_frac=float(s_frac), t_frac=float(t_frac),
                         values=values, horizon=int(horizon), defect=defect,
                         stabilized=bool(defect <= stab_tol), c=float(c))


def default_aubry_tolerance(grid: Grid, settings: MinimizationSettings | None = None,
                            factor: float = 10.0) -> float:
    """Tolerance scaled to the measured kernel error at this resolution.

    Assembles the free-system unit kernel on the same grid and compares it
    with the closed form min_k (dx + k)^2 / 2; the Aubry tolerance is
    ``factor`` times the sup error, floored at 1e-12.
    """
    free = LagrangianSystem(family="free")
    kernel = assemble_kernel(free, grid, 0.0, 1.0, settings)
    pts = grid.points
    diff = pts[None, :] - pts[:, None]
    exact = np.minimum.reduce([0.5 * (diff + k) ** 2 for k in (-1, 0, 1)])
    return max(1e-12, factor * float(np.max(np.abs(kernel.matrix - exact))))


def aubry_set(h: BarrierMatrix, tol: float) -> AubrySet:
    """Grid points whose diagonal barrier vanishes within tol, clustered by
    grid adjacency (wrapping); one representative per cluster, at the
    cluster's diagonal argmin."""
    if h.s_frac != h.t_frac:
        raise ConfigurationError("Aubry detection needs equal time offsets")
    diag = np.diag(h.values)
    n = h.grid.n
    hits = np.flatnonzero(diag <= tol)
    if hits.size == 0:
        raise EmptyAubrySetError(
            "no grid point has vanishing diagonal barrier; the Aubry set is "
            "never empty, so raise the tolerance or extend the horizon")
    mask = np.zeros(n, dtype=bool)
    mask[hits] = True
    if hits.size == n:
        clusters = [list(range(n))]
    else:
        run_starts = [int(i) for i in hits if not mask[(i - 1) % n]]
        clusters = []
        for s0 in run_starts:
            cluster = [s0]
            j = (s0 + 1) % n
            while mask[j]:
                cluster.append(j)
                j = (j + 1) % n
            clusters.append(cluster)
    representatives = [int(cluster[int(np.argmin(diag[cluster]))]) for cluster in clusters]
    return AubrySet(grid=h.grid, tol=float(tol), indices=hits, clusters=clusters,
                    representatives=representatives)


def backward_solution(h: BarrierMatrix, p_index: int) -> GridFunction:
    """x -> h(p, x): a backward solution of the critical equation."""
    return GridFunction(grid=h.grid, values=h.values[p_index].copy())


def forward_solution(h: BarrierMatrix, p_index: int) -> GridFunction:
    """x -> -h(x, p): a forward solution of the critical equation."""
    return GridFunction(grid=h.grid, values=-h.values[:, p_index].copy())


def conjugate_pair_coincidence(u_minus: GridFunction, u_plus: GridFunction,
                               aubry: AubrySet, tol: float):
    """Coincidence set of an aligned conjugate pair.

    The forward solution is shifted so that min over the Aubry clusters of
    (u- - u+) is zero (both solutions are defined up to constants); the
    pair must then agree on every cluster point within tol, else it is not
    conjugate. Returns (indices, aligned forward values).
    """
    um = u_minus.values
    up = u_plus.values.copy()
    cluster_idx = np.concatenate([np.asarray(c, dtype=int) for c in aubry.clusters])
    shift = float(np.min(um[cluster_idx] - up[cluster_idx]))
    up += shift
    worst = float(np.max(np.abs(um[cluster_idx] - up[cluster_idx])))
    if worst > tol:
        raise NotConjugateError(
            f"pair disagrees on the Aubry clusters by {worst:.3e} > {tol:g}")
    indices = np.flatnonzero(np.abs(um - up) <= tol)
    return indices, up


def semigroup_limit(u0, h: BarrierMatrix) -> GridFunction:
    """Limit of the c-corrected evolution from u0: min over starting points
    of u0 plus the barrier to each target."""
    values = np.asarray(u0.values if isinstance(u0, GridFunction) else u0, dtype=float)
    if values.shape != (h.grid.n,):
        raise ConfigurationError("shape mismatch between u0 and barrier")
    out, _ = minplus_apply(h.values, values)
    return GridFunction(grid=h.grid, values=out)


def minimizing_chain(kernel_matrix: np.ndarray, c: float, start: int, end: int,
                     n_steps: int):
    """Grid-node chain realizing the n-step c-corrected cost from start to
    end, by dynamic-programming backtracking. Returns the node list of
    length n_steps + 1."""
    shifted = np.asarray(kernel_matrix, dtype=float) + c
    n = shifted.shape[0]
    costs = np.full((n_steps + 1, n), np.inf)
    parent = np.zeros((n_steps + 1, n), dtype=int)
    costs[0, start] = 0.0
    for k in range(1, n_steps + 1):
        stacked = costs[k - 1][:, None] + shifted
        parent[k] = np.argmin(stacked, axis=0)
        costs[k] = stacked[parent[k], np.arange(n)]
    chain = [end]
    for k in range(n_steps, 0, -1):
        chain.append(int(parent[k, chain[-1]]))
    chain.reverse()
    return chain


def _find_cycles(n_vertices: int, edges) -> list:
    adj = [[] for _ in range(n_vertices)]
    for j, k, _ in edges:
        adj[j].append(k)
    color = [0] * n_vertices
    stack = []
    cycles = []

    def dfs(v):
        color[v] = 1
        stack.append(v)
        for w in adj[v]:
            if color[w] == 1:
                cycles.append(stack[stack.index(w):] + [w])
            elif color[w] == 0:
                dfs(w)
        stack.pop()
        color[v] = 2

    for v in range(n_vertices):
        if color[v] == 0:
            dfs(v)
    return cycles


def connection_graph(h: BarrierMatrix, aubry: AubrySet, target_index: int,
                     tol: float) -> ConnectionGraph:
    """Directed graph on Aubry representatives relative to a target point.

    Vertex j points to vertex k when the barrier from k to the target
    equals (within tol) the barrier from k to j plus the barrier from j to
    the target. Roots receive no segment. Acyclicity is checked and any
    violation reported with the offending cycle."""
    reps = list(aubry.representatives)
    if not reps:
        raise ConfigurationError("need at least one Aubry representative")
    hm = h.values
    edges = []
    for a, j in enumerate(reps):
        for b, k in enumerate(reps):
            if j == k:
                continue
            slack = hm[k, target_index] - (hm[k, j] + hm[j, target_index])
            if abs(slack) <= tol:
                edges.append((a, b, float(slack)))
    has_incoming = {b for _, b, _ in edges}
    roots = [i for i in range(len(reps)) if i not in has_incoming]
    cycles = _find_cycles(len(reps), edges)
    return ConnectionGraph(vertices=reps, positions=np.asarray(reps) / h.grid.n,
                           target_index=int(target_index), tol=float(tol),
                           edges=edges, roots=roots, cycles=cycles)
