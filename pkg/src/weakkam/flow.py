"""Euler-Lagrange flow, variational equations, shooting, Floquet data.

Integration is classical fourth-order Runge-Kutta at a fixed step. The
fixed step keeps flows, monodromies, and everything downstream bit-for-bit
reproducible; adaptive stepping would make kernels run-dependent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (ConfigurationError, DegenerateOrbitError, NoOrbitError,
                     NotPeriodicError, NumericalError)
from .systems import PhasePoint, reduce_mod_1

STEPS_PER_UNIT_TIME = 200
UNIT_CIRCLE_TOL = 1e-6
LAMBDA_DEFLATION = 1e-3


@dataclass(frozen=True)
class PeriodicOrbit:
    """A refined periodic orbit with its linearization data.

    ``lam`` is the least positive real part among the Floquet exponents
    (1/time units); it is positive exactly when the orbit is hyperbolic.
    """

    x: float
    v: float
    period: int
    monodromy: np.ndarray
    multipliers: np.ndarray
    floquet_exponents: np.ndarray
    hyperbolic: bool
    lam: float | None


def _check_mechanical(sys):
    if not getattr(sys, "mechanical_form", False):
        raise ConfigurationError(
            "flow integration requires L_v independent of x and t; "
            "tilted systems share the base flow, integrate that instead")


def _steps_for(duration, n_steps):
    if n_steps is None:
        return max(1, int(round(STEPS_PER_UNIT_TIME * abs(duration))))
    if n_steps < 1:
        raise ConfigurationError("n_steps must be at least 1")
    return int(n_steps)


def _rk4(rhs, y0, t0, t1, n_steps):
    y = np.array(y0, dtype=float)
    h = (t1 - t0) / n_steps
    t = t0
    for _ in range(n_steps):
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    return y


def _el_rhs(sys):
    def rhs(t, y):
        x, v = y
        a = sys.lagrangian_x(x, v, t) / sys.lagrangian_vv(x, v, t)
        return np.array([v, a])
    return rhs


def flow_trajectory(sys, p: PhasePoint, t1, n_steps=None):
    """All RK4 steps of the flow from p to time t1, positions lifted.

    Returns (times, xs, vs) including both endpoints.
    """
    _check_mechanical(sys)
    n = _steps_for(t1 - p.t, n_steps)
    rhs = _el_rhs(sys)
    h = (t1 - p.t) / n
    times = p.t + h * np.arange(n + 1)
    xs = np.empty(n + 1)
    vs = np.empty(n + 1)
    y = np.array([p.x, p.v])
    xs[0], vs[0] = y
    for i in range(n):
        t = times[i]
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        xs[i + 1], vs[i + 1] = y
    return times, xs, vs


def flow_map(sys, p: PhasePoint, t1, n_steps=None) -> PhasePoint:
    """Endpoint of the Euler-Lagrange flow, x reduced mod 1."""
    _, xs, vs = flow_trajectory(sys, p, t1, n_steps)
    return PhasePoint(x=float(reduce_mod_1(xs[-1])), v=float(vs[-1]), t=float(t1))


def _flow_with_variational(sys, x0, v0, t0, t1, n_steps=None):
    """Integrate the flow together with its 2x2 variational matrix."""
    _check_mechanical(sys)
    n = _steps_for(t1 - t0, n_steps)

    def rhs(t, y):
        x, v = y[0], y[1]
        xi = y[2:].reshape(2, 2)
        lvv = sys.lagrangian_vv(x, v, t)
        a = sys.lagrangian_x(x, v, t) / lvv
        ax = sys.lagrangian_xx(x, v, t) / lvv
        jac = np.array([[0.0, 1.0], [float(ax), 0.0]])
        return np.hstack(([v, float(a)], (jac @ xi).reshape(-1)))

    y0 = np.hstack(([x0, v0], np.eye(2).reshape(-1)))
    y = _rk4(rhs, y0, t0, t1, n)
    return y[0], y[1], y[2:].reshape(2, 2)


def monodromy(sys, orbit_seed: PhasePoint, period: int, n_steps=None,
              defect_tol=1e-6) -> np.ndarray:
    """Derivative of the time-``period`` flow map along a periodic orbit.

    The seed must close up (mod 1 in x) within ``defect_tol``.
    """
    if period < 1:
        raise ConfigurationError("period must be a positive integer")
    x1, v1, mat = _flow_with_variational(sys, orbit_seed.x, orbit_seed.v,
                                         orbit_seed.t, orbit_seed.t + period, n_steps)
    dx = x1 - orbit_seed.x
    defect = float(np.hypot(dx - round(dx), v1 - orbit_seed.v))
    if defect > defect_tol:
        raise NotPeriodicError(
            f"seed does not close up over period {period}: defect {defect:.3e}",
            defect=defect)
    return mat


def floquet_analysis(mono: np.ndarray, period: int = 1):
    """Floquet exponents, hyperbolicity flag, and a spectral floor.

    Exponents are principal-branch logs of the multipliers divided by the
    period. The returned ``lam`` is the least positive real part deflated
    by a factor (1 - 1e-3), so it sits strictly below the exponent
    spectrum; None when no exponent has positive real part.
    """
    mono = np.asarray(mono, dtype=float)
    if mono.ndim != 2 or mono.shape[0] != mono.shape[1] or mono.shape[0] % 2:
        raise ConfigurationError("monodromy must be a square even-dimensional matrix")
    try:
        mults = np.linalg.eigvals(mono)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"eigenvalue solver failed: {exc}") from exc
    order = np.lexsort((-mults.imag, -mults.real))
    mults = mults[order]
    exponents = np.log(mults.astype(complex)) / period
    hyperbolic = bool(np.all(np.abs(np.abs(mults) - 1.0) > UNIT_CIRCLE_TOL))
    positive = exponents.real[exponents.real > 0.0]
    lam = float(positive.min()) * (1.0 - LAMBDA_DEFLATION) if positive.size else None
    return exponents, hyperbolic, lam


SHOTS_PER_UNIT_TIME = 8


def _multiple_shooting(sys, guess, period, n_steps, max_newton):
    """Damped Newton on the sub-period factorization of the period map.

    Splitting the period into short segments keeps the per-segment
    amplification small, so the Newton basin around a hyperbolic orbit is
    wide; single shooting over a full period mixes in the parabolic
    rotating circles of the autonomous cases and loses the nearby saddle.
    Returns the refined starting state.
    """
    m = SHOTS_PER_UNIT_TIME * period
    dt = period / m
    seg_steps = None if n_steps is None else max(1, int(round(n_steps / m)))
    z = np.tile([guess.x, guess.v], (m, 1)).astype(float)
    eye = np.eye(2)

    def residual(states):
        res = np.empty((m, 2))
        jac = np.zeros((2 * m, 2 * m))
        for k in range(m):
            x1, v1, a = _flow_with_variational(sys, states[k, 0], states[k, 1],
                                               k * dt, (k + 1) * dt, seg_steps)
            nxt = states[(k + 1) % m]
            dx = x1 - nxt[0]
            if k == m - 1:
                dx -= round(dx)
            res[k] = (dx, v1 - nxt[1])
            jac[2 * k:2 * k + 2, 2 * k:2 * k + 2] = a
            cols = 2 * ((k + 1) % m)
            jac[2 * k:2 * k + 2, cols:cols + 2] -= eye
        return res, jac

    res, jac = residual(z)
    for _ in range(max_newton):
        norm = float(np.max(np.abs(res)))
        if norm <= 1e-12:
            return z[0]
        if np.linalg.cond(jac) > 1e12:
            raise DegenerateOrbitError(
                "I - monodromy is singular; the orbit direction is not hyperbolic")
        step = np.linalg.solve(jac, -res.reshape(-1)).reshape(m, 2)
        lam = 1.0
        while True:
            z_new = z + lam * step
            res_new, jac_new = residual(z_new)
            if float(np.max(np.abs(res_new))) < norm:
                z, res, jac = z_new, res_new, jac_new
                break
            lam *= 0.5
            if lam < 1e-6:
                raise NoOrbitError(
                    f"shooting stalled at defect {norm:.3e}")
        if not np.all(np.isfinite(z)) or np.max(np.abs(z[:, 1])) > 1e3:
            raise NoOrbitError("Newton shooting diverged")
    raise NoOrbitError(f"shooting did not converge; last defect {norm:.3e}")


def refine_periodic_orbit(sys, guess: PhasePoint, period: int, n_steps=None,
                          tol=1e-10, max_newton=60) -> PeriodicOrbit:
    """Damped Newton shooting for a periodic orbit near ``guess``.

    Newton solves psi_period(z) - z = 0, globalized through a sub-period
    factorization and polished with the full-period monodromy as Jacobian.
    The x component of the closing residual is wrapped to the nearest
    integer, so rotating orbits close up mod 1.
    """
    if period < 1:
        raise ConfigurationError("period must be a positive integer")
    z = _multiple_shooting(sys, guess, int(period), n_steps, max_newton)

    def residual(point):
        x1, v1, mat = _flow_with_variational(sys, point[0], point[1], 0.0,
                                             float(period), n_steps)
        dx = x1 - point[0]
        return np.array([dx - round(dx), v1 - point[1]]), mat

    res, mat = residual(z)
    for _ in range(10):
        norm = float(np.max(np.abs(res)))
        if norm <= tol:
            break
        jac = mat - np.eye(2)
        if abs(np.linalg.det(jac)) < 1e-10:
            raise DegenerateOrbitError(
                "I - monodromy is singular; the orbit direction is not hyperbolic")
        z_new = z + np.linalg.solve(jac, -res)
        res_new, mat_new = residual(z_new)
        if float(np.max(np.abs(res_new))) >= norm:
            break
        z, res, mat = z_new, res_new, mat_new
    norm = float(np.max(np.abs(res)))
    if norm > tol:
        raise NoOrbitError(
            f"polish did not reach tolerance {tol:g}; defect {norm:.3e}")

    mono = monodromy(sys, PhasePoint(x=z[0], v=z[1], t=0.0), period, n_steps,
                     defect_tol=max(10.0 * tol, 1e-9))
    if abs(np.linalg.det(mono - np.eye(2))) < 1e-10:
        raise DegenerateOrbitError(
            "I - monodromy is singular at the refined point; the orbit has a "
            "non-hyperbolic direction")
    mults = np.linalg.eigvals(mono)
    order = np.lexsort((-mults.imag, -mults.real))
    mults = mults[order]
    exponents, hyperbolic, _ = floquet_analysis(mono, period)
    positive = exponents.real[exponents.real > 0.0]
    lam_orbit = float(positive.min()) if positive.size else None
    return PeriodicOrbit(x=float(reduce_mod_1(z[0])), v=float(z[1]), period=int(period),
                         monodromy=mono, multipliers=mults,
                         floquet_exponents=exponents, hyperbolic=hyperbolic,
                         lam=lam_orbit)
