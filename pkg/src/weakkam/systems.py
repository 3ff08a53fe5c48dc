"""Built-in time-periodic Lagrangians on the unit torus.

Two analytic families are provided: the free kinetic Lagrangian
L = v^2/2, and a pendulum-type family with a cosine potential whose
strength is modulated 1-periodically in time,

    L(x, v, t) = v^2/2 - A cos(2 pi q x) (1 + eps cos(2 pi t)).

Evaluators are exact closed forms, accept scalars or numpy arrays, and
reduce x and t mod 1 internally, so spatial and temporal periodicity hold
to the last bit whenever the shifted argument is representable.

Curves are stored lifted to the real line with an explicit winding count;
positions reduce mod 1 only at API boundaries, because the action depends
on the lift, not on the projection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericalError

TWO_PI = 2.0 * math.pi

FAMILIES = ("free", "mechanical-cos")


def reduce_mod_1(z):
    """Canonical torus representative in [0, 1).

    Tiny negative inputs would round z - floor(z) up to exactly 1.0, so
    that case folds back to 0.
    """
    r = z - np.floor(z)
    return np.where(r == 1.0, 0.0, r)


def torus_distance(a, b):
    """Shortest distance on the unit circle, vectorized."""
    d = np.abs(reduce_mod_1(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))
    return np.minimum(d, 1.0 - d)


@dataclass(frozen=True)
class LagrangianSystem:
    """A built-in Lagrangian family with exact derivative evaluators.

    Only analytic built-ins are supported: shooting and monodromy
    integration need exact derivatives, so numeric user-supplied
    Lagrangians are deliberately out of scope.
    """

    family: str = "mechanical-cos"
    amp: float = 1.0
    freq: int = 1
    eps: float = 0.0
    dimension: int = 1

    # L_v depends on v alone for these families, so the second-order flow
    # may be reduced to v' = L_x / L_vv.
    mechanical_form = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown Lagrangian family {self.family!r}; "
                                     f"choose one of {FAMILIES}")
        if self.dimension != 1:
            raise ConfigurationError("built-in families are one dimensional")
        if self.family == "mechanical-cos":
            if not (isinstance(self.freq, int) and self.freq >= 1):
                raise ConfigurationError("spatial frequency must be a positive integer")
            if not abs(self.eps) < 1.0:
                raise ConfigurationError("time-modulation amplitude must satisfy |eps| < 1")

    # -- closed forms ----------------------------------------------------

    def _modulation(self, t):
        if self.eps == 0.0:
            return 1.0
        return 1.0 + self.eps * np.cos(TWO_PI * reduce_mod_1(t))

    def potential(self, x, t):
        """Potential energy U(x, t); the Lagrangian is v^2/2 - U."""
        if self.family == "free":
            return np.zeros_like(np.asarray(x, dtype=float))
        return self.amp * np.cos(TWO_PI * self.freq * reduce_mod_1(x)) * self._modulation(t)

    def lagrangian(self, x, v, t):
        return 0.5 * np.asarray(v, dtype=float) ** 2 - self.potential(x, t)

    def lagrangian_x(self, x, v, t):
        if self.family == "free":
            return np.zeros_like(np.asarray(x, dtype=float))
        w = TWO_PI * self.freq
        return self.amp * w * np.sin(w * reduce_mod_1(x)) * self._modulation(t)

    def lagrangian_v(self, x, v, t):
        return np.asarray(v, dtype=float) + np.zeros_like(np.asarray(x, dtype=float))

    def lagrangian_vv(self, x, v, t):
        return np.ones_like(np.asarray(v, dtype=float) + np.zeros_like(np.asarray(x, dtype=float)))

    def lagrangian_xx(self, x, v, t):
        if self.family == "free":
            return np.zeros_like(np.asarray(x, dtype=float))
        w = TWO_PI * self.freq
        return self.amp * w * w * np.cos(w * reduce_mod_1(x)) * self._modulation(t)

    def lagrangian_and_grads(self, x, v, t):
        """(L, L_x, L_v) in one call; shares the trig evaluations.

        Inputs must already have a common shape (the hot loops guarantee
        it); L_v aliases v and must not be mutated.
        """
        v = np.asarray(v, dtype=float)
        if self.family == "free":
            return 0.5 * v * v, np.zeros_like(v), v
        w = TWO_PI * self.freq
        # inline fractional part: cos/sin are 2 pi periodic, the representative
        # endpoint does not matter here
        phase = np.asarray(x, dtype=float) - np.floor(x)
        phase *= w
        m = self._modulation(t)
        lag = np.cos(phase)
        lag *= -self.amp * np.asarray(m)
        lag += 0.5 * v * v
        lx = np.sin(phase)
        lx *= self.amp * w * np.asarray(m)
        return lag, lx, v

    def lagrangian_xx_bound(self) -> float:
        """Sup of |L_xx| over phase space, used to scale preconditioners."""
        if self.family == "free":
            return 0.0
        return abs(self.amp) * (TWO_PI * self.freq) ** 2 * (1.0 + abs(self.eps))

    def potential_upper_bound(self) -> float:
        """Sup of the potential; L >= v^2/2 - this bound pointwise."""
        if self.family == "free":
            return 0.0
        return abs(self.amp) * (1.0 + abs(self.eps))

    def hamiltonian(self, x, p, t):
        """Legendre-dual energy, H = p^2/2 + U(x, t)."""
        return 0.5 * np.asarray(p, dtype=float) ** 2 + self.potential(x, t)

    # -- quadrature protocol ---------------------------------------------

    def quadrature_system(self):
        """System whose pointwise Lagrangian feeds the midpoint rule."""
        return self

    def action_offset(self, x0, x1, t0, t1):
        """Exact boundary term added to the midpoint quadrature (zero here)."""
        return 0.0

    def label(self):
        if self.family == "free":
            return "free"
        return f"mechanical-cos(A={self.amp:g},q={self.freq},eps={self.eps:g})"


@dataclass(frozen=True)
class PhasePoint:
    """A point (x, v, t) with x reduced to [0, 1)."""

    x: float
    v: float
    t: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.v) and np.isfinite(self.t)):
            raise ConfigurationError("phase point coordinates must be finite")
        object.__setattr__(self, "x", float(reduce_mod_1(self.x)))
        object.__setattr__(self, "v", float(self.v))
        object.__setattr__(self, "t", float(self.t))


@dataclass(frozen=True)
class DiscretizedCurve:
    """A curve sampled on a uniform time grid, lifted to the real line.

    ``samples[k]`` is the lifted position at time t0 + k*spacing; ``winding``
    is the net integer displacement of the lift relative to the reduced
    endpoints.
    """

    t0: float
    t1: float
    samples: np.ndarray
    winding: int = 0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size < 2:
            raise ConfigurationError("a curve needs at least two samples")
        if not self.t1 > self.t0:
            raise ConfigurationError("curve requires t1 > t0")
        object.__setattr__(self, "samples", samples)

    @property
    def n_segments(self) -> int:
        return self.samples.size - 1

    @property
    def spacing(self) -> float:
        return (self.t1 - self.t0) / self.n_segments

    def times(self) -> np.ndarray:
        return self.t0 + self.spacing * np.arange(self.samples.size)

    def midpoint_times(self) -> np.ndarray:
        return self.t0 + self.spacing * (np.arange(self.n_segments) + 0.5)

    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.samples[1:] + self.samples[:-1])

    def velocities(self) -> np.ndarray:
        """Finite-difference velocities, attached to segment midpoints."""
        return np.diff(self.samples) / self.spacing

    def start(self) -> float:
        return float(reduce_mod_1(self.samples[0]))

    def end(self) -> float:
        return float(reduce_mod_1(self.samples[-1]))


def eval_lagrangian(sys: LagrangianSystem, p: PhasePoint):
    """Value and derivatives (L, L_x, L_v, L_vv) at a phase point."""
    return (float(sys.lagrangian(p.x, p.v, p.t)),
            float(sys.lagrangian_x(p.x, p.v, p.t)),
            float(sys.lagrangian_v(p.x, p.v, p.t)),
            float(sys.lagrangian_vv(p.x, p.v, p.t)))


def legendre_transform(sys, x, p, t, tol=1e-12, max_iter=60):
    """Solve p = L_v(x, v, t) for v by damped Newton from v = 0.

    Returns (v_star, H) with H = p*v_star - L(x, v_star, t). For the
    built-in families the residual vanishes after one step; the damping
    loop guards wrapped systems with less trivial fiber derivatives.
    """
    v = 0.0
    res = float(sys.lagrangian_v(x, v, t)) - p
    for _ in range(max_iter):
        if abs(res) <= tol:
            ham = p * v - float(sys.lagrangian(x, v, t))
            return v, ham
        step = -res / float(sys.lagrangian_vv(x, v, t))
        lam = 1.0
        while lam > 1e-8:
            v_new = v + lam * step
            res_new = float(sys.lagrangian_v(x, v_new, t)) - p
            if abs(res_new) < abs(res):
                v, res = v_new, res_new
                break
            lam *= 0.5
        else:
            break
    raise NumericalError(f"Legendre inversion stalled with residual {res:.3e}")


def curve_action(sys, curve: DiscretizedCurve) -> float:
    """Midpoint-rule action of a discretized curve.

    Velocities are finite differences of the lifted samples; each segment
    contributes spacing * L(midpoint, velocity, midpoint time). Summation
    uses math.fsum so that the value is reproducible independently of
    chunking, and systems may add an exact boundary term (tilts do).
    """
    qsys = sys.quadrature_system()
    h = curve.spacing
    terms = h * np.asarray(qsys.lagrangian(curve.midpoints(), curve.velocities(),
                                           curve.midpoint_times()), dtype=float)
    offset = sys.action_offset(curve.samples[0], curve.samples[-1], curve.t0, curve.t1)
    return math.fsum(terms.tolist()) + float(offset)
