"""Period lifts and subsolution tilts.

``lift_system`` wraps a base Lagrangian through the phase-space map
(x, v, t) -> (x, v/N, N t), so an N-periodic structure of the base becomes
1-periodic for the lift, with N * (lifted action) = (base action) on
time-rescaled curves.

``tilt_system`` subtracts the exact differential of a subsolution f and
adds the critical value, producing a pointwise-nonnegative Lagrangian that
vanishes precisely on the Aubry set. Discretely the differential part is
integrated exactly (it telescopes to boundary values), so the tilt changes
every fixed-endpoint action by the same constant and leaves minimizers
untouched, which is the whole point of the construction.
"""
from __future__ import annotations

import math
import numpy as np

from .errors import ConfigurationError, InvalidSubsolutionError
from .systems import DiscretizedCurve, LagrangianSystem, reduce_mod_1

SUBSOLUTION_TAGS = ("zero", "constant", "maupertuis")
BLEND_HALF_WIDTH = 1e-2


class LiftedSystem:
    """L_N(x, v, t) = L(x, v/N, N t); H_N(x, p, t) = H(x, N p, N t)."""

    mechanical_form = True

    def __init__(self, base, n: int):
        if n < 1:
            raise ConfigurationError("lift order must be a positive integer")
        self.base = base
        self.n = int(n)
        self.dimension = base.dimension

    def lagrangian(self, x, v, t):
        return self.base.lagrangian(x, np.asarray(v, dtype=float) / self.n,
                                    np.asarray(t, dtype=float) * self.n)

    def lagrangian_x(self, x, v, t):
        return self.base.lagrangian_x(x, np.asarray(v, dtype=float) / self.n,
                                      np.asarray(t, dtype=float) * self.n)

    def lagrangian_v(self, x, v, t):
        return self.base.lagrangian_v(x, np.asarray(v, dtype=float) / self.n,
                                      np.asarray(t, dtype=float) * self.n) / self.n

    def lagrangian_vv(self, x, v, t):
        return self.base.lagrangian_vv(x, np.asarray(v, dtype=float) / self.n,
                                       np.asarray(t, dtype=float) * self.n) / self.n ** 2

    def lagrangian_xx(self, x, v, t):
        return self.base.lagrangian_xx(x, np.asarray(v, dtype=float) / self.n,
                                       np.asarray(t, dtype=float) * self.n)

    def lagrangian_and_grads(self, x, v, t):
        lag, lx, lv = self.base.lagrangian_and_grads(
            x, np.asarray(v, dtype=float) / self.n, np.asarray(t, dtype=float) * self.n)
        return lag, lx, lv / self.n

    def lagrangian_xx_bound(self) -> float:
        return self.base.lagrangian_xx_bound()

    def potential_upper_bound(self) -> float:
        return self.base.potential_upper_bound()

    def hamiltonian(self, x, p, t):
        return self.base.hamiltonian(x, np.asarray(p, dtype=float) * self.n,
                                     np.asarray(t, dtype=float) * self.n)

    def quadrature_system(self):
        return self

    def action_offset(self, x0, x1, t0, t1):
        return 0.0

    def label(self):
        return f"lift(N={self.n}) of {self.base.label()}"


def lift_system(sys, n: int) -> LiftedSystem:
    return LiftedSystem(sys, n)


def lift_curve(curve: DiscretizedCurve, n: int) -> DiscretizedCurve:
    """Time-rescale a curve by 1/n; sample values are unchanged, so the
    quadrature nodes of base and lift align and N * A_lift = A_base holds
    to rounding."""
    if n < 1:
        raise ConfigurationError("lift order must be a positive integer")
    return DiscretizedCurve(t0=curve.t0 / n, t1=curve.t1 / n,
                            samples=curve.samples.copy(), winding=curve.winding)


class Subsolution:
    """Interface of a subsolution f(x, t) with exact derivatives."""

    tag = "abstract"

    def value(self, x, t):
        raise NotImplementedError

    def dx(self, x, t):
        raise NotImplementedError

    def dt(self, x, t):
        return np.zeros_like(np.asarray(x, dtype=float))

    def dxx(self, x, t):
        raise NotImplementedError

    def dxt(self, x, t):
        return np.zeros_like(np.asarray(x, dtype=float))


class ZeroSubsolution(Subsolution):
    tag = "zero"

    def value(self, x, t):
        return np.zeros_like(np.asarray(x, dtype=float))

    dx = value
    dxx = value


class ConstantSubsolution(Subsolution):
    tag = "constant"

    def __init__(self, kappa: float = 1.0):
        self.kappa = float(kappa)

    def value(self, x, t):
        return np.full_like(np.asarray(x, dtype=float), self.kappa)

    def dx(self, x, t):
        return np.zeros_like(np.asarray(x, dtype=float))

    dxx = dx


class MaupertuisSubsolution(Subsolution):
    """Primitive of the critical-speed field for the single-well cosine
    potential (spatial frequency 1, no time modulation).

    On [0, 1/2] the value is (2 sqrt(A) / pi)(1 - cos(pi x)), mirrored at
    x = 1/2. The mirror corner is replaced on a band of half-width 1e-2 by
    a C^2 blend whose slope stays below the critical speed, so the tilted
    Lagrangian remains nonnegative there with a strict margin.
    """

    tag = "maupertuis"

    def __init__(self, amp: float = 1.0):
        if amp <= 0:
            raise ConfigurationError("amplitude must be positive")
        self.amp = float(amp)
        w = BLEND_HALF_WIDTH
        root = math.sqrt(self.amp)
        g1 = 2.0 * root * math.sin(math.pi * (0.5 - w))
        g2 = 2.0 * root * math.pi * math.cos(math.pi * (0.5 - w))
        self._w = w
        self._a = -(g1 + g2 * w) / w ** 2
        self._b = g2 + 2.0 * self._a * w
        self._edge_value = (2.0 * root / math.pi) * (1.0 - math.cos(math.pi * (0.5 - w)))
        self._root = root

    def _pieces(self, x):
        u = reduce_mod_1(np.asarray(x, dtype=float))
        folded = np.minimum(u, 1.0 - u)
        sign = np.where(u <= 0.5, 1.0, -1.0)
        xi = folded - 0.5  # in [-1/2, 0]
        in_band = xi >= -self._w
        return folded, sign, xi, in_band

    def _blend_value(self, xi):
        w, a, b = self._w, self._a, self._b
        return (self._edge_value + a * (xi ** 3 + w ** 3) / 3.0
                + b * (xi ** 2 - w ** 2) / 2.0)

    def value(self, x, t):
        folded, _, xi, in_band = self._pieces(x)
        smooth = (2.0 * self._root / math.pi) * (1.0 - np.cos(math.pi * folded))
        return np.where(in_band, self._blend_value(xi), smooth)

    def dx(self, x, t):
        folded, sign, xi, in_band = self._pieces(x)
        smooth = 2.0 * self._root * np.sin(math.pi * folded)
        blend = self._a * xi ** 2 + self._b * xi
        return sign * np.where(in_band, blend, smooth)

    def dxx(self, x, t):
        folded, _, xi, in_band = self._pieces(x)
        smooth = 2.0 * self._root * math.pi * np.cos(math.pi * folded)
        blend = 2.0 * self._a * xi + self._b
        return np.where(in_band, blend, smooth)


def subsolution_from_tag(tag: str, sys, kappa: float = 1.0) -> Subsolution:
    if tag == "zero":
        return ZeroSubsolution()
    if tag == "constant":
        return ConstantSubsolution(kappa)
    if tag == "maupertuis":
        if not (isinstance(sys, LagrangianSystem) and sys.family == "mechanical-cos"
                and sys.freq == 1 and sys.eps == 0.0):
            raise ConfigurationError(
                "the maupertuis subsolution fits the single-well cosine "
                "potential without time modulation only")
        return MaupertuisSubsolution(amp=sys.amp)
    raise ConfigurationError(f"unknown subsolution tag {tag!r}; "
                             f"choose one of {SUBSOLUTION_TAGS}")


class TiltedSystem:
    """L(x,v,t) - f_x(x,t) v - f_t(x,t) + c, with the differential part
    integrated exactly along curves (boundary term), not by quadrature."""

    mechanical_form = False  # L_v couples to x through f_x; flow via the base

    def __init__(self, base, sub: Subsolution, c: float):
        self.base = base
        self.sub = sub
        self.c = float(c)
        self.dimension = base.dimension
        self.tilt_minimum = None
        self.tilt_witness = None

    def lagrangian(self, x, v, t):
        v = np.asarray(v, dtype=float)
        return (self.base.lagrangian(x, v, t) - self.sub.dx(x, t) * v
                - self.sub.dt(x, t) + self.c)

    def lagrangian_x(self, x, v, t):
        v = np.asarray(v, dtype=float)
        return (self.base.lagrangian_x(x, v, t) - self.sub.dxx(x, t) * v
                - self.sub.dxt(x, t))

    def lagrangian_v(self, x, v, t):
        return self.base.lagrangian_v(x, v, t) - self.sub.dx(x, t)

    def lagrangian_vv(self, x, v, t):
        return self.base.lagrangian_vv(x, v, t)

    def lagrangian_and_grads(self, x, v, t):
        v = np.asarray(v, dtype=float)
        lag, lx, lv = self.base.lagrangian_and_grads(x, v, t)
        fx = self.sub.dx(x, t)
        return (lag - fx * v - self.sub.dt(x, t) + self.c,
                lx - self.sub.dxx(x, t) * v - self.sub.dxt(x, t),
                lv - fx)

    def hamiltonian(self, x, p, t):
        fx = self.sub.dx(x, t)
        return (self.base.hamiltonian(x, np.asarray(p, dtype=float) + fx, t)
                + self.sub.dt(x, t) - self.c)

    def quadrature_system(self):
        return self.base.quadrature_system()

    def action_offset(self, x0, x1, t0, t1):
        # c (t1 - t0) plus the exact telescoped differential f(start) - f(end).
        return (self.c * (np.asarray(t1, dtype=float) - np.asarray(t0, dtype=float))
                + self.sub.value(reduce_mod_1(x0), t0)
                - self.sub.value(reduce_mod_1(x1), t1))

    def label(self):
        return f"tilt(f={self.sub.tag},c={self.c:g}) of {self.base.label()}"


def tilt_system(sys, f_tag: str, c: float, kappa: float = 1.0, validate: bool = True,
                lattice=(64, 32, 16), v_bound: float = 3.0,
                tol: float = 1e-6) -> TiltedSystem:
    """Build the tilted Lagrangian and sweep a lattice for negativity.

    The sweep covers x in [0,1), v in [-v_bound, v_bound], t in [0,1);
    superlinearity makes large |v| harmless, the risk sits at moderate v.
    Records the minimum and its location; raises when the minimum drops
    below -tol.
    """
    sub = subsolution_from_tag(f_tag, sys, kappa=kappa)
    tilted = TiltedSystem(sys, sub, c)
    if validate:
        nx, nv, nt = lattice
        xs = np.arange(nx) / nx
        vs = np.linspace(-v_bound, v_bound, nv)
        ts = np.arange(nt) / nt
        xg, vg, tg = np.meshgrid(xs, vs, ts, indexing="ij")
        values = tilted.lagrangian(xg, vg, tg)
        flat = int(np.argmin(values))
        witness = (float(xg.flat[flat]), float(vg.flat[flat]), float(tg.flat[flat]))
        minimum = float(values.flat[flat])
        tilted.tilt_minimum = minimum
        tilted.tilt_witness = witness
        if minimum < -tol:
            raise InvalidSubsolutionError(
                f"tilted Lagrangian reaches {minimum:.3e} at {witness}",
                witness=witness, minimum=minimum)
    return tilted
