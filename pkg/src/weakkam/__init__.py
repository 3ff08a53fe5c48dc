"""Numerical weak KAM toolkit for time-periodic Lagrangians on the torus.

The solution operator of the evolutionary Hamilton-Jacobi equation is
realized as min-plus linear algebra over a variationally computed action
kernel; on top of it sit critical values, Peierls barriers, Aubry sets,
Floquet data of hyperbolic periodic orbits, and convergence-rate
experiments.
"""

from .action import (MinimizationSettings, action_potential,
                     discrete_el_residual, minimal_action)
from .errors import (ConfigurationError, DegenerateOrbitError,
                     EmptyAubrySetError, InsufficientDataError,
                     InvalidSubsolutionError, MinimizationError, NoOrbitError,
                     NotConjugateError, NotPeriodicError, NumericalError,
                     WeakKamError)
from .experiments import (ConvergenceReport, DwellReport, detect_aubry_orbits,
                          dwell_statistics, fit_exponential_rate,
                          run_convergence)
from .flow import (PeriodicOrbit, floquet_analysis, flow_map, flow_trajectory,
                   monodromy, refine_periodic_orbit)
from .reduction import (LiftedSystem, MaupertuisSubsolution, TiltedSystem,
                        lift_curve, lift_system, subsolution_from_tag,
                        tilt_system)
from .systems import (DiscretizedCurve, LagrangianSystem, PhasePoint,
                      curve_action, eval_lagrangian, legendre_transform,
                      reduce_mod_1, torus_distance)
from .tropical import (Grid, GridFunction, TropicalKernel, assemble_kernel,
                       karp_eigenvalue, min_cycle_mean, minplus_apply,
                       minplus_matmul, minplus_power, tropical_eigenvector)
from .weak_kam import (AubrySet, BarrierMatrix, ConnectionGraph, aubry_set,
                       backward_solution, connection_graph,
                       conjugate_pair_coincidence, critical_value,
                       default_aubry_tolerance, forward_solution,
                       minimizing_chain, peierls_barrier, semigroup_limit)

__version__ = "0.1.0"
