"""Monotone finite-difference schemes for Isaacs equations and their truncations.

The main entry points are ``Scheme`` (the discrete operators on a grid),
``solve_isaacs`` and ``solve_truncated_pair`` (policy-iteration solvers) and
the study drivers in ``isaacs_fd.harness``.
"""

from .decomposition import (DirectionalDecomposition, decompose, decompose_batch, decompose_matrix,
                            decomposition_floor)
from .errors import (BarrierInvalid, ConfigError, DecompositionInfeasible, EmptyInterior, IsaacsError,
                     MissingNeighbor, NoConvergence, OrderingViolation, SaddleValueNonzero,
                     SupportEscapesRegion, UnclassifiedPoint, UnknownControl)
from .grid import (AXIS_STENCIL, DEFAULT_STENCIL, EXTENDED8_STENCIL, EXTENDED16_STENCIL, Box, Disk,
                   Ellipse, Grid, GridFunction, RoundedBox, Stencil, build_grid, get_stencil)
from .operators import (PucciParams, Scheme, eval_Fh, eval_P, eval_Ph, eval_truncated_lower,
                        eval_truncated_upper)
from .problem import (CoefficientField, ControlSet, EllipticityBounds, IsaacsProblem, SmoothTestFunction,
                      eval_F, eval_L, gamma_for_chi)
from .solver import SolveConfig, SolveReport, solve_isaacs, solve_truncated_pair

__all__ = [name for name in dir() if not name.startswith("_")]
