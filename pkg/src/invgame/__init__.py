"""Estimate linearly-parameterized utilities of game players from observed
equilibria or better-response trajectories by minimax irrationality."""

from .datasets import (ContextualDataset, DataPoint, GridSpec, ObservationSet, Provenance, dynamic_dataset,
                       from_equilibrium, from_trajectory, load_trajectory_csv, regular_grid, static_dataset)
from .errors import (BoundsError, ConfigError, ConvergenceError, DataError, DimensionError, EmptyDataError,
                     LPFailure, RankDeficientError, UnboundedPolyhedronError)
from .estimation import (Certificate, ComparisonMode, ConstraintSystem, EstimationResult, build_constraints,
                         certify, estimate_l2, estimate_linf, estimate_ols_market_share, irrationality_loss,
                         solution_polyhedron)
from .game import (ActionProfile, Context, GameDefinition, LinearUtilityModel, ParameterSpace, Scenario,
                   error_row, evaluate_utility, utility_difference)
from .lp import LpSolution, StandardLP, Status, check_feasible, solve_lp
from .polyhedron import SolutionPolyhedron, enumerate_vertices

__version__ = "0.1.0"
