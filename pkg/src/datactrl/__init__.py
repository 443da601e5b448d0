"""Data-driven controllability testing for sampled nonlinear systems."""

from .core import (
    Bounds,
    Box,
    DataError,
    DatactrlError,
    Dataset,
    DimensionMismatchError,
    InvariantViolationError,
    StateBall,
    TransitionSample,
    ball_contains,
    ball_subset,
    distance,
    load_dataset,
    save_dataset,
)
from .systems import SamplingConfig, SystemSpec, make_system, sample_dataset, step
from .lipschitz import ConstraintPair, LipschitzEstimate, build_constraints, estimate_all, solve_lcqp
from .mecs import MecsOptions, MecsResult, TreeNode, evaluate_radius, extract_control_path, run_mecs
from .ferf import ReachGraph, build_graph, dijkstra_to_target, ferf_controllable, floyd_all_pairs
from .analysis import DocReport, SweepResult, doc, epsilon_sweep, target_grid_sweep, verify_ball_by_rollout

__version__ = "0.1.0"
