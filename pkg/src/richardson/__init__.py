"""Simulation and exact analysis of one- and two-type Richardson growth on Z^d."""

from .coupling import CoupledOutcome, LambdaGrid, coexistence_window_scan, coupled_grid_run
from .engine import (
    Classification, Cone, Discipline, FinitePair, GeodesicTree, Graph, GrowthState,
    HalfLine, HalfSpace, Hyperplane, Outcome, StopRule, TwoTypeConfig, classify,
    first_passage_time, geodesic_tree, passage_times_from, run_graph, run_graph_two_type,
    run_one_type, run_two_type,
)
from .errors import (
    CapacityError, GraphParseError, InvalidChannelError, InvalidConfigError,
    InvalidInputError, InvalidRateError, RichardsonError,
)
from .lattice import Box, Edge, edge, is_fertile, neighbors, parse_sites, strangles
from .oracle import ExactModel, exact_capture, exact_vs_engine, parse_graph
from .timefield import Channel, FieldSpec, StubField, base_sample, derive_seed, passage_time

__version__ = "0.1.0"
