"""Finite-volume ink seepage into voxelized fiber structures."""

__version__ = "0.1.0"

from .lattice import Grid, make_grid, n1_neighbors, n2_neighbors
from .fibergen import FiberParams, FiberStructure, generate, porosity, voxelize
from .energy import (
    EnergyBreakdown,
    EnergyParams,
    PairwiseModel,
    SumCache,
    default_params,
    energy_direct,
    energy_pairwise,
    flip_delta,
    ink_sums,
    pairwise_model,
    solid_sums,
)
from .mincut import build_network, max_flow, solve_infinite
from .gasolver import GaConfig, ReservoirSpec, RunResult, run
from .analysis import fiber_adjacency_fraction, saturation_profile, volume_error
