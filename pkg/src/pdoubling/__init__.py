"""Bounds on doubling constants of positive definite functions over convex bodies."""
from .bounds import BoundEntry
from .covering import best_upper, chain_bound, rogers_bound, subset_bound, tiling_cover
from .discrete_oracle import zq_max_experiment, zq_ratio
from .geometry import Ball, Box, CrossPolytope, Sum, minkowski_sum, scale, volume
from .lattices import Lattice, catalog_entry, lattice_lower_bound, normalize_to_packing, packing_density
from .literals import parse_body, parse_lattice, parse_witness
from .report import bounds, sweep
from .witness import Autocorrelation, Gaussian, lattice_witness_ratio, ratio

__version__ = "0.1.0"
