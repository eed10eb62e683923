"""Enhanced quantization of a particle on the circle."""
from .coherent import CoherentState, make_coherent, overlap, resolution_check
from .fiducial import FiducialSpec, FiducialState, build_fiducial, hyp2F1_terminating, normalization_constant
from .hamiltonian import PotentialSpec, symbol_closed_form, symbol_direct, symbol_shifted
from .hilbert import CircleGrid, GridFunction, ModeVector, make_grid

__version__ = "0.1.0"

__all__ = [
    "CircleGrid",
    "CoherentState",
    "FiducialSpec",
    "FiducialState",
    "GridFunction",
    "ModeVector",
    "PotentialSpec",
    "build_fiducial",
    "hyp2F1_terminating",
    "make_coherent",
    "make_grid",
    "normalization_constant",
    "overlap",
    "resolution_check",
    "symbol_closed_form",
    "symbol_direct",
    "symbol_shifted",
]
