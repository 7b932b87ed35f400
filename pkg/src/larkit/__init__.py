"""Sparse chain complexes and cellular arrangements of the plane and space."""

from .arrange2d import PlanarArrangement, SegmentSoup, planar_arrangement
from .arrange3d import merge_complexes
from .generators import cuboidal_grid, random_segments, rotated_grid_pair, transform
from .model import CellTable, ChainComplexResult, Complex, Geometry, euler_characteristic
from .sparse import Chain, SignedSparseMatrix, from_triplets

__version__ = "0.1.0"

__all__ = [
    "CellTable",
    "Chain",
    "ChainComplexResult",
    "Complex",
    "Geometry",
    "PlanarArrangement",
    "SegmentSoup",
    "SignedSparseMatrix",
    "cuboidal_grid",
    "euler_characteristic",
    "from_triplets",
    "merge_complexes",
    "planar_arrangement",
    "random_segments",
    "rotated_grid_pair",
    "transform",
]
