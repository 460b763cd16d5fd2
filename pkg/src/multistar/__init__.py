"""multistar: N expanding self-gravitating gas spheres on a unit-ball reference domain."""

from .domain import BallBasis, FieldRep, ReferenceGrid, build_grid, chi, chibar

__all__ = [
    "BallBasis",
    "FieldRep",
    "ReferenceGrid",
    "build_grid",
    "chi",
    "chibar",
]

__version__ = "0.1.0"
