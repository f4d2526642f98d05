"""Zariski chambers, nef cone volumes and chamber volumes on rational surfaces, in exact arithmetic."""
from .chambers import ChamberCensus, ChamberSupport, CensusRow, census, classify_support, enumerate_supports
from .cones import chamber_volume_oracle, dual_cone, nef_volume_oracle
from .lattice import IntersectionForm, NegDefState, intersect, is_negative_definite
from .surfaces import SurfaceError, SurfaceModel, contract, contract_set, identify, make_surface, minus_one_curves
from .values import INFINITE, Infinite, format_volume, is_infinite, parse_volume
from .volumes import (
    PivotDivisor,
    ZariskiPair,
    census_with_volumes,
    chamber_of,
    chamber_volume,
    is_anticanonical_big,
    nef_volume,
    pivot_divisor,
    zariski_decompose,
)

__version__ = "0.1.0"
