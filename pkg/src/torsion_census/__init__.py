"""Torsion census: elliptic curves with a local subgroup of order m, counted by height."""

from .census import CensusConfig, CensusReport, RegionSpec, empirical_probability, naive_scan, run_census
from .constants import area_R1, growth_constant, probability, sieve_table
from .curves import Curve, TorsionClass, height, locally_divisible, make_minimal, torsion_subgroup
from .families import catalog, family

__all__ = [
    "CensusConfig", "CensusReport", "Curve", "RegionSpec", "TorsionClass", "area_R1", "catalog",
    "empirical_probability", "family", "growth_constant", "height", "locally_divisible", "make_minimal",
    "naive_scan", "probability", "run_census", "sieve_table", "torsion_subgroup",
]

__version__ = "0.1.0"
