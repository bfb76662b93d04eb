"""Numerical tools for coupled ion chains in double-well traps."""
from .core import (CA40, BE9, CODATA, DomainError, IonSpecies, Orientation, TrapPotential,
                   CoupledPair, point_charge_coupling, exact_pair_frequencies,
                   interaction_constant_from_splitting, well_separation)

__version__ = "0.1.0"
