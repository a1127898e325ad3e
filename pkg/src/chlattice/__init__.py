"""chlattice: lattice point counting in complex hyperbolic space."""

__version__ = "0.2.0"
