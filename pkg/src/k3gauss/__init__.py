"""Exact lattice and enumeration checks behind surjectivity of the second
Gaussian map for curves on K3 surfaces."""

__version__ = "0.1.0"

from .lattice import (  # noqa: E402
    DiagonalFamilyParams,
    DivisorClass,
    LatticeError,
    PicardLattice,
    genus_of_class,
    is_primitive,
    make_rank2_lattice,
    make_rank5_lattice,
    min_genus_for_expected_surjectivity,
    pair,
)

__all__ = [
    "DiagonalFamilyParams",
    "DivisorClass",
    "LatticeError",
    "PicardLattice",
    "genus_of_class",
    "is_primitive",
    "make_rank2_lattice",
    "make_rank5_lattice",
    "min_genus_for_expected_surjectivity",
    "pair",
]
