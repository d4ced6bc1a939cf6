"""Finite-volume Gibbsian spin chains: couplings, heat-bath sampler, exact oracles."""

from .couplings import Band, CouplingFamily, FiniteRange, LongRange, Perturbed, Zero, build_band, coupling_from_dict
from .oracles import ExactLaw, exact_enumeration, transfer_matrix_for, transfer_matrix_infinite, transfer_matrix_oracle
from .sampler import (
    SpinChainState,
    heat_bath_sweep,
    local_fields,
    replica_generator,
    sample_ensemble,
)
from .spins import Interval, PlusMinus, RealLaw, SpinSpace, spin_space_from_dict

__all__ = [
    "Band",
    "CouplingFamily",
    "ExactLaw",
    "FiniteRange",
    "Interval",
    "LongRange",
    "Perturbed",
    "PlusMinus",
    "RealLaw",
    "SpinChainState",
    "SpinSpace",
    "Zero",
    "build_band",
    "coupling_from_dict",
    "exact_enumeration",
    "heat_bath_sweep",
    "local_fields",
    "replica_generator",
    "sample_ensemble",
    "spin_space_from_dict",
    "transfer_matrix_for",
    "transfer_matrix_infinite",
    "transfer_matrix_oracle",
]
