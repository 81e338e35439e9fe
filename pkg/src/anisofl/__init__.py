"""Anisotropic Fourier-Lebesgue spaces, rough pseudodifferential symbols and microlocal probes on the torus."""
from .dyadic import DyadicPartition, Transition, build_partition, dyadic_blocks
from .flnorm import FLParams, fl_dyadic_norm, fl_norm
from .lattice import FrequencyLattice, GridFunction, physical, spectral
from .mweight import AnisotropyVector, as_anisotropy, m_norm, m_weight
from .symbol import Elementary, GridTensor, Multiplier, Separable, XMultiplier

__all__ = [
    "AnisotropyVector",
    "DyadicPartition",
    "Elementary",
    "FLParams",
    "FrequencyLattice",
    "GridFunction",
    "GridTensor",
    "Multiplier",
    "Separable",
    "Transition",
    "XMultiplier",
    "as_anisotropy",
    "build_partition",
    "dyadic_blocks",
    "fl_dyadic_norm",
    "fl_norm",
    "m_norm",
    "m_weight",
    "physical",
    "spectral",
]
