"""Wigner-function dynamics of open quantum systems and entropy-production diagnostics."""
from .phase_space import (
    PhaseSpaceGrid,
    WignerField,
    DensityMatrix,
    GaussianSpec,
    make_gaussian,
    make_cat,
    wigner_to_density,
    density_to_wigner,
)
from .potentials import PotentialSpec
from .evolution import EnvironmentParams, Bracket, EvolutionConfig, run, step

__version__ = "0.1.0"

__all__ = [
    "PhaseSpaceGrid",
    "WignerField",
    "DensityMatrix",
    "GaussianSpec",
    "make_gaussian",
    "make_cat",
    "wigner_to_density",
    "density_to_wigner",
    "PotentialSpec",
    "EnvironmentParams",
    "Bracket",
    "EvolutionConfig",
    "run",
    "step",
]
