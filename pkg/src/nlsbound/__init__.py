"""Normalized bound states of -Delta u + lam*u + V(x)*u = |u|^(p-2)*u
on R^N and exterior domains, at desk scale.

Modules follow the pipeline: scaling exponents and identities
(`scaling`), the radial soliton oracle (`ground_state`), two-bump
interaction quadratures (`interaction`), domains/potentials and smallness
thresholds (`domain`), discretized fields and energies (`fields`), the
min-max landmark and saddle machinery (`minmax`), and the experiment CLI
(`cli`).
"""

from .domain import ExteriorDomainSpec, PotentialSpec
from .ground_state import RadialProfile, normalize_to_mass, shoot_radial
from .scaling import ModelParams, ScalingConstants, compute_exponents, scaled_profile

__version__ = "0.1.0"

__all__ = [
    "ExteriorDomainSpec",
    "PotentialSpec",
    "RadialProfile",
    "ModelParams",
    "ScalingConstants",
    "compute_exponents",
    "normalize_to_mass",
    "scaled_profile",
    "shoot_radial",
    "__version__",
]
