"""Numerical verification lab for 2D exterior semilinear wave equations."""
from .certificates import BoundCertificate, certificates_to_csv
from .geometry import Cutoff, Obstacle, check_star_shaped, commutator_apply, cutoff_eval
from .weights import (WeightParams, SpacetimePoint, bracket_plus, jb, phi, psi,
                      W_weight, w_rho, z_weight, weighted_sup_norm,
                      certify_weight_inequality)

__all__ = [
    "BoundCertificate", "certificates_to_csv", "Cutoff", "Obstacle", "check_star_shaped",
    "commutator_apply", "cutoff_eval", "WeightParams", "SpacetimePoint", "bracket_plus",
    "jb", "phi", "psi", "W_weight", "w_rho", "z_weight", "weighted_sup_norm",
    "certify_weight_inequality",
]
__version__ = "0.1.0"
