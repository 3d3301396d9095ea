"""Random-walk wetting and square-well pinning: free energies, phase diagrams,
exact finite-N laws and samplers."""

from .walks import IncrementLaw, make_law, tilt
from .ldp import RateFunction, rate_function, rate_pair
from .renewal import RenewalModel, free_energy, renewal_model, tilted_renewal
from .well import WellModel, WellSolution, psi_brute_force, psi_closed_form, well_model
from .oracles import closed_form, closed_form_model

__version__ = "0.1.0"

__all__ = [
    "IncrementLaw", "make_law", "tilt", "RateFunction", "rate_function", "rate_pair",
    "RenewalModel", "free_energy", "renewal_model", "tilted_renewal", "WellModel",
    "WellSolution", "psi_brute_force", "psi_closed_form", "well_model", "closed_form",
    "closed_form_model",
]
