"""Sarmanov-family bivariate count models for football scorelines."""

from bivisar.marginals import Marginal, NegBin, Poisson
from bivisar.qcatalog import QFunction, make_q, repair_q
from bivisar.bivariate import BivariateModel, OmegaInterval, omega_bounds

__all__ = [
    "Marginal",
    "Poisson",
    "NegBin",
    "QFunction",
    "make_q",
    "repair_q",
    "BivariateModel",
    "OmegaInterval",
    "omega_bounds",
]

__version__ = "0.1.0"
