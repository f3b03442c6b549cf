"""
Core analysis modules
"""

from src.core.snc_model import DiagonalWeight, MonomialSection, MultiMonomialSection, SncChart
from src.core.multiplier import MonomialIdeal, JumpReport, jumping_numbers, sigma_f
from src.core.lcv import MeasureClass, MeasureResult, QuadratureSpec, lcv_limit, lcv_closed_form
from src.core.weights import AuxParams, AuxWeights, normalisation_constant
from src.core.estimates import ExtensionReport, check_main_estimate
from src.core.exceptions import LcExtensionError

__all__ = [
    "DiagonalWeight",
    "MonomialSection",
    "MultiMonomialSection",
    "SncChart",
    "MonomialIdeal",
    "JumpReport",
    "jumping_numbers",
    "sigma_f",
    "MeasureClass",
    "MeasureResult",
    "QuadratureSpec",
    "lcv_limit",
    "lcv_closed_form",
    "AuxParams",
    "AuxWeights",
    "normalisation_constant",
    "ExtensionReport",
    "check_main_estimate",
    "LcExtensionError",
]
