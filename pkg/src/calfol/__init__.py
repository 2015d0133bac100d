"""calfol: exact calibration-form identities, Grassmannian comass, and
foliation volumes on round spheres."""

__version__ = "0.1.0"

from .exalg import FormExpr, ScalarPi, DualVector, wedge, ce_differential, evaluate
from .charforms import Split, Normalization, euler_form, transgression, calibration_phi

__all__ = [
    "__version__",
    "FormExpr",
    "ScalarPi",
    "DualVector",
    "wedge",
    "ce_differential",
    "evaluate",
    "Split",
    "Normalization",
    "euler_form",
    "transgression",
    "calibration_phi",
]
