"""Channel models for IRS-assisted free-space optical links."""
__version__ = "0.1.0"

from .beam import BeamSpec, ObliquePlane
from .channel import LinkBudget, TurbulenceModel, outage
from .geometry import AnglePair
from .irs2d import LinkGeometry2D, conditional_gml_2d
from .irs3d import LinkGeometry3D
from .kernels import BACKEND
from .pointing import GmlLaw, SwayModel, gml_cdf, gml_pdf

__all__ = [
    "AnglePair", "BACKEND", "BeamSpec", "GmlLaw", "LinkBudget", "LinkGeometry2D",
    "LinkGeometry3D", "ObliquePlane", "SwayModel", "TurbulenceModel", "conditional_gml_2d",
    "gml_cdf", "gml_pdf", "outage", "__version__",
]
