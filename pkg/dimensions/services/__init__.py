"""
moranlab Services Layer

One service per computation; management commands only parse flags and hand a
RunConfig to RunService:
- DimensionService: Moran equation roots, θ traces, s_*, s^*, s**
- CutsetService: cutsets, dyadic classes, lower-bound witnesses
- GeometryService: 1-D realizations, covering numbers, empirical estimates
- ScaleService: scale functions and the ψ(R, ρ) estimate
- ReportService: text and CSV rendering
"""

from .cutset_service import CutsetService
from .dimension_service import DimensionService
from .geometry_service import GeometryService
from .report_service import ReportService
from .run_service import RunService
from .scale_service import ScaleService
from .spec_loader import SpecLoaderService

__all__ = [
    "CutsetService",
    "DimensionService",
    "GeometryService",
    "ReportService",
    "RunService",
    "ScaleService",
    "SpecLoaderService",
]
