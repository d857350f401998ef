"""Associated-kernel hazard rate estimation."""

__version__ = "0.1.0"

from .bandwidth import (
    BandwidthGrid,
    PenaltyConfig,
    grid_global,
    grid_local,
    knn_bandwidth,
    select_cv,
    select_global,
    select_local,
)
from .estimators import EstimateCurve, EventSample, hazard_estimate, nelson_aalen, ratio_estimate
from .exceptions import DataError, DomainError, EmptyGridError, HazardKernelError, NumericalError
from .hazard import KernelHazard, estimate_curve, parse_method
from .kernels import AssociatedKernel, get_kernel, moments
from .models import (
    AbsLinearHazard,
    BumpMixtureHazard,
    ConstantHazard,
    ConstExpHazard,
    TabulatedHazard,
    hazard_from_dict,
)
from .simulate import mise, run_table, sample_event_times
from .verify import check_assumptions, oracle_expectation, oracle_variance_exact

__all__ = [
    "AbsLinearHazard",
    "AssociatedKernel",
    "BandwidthGrid",
    "BumpMixtureHazard",
    "ConstExpHazard",
    "ConstantHazard",
    "DataError",
    "DomainError",
    "EmptyGridError",
    "EstimateCurve",
    "EventSample",
    "HazardKernelError",
    "KernelHazard",
    "NumericalError",
    "PenaltyConfig",
    "TabulatedHazard",
    "check_assumptions",
    "estimate_curve",
    "get_kernel",
    "grid_global",
    "grid_local",
    "hazard_estimate",
    "hazard_from_dict",
    "knn_bandwidth",
    "mise",
    "moments",
    "nelson_aalen",
    "oracle_expectation",
    "oracle_variance_exact",
    "parse_method",
    "ratio_estimate",
    "run_table",
    "sample_event_times",
    "select_cv",
    "select_global",
    "select_local",
]
