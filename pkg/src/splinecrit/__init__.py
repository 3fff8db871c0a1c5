"""Critical point extraction from tensor-product B-spline models."""

from .dedup import dedup
from .estimators import BSplineGridRegressor, CriticalPointExtractor, PLCriticalPointExtractor
from .exceptions import ClassificationError, DomainError, FitError, FormatError, UnsupportedDimensionError
from .extraction import CriticalPoint, ExtractionStats, NewtonConfig, classify, extract_all, extract_in_span
from .filtration import FiltrationResult, filter_spans
from .fitting import FitReport, GridScalarField, fit_adaptive, fit_fixed
from .metrics import AlignmentReport, align
from .pl import PLCriticalPoint, SampledGrid, pl_critical_points, sample_grid
from .synthetic import SchwefelSpec, analytic_field, generate_field, schwefel
from .spline import (
    DerivativeSet,
    KnotSpan,
    KnotVector,
    TensorSplineModel,
    basis_functions,
    derivative_model,
    enumerate_spans,
    evaluate,
    gradient_and_hessian,
)

__version__ = "0.1.0"
