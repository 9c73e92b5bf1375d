"""possim: possibilistic inferential models with validity guarantees.

Builds necessity/possibility measure pairs from likelihood-based
statistical models, marginalizes them to derived features, computes
severity curves for one-sided normal testing, and audits the calibration
guarantees by simulation.
"""

from possim._backend import backend_name
from possim.contour import Contour, Contour2D, IMPair
from possim.errors import CapabilityError, DataFormatError, PossimError, ResolutionError
from possim.hypotheses import Interval, IntervalSet, LatticeMask, parse_hypothesis
from possim.likelihood_im import (
    CalibrationConfig,
    build_im,
    contour_exact,
    contour_mc,
    relative_likelihood,
)
from possim.models import (
    BinomialData,
    BinomialModel,
    BivariateCorrelationModel,
    CorrelationData,
    NormalData,
    NormalMeanModel,
    TableData,
    TwoByTwoModel,
    load_clinical_trial,
    load_law_school,
)

__version__ = "0.1.0"

__all__ = [
    "backend_name",
    "Contour",
    "Contour2D",
    "IMPair",
    "PossimError",
    "CapabilityError",
    "DataFormatError",
    "ResolutionError",
    "Interval",
    "IntervalSet",
    "LatticeMask",
    "parse_hypothesis",
    "CalibrationConfig",
    "build_im",
    "contour_exact",
    "contour_mc",
    "relative_likelihood",
    "NormalMeanModel",
    "BinomialModel",
    "BivariateCorrelationModel",
    "TwoByTwoModel",
    "NormalData",
    "BinomialData",
    "CorrelationData",
    "TableData",
    "load_clinical_trial",
    "load_law_school",
    "__version__",
]
