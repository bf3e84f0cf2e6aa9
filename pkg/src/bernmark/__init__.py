"""Sharp Markov-Bernstein constants for real exponential polynomials on the
half-line, with certified Euler discretization steps for linear switching
systems built on top of them."""

from . import errors
from .laguerre import (
    BoundsReport,
    LaguerreChebyshev,
    bounds_report,
    k2_bound,
    laguerre_chebyshev,
    m_uniform,
    markov3_bounds,
    sklyarov_bounds,
    table,
)
from .oracle import (
    GridRelaxation,
    StepProblemValue,
    lp_markov_constant,
    refine_until,
    step_value,
)
from .quasipoly import ExpSpectrum, QuasiPolynomial
from .remez import (
    ChebyshevCertificate,
    MarkovConstant,
    chebyshev_polynomial,
    markov_constant,
    verify_alternance,
)
from .switching import (
    MatrixFamily,
    SpectrumInfo,
    StepEstimate,
    discretize,
    per_matrix_contraction_check,
    shifted_spectrum,
    simulate,
    step_bound,
)

__version__ = "0.1.0"

__all__ = [
    "BoundsReport",
    "ChebyshevCertificate",
    "ExpSpectrum",
    "GridRelaxation",
    "LaguerreChebyshev",
    "MarkovConstant",
    "MatrixFamily",
    "QuasiPolynomial",
    "SpectrumInfo",
    "StepEstimate",
    "StepProblemValue",
    "bounds_report",
    "chebyshev_polynomial",
    "discretize",
    "errors",
    "k2_bound",
    "laguerre_chebyshev",
    "lp_markov_constant",
    "m_uniform",
    "markov3_bounds",
    "markov_constant",
    "per_matrix_contraction_check",
    "refine_until",
    "shifted_spectrum",
    "simulate",
    "sklyarov_bounds",
    "step_bound",
    "step_value",
    "table",
    "verify_alternance",
]
