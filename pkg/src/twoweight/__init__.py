"""Two-weight norm inequality testbed for dyadic operators on step functions."""

from .grid import (
    DyadicCube,
    DyadicGrid,
    ExponentPair,
    StepFunction,
    ValidationReport,
    Weight,
    WeightPair,
    average,
    dual_exponents,
    integral,
    lp_norm,
    step_from_csv,
    step_to_csv,
    values_at,
    weak_lq_norm,
)
from .maximal import (
    SawyerDirection,
    dyadic_maximal,
    hl_maximal,
    hl_maximal_at,
    sawyer_constants,
    sawyer_ratio,
    sawyer_ratio_with_error,
)
from .normest import (
    AscentConfig,
    NormEstimate,
    NormMode,
    norm_estimate,
    testing_vs_norm_report,
    witness_ratio,
)
from .shifts import (
    HaarFunction,
    HaarShiftSpec,
    ShiftTerm,
    TruncationWindow,
    czo_star,
    czo_star_at,
    dyadic_hilbert,
    haar_validate,
    hilbert_as_shift,
    random_shift,
    shift_apply,
    shift_truncated,
    shift_validate,
)
from .sparse import (
    CoefficientMap,
    SparseFamily,
    coefficient_apply,
    coefficient_apply_outer,
    outer_maximal_ratio,
    outer_testing_constants,
    outer_testing_ratio,
    sparse_apply,
    sparse_domination_constant,
    sparse_from_stopping,
    sparse_validate,
)

__version__ = "0.1.0"
