"""Neyman-Pearson classification with high-probability type I error control.

Threshold calibration by order statistics, NP-ROC bands, split ensembles
and reproducible simulation studies.
"""

from .band import (
    BandSegment,
    DominanceReport,
    NPROCBand,
    Scenario,
    alpha_upper_bound,
    average_bands,
    band_from_split,
    beta_lower_bound,
    beta_upper_bound,
    choose_alpha,
    classifier_at_alpha,
    compare_bands,
    evaluate_band,
    rank_bounds,
)
from .betainc import betainc
from .data import (
    GaussianSpec,
    LabeledDataset,
    SIM1_SPEC,
    gaussian_type1,
    gaussian_type2,
    load_csv,
    save_csv,
    sim2_spec,
    simulate,
    simulate_s2,
    stratified_half_split,
)
from .ensemble import NPEnsemble, SplitPlan, fit_band, fit_np, majority_vote, predict
from .errors import (
    DataFormatError,
    EmptyFileError,
    InsufficientSampleError,
    InvalidArgumentError,
    NonBinaryLabelError,
    NPError,
    TooFewPointsError,
    UnfitError,
)
from .models import (
    ErrorReport,
    evaluate_errors,
    fit_gaussian_nb,
    fit_identity,
    fit_lda,
    fit_logistic,
    score_batch,
)
from .threshold import (
    NPThreshold,
    cv_threshold,
    min_class0_size,
    min_order_index,
    naive_threshold,
    select_threshold,
    violation_rate,
)

__version__ = "0.1.0"
