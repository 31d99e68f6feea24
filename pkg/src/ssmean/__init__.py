"""Semisupervised mean estimation with calibrated prediction scores.

Combines a small labeled sample, a large unlabeled sample, and a black-box
prediction score into efficient estimates of a population mean, with
post-hoc calibration of the score, influence-function and bootstrap
inference, cross-validated method selection, cross-fitting, a Monte Carlo
study harness, and a two-arm treatment-effect wrapper.
"""
from .calibrators import (
    AffineCalibrator,
    BinnedCalibrator,
    LinearCovCalibrator,
    SigmoidCalibrator,
    StepCalibrator,
    calibrator_from_dict,
    calibrator_to_dict,
    fit_histogram,
    fit_isotonic,
    fit_linear,
    fit_linear_cov,
    fit_platt,
    fit_venn_abers,
    predict,
)
from .design import (
    EstimateReport,
    LabeledSample,
    TwoSampleDesign,
    UnlabeledSample,
    design_from_arrays,
    pooled_mean,
    validate_design,
)
from .estimators import (
    METHOD_NAMES,
    MethodTag,
    ScoredDesign,
    aipw_general,
    aipw_raw,
    calibrated_plugin,
    eem_estimate,
    eem_lambda,
    estimate,
    labeled_only,
    ppi,
    ppi_as_plugin_check,
)
from .exceptions import (
    ConfigError,
    ConvergenceError,
    DataError,
    DimensionError,
    MisuseError,
    SsmeanError,
)
from .inference import (
    BootstrapResult,
    InfluencePair,
    bootstrap,
    influence_values,
    wald_interval,
    wald_se,
)
from .kernels import PAVA_BACKEND
from .selection import CandidateSet, autocal_select, crossfit_calibrated, ols_trainer
from .simulate import (
    DgpSpec,
    McSummary,
    ate_two_arm,
    draw_dataset,
    run_grid,
    summaries_to_csv,
)

__version__ = "0.1.0"
