"""Two-sample data model shared by every estimator.

A design holds a labeled sample of (score, outcome) pairs and an unlabeled
sample of scores, where "score" means the value of a black-box prediction
model evaluated at each unit's covariates. Optional covariate matrices are
carried only for the covariate-adjusted linear calibration method.

All arrays are stored as read-only float64; instances are immutable and safe
to share across threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import DataError, DimensionError

__all__ = [
    "LabeledSample",
    "UnlabeledSample",
    "TwoSampleDesign",
    "EstimateReport",
    "pooled_mean",
    "validate_design",
    "design_from_arrays",
]


def _as_readonly_vector(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise DataError(f"{name} is empty")
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise DataError(f"{name} has non-finite value at index {bad[0]}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


def _as_readonly_matrix(x, n_rows: int, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a matrix, got shape {arr.shape}")
    if arr.shape[0] != n_rows:
        raise DimensionError(
            f"{name} has {arr.shape[0]} rows, expected {n_rows}"
        )
    bad = np.argwhere(~np.isfinite(arr))
    if bad.size:
        i, j = bad[0]
        raise DataError(f"{name} has non-finite value at row {i}, column {j}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LabeledSample:
    """Scores m(X_i) paired with observed outcomes Y_i, plus optional covariates."""

    scores: np.ndarray
    outcomes: np.ndarray
    covariates: Optional[np.ndarray] = None

    def __post_init__(self):
        scores = _as_readonly_vector(self.scores, "labeled scores")
        outcomes = _as_readonly_vector(self.outcomes, "labeled outcomes")
        if len(scores) != len(outcomes):
            raise DimensionError(
                f"labeled scores (n={len(scores)}) and outcomes (n={len(outcomes)}) differ in length"
            )
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "outcomes", outcomes)
        if self.covariates is not None:
            object.__setattr__(
                self, "covariates", _as_readonly_matrix(self.covariates, len(scores), "labeled covariates")
            )

    @property
    def n(self) -> int:
        return len(self.scores)


@dataclass(frozen=True)
class UnlabeledSample:
    """Scores m(X̃_j) for units whose outcome is unobserved."""

    scores: np.ndarray
    covariates: Optional[np.ndarray] = None

    def __post_init__(self):
        scores = _as_readonly_vector(self.scores, "unlabeled scores")
        object.__setattr__(self, "scores", scores)
        if self.covariates is not None:
            object.__setattr__(
                self, "covariates", _as_readonly_matrix(self.covariates, len(scores), "unlabeled covariates")
            )

    @property
    def n(self) -> int:
        return len(self.scores)


@dataclass(frozen=True)
class TwoSampleDesign:
    """A labeled and an unlabeled sample with the derived labeled fraction.

    The labeled fraction rho = n / (n + N) is always computed from the stored
    sample sizes and is never user-supplied.
    """

    labeled: LabeledSample
    unlabeled: UnlabeledSample

    def __post_init__(self):
        lc, uc = self.labeled.covariates, self.unlabeled.covariates
        if lc is not None and uc is not None and lc.shape[1] != uc.shape[1]:
            raise DimensionError(
                f"covariate dimension mismatch: labeled d={lc.shape[1]}, unlabeled d={uc.shape[1]}"
            )

    @property
    def n(self) -> int:
        return self.labeled.n

    @property
    def N(self) -> int:
        return self.unlabeled.n

    @property
    def m_total(self) -> int:
        return self.n + self.N

    @property
    def rho(self) -> float:
        return self.n / self.m_total


@dataclass
class EstimateReport:
    """Point estimate with standard error, confidence interval, and diagnostics."""

    estimate: float
    std_error: float
    ci_lower: float
    ci_upper: float
    alpha: float
    method: str
    n: int
    N: int
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "ci": [self.ci_lower, self.ci_upper],
            "alpha": self.alpha,
            "n": self.n,
            "N": self.N,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EstimateReport":
        return cls(
            estimate=d["estimate"],
            std_error=d["std_error"],
            ci_lower=d["ci"][0],
            ci_upper=d["ci"][1],
            alpha=d["alpha"],
            method=d["method"],
            n=d["n"],
            N=d["N"],
            diagnostics=d.get("diagnostics", {}),
        )


def pooled_mean(design: TwoSampleDesign, f_labeled, f_unlabeled) -> float:
    """Weighted average rho*mean(f_labeled) + (1-rho)*mean(f_unlabeled).

    Equals the arithmetic mean of the concatenated vectors, since
    rho = n / (n + N).
    """
    fl = np.asarray(f_labeled, dtype=np.float64)
    fu = np.asarray(f_unlabeled, dtype=np.float64)
    if fl.shape != (design.n,):
        raise DimensionError(f"f_labeled has shape {fl.shape}, expected ({design.n},)")
    if fu.shape != (design.N,):
        raise DimensionError(f"f_unlabeled has shape {fu.shape}, expected ({design.N},)")
    if not np.isfinite(fl).all():
        raise DataError("f_labeled has non-finite entries")
    if not np.isfinite(fu).all():
        raise DataError("f_unlabeled has non-finite entries")
    return (math.fsum(fl) + math.fsum(fu)) / design.m_total


def validate_design(labeled: LabeledSample, unlabeled: UnlabeledSample) -> TwoSampleDesign:
    """Construct a TwoSampleDesign, re-validating both samples.

    Idempotent: validating the samples of a produced design yields an
    identical design.
    """
    relabeled = LabeledSample(labeled.scores, labeled.outcomes, labeled.covariates)
    reunlabeled = UnlabeledSample(unlabeled.scores, unlabeled.covariates)
    return TwoSampleDesign(relabeled, reunlabeled)


def design_from_arrays(
    labeled_scores,
    labeled_outcomes,
    unlabeled_scores,
    labeled_covariates=None,
    unlabeled_covariates=None,
) -> TwoSampleDesign:
    """Convenience constructor from raw arrays."""
    return TwoSampleDesign(
        LabeledSample(labeled_scores, labeled_outcomes, labeled_covariates),
        UnlabeledSample(unlabeled_scores, unlabeled_covariates),
    )
