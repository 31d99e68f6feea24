"""Cross-validated method selection and K-fold cross-fitting.

autocal_select picks among candidate estimators by the cross-validated
influence-function variance: each candidate's calibration step is refit on
out-of-fold labeled data and its variance criterion evaluated on the held-out
fold plus a capped unlabeled subsample.

crossfit_calibrated implements the out-of-fold pipeline for a user-supplied
score trainer: out-of-fold predictions for the labeled rows, one calibrator
fit on the pooled out-of-fold pairs, and fold-averaged calibrated predictions
for the unlabeled rows.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Protocol, Tuple, Union

import numpy as np

from . import calibrators as cal
from ._rng import CROSSFIT_SHUFFLE, FOLD_SHUFFLE, UNLABELED_SUBSAMPLE, substream
from .design import EstimateReport, TwoSampleDesign, design_from_arrays
from .estimators import MethodTag, _influence_report, estimate
from .exceptions import ConfigError, DataError

__all__ = [
    "CandidateSet",
    "TrainerContract",
    "autocal_select",
    "crossfit_calibrated",
    "ols_trainer",
]

_SELECTABLE = ("aipw", "linear-cal", "iso-cal", "hist-cal", "platt-cal")


@dataclass
class CandidateSet:
    """Ordered estimator candidates for cross-validated selection."""

    methods: List[Union[str, MethodTag]]
    folds: int = 20
    unlabeled_cap_factor: int = 10

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("candidate list is empty")
        tags = [MethodTag.parse(m) for m in self.methods]
        for t in tags:
            if t.name not in _SELECTABLE:
                raise ConfigError(
                    f"{t.name!r} is not selectable; choose from {', '.join(_SELECTABLE)}"
                )
        self.methods = tags
        if self.folds < 2:
            raise ConfigError(f"need at least 2 folds, got {self.folds}")
        if self.unlabeled_cap_factor < 1:
            raise ConfigError("unlabeled_cap_factor must be >= 1")


class TrainerContract(Protocol):
    """A score trainer: (covariate matrix, outcomes) -> score function.

    The returned callable maps a covariate matrix to a score vector. Trainers
    must be deterministic given their inputs; this is what makes cross-fitted
    results reproducible.
    """

    def __call__(self, covariates: np.ndarray, outcomes: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        ...


def _fold_blocks(n: int, k: int, rng_key: Tuple[int, ...]) -> List[np.ndarray]:
    perm = substream(*rng_key).permutation(n)
    return np.array_split(perm, k)


def _fit_adjuster(name: str, scores: np.ndarray, outcomes: np.ndarray):
    """Fit a candidate's calibration on training data; identity for aipw."""
    if name == "aipw":
        return lambda t: np.asarray(t, dtype=np.float64)
    if name == "linear-cal":
        return cal.fit_linear(scores, outcomes, clip=True)
    if name == "iso-cal":
        return cal.fit_isotonic(scores, outcomes)
    if name == "hist-cal":
        return cal.fit_histogram(scores, outcomes)
    if name == "platt-cal":
        return cal.fit_platt(scores, outcomes)
    raise ConfigError(f"{name!r} has no fold adjuster")


def _fold_variance(a_eval, y_eval, a_unl, rho_f: float) -> float:
    """Influence-function variance on one held-out fold, recentered."""
    psi = rho_f * a_eval.mean() + (1.0 - rho_f) * a_unl.mean() + (y_eval - a_eval).mean()
    pooled = rho_f * a_eval.mean() + (1.0 - rho_f) * a_unl.mean()
    shift = psi - pooled
    al = a_eval + shift
    au = a_unl + shift
    dl = al - psi + (y_eval - al) / rho_f
    du = au - psi
    return float(rho_f * np.mean(dl**2) + (1.0 - rho_f) * np.mean(du**2))


def autocal_select(
    design: TwoSampleDesign,
    candidates: CandidateSet,
    seed: int,
    alpha: float = 0.05,
) -> Tuple[MethodTag, EstimateReport]:
    """Pick the candidate with the smallest cross-validated variance criterion.

    The labeled sample is shuffled once (by seed) into K contiguous folds,
    with K clamped so every fold holds at least two points; the unlabeled
    evaluation subsample of size min(N, cap_factor * n) is drawn once per
    call. Ties break by candidate order. The winner is refit on the full
    sample and its report returned with the CV table in diagnostics.
    """
    n, N = design.n, design.N
    k = min(candidates.folds, n // 2)
    if k < 2:
        raise ConfigError(f"selection needs n >= 4 labeled points, got n={n}")
    folds = _fold_blocks(n, k, (seed, FOLD_SHUFFLE))
    cap = min(N, candidates.unlabeled_cap_factor * n)
    if cap < N:
        sub_idx = substream(seed, UNLABELED_SUBSAMPLE).choice(N, size=cap, replace=False)
    else:
        sub_idx = np.arange(N)
    m_l, y = design.labeled.scores, design.labeled.outcomes
    m_sub = design.unlabeled.scores[sub_idx]

    criteria = {}
    best_name = None
    best_val = np.inf
    for tag in candidates.methods:
        if tag.name in criteria:  # duplicate candidates: first occurrence wins
            continue
        total = 0.0
        for fold in folds:
            mask = np.ones(n, dtype=bool)
            mask[fold] = False
            adjuster = _fit_adjuster(tag.name, m_l[mask], y[mask])
            a_eval = np.asarray(adjuster(m_l[fold]), dtype=np.float64)
            a_unl = np.asarray(adjuster(m_sub), dtype=np.float64)
            rho_f = len(fold) / (len(fold) + cap)
            total += _fold_variance(a_eval, y[fold], a_unl, rho_f)
        criteria[tag.name] = total / k
        if criteria[tag.name] < best_val:
            best_val = criteria[tag.name]
            best_name = tag.name

    winner = next(t for t in candidates.methods if t.name == best_name)
    report = estimate(design, winner, alpha=alpha, seed=seed)
    report.method = "auto-cal"
    report.diagnostics = dict(report.diagnostics)
    report.diagnostics.update(
        {
            "selected": winner.name,
            "cv_criteria": {name: float(v) for name, v in criteria.items()},
            "cv_folds": int(k),
            "cv_unlabeled_subsample": int(cap),
        }
    )
    return winner, report


def ols_trainer(covariates: np.ndarray, outcomes: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """Built-in trainer: least squares of outcomes on covariates with intercept."""
    x = np.asarray(covariates, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    y = np.asarray(outcomes, dtype=np.float64)
    coef, *_ = np.linalg.lstsq(np.column_stack([np.ones(len(x)), x]), y, rcond=None)

    def predict(xnew: np.ndarray) -> np.ndarray:
        xn = np.asarray(xnew, dtype=np.float64)
        if xn.ndim == 1:
            xn = xn.reshape(-1, 1)
        return coef[0] + xn @ coef[1:]

    return predict


def crossfit_calibrated(
    labeled_covariates,
    labeled_outcomes,
    unlabeled_covariates,
    trainer: TrainerContract,
    calibration_method: Union[str, MethodTag] = "iso-cal",
    k: int = 5,
    seed: int = 0,
    alpha: float = 0.05,
) -> EstimateReport:
    """Cross-fitted calibrated estimate when the score model is trained in-house.

    For each fold, the trainer is fit on the other folds and produces
    out-of-fold scores for the held-out labeled rows and scores for every
    unlabeled row. One calibrator is then fit on the pooled out-of-fold
    (score, outcome) pairs. Labeled rows are calibrated through their own
    out-of-fold score; unlabeled predictions average the calibrated scores
    over the K fold models, which makes them invariant to fold relabeling.
    """
    x_l = np.asarray(labeled_covariates, dtype=np.float64)
    if x_l.ndim == 1:
        x_l = x_l.reshape(-1, 1)
    y = np.asarray(labeled_outcomes, dtype=np.float64)
    x_u = np.asarray(unlabeled_covariates, dtype=np.float64)
    if x_u.ndim == 1:
        x_u = x_u.reshape(-1, 1)
    n = len(y)
    if x_l.shape[0] != n:
        raise DataError(f"labeled covariates have {x_l.shape[0]} rows, outcomes have {n}")
    if k < 2:
        raise ConfigError(f"cross-fitting needs k >= 2 folds, got {k}")
    if k > n:
        raise ConfigError(f"cannot split n={n} labeled points into k={k} folds")
    tag = MethodTag.parse(calibration_method)
    if tag.name not in _SELECTABLE:
        raise ConfigError(
            f"{tag.name!r} cannot be used as a cross-fit calibration; choose from {', '.join(_SELECTABLE)}"
        )

    folds = _fold_blocks(n, k, (seed, CROSSFIT_SHUFFLE))
    oof = np.empty(n)
    unl_by_fold = np.empty((k, len(x_u)))
    for j, fold in enumerate(folds):
        mask = np.ones(n, dtype=bool)
        mask[fold] = False
        try:
            model = trainer(x_l[mask], y[mask])
            oof[fold] = np.asarray(model(x_l[fold]), dtype=np.float64).reshape(-1)
            unl_by_fold[j] = np.asarray(model(x_u), dtype=np.float64).reshape(-1)
        except Exception as exc:
            raise DataError(f"trainer failed on fold {j}: {exc}") from exc
    if not (np.isfinite(oof).all() and np.isfinite(unl_by_fold).all()):
        raise DataError("trainer produced non-finite scores")

    adjuster = _fit_adjuster(tag.name, oof, y)
    pred_l = np.asarray(adjuster(oof), dtype=np.float64)
    pred_u = np.mean(
        [np.asarray(adjuster(unl_by_fold[j]), dtype=np.float64) for j in range(k)], axis=0
    )

    design = design_from_arrays(oof, y, unl_by_fold.mean(axis=0))
    rho = design.rho
    plugin = float(rho * pred_l.mean() + (1.0 - rho) * pred_u.mean())
    residual_mean = float((y - pred_l).mean())
    psi = plugin + residual_mean
    report = _influence_report(
        design,
        pred_l,
        pred_u,
        psi,
        f"crossfit-{tag.name}",
        alpha,
        {
            "folds": int(k),
            "calibration": tag.name,
            "plugin_estimate": plugin,
            "residual_mean": residual_mean,
        },
    )
    return report
