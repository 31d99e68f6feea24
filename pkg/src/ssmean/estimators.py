"""The semisupervised mean estimator family and every named method.

All estimators are members of one family indexed by an adjustment function f:

    psi_hat(f) = rho * mean_L{f} + (1 - rho) * mean_U{f} + mean_L{Y - f},

which is unbiased for E[Y] for any fixed f. The named methods differ only in
their choice of f: zero (labeled-only), the raw score (aipw), the raw score
implicitly rescaled by 1/(1-rho) (ppi), an empirically rescaled score
(ppi-pp / aipw-em), or a calibrated score (the *-cal methods).

Standard errors follow the influence-function plug-in: the adjustment values
are recentered so their pooled weighted mean equals the point estimate (the
recentering that appears in the asymptotic theory; exact intercept
calibration for the raw-score methods, a no-op for mean-calibrated ones),
then

    D_L = a - psi + (Y - a)/rho,   D_U = a - psi,
    SE^2 = (sum D_L^2 + sum D_U^2) / (n + N)^2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np

from . import calibrators as cal
from .design import EstimateReport, TwoSampleDesign
from .exceptions import ConfigError, DataError, DimensionError, MisuseError
from .inference import influence_values, wald_interval, wald_se

__all__ = [
    "MethodTag",
    "ScoredDesign",
    "METHOD_NAMES",
    "aipw_general",
    "labeled_only",
    "ppi",
    "aipw_raw",
    "eem_lambda",
    "eem_estimate",
    "calibrated_plugin",
    "venn_abers_estimate",
    "ppi_as_plugin_check",
    "estimate",
]

METHOD_NAMES = (
    "labeled-only",
    "ppi",
    "aipw",
    "ppi-pp",
    "aipw-em",
    "linear-cal",
    "linear-cov-cal",
    "platt-cal",
    "iso-cal",
    "hist-cal",
    "venn-abers",
    "auto-cal",
)

# families whose fit makes the labeled residual mean exactly zero, so the
# pooled plug-in coincides with its residual-corrected form
MEAN_CALIBRATED_TOL = 1e-10


@dataclass(frozen=True)
class MethodTag:
    """A method name plus free-form parameters; names are the stable contract."""

    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in METHOD_NAMES:
            raise ConfigError(
                f"unknown method {self.name!r}; valid methods: {', '.join(METHOD_NAMES)}"
            )

    @classmethod
    def parse(cls, method: Union[str, "MethodTag"]) -> "MethodTag":
        if isinstance(method, MethodTag):
            return method
        return cls(name=str(method))

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ScoredDesign:
    """A design together with adjustment values f evaluated on both samples."""

    design: TwoSampleDesign
    f_labeled: np.ndarray
    f_unlabeled: np.ndarray
    provenance: str = "raw"

    def __post_init__(self):
        fl = np.asarray(self.f_labeled, dtype=np.float64)
        fu = np.asarray(self.f_unlabeled, dtype=np.float64)
        if fl.shape != (self.design.n,):
            raise DimensionError(f"f_labeled has shape {fl.shape}, expected ({self.design.n},)")
        if fu.shape != (self.design.N,):
            raise DimensionError(f"f_unlabeled has shape {fu.shape}, expected ({self.design.N},)")
        if not (np.isfinite(fl).all() and np.isfinite(fu).all()):
            raise DataError("adjustment values must be finite")
        object.__setattr__(self, "f_labeled", fl)
        object.__setattr__(self, "f_unlabeled", fu)


def aipw_general(scored: ScoredDesign) -> float:
    """rho * mean_L{f} + (1-rho) * mean_U{f} + mean_L{Y - f}."""
    d = scored.design
    rho = d.rho
    return float(
        rho * scored.f_labeled.mean()
        + (1.0 - rho) * scored.f_unlabeled.mean()
        + (d.labeled.outcomes - scored.f_labeled).mean()
    )


def _influence_report(
    design: TwoSampleDesign,
    adj_labeled: np.ndarray,
    adj_unlabeled: np.ndarray,
    psi: float,
    method: str,
    alpha: float,
    diagnostics: dict,
) -> EstimateReport:
    """Assemble a report, recentering the adjustment before the influence step."""
    rho = design.rho
    pooled = rho * adj_labeled.mean() + (1.0 - rho) * adj_unlabeled.mean()
    shift = psi - pooled
    pair = influence_values(design, adj_labeled + shift, adj_unlabeled + shift, psi)
    se = wald_se(pair, design)
    lo, hi = wald_interval(psi, se, alpha)
    return EstimateReport(
        estimate=psi,
        std_error=se,
        ci_lower=lo,
        ci_upper=hi,
        alpha=alpha,
        method=method,
        n=design.n,
        N=design.N,
        diagnostics=diagnostics,
    )


def labeled_only(design: TwoSampleDesign, alpha: float = 0.05) -> EstimateReport:
    """Mean of the labeled outcomes, ignoring scores and unlabeled data."""
    y = design.labeled.outcomes
    if len(y) < 2:
        raise DataError("labeled-only standard error needs n >= 2")
    est = float(y.mean())
    se = float(y.std(ddof=1) / np.sqrt(len(y)))
    lo, hi = wald_interval(est, se, alpha)
    return EstimateReport(est, se, lo, hi, alpha, "labeled-only", design.n, design.N, {})


def ppi(design: TwoSampleDesign, alpha: float = 0.05) -> EstimateReport:
    """Unlabeled score mean plus the labeled residual correction.

    Equals the family member with f = m / (1 - rho); the standard error uses
    that implicit scaling.
    """
    m_l, m_u = design.labeled.scores, design.unlabeled.scores
    psi = float(m_u.mean() + (design.labeled.outcomes - m_l).mean())
    scale = 1.0 / (1.0 - design.rho)
    return _influence_report(design, m_l * scale, m_u * scale, psi, "ppi", alpha, {})


def aipw_raw(design: TwoSampleDesign, alpha: float = 0.05) -> EstimateReport:
    """The family member with f equal to the raw score."""
    m_l, m_u = design.labeled.scores, design.unlabeled.scores
    psi = aipw_general(ScoredDesign(design, m_l, m_u, "raw"))
    return _influence_report(design, m_l, m_u, psi, "aipw", alpha, {})


def _eem_lambda_full(design: TwoSampleDesign, clip: Optional[Tuple[float, float]]):
    m_l, m_u = design.labeled.scores, design.unlabeled.scores
    y = design.labeled.outcomes
    rho = design.rho
    num = float(np.mean((y - y.mean()) * (m_l - m_l.mean())))
    var_l = float(np.mean((m_l - m_l.mean()) ** 2))
    var_u = float(np.mean((m_u - m_u.mean()) ** 2))
    den = (1.0 - rho) * var_l + rho * var_u
    scale = max(1.0, float(np.mean(m_l**2)) + float(np.mean(m_u**2)))
    degenerate = den <= 1e-12 * scale
    lam_raw = 0.0 if degenerate else num / den
    lam = lam_raw
    clip_active = False
    if clip is not None and not degenerate:
        lo, hi = clip
        lam = min(max(lam_raw, lo), hi)
        clip_active = lam != lam_raw
    return lam, lam_raw, degenerate, clip_active


def eem_lambda(design: TwoSampleDesign, clip: Optional[Tuple[float, float]] = None) -> float:
    """Empirical variance-minimizing scaling of the score over {lambda * m}.

    lambda_hat = Cov_L(Y, m) / [(1-rho) Var_L(m) + rho Var_U(m)], clamped to
    the clip interval when one is given. Returns 0 when the score has no
    variance in either sample (the coefficient is unidentified).
    """
    lam, _, _, _ = _eem_lambda_full(design, clip)
    return lam


def eem_estimate(
    design: TwoSampleDesign,
    clip: Optional[Tuple[float, float]] = None,
    alpha: float = 0.05,
    method_name: str = "aipw-em",
) -> EstimateReport:
    """Family member with f = lambda_hat * m.

    Satisfies psi = mean_L(Y) + (1-rho) * lambda_hat * (mean_U(m) - mean_L(m))
    exactly.
    """
    lam, lam_raw, degenerate, clip_active = _eem_lambda_full(design, clip)
    m_l, m_u = design.labeled.scores, design.unlabeled.scores
    f_l, f_u = lam * m_l, lam * m_u
    psi = aipw_general(ScoredDesign(design, f_l, f_u, f"scaled(lambda={lam!r})"))
    diagnostics = {
        "lambda": lam,
        "lambda_unclipped": lam_raw,
        "clip": None if clip is None else list(clip),
        "clip_active": clip_active,
    }
    if degenerate:
        diagnostics["degenerate_score"] = True
    return _influence_report(design, f_l, f_u, psi, method_name, alpha, diagnostics)


def ppi_plusplus(design: TwoSampleDesign, alpha: float = 0.05) -> EstimateReport:
    """Clipped empirical efficiency maximization: lambda in [0, 1/(1-rho)]."""
    return eem_estimate(design, clip=(0.0, 1.0 / (1.0 - design.rho)), alpha=alpha, method_name="ppi-pp")


def _calibrated_predictions(design: TwoSampleDesign, calibrator):
    if isinstance(calibrator, cal.LinearCovCalibrator) and len(calibrator.cov_coefs) > 0:
        if design.labeled.covariates is None or design.unlabeled.covariates is None:
            raise DimensionError("covariate-adjusted calibration needs covariates in both samples")
        pred_l = cal.predict(calibrator, design.labeled.scores, design.labeled.covariates)
        pred_u = cal.predict(calibrator, design.unlabeled.scores, design.unlabeled.covariates)
    else:
        pred_l = cal.predict(calibrator, design.labeled.scores)
        pred_u = cal.predict(calibrator, design.unlabeled.scores)
    return pred_l, pred_u


def calibrated_plugin(
    design: TwoSampleDesign,
    calibrator,
    alpha: float = 0.05,
    method_name: str = "calibrated",
) -> EstimateReport:
    """Pooled mean of calibrated predictions, in residual-corrected form.

    For mean-calibrated fits (isotonic, least-squares linear with inactive
    clipping, histogram, covariate-adjusted linear) the labeled residual mean
    is zero, so the pooled plug-in mean and its residual-corrected form
    coincide to machine precision. When clipping is active the two differ;
    both values are reported in diagnostics and the residual-corrected form is
    used as the estimate, since it retains the family's unbiasedness.
    """
    fp = getattr(calibrator, "fitted_on", None)
    if fp is not None and not fp.matches(design.labeled.scores, design.labeled.outcomes):
        raise MisuseError("calibrator was not fit on this design's labeled sample")
    pred_l, pred_u = _calibrated_predictions(design, calibrator)
    y = design.labeled.outcomes
    rho = design.rho
    plugin = float(rho * pred_l.mean() + (1.0 - rho) * pred_u.mean())
    residual_mean = float((y - pred_l).mean())
    psi = aipw_general(ScoredDesign(design, pred_l, pred_u, f"calibrated({method_name})"))
    raw_mse = float(np.mean((y - design.labeled.scores) ** 2))
    cal_mse = float(np.mean((y - pred_l) ** 2))
    diagnostics = {
        "plugin_estimate": plugin,
        "aipw_estimate": psi,
        "residual_mean": residual_mean,
        "calibration_mse_before": raw_mse,
        "calibration_mse_after": cal_mse,
    }
    if isinstance(calibrator, cal.AffineCalibrator):
        diagnostics["slope"] = calibrator.slope
        diagnostics["intercept"] = calibrator.intercept
    if isinstance(calibrator, cal.BinnedCalibrator):
        diagnostics["empty_bins"] = calibrator.empty_bins
    if getattr(calibrator, "clip_range", None) is not None:
        diagnostics["clip_range"] = list(calibrator.clip_range)
        diagnostics["clip_active"] = abs(residual_mean) > MEAN_CALIBRATED_TOL * max(1.0, float(np.mean(np.abs(y))))
    return _influence_report(design, pred_l, pred_u, psi, method_name, alpha, diagnostics)


class PluginCheck(NamedTuple):
    ppi: float
    ppi_plugin: float
    aipw: float
    aipw_plugin: float


def ppi_as_plugin_check(design: TwoSampleDesign) -> PluginCheck:
    """Both raw-score estimators recomputed through intercept-only calibration.

    The intercept fit a_hat = mean_L(Y - m) makes m + a_hat mean-calibrated;
    its unlabeled mean reproduces the ppi estimate and its pooled mean
    reproduces the aipw estimate. Used as a test oracle.
    """
    m_l, m_u = design.labeled.scores, design.unlabeled.scores
    y = design.labeled.outcomes
    rho = design.rho
    a_hat = float((y - m_l).mean())
    ppi_val = float(m_u.mean() + (y - m_l).mean())
    aipw_val = aipw_general(ScoredDesign(design, m_l, m_u, "raw"))
    plugin_u = float((m_u + a_hat).mean())
    plugin_pooled = float(rho * (m_l + a_hat).mean() + (1.0 - rho) * (m_u + a_hat).mean())
    return PluginCheck(ppi=ppi_val, ppi_plugin=plugin_u, aipw=aipw_val, aipw_plugin=plugin_pooled)


def venn_abers_estimate(design: TwoSampleDesign, alpha: float = 0.05) -> EstimateReport:
    """Interval-calibrated predictions shrunk toward the raw-score aipw estimate.

    Outcomes outside [0, 1] are affinely rescaled for the calibration step and
    the predictions mapped back; the map is recorded in diagnostics.
    """
    y = design.labeled.outcomes
    if y.min() >= 0.0 and y.max() <= 1.0:
        lo, span = 0.0, 1.0
    else:
        lo = float(y.min())
        span = float(y.max()) - lo if y.max() > y.min() else 1.0
    y_scaled = (y - lo) / span
    m_l, m_u = design.labeled.scores, design.unlabeled.scores
    # the anchor must live on the calibration (rescaled) outcome scale
    target_scaled = (aipw_general(ScoredDesign(design, m_l, m_u, "raw")) - lo) / span
    pred_l = lo + span * cal.fit_venn_abers(m_l, y_scaled, m_l, target_scaled)
    pred_u = lo + span * cal.fit_venn_abers(m_l, y_scaled, m_u, target_scaled)
    psi = aipw_general(ScoredDesign(design, pred_l, pred_u, "calibrated(venn-abers)"))
    diagnostics = {
        "plugin_estimate": float(design.rho * pred_l.mean() + (1 - design.rho) * pred_u.mean()),
        "aipw_estimate": psi,
        "residual_mean": float((y - pred_l).mean()),
        "shrink_target": lo + span * target_scaled,
        "outcome_rescale": [lo, span],
    }
    return _influence_report(design, pred_l, pred_u, psi, "venn-abers", alpha, diagnostics)


def _binary_outcomes(design: TwoSampleDesign) -> bool:
    y = design.labeled.outcomes
    return bool(np.all((y == 0.0) | (y == 1.0)))


def estimate(
    design: TwoSampleDesign,
    method: Union[str, MethodTag],
    alpha: float = 0.05,
    seed: int = 0,
) -> EstimateReport:
    """Run one named method on a design.

    The seed only matters for auto-cal (fold shuffling and the unlabeled
    subsample); every other method is deterministic in the data.
    """
    tag = MethodTag.parse(method)
    if not (0.0 < alpha < 1.0):
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    name, params = tag.name, tag.params
    m_l = design.labeled.scores
    y = design.labeled.outcomes
    if name == "labeled-only":
        return labeled_only(design, alpha)
    if name == "ppi":
        return ppi(design, alpha)
    if name == "aipw":
        return aipw_raw(design, alpha)
    if name == "ppi-pp":
        return ppi_plusplus(design, alpha)
    if name == "aipw-em":
        return eem_estimate(design, clip=None, alpha=alpha, method_name="aipw-em")
    if name == "linear-cal":
        calib = cal.fit_linear(m_l, y, clip=params.get("clip", True))
        return calibrated_plugin(design, calib, alpha, "linear-cal")
    if name == "linear-cov-cal":
        if design.labeled.covariates is None:
            raise DimensionError("linear-cov-cal needs labeled covariates")
        calib = cal.fit_linear_cov(m_l, y, design.labeled.covariates, clip=params.get("clip", True))
        return calibrated_plugin(design, calib, alpha, "linear-cov-cal")
    if name == "platt-cal":
        if not _binary_outcomes(design):
            raise DataError("platt-cal requires binary outcomes in {0, 1}")
        calib = cal.fit_platt(m_l, y, logit_eps=params.get("logit_eps", cal.DEFAULT_LOGIT_EPS))
        return calibrated_plugin(design, calib, alpha, "platt-cal")
    if name == "iso-cal":
        calib = cal.fit_isotonic(m_l, y)
        return calibrated_plugin(design, calib, alpha, "iso-cal")
    if name == "hist-cal":
        edges = params.get("edges")
        if edges is None and "bins" in params:
            nbins = int(params["bins"])
            if nbins < 1:
                raise ConfigError("hist-cal needs at least one bin")
            lo, hi = float(m_l.min()), float(m_l.max())
            edges = np.linspace(lo, hi, nbins + 1) if hi > lo else np.array([lo, lo + 1.0])
        calib = cal.fit_histogram(m_l, y, edges=edges)
        return calibrated_plugin(design, calib, alpha, "hist-cal")
    if name == "venn-abers":
        return venn_abers_estimate(design, alpha)
    if name == "auto-cal":
        from .selection import CandidateSet, autocal_select

        candidates = CandidateSet(
            methods=params.get("candidates", ["aipw", "linear-cal", "iso-cal", "hist-cal"]),
            folds=params.get("folds", 20),
            unlabeled_cap_factor=params.get("unlabeled_cap_factor", 10),
        )
        _, report = autocal_select(design, candidates, seed=seed, alpha=alpha)
        return report
    raise ConfigError(f"unknown method {name!r}")
