"""Synthetic study harness and the two-arm average-treatment-effect wrapper.

The data-generating process draws a latent standard normal S, a binary
outcome with success probability expit(5 S), and a prediction score that is
either the true success probability (well calibrated) or a clipped,
nonlinearly distorted version of it (miscalibrated). The true target mean is
exactly 0.5 by symmetry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.special import expit

from ._rng import SIM_DRAW, derive_seed, standard_normal, substream
from .design import EstimateReport, TwoSampleDesign, design_from_arrays
from .estimators import MethodTag, estimate
from .exceptions import ConfigError, DataError
from .inference import wald_interval

__all__ = [
    "DgpSpec",
    "McSummary",
    "TRUE_MEAN",
    "true_regression",
    "score_curve",
    "draw_dataset",
    "run_grid",
    "summaries_to_csv",
    "ate_two_arm",
]

TRUE_MEAN = 0.5

SCORE_CLIP = (0.01, 0.99)


@dataclass(frozen=True)
class DgpSpec:
    """One cell of the synthetic study: n labeled, ratio*n unlabeled points."""

    n: int
    ratio: int
    seed: int
    miscalibrated: bool = True

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"need n >= 2, got {self.n}")
        if self.ratio < 1:
            raise ConfigError(f"need ratio >= 1, got {self.ratio}")


def true_regression(s) -> np.ndarray:
    """Conditional success probability expit(5 s)."""
    return expit(5.0 * np.asarray(s, dtype=np.float64))


def true_logit(s) -> np.ndarray:
    """Logit of the true regression, via its numerically stable log form.

    log(mu) - log(1 - mu) with mu = expit(x) equals
    logaddexp(0, x) - logaddexp(0, -x); the naive form loses precision once
    mu saturates. Simplifies to 5 s identically (checked by tests).
    """
    x = 5.0 * np.asarray(s, dtype=np.float64)
    return np.logaddexp(0.0, x) - np.logaddexp(0.0, -x)


def score_curve(s, miscalibrated: bool = True) -> np.ndarray:
    """Prediction score as a function of the latent variable.

    The miscalibrated variant distorts the true probability through a cubic
    map on its logit scale, then rescales and clips.
    """
    s = np.asarray(s, dtype=np.float64)
    if not miscalibrated:
        return true_regression(s)
    z = true_logit(s)
    raw = -0.15 + 0.75 * expit(0.8 * z + 0.1 * z**3 - 1.0)
    return np.clip(raw, SCORE_CLIP[0], SCORE_CLIP[1])


def draw_dataset(spec: DgpSpec) -> TwoSampleDesign:
    """Draw one labeled/unlabeled dataset; deterministic in the spec fields."""
    rng = substream(spec.seed, SIM_DRAW, spec.n, spec.ratio, int(spec.miscalibrated))
    s_lab = standard_normal(rng, spec.n)
    y = (rng.random(spec.n) < true_regression(s_lab)).astype(np.float64)
    s_unl = standard_normal(rng, spec.ratio * spec.n)
    return design_from_arrays(
        score_curve(s_lab, spec.miscalibrated), y, score_curve(s_unl, spec.miscalibrated)
    )


@dataclass
class McSummary:
    """Monte Carlo summary for one (method, n, ratio) cell."""

    method: str
    n: int
    ratio: int
    reps: int
    bias: float
    sd: float
    rmse: float
    coverage: float
    rel_eff_vs_ppi: float


def run_grid(
    ns: Sequence[int],
    ratios: Sequence[int],
    methods: Sequence[Union[str, MethodTag]],
    reps: int,
    alpha: float = 0.05,
    seed: int = 0,
    miscalibrated: bool = True,
    draw_fn=None,
) -> List[McSummary]:
    """Monte Carlo comparison over the (n, ratio) grid.

    Every method is evaluated on the same dataset within a replicate, so the
    comparison is paired; each replicate uses its own substream derived from
    (seed, n, ratio, rep). Relative efficiency is MSE of the ppi method over
    the method's MSE, with ppi evaluated on the same replicates whether or not
    it appears in the method list. draw_fn overrides the dataset draw (test
    hook).
    """
    if reps < 2:
        raise ConfigError(f"need reps >= 2, got {reps}")
    tags = [MethodTag.parse(m) for m in methods]
    if draw_fn is None:
        draw_fn = draw_dataset
    rows: List[McSummary] = []
    for n in ns:
        for ratio in ratios:
            names = [t.name for t in tags]
            est = {t.name: np.empty(reps) for t in tags}
            cov = {t.name: np.empty(reps, dtype=bool) for t in tags}
            ppi_est = np.empty(reps)
            for rep in range(reps):
                spec = DgpSpec(
                    n=n,
                    ratio=ratio,
                    seed=derive_seed(seed, SIM_DRAW, n, ratio, rep),
                    miscalibrated=miscalibrated,
                )
                design = draw_fn(spec)
                rep_seed = derive_seed(seed, SIM_DRAW, n, ratio, rep, 1)
                for tag in tags:
                    report = estimate(design, tag, alpha=alpha, seed=rep_seed)
                    est[tag.name][rep] = report.estimate
                    cov[tag.name][rep] = report.ci_lower <= TRUE_MEAN <= report.ci_upper
                if "ppi" in est:
                    ppi_est[rep] = est["ppi"][rep]
                else:
                    ppi_est[rep] = estimate(design, "ppi", alpha=alpha).estimate
            mse_ppi = float(np.mean((ppi_est - TRUE_MEAN) ** 2))
            for name in names:
                e = est[name]
                mse = float(np.mean((e - TRUE_MEAN) ** 2))
                if mse > 0:
                    rel = mse_ppi / mse
                elif mse_ppi > 0:
                    rel = math.inf
                else:
                    rel = math.nan
                rows.append(
                    McSummary(
                        method=name,
                        n=int(n),
                        ratio=int(ratio),
                        reps=int(reps),
                        bias=float(e.mean() - TRUE_MEAN),
                        sd=float(e.std(ddof=1)),
                        rmse=math.sqrt(mse),
                        coverage=float(np.mean(cov[name])),
                        rel_eff_vs_ppi=rel,
                    )
                )
    rows.sort(key=lambda r: (r.n, r.ratio, r.method))
    return rows


_CSV_HEADER = "method,n,ratio,reps,bias,sd,rmse,coverage,rel_eff_vs_ppi"


def summaries_to_csv(rows: Sequence[McSummary]) -> str:
    """Serialize Monte Carlo summaries; floats use shortest round-trip decimals."""
    lines = [_CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [
                    r.method,
                    repr(r.n),
                    repr(r.ratio),
                    repr(r.reps),
                    repr(r.bias),
                    repr(r.sd),
                    repr(r.rmse),
                    repr(r.coverage),
                    repr(r.rel_eff_vs_ppi),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def ate_two_arm(
    treated_outcomes,
    treated_scores,
    control_outcomes,
    control_scores,
    method: Union[str, MethodTag] = "aipw",
    alpha: float = 0.05,
    seed: int = 0,
) -> EstimateReport:
    """Difference of two arm-specific semisupervised means in a two-arm design.

    Each arm's mean is estimated from a design in which that arm is the
    labeled sample and the other arm contributes scores only, using that
    arm's own prediction model evaluated on all units:

    - treated_scores = (treated-model scores on treated units,
                        treated-model scores on control units)
    - control_scores = (control-model scores on control units,
                        control-model scores on treated units)

    The reported standard error combines the two arm-specific influence
    variances as independent contributions.
    """
    y1 = np.asarray(treated_outcomes, dtype=np.float64)
    y0 = np.asarray(control_outcomes, dtype=np.float64)
    if y1.size == 0 or y0.size == 0:
        raise DataError("both arms must be nonempty")
    m1_own, m1_other = treated_scores
    m0_own, m0_other = control_scores
    design1 = design_from_arrays(m1_own, y1, m1_other)
    design0 = design_from_arrays(m0_own, y0, m0_other)
    r1 = estimate(design1, method, alpha=alpha, seed=seed)
    r0 = estimate(design0, method, alpha=alpha, seed=seed)
    tau = r1.estimate - r0.estimate
    se = math.hypot(r1.std_error, r0.std_error)
    lo, hi = wald_interval(tau, se, alpha)
    tag = MethodTag.parse(method)
    return EstimateReport(
        estimate=tau,
        std_error=se,
        ci_lower=lo,
        ci_upper=hi,
        alpha=alpha,
        method=f"ate({tag.name})",
        n=len(y1),
        N=len(y0),
        diagnostics={"treated_mean": r1.to_dict(), "control_mean": r0.to_dict()},
    )
