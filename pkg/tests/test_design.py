import numpy as np
import pytest

from ssmean import (
    DataError,
    DimensionError,
    EstimateReport,
    LabeledSample,
    TwoSampleDesign,
    UnlabeledSample,
    design_from_arrays,
    pooled_mean,
    validate_design,
)


def test_pooled_mean_constant():
    d = design_from_arrays([0.0, 0.0], [1.0, 1.0], [0.0])
    assert pooled_mean(d, [1.0, 1.0], [1.0]) == 1.0


def test_pooled_mean_direct_value():
    d = design_from_arrays([0.0, 0.0], [0.0, 2.0], [0.0] * 4)
    assert pooled_mean(d, [0.0, 2.0], [4.0, 4.0, 4.0, 4.0]) == pytest.approx(3.0, abs=1e-15)


def test_pooled_mean_half_weight():
    d = design_from_arrays([0.0], [5.0], [0.0])
    assert pooled_mean(d, [5.0], [0.0]) == pytest.approx(2.5, abs=1e-15)


def test_pooled_mean_equals_concatenated_mean():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = rng.integers(1, 30)
        N = rng.integers(1, 50)
        fl = rng.normal(scale=10, size=n)
        fu = rng.normal(scale=10, size=N)
        d = design_from_arrays(np.zeros(n), np.zeros(n), np.zeros(N))
        got = pooled_mean(d, fl, fu)
        want = np.mean(np.concatenate([fl, fu]))
        assert got == pytest.approx(want, rel=1e-13, abs=1e-13)


def test_pooled_mean_errors():
    d = design_from_arrays([0.0, 0.0], [1.0, 1.0], [0.0])
    with pytest.raises(DimensionError):
        pooled_mean(d, [1.0], [1.0])
    with pytest.raises(DataError):
        pooled_mean(d, [1.0, np.nan], [1.0])


def test_rho_from_sizes():
    d = design_from_arrays([1.0, 2.0, 3.0], [0.0, 0.0, 0.0], np.zeros(9))
    assert d.rho == 0.25
    assert d.m_total == 12


def test_rho_permutation_invariant():
    rng = np.random.default_rng(1)
    s = rng.normal(size=7)
    y = rng.normal(size=7)
    u = rng.normal(size=5)
    d1 = design_from_arrays(s, y, u)
    perm = rng.permutation(7)
    d2 = design_from_arrays(s[perm], y[perm], u)
    assert d1.rho == d2.rho


def test_validate_design_idempotent():
    d = design_from_arrays([1.0, 2.0], [0.0, 1.0], [3.0])
    d2 = validate_design(d.labeled, d.unlabeled)
    assert np.array_equal(d.labeled.scores, d2.labeled.scores)
    assert np.array_equal(d.labeled.outcomes, d2.labeled.outcomes)
    assert np.array_equal(d.unlabeled.scores, d2.unlabeled.scores)
    assert d.rho == d2.rho


def test_empty_sample_rejected():
    with pytest.raises(DataError):
        LabeledSample(np.array([]), np.array([]))
    with pytest.raises(DataError):
        UnlabeledSample(np.array([]))


def test_nonfinite_rejected_with_index():
    with pytest.raises(DataError, match="index 1"):
        LabeledSample([1.0, 2.0], [0.0, np.nan])
    with pytest.raises(DataError, match="index 0"):
        UnlabeledSample([np.inf, 1.0])


def test_length_mismatch():
    with pytest.raises(DimensionError):
        LabeledSample([1.0, 2.0], [1.0])


def test_covariate_dim_mismatch():
    lab = LabeledSample([1.0, 2.0], [0.0, 1.0], [[1.0, 2.0], [3.0, 4.0]])
    unl = UnlabeledSample([1.0], [[1.0]])
    with pytest.raises(DimensionError):
        TwoSampleDesign(lab, unl)


def test_covariate_row_count_must_match():
    with pytest.raises(DimensionError):
        LabeledSample([1.0, 2.0], [0.0, 1.0], [[1.0]])


def test_arrays_are_readonly():
    d = design_from_arrays([1.0, 2.0], [0.0, 1.0], [3.0])
    with pytest.raises(ValueError):
        d.labeled.scores[0] = 9.0


def test_report_round_trip():
    rep = EstimateReport(1.0, 0.5, 0.02, 1.98, 0.05, "aipw", 10, 20, {"k": 1.0})
    back = EstimateReport.from_dict(rep.to_dict())
    assert back == rep
