"""Violation counting, coverage/independence statistics, loss and GoF metrics."""

import numpy as np
import pytest

from riskengine import (
    BacktestReport,
    ChristoffersenResult,
    GofResult,
    HitSequence,
    LossResult,
    christoffersen,
    empirical_density,
    hits,
    ks_test,
    pdf_rmse,
    quadratic_loss,
)
from riskengine.backtest import (
    VERDICT_INSUFFICIENT,
    VERDICT_NOT_REJECTED,
    VERDICT_REJECTED,
)
from riskengine.distributions import normal_cdf
from riskengine.errors import (
    DegenerateDataError,
    InsufficientDataError,
    ShapeError,
    ValidationError,
)

# violations cluster in this sequence: 6 hits in 20 days, two adjacent pairs
HAND_HITS = np.array(
    [0, 0, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 1], dtype=bool
)


def test_hits_inclusive_comparison():
    realized = np.array([-0.05, 0.01, -0.02])
    var_series = np.array([-0.03, -0.03, -0.02])
    seq = hits(realized, var_series, 0.05)
    np.testing.assert_array_equal(seq.hits, [True, False, True])
    assert seq.n == 3 and seq.x == 2
    assert seq.alpha == 0.05


def test_hits_shape_mismatch():
    with pytest.raises(ShapeError):
        hits(np.zeros(3), np.zeros(4), 0.05)


def test_hit_sequence_validation():
    with pytest.raises(ValidationError):
        HitSequence(hits=np.array([1, 0, 1]), alpha=0.05)  # ints, not bools
    with pytest.raises(ValidationError):
        HitSequence(hits=np.array([], dtype=bool), alpha=0.05)
    with pytest.raises(ValidationError):
        HitSequence(hits=np.array([True]), alpha=1.5)


def test_christoffersen_hand_oracle():
    seq = HitSequence(hits=HAND_HITS, alpha=0.05)
    res = christoffersen(seq)
    assert (res.n, res.x) == (20, 6)
    assert (res.n00, res.n01, res.n10, res.n11) == (10, 4, 3, 2)
    assert res.pi01 == pytest.approx(0.28571428571428571, rel=1e-14)
    assert res.pi11 == pytest.approx(0.4, rel=1e-14)
    assert res.pi2 == pytest.approx(0.31578947368421053, rel=1e-14)
    assert res.lr_uc == pytest.approx(12.950427443303568, rel=1e-12)
    assert res.lr_ind == pytest.approx(0.2172191331083554, rel=1e-11)
    assert res.lr_cc == pytest.approx(13.167646576411924, rel=1e-12)
    assert res.p_uc == pytest.approx(0.00031984845573575401, rel=1e-11)
    assert res.p_ind == pytest.approx(0.64116701771101375, rel=1e-11)
    assert res.p_cc == pytest.approx(0.0013825532775467742, rel=1e-11)
    assert res.verdict == VERDICT_REJECTED  # coverage badly violated


def test_christoffersen_exact_coverage_zero_statistic():
    h = np.zeros(40, dtype=bool)
    h[[10, 30]] = True  # 2 hits in 40 days at alpha = 0.05
    res = christoffersen(HitSequence(hits=h, alpha=0.05))
    assert res.lr_uc == 0.0
    assert res.p_uc == 1.0
    assert res.verdict == VERDICT_NOT_REJECTED


def test_christoffersen_no_hits():
    res = christoffersen(HitSequence(hits=np.zeros(30, dtype=bool), alpha=0.05))
    assert res.x == 0
    assert res.lr_uc == pytest.approx(3.077597663253032, rel=1e-12)
    assert res.p_uc == pytest.approx(0.079377691816641746, rel=1e-11)
    # degenerate transition table: no independence evidence at all
    assert res.pi01 == 0.0 and res.pi11 == 0.0
    assert res.lr_ind == 0.0
    assert res.p_ind == 1.0
    assert res.verdict == VERDICT_NOT_REJECTED


def test_christoffersen_all_hits():
    res = christoffersen(HitSequence(hits=np.ones(10, dtype=bool), alpha=0.05))
    assert res.lr_uc == pytest.approx(-2 * 10 * np.log(0.05), rel=1e-12)
    assert res.lr_ind == 0.0
    assert res.verdict == VERDICT_REJECTED


def test_christoffersen_needs_two_days():
    with pytest.raises(InsufficientDataError):
        christoffersen(HitSequence(hits=np.array([True]), alpha=0.05))


def test_christoffersen_df_and_level_knobs():
    seq = HitSequence(hits=HAND_HITS, alpha=0.05)
    base = christoffersen(seq)
    wide = christoffersen(seq, df_uc=2)
    assert wide.p_uc > base.p_uc  # heavier-tailed null
    relaxed = christoffersen(seq, reject_level=1e-6)
    assert relaxed.verdict == VERDICT_NOT_REJECTED


def test_christoffersen_matches_direct_formula_random():
    import math

    import scipy.stats

    rng = np.random.default_rng(17)
    for _ in range(20):
        a = float(rng.choice([0.01, 0.05]))
        h = rng.random(200) < a * rng.uniform(0.5, 2.0)
        if h.sum() == 0:
            h[5] = True
        seq = HitSequence(hits=h, alpha=a)
        res = christoffersen(seq)

        n, x = len(h), int(h.sum())
        pi = x / n

        def xl(c, v):
            return 0.0 if c == 0 else c * math.log(v)

        lr_uc = -2 * (xl(n - x, 1 - a) + xl(x, a) - xl(n - x, 1 - pi) - xl(x, pi))
        n00 = n01 = n10 = n11 = 0
        for i in range(1, n):
            if h[i - 1]:
                n11, n10 = n11 + h[i], n10 + (not h[i])
            else:
                n01, n00 = n01 + h[i], n00 + (not h[i])
        pi01 = n01 / (n00 + n01) if n00 + n01 else 0.0
        pi11 = n11 / (n10 + n11) if n10 + n11 else 0.0
        pi2 = (n01 + n11) / (n - 1)
        l0 = xl(n00 + n10, 1 - pi2) + xl(n01 + n11, pi2)
        l1 = xl(n00, 1 - pi01) + xl(n01, pi01) + xl(n10, 1 - pi11) + xl(n11, pi11)
        lr_ind = max(-2 * (l0 - l1), 0.0)

        assert res.lr_uc == pytest.approx(max(lr_uc, 0.0), abs=1e-9)
        assert res.lr_ind == pytest.approx(lr_ind, abs=1e-9)
        assert res.p_uc == pytest.approx(scipy.stats.chi2.sf(res.lr_uc, 1), rel=1e-9)
        assert res.p_cc == pytest.approx(scipy.stats.chi2.sf(res.lr_cc, 2), rel=1e-9)


def test_christoffersen_result_validates_lr_cc_sum():
    with pytest.raises(ValidationError):
        ChristoffersenResult(
            n=10, x=1, n00=8, n01=1, n10=1, n11=0,
            pi01=1 / 9, pi11=0.0, pi2=1 / 9,
            lr_uc=1.0, lr_ind=1.0, lr_cc=5.0,  # not the sum of the parts
            p_uc=0.3, p_ind=0.3, p_cc=0.1,
            verdict=VERDICT_NOT_REJECTED,
        )


def test_quadratic_loss_oracle():
    realized = np.array([-0.05, 0.01, -0.02, 0.0, -0.08])
    var_series = np.array([-0.03, -0.03, -0.02, -0.01, -0.04])
    res = quadratic_loss(realized, var_series)
    np.testing.assert_allclose(res.per_day, [1.0004, 0.0, 1.0, 0.0, 1.0016], rtol=1e-12)
    assert res.total == pytest.approx(0.6004, rel=1e-12)


def test_quadratic_loss_no_violations():
    res = quadratic_loss(np.array([0.01, 0.02]), np.array([-0.05, -0.05]))
    assert res.total == 0.0
    assert np.all(res.per_day == 0.0)


def test_loss_result_total_must_be_mean():
    with pytest.raises(ValidationError):
        LossResult(total=0.9, per_day=np.array([1.0, 1.0]))


def test_ks_single_point_oracle():
    res = ks_test(np.array([0.0]), normal_cdf)
    assert res.ks_stat == pytest.approx(0.5, rel=1e-14)
    assert res.ks_pvalue == pytest.approx(0.96394524366487509, rel=1e-12)


def test_ks_four_point_oracle():
    res = ks_test(np.array([-1.5, -0.2, 0.3, 1.1]), normal_cdf)
    assert res.ks_stat == pytest.approx(0.18319279873114193, rel=1e-13)
    assert res.ks_pvalue == pytest.approx(0.99930204923441167, rel=1e-12)


def test_ks_matches_scipy_asymptotic():
    import scipy.stats

    rng = np.random.default_rng(23)
    for n in (50, 400, 1000):
        s = rng.normal(0, 1, n)
        ours = ks_test(s, normal_cdf)
        ref = scipy.stats.kstest(s, "norm", mode="asymp")
        assert ours.ks_stat == pytest.approx(ref.statistic, rel=1e-12)
        assert ours.ks_pvalue == pytest.approx(ref.pvalue, rel=1e-9)


def test_ks_rejects_broken_cdf():
    s = np.linspace(-1, 1, 20)
    with pytest.raises(ValidationError):
        ks_test(s, lambda x: np.full_like(np.asarray(x, dtype=float), 2.0))
    with pytest.raises(ValidationError):
        ks_test(s, lambda x: -np.asarray(x, dtype=float))  # decreasing


def test_empirical_density_integrates_to_one():
    rng = np.random.default_rng(3)
    x = rng.normal(0, 1, 5000)
    centers, density = empirical_density(x)
    width = centers[1] - centers[0]
    assert float(np.sum(density) * width) == pytest.approx(1.0, rel=1e-9)
    assert len(density) == len(centers)


def test_empirical_density_explicit_grid():
    rng = np.random.default_rng(4)
    x = rng.normal(0, 1, 2000)
    grid = np.linspace(-3, 3, 25)
    centers, density = empirical_density(x, grid)
    np.testing.assert_allclose(centers, grid, rtol=1e-12)
    assert np.all(density >= 0)
    with pytest.raises(ValidationError):
        empirical_density(x, np.array([0.0, 1.0, 3.0]))  # uneven spacing


def test_empirical_density_gates():
    with pytest.raises(InsufficientDataError):
        empirical_density(np.arange(7.0))
    with pytest.raises(DegenerateDataError):
        empirical_density(np.full(100, 2.0))


def test_pdf_rmse_zero_for_perfect_model():
    rng = np.random.default_rng(5)
    x = rng.normal(0, 1, 4000)
    centers, density = empirical_density(x)

    def perfect(t):
        return np.interp(t, centers, density)

    assert pdf_rmse(perfect, x) == pytest.approx(0.0, abs=1e-12)


def test_pdf_rmse_orders_models_sensibly():
    rng = np.random.default_rng(6)
    x = rng.normal(0, 1, 20000)

    def right(t):
        return np.exp(-np.asarray(t) ** 2 / 2) / np.sqrt(2 * np.pi)

    def wrong(t):
        return np.exp(-np.asarray(t) ** 2 / 8) / np.sqrt(8 * np.pi)

    assert pdf_rmse(right, x) < pdf_rmse(wrong, x)


def test_gof_result_validation():
    with pytest.raises(ValidationError):
        GofResult(ks_stat=1.5, ks_pvalue=0.3)
    with pytest.raises(ValidationError):
        GofResult(ks_stat=0.2, ks_pvalue=-0.1)
    assert GofResult(ks_stat=0.2, ks_pvalue=0.5, rmse=None).rmse is None


def test_backtest_report_csv_row():
    seq = HitSequence(hits=HAND_HITS, alpha=0.05)
    res = christoffersen(seq)
    loss = quadratic_loss(np.zeros(20) - HAND_HITS * 0.02, np.full(20, -0.01))
    rep = BacktestReport(
        model_tag="gmm3", ticker="AAA", alpha=0.05,
        hit_seq=seq, christoffersen=res, loss=loss,
    )
    fields = rep.to_csv_row()
    assert fields[0] == "gmm3"
    assert fields[1] == "AAA"
    assert int(fields[3]) == 20 and int(fields[4]) == 6
    assert float(fields[5]) == res.lr_uc
    assert fields[12] == VERDICT_REJECTED
    assert len(fields) == len(BacktestReport.CSV_HEADER.split(","))


def test_backtest_report_without_statistics():
    seq = HitSequence(hits=np.array([True, False]), alpha=0.05)
    loss = quadratic_loss(np.array([-0.02, 0.0]), np.array([-0.01, -0.01]))
    rep = BacktestReport(
        model_tag="hs", ticker="B", alpha=0.05,
        hit_seq=seq, christoffersen=None, loss=loss, note="too short",
    )
    fields = rep.to_csv_row()
    assert fields[5] == "" and fields[10] == ""
    assert rep.verdict == VERDICT_INSUFFICIENT
