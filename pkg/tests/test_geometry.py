import math

import numpy as np
import pytest

from hetcoop import geometry, montecarlo
from hetcoop.geometry import (
    DistanceVector,
    UnsupportedCaseError,
    joint_ordered_pdf,
    macro_win_fast,
    macro_win_mass_coop,
    macro_win_prob_generic,
    macro_win_prob_pair_quartic,
    nearest_distance_pdf,
    sbs_win_prob_coop,
    sbs_win_prob_noncoop,
    serving_pdf_macro_coop,
    serving_pdf_macro_noncoop,
    serving_pdf_small_coop,
    serving_pdf_small_noncoop,
)
from hetcoop.quadrature import integrate_ordered_2d, integrate_semi_infinite
from conftest import make_scenario
from util import chi2_binned_1d, chi2_binned_2d, sample_nearest_sbs_distances


def win_scale(s):
    """Length scale of the macro-vs-cluster win transition."""
    return s.power_ratio ** (1.0 / s.alpha) / math.sqrt(math.pi * s.lambda_s)


# ---------------------------------------------------------------------------
# Unconditional laws
# ---------------------------------------------------------------------------


def test_nearest_pdf_vanishes_at_origin(fig2_scenario):
    assert nearest_distance_pdf(fig2_scenario.lambda_m, 0.0) == 0.0


def test_nearest_pdf_mode_matches_grid_search(fig2_scenario):
    lam = fig2_scenario.lambda_m
    analytic_mode = 1.0 / math.sqrt(2.0 * math.pi * lam)
    grid = np.linspace(1.0, 2000.0, 400_000)
    brute_mode = grid[int(np.argmax(nearest_distance_pdf(lam, grid)))]
    assert brute_mode == pytest.approx(analytic_mode, rel=1e-4)


def test_nearest_pdf_normalizes(fig2_scenario):
    for lam in (fig2_scenario.lambda_m, fig2_scenario.lambda_s):
        val = integrate_semi_infinite(
            lambda r: nearest_distance_pdf(lam, r), 0.0, scale=1.0 / math.sqrt(math.pi * lam)
        )
        assert val == pytest.approx(1.0, rel=1e-7)


def test_joint_pdf_reduces_to_nearest_for_k1(fig2_scenario):
    lam = fig2_scenario.lambda_s
    for r in (10.0, 60.0, 200.0):
        assert joint_ordered_pdf(lam, [r]) == pytest.approx(
            float(nearest_distance_pdf(lam, r)), rel=1e-14
        )


def test_joint_pdf_normalizes_on_ordered_wedge(fig2_scenario):
    lam = fig2_scenario.lambda_s
    val = integrate_ordered_2d(
        lambda r1, r2: joint_ordered_pdf(lam, [r1, r2]),
        scale=1.0 / math.sqrt(math.pi * lam),
    )
    assert val == pytest.approx(1.0, rel=1e-5)


def test_unordered_input_is_rejected_not_sorted(fig2_scenario):
    with pytest.raises(ValueError):
        joint_ordered_pdf(fig2_scenario.lambda_s, [50.0, 20.0])
    with pytest.raises(ValueError):
        DistanceVector((30.0, 10.0))
    with pytest.raises(ValueError):
        DistanceVector((0.0, 10.0))
    with pytest.raises(ValueError):
        serving_pdf_small_coop(fig2_scenario, [80.0, 40.0])
    dv = DistanceVector((10.0, 30.0))
    assert dv.k == 2


def test_joint_pdf_matches_ppp_histogram(fig2_scenario):
    lam = fig2_scenario.lambda_s
    pairs = sample_nearest_sbs_distances(lam, radius=400.0, n_reps=100_000, k=2, seed=91)
    stat, crit = chi2_binned_2d(pairs, lambda r1, r2: joint_ordered_pdf(lam, [r1, r2]))
    assert stat < crit


# ---------------------------------------------------------------------------
# Non-cooperative conditional laws
# ---------------------------------------------------------------------------


def test_noncoop_conditional_pdfs_normalize():
    for s in (make_scenario(), make_scenario(ratio=10, p_s=2.0, alpha=3.0), make_scenario(ratio=5, p_m=30, p_s=3, alpha=5.0)):
        for pdf, c in (
            (serving_pdf_macro_noncoop, s.lambda_m + s.lambda_s * (s.p_s / s.p_m) ** (2 / s.alpha)),
            (serving_pdf_small_noncoop, s.lambda_s + s.lambda_m * (s.p_m / s.p_s) ** (2 / s.alpha)),
        ):
            val = integrate_semi_infinite(
                lambda r: pdf(s, r), 0.0, scale=1.0 / math.sqrt(math.pi * c)
            )
            assert val == pytest.approx(1.0, abs=1e-4)


def test_tier_symmetry_when_tiers_identical():
    s = make_scenario(ratio=1.0, p_m=10.0, p_s=10.0)
    assert sbs_win_prob_noncoop(s) == pytest.approx(0.5, rel=1e-15)
    for r in (20.0, 100.0, 400.0):
        assert serving_pdf_macro_noncoop(s, r) == pytest.approx(
            serving_pdf_small_noncoop(s, r), rel=1e-12
        )


def test_macro_win_numerator_identity(fig2_scenario):
    # Integrating the nearest-macro law against the small-tier void factor
    # recovers the macro association probability.
    s = fig2_scenario
    coef = s.lambda_s * math.pi * (s.p_s / s.p_m) ** (2.0 / s.alpha)

    def integrand(r):
        return float(nearest_distance_pdf(s.lambda_m, r)) * math.exp(-coef * r * r)

    val = integrate_semi_infinite(integrand, 0.0, scale=1.0 / math.sqrt(math.pi * s.lambda_m))
    assert val == pytest.approx(1.0 - sbs_win_prob_noncoop(s), rel=1e-8)


def _winners(s, d2m, d2s):
    neg_a2 = -s.alpha / 2.0
    macro = s.p_m * d2m**neg_a2
    small = s.p_s * (d2s**neg_a2).sum(axis=1)
    return small > macro


def test_noncoop_conditional_pdfs_match_mc_histograms(fig2_scenario):
    s = fig2_scenario
    settings = montecarlo.SimSettings(n_reps=100_000, seed=515)
    d2m, d2s, _ = montecarlo._collect_nearest(s, 1, settings)
    sbs_won = _winners(s, d2m, d2s)

    macro_serving = np.sqrt(d2m[~sbs_won])
    stat, crit = chi2_binned_1d(macro_serving, lambda r: serving_pdf_macro_noncoop(s, r))
    assert stat < crit

    small_serving = np.sqrt(d2s[sbs_won, 0])
    stat, crit = chi2_binned_1d(small_serving, lambda r: serving_pdf_small_noncoop(s, r))
    assert stat < crit


# ---------------------------------------------------------------------------
# Macro-vs-cluster win probability
# ---------------------------------------------------------------------------


def test_win_prob_limits(fig2_scenario):
    s = fig2_scenario
    rho = win_scale(s)
    assert macro_win_prob_pair_quartic(s, 1e-9 * rho) == pytest.approx(1.0, abs=1e-9)
    assert macro_win_prob_pair_quartic(s, 8.0 * rho) < 1e-10
    assert macro_win_prob_pair_quartic(s, 0.0) == 1.0


def test_win_prob_special_requires_quartic_pair():
    with pytest.raises(UnsupportedCaseError):
        macro_win_prob_pair_quartic(make_scenario(k=1), 100.0)
    with pytest.raises(UnsupportedCaseError):
        macro_win_prob_pair_quartic(make_scenario(alpha=3.0), 100.0)


def test_win_prob_generic_matches_special(fig2_scenario):
    s = fig2_scenario
    rho = win_scale(s)
    for x in (0.2, 0.5, 0.9, 1.4, 2.5):
        special = macro_win_prob_pair_quartic(s, x * rho)
        generic = macro_win_prob_generic(s, x * rho)
        assert generic == pytest.approx(special, abs=1e-4)


def test_win_prob_k1_closed_form():
    s = make_scenario(k=1, alpha=3.5)
    coef = s.lambda_s * math.pi * (s.p_s / s.p_m) ** (2.0 / s.alpha)
    for r in (10.0, 100.0, 300.0):
        assert macro_win_prob_generic(s, r) == pytest.approx(math.exp(-coef * r * r), rel=1e-14)


@pytest.mark.parametrize("scenario_kwargs", [dict(), dict(alpha=3.0), dict(k=1)])
def test_win_prob_monotone_non_increasing(scenario_kwargs):
    s = make_scenario(**scenario_kwargs)
    rho = win_scale(s)
    grid = np.linspace(1e-3, 5.0, 50) * rho
    values = [macro_win_prob_generic(s, r) for r in grid]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    assert all(0.0 <= v <= 1.0 for v in values)


def test_win_prob_fast_evaluator_tracks_exact(fig2_scenario):
    s = fig2_scenario
    fast = macro_win_fast(s)
    rho = win_scale(s)
    for x in (0.05, 0.33, 0.71, 1.21, 2.4, 4.9):
        assert fast(x * rho) == pytest.approx(macro_win_prob_pair_quartic(s, x * rho), abs=5e-5)
    assert fast(9.0 * rho) == 0.0


def test_win_prob_mc_fallback_for_k3():
    s = make_scenario(k=3)
    est = macro_win_prob_generic(s, 150.0, mc_settings=montecarlo.SimSettings(n_reps=4000, seed=5))
    assert isinstance(est, montecarlo.McEstimate)
    assert 0.0 <= est.mean <= 1.0
    assert est.stderr > 0.0


# ---------------------------------------------------------------------------
# Cooperative association probability and conditional laws
# ---------------------------------------------------------------------------


def test_coop_association_two_routes_agree(fig2_scenario):
    p = sbs_win_prob_coop(fig2_scenario)
    mass = macro_win_mass_coop(fig2_scenario)
    assert mass == pytest.approx(1.0 - p, abs=2e-6)


def test_coop_association_k1_equals_closed_form():
    s = make_scenario(k=1, ratio=10.0, p_s=2.0, alpha=3.0)
    assert sbs_win_prob_coop(s) == pytest.approx(sbs_win_prob_noncoop(s), rel=1e-6)


def test_coop_association_k3_unsupported():
    with pytest.raises(UnsupportedCaseError):
        sbs_win_prob_coop(make_scenario(k=3))


def test_coop_conditional_pdfs_normalize(fig2_scenario):
    s = fig2_scenario
    val = integrate_semi_infinite(
        lambda r: serving_pdf_macro_coop(s, r),
        0.0,
        scale=1.0 / math.sqrt(math.pi * s.lambda_m),
    )
    assert val == pytest.approx(1.0, abs=1e-4)

    val2 = integrate_ordered_2d(
        lambda r1, r2: serving_pdf_small_coop(s, [r1, r2]),
        scale=1.0 / math.sqrt(math.pi * s.lambda_s),
    )
    assert val2 == pytest.approx(1.0, abs=1e-4)


def test_coop_conditional_pdfs_degenerate_to_noncoop_for_k1():
    s = make_scenario(k=1)
    for r in (30.0, 120.0, 350.0):
        assert serving_pdf_macro_coop(s, r) == pytest.approx(
            float(serving_pdf_macro_noncoop(s, r)), rel=1e-6
        )
        assert serving_pdf_small_coop(s, [r]) == pytest.approx(
            float(serving_pdf_small_noncoop(s, r)), rel=1e-6
        )


def test_coop_conditional_pdfs_match_mc_histograms(fig2_scenario):
    s = fig2_scenario
    settings = montecarlo.SimSettings(n_reps=100_000, seed=616)
    d2m, d2s, _ = montecarlo._collect_nearest(s, 2, settings)
    cluster_won = _winners(s, d2m, d2s)

    macro_serving = np.sqrt(d2m[~cluster_won])
    stat, crit = chi2_binned_1d(macro_serving, lambda r: serving_pdf_macro_coop(s, r), n_bins=20)
    assert stat < crit

    joint_serving = np.sqrt(d2s[cluster_won])
    stat, crit = chi2_binned_2d(
        joint_serving, lambda r1, r2: serving_pdf_small_coop(s, [r1, r2])
    )
    assert stat < crit


def test_serving_pdf_small_coop_requires_k_distances(fig2_scenario):
    with pytest.raises(ValueError):
        serving_pdf_small_coop(fig2_scenario, [10.0])
