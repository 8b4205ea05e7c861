"""Scalar performance metrics for the two-tier network.

Association probabilities, the interference Laplace transform, conditional
and overall SINR coverage, mean achievable rate, Voronoi-cell power draw,
throughput and energy efficiency, for both association models:

* non-cooperative: the user connects to whichever single BS (nearest macro
  vs nearest small cell) offers the higher mean RSS;
* cooperative: the k nearest small cells jointly transmit, and the user
  compares their summed RSS against the nearest macro.

Thresholds ``theta`` are linear SINR ratios everywhere in this module; dB
conversion happens at the CLI boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, NamedTuple

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import hyp2f1

from hetcoop import geometry
from hetcoop.model import Scenario, ScenarioError
from hetcoop.quadrature import (
    DEFAULT_1D,
    DEFAULT_2D,
    QuadratureSettings,
    integrate_interval,
    integrate_ordered_2d,
    integrate_semi_infinite,
)

_EXP_CUTOFF = 700.0
_LN2 = math.log(2.0)

# Mean-rate curve machinery (see CoverageCurve): initial grid size, nested
# refinement cap, and the convergence tolerance on the rate itself.
_CURVE_POINTS = 201
_CURVE_POINTS_MAX = 1601
_RATE_REFINE_TOL = 1e-3
_THETA_LO = 1e-6
# Integrating a piecewise-cubic interpolant cannot reach 1e-8; the rate
# tolerances downstream are 1e-3, so 1e-6 leaves ample headroom.
_CURVE_RATE_SETTINGS = QuadratureSettings(rel_tol=1e-6, abs_tol=1e-10)


class AssociationModel(Enum):
    """Which downlink association policy is being evaluated."""

    NONCOOP = "noncoop"
    COOP = "coop"


@dataclass(frozen=True)
class CoverageReport:
    """Coverage at one threshold, split by association event.

    ``p_cov_overall`` is the association-weighted mixture of the two
    conditional coverages and holds exactly by construction.
    """

    theta: float  # linear SINR threshold
    p_assoc_sbs: float
    p_cov_mbs: float
    p_cov_sbs: float
    p_cov_overall: float

    @classmethod
    def from_parts(cls, theta: float, p_assoc_sbs: float, p_cov_mbs: float, p_cov_sbs: float) -> "CoverageReport":
        return cls(
            theta=theta,
            p_assoc_sbs=p_assoc_sbs,
            p_cov_mbs=p_cov_mbs,
            p_cov_sbs=p_cov_sbs,
            p_cov_overall=(1.0 - p_assoc_sbs) * p_cov_mbs + p_assoc_sbs * p_cov_sbs,
        )


# ---------------------------------------------------------------------------
# Association probabilities
# ---------------------------------------------------------------------------


def assoc_prob_sbs_noncoop(s: Scenario) -> float:
    """Probability the user associates with the small tier (single-BS rule)."""
    return geometry.sbs_win_prob_noncoop(s)


def assoc_prob_sbs_coop(s: Scenario, mc_settings=None):
    """Probability the user associates with the k-cell cooperative cluster.

    Exact quadrature for k in {1, 2}.  For larger clusters the integral
    dimension equals k, so the value is delegated to the Monte Carlo engine
    and returned as an McEstimate flagged with its standard error.
    """
    if s.k <= 2:
        return geometry.sbs_win_prob_coop(s)
    from hetcoop import montecarlo

    settings = mc_settings or montecarlo.SimSettings(n_reps=100_000, seed=0)
    return montecarlo.estimate_association(s, AssociationModel.COOP, settings)


# ---------------------------------------------------------------------------
# Interference Laplace transform
# ---------------------------------------------------------------------------


def _tail_integral_general(y: float, alpha: float) -> float:
    # Exact Gauss-hypergeometric evaluation, split at y=1 so the series
    # argument stays inside the unit disk:
    #   integral_y^inf mu/(1+mu^a) dmu
    #     = y^(2-a)/(a-2) * 2F1(1, 1-2/a; 2-2/a; -y^-a)          (y >= 1)
    #     = (pi/a)/sin(2pi/a) - y^2/2 * 2F1(1, 2/a; 1+2/a; -y^a)  (y < 1)
    # (both verified against brute-force quadrature in the test suite).
    if y >= 1.0:
        return y ** (2.0 - alpha) / (alpha - 2.0) * float(
            hyp2f1(1.0, 1.0 - 2.0 / alpha, 2.0 - 2.0 / alpha, -(y**-alpha))
        )
    full = (math.pi / alpha) / math.sin(2.0 * math.pi / alpha)
    head = 0.5 * y * y * float(hyp2f1(1.0, 2.0 / alpha, 1.0 + 2.0 / alpha, -(y**alpha)))
    return full - head


def interference_tail_integral(y: float, alpha: float) -> float:
    """The path-loss tail integral of mu / (1 + mu^alpha) over [y, inf).

    This is the scalar shape function in the exponent of the interference
    Laplace transform.  alpha = 4 has the closed form atan(y^-2) / 2; other
    exponents go through quadrature (convergent for alpha > 2).
    """
    if y < 0:
        raise ValueError("y must be >= 0")
    if alpha <= 2:
        raise ValueError("alpha must be > 2 for a convergent tail integral")
    if alpha == 4:
        if y == 0.0:
            return math.pi / 4.0
        return 0.5 * math.atan(y**-2)
    return _tail_integral_general(float(y), float(alpha))


def interference_laplace(s: Scenario, lap_s: float, excl_macro: float, excl_small: float) -> float:
    """Laplace transform of the aggregate interference at argument ``lap_s``.

    Interferers in each tier form a PPP outside their exclusion radius
    (``excl_macro`` / ``excl_small``), each with an independent unit-mean
    exponential fading gain, giving

        prod_i exp( -2*pi*lambda_i * (s*P_i)^(2/alpha)
                    * tail_integral((s*P_i)^(-1/alpha) * d_i, alpha) ).
    """
    if lap_s < 0:
        raise ValueError("lap_s must be >= 0")
    if excl_macro < 0 or excl_small < 0:
        raise ValueError("exclusion radii must be >= 0")
    if lap_s == 0.0:
        return 1.0
    a = s.alpha
    expo = 0.0
    for lam, power, d in (
        (s.lambda_m, s.p_m, excl_macro),
        (s.lambda_s, s.p_s, excl_small),
    ):
        sp = lap_s * power
        y = sp ** (-1.0 / a) * d
        expo += 2.0 * math.pi * lam * sp ** (2.0 / a) * interference_tail_integral(y, a)
    if expo > _EXP_CUTOFF:
        return 0.0
    return math.exp(-expo)


# ---------------------------------------------------------------------------
# Coverage, non-cooperative model
# ---------------------------------------------------------------------------


def coverage_mbs_noncoop(s: Scenario, theta: float, settings: QuadratureSettings = DEFAULT_1D) -> float:
    """P(SINR > theta) given the user is served by its nearest macro BS.

    Conditioned on serving distance r, macro interferers sit beyond r and
    small-tier interferers beyond (P_s/P_m)^(1/alpha) * r (losing the RSS
    comparison keeps that disk empty), so the integrand is the noise factor
    times the Laplace transform times the conditional serving law.
    """
    _check_theta(theta)
    ratio_small = (s.p_s / s.p_m) ** (1.0 / s.alpha)
    c = s.lambda_m + s.lambda_s * (s.p_s / s.p_m) ** (2.0 / s.alpha)
    scale = 1.0 / math.sqrt(math.pi * c)

    def integrand(r: float) -> float:
        lap_arg = theta * r**s.alpha / s.p_m
        noise_expo = lap_arg * s.sigma2
        if noise_expo > _EXP_CUTOFF:
            return 0.0
        lap = interference_laplace(s, lap_arg, r, ratio_small * r)
        return math.exp(-noise_expo) * lap * geometry.serving_pdf_macro_noncoop(s, r)

    return _clip_prob(integrate_semi_infinite(integrand, 0.0, settings, scale=scale))


def coverage_sbs_noncoop(s: Scenario, theta: float, settings: QuadratureSettings = DEFAULT_1D) -> float:
    """P(SINR > theta) given the user is served by its nearest small cell."""
    _check_theta(theta)
    ratio_macro = (s.p_m / s.p_s) ** (1.0 / s.alpha)
    c = s.lambda_s + s.lambda_m * (s.p_m / s.p_s) ** (2.0 / s.alpha)
    scale = 1.0 / math.sqrt(math.pi * c)

    def integrand(r: float) -> float:
        lap_arg = theta * r**s.alpha / s.p_s
        noise_expo = lap_arg * s.sigma2
        if noise_expo > _EXP_CUTOFF:
            return 0.0
        lap = interference_laplace(s, lap_arg, ratio_macro * r, r)
        return math.exp(-noise_expo) * lap * geometry.serving_pdf_small_noncoop(s, r)

    return _clip_prob(integrate_semi_infinite(integrand, 0.0, settings, scale=scale))


def coverage_overall_noncoop(s: Scenario, theta: float) -> CoverageReport:
    """Association-weighted overall coverage, non-cooperative model."""
    return CoverageReport.from_parts(
        theta=theta,
        p_assoc_sbs=assoc_prob_sbs_noncoop(s),
        p_cov_mbs=coverage_mbs_noncoop(s, theta),
        p_cov_sbs=coverage_sbs_noncoop(s, theta),
    )


def overall_coverage_closed_form_quartic(theta: float) -> float:
    """Overall non-cooperative coverage for alpha=4 and zero noise.

    In the interference-limited quartic-path-loss regime the overall
    coverage collapses to 1 / (1 + sqrt(theta)*atan(sqrt(theta))),
    independent of densities and transmit powers.
    """
    rt = math.sqrt(theta)
    return 1.0 / (1.0 + rt * math.atan(rt))


# ---------------------------------------------------------------------------
# Coverage, cooperative model
# ---------------------------------------------------------------------------


def coverage_mbs_coop(s: Scenario, theta: float, settings: QuadratureSettings = DEFAULT_1D) -> float:
    """P(SINR > theta) given the macro beats the cooperative cluster.

    Uses the exact small-tier exclusion radius (P_s/P_m)^(1/alpha) * r that
    the lost comparison implies for the nearest small cell; treating the
    small tier beyond it as an unconditioned PPP is the model's stated
    approximation, quantified against Monte Carlo in the validation suite.
    """
    _check_theta(theta)
    if s.k > 2:
        raise geometry.UnsupportedCaseError("analytic cooperative path supports k in {1, 2} only")
    win = geometry.macro_win_fast(s)
    norm = 1.0 - geometry.sbs_win_prob_coop(s)
    ratio_small = (s.p_s / s.p_m) ** (1.0 / s.alpha)
    scale = 1.0 / math.sqrt(math.pi * s.lambda_m)

    def integrand(r: float) -> float:
        w = win(r)
        if w == 0.0:
            return 0.0
        lap_arg = theta * r**s.alpha / s.p_m
        noise_expo = lap_arg * s.sigma2
        if noise_expo > _EXP_CUTOFF:
            return 0.0
        lap = interference_laplace(s, lap_arg, r, ratio_small * r)
        return (
            math.exp(-noise_expo)
            * lap
            * geometry.nearest_distance_pdf(s.lambda_m, r)
            * w
            / norm
        )

    return _clip_prob(integrate_semi_infinite(integrand, 0.0, settings, scale=scale))


def coverage_sbs_coop(s: Scenario, theta: float, settings: QuadratureSettings = DEFAULT_2D) -> float:
    """P(SINR > theta) given the k-cell cluster beats the nearest macro.

    The cluster's summed mean RSS plays the role of the serving signal with
    a single unit-mean exponential effective channel; macro interferers sit
    beyond the exclusion radius the cluster win implies, small-tier
    interferers beyond the k-th cluster member.
    """
    _check_theta(theta)
    norm = geometry.sbs_win_prob_coop(s)
    a = s.alpha
    two_over_a = 2.0 / a
    scale = 1.0 / math.sqrt(math.pi * s.lambda_s)

    if s.k == 1:

        def integrand1(r: float) -> float:
            rss = s.p_s * r**-a
            lap_arg = theta / rss
            noise_expo = lap_arg * s.sigma2
            if noise_expo > _EXP_CUTOFF:
                return 0.0
            eta = s.p_m / rss
            excl_macro = eta ** (1.0 / a)
            lap = interference_laplace(s, lap_arg, excl_macro, r)
            weight_expo = s.lambda_m * math.pi * eta**two_over_a + s.lambda_s * math.pi * r * r
            if weight_expo > _EXP_CUTOFF:
                return 0.0
            weight = math.exp(-weight_expo) * 2.0 * math.pi * s.lambda_s * r
            return math.exp(-noise_expo) * lap * weight / norm

        return _clip_prob(integrate_semi_infinite(integrand1, 0.0, DEFAULT_1D, scale=scale))

    if s.k == 2:
        pref = (2.0 * math.pi * s.lambda_s) ** 2

        def integrand2(r1: float, r2: float) -> float:
            rss = s.p_s * (r1**-a + r2**-a)
            lap_arg = theta / rss
            noise_expo = lap_arg * s.sigma2
            if noise_expo > _EXP_CUTOFF:
                return 0.0
            eta = s.p_m / rss
            excl_macro = eta ** (1.0 / a)
            lap = interference_laplace(s, lap_arg, excl_macro, r2)
            weight_expo = s.lambda_m * math.pi * eta**two_over_a + s.lambda_s * math.pi * r2 * r2
            if weight_expo > _EXP_CUTOFF:
                return 0.0
            weight = math.exp(-weight_expo) * pref * r1 * r2
            return math.exp(-noise_expo) * lap * weight / norm

        return _clip_prob(integrate_ordered_2d(integrand2, settings, scale=scale))

    raise geometry.UnsupportedCaseError("analytic cooperative path supports k in {1, 2} only")


def coverage_overall_coop(s: Scenario, theta: float) -> CoverageReport:
    """Association-weighted overall coverage, cooperative model."""
    return CoverageReport.from_parts(
        theta=theta,
        p_assoc_sbs=geometry.sbs_win_prob_coop(s),
        p_cov_mbs=coverage_mbs_coop(s, theta),
        p_cov_sbs=coverage_sbs_coop(s, theta),
    )


def coverage_fn(s: Scenario, model: AssociationModel | str, tier: str) -> Callable[[float], float]:
    """Conditional coverage as a theta -> probability callable."""
    model = AssociationModel(model)
    table = {
        (AssociationModel.NONCOOP, "mbs"): coverage_mbs_noncoop,
        (AssociationModel.NONCOOP, "sbs"): coverage_sbs_noncoop,
        (AssociationModel.COOP, "mbs"): coverage_mbs_coop,
        (AssociationModel.COOP, "sbs"): coverage_sbs_coop,
    }
    fn = table[(model, tier)]
    return lambda theta: fn(s, theta)


# ---------------------------------------------------------------------------
# Mean achievable rate
# ---------------------------------------------------------------------------


def _truncation_theta(cov: Callable[[float], float], eps: float) -> tuple[float, float]:
    """Upper threshold where cov(theta)/(1+theta) drops below eps * peak.

    Probes whole decades; valid for non-increasing coverage functions.
    Returns (theta_hi, peak).
    """
    peak = cov(_THETA_LO) / (1.0 + _THETA_LO)
    if peak <= 0.0:
        return _THETA_LO, 0.0
    theta = 1.0
    while theta < 1e14:
        if cov(theta) / (1.0 + theta) < eps * peak:
            return theta, peak
        theta *= 10.0
    return 1e14, peak


class CoverageCurve:
    """Memoized coverage curve on a log-spaced threshold grid.

    Expensive coverage functions (the cooperative ones integrate in two
    dimensions per call) are evaluated once on the grid and then served
    through monotone (PCHIP) interpolation in log-theta, so downstream
    threshold integrals never re-trigger the underlying quadrature.  Grids
    refine by nested doubling, reusing every previous evaluation.
    """

    def __init__(
        self,
        fn: Callable[[float], float],
        n_points: int = _CURVE_POINTS,
        truncation_epsilon: float = DEFAULT_1D.truncation_epsilon,
        _cache: dict | None = None,
        _theta_hi: float | None = None,
    ):
        self._fn = fn
        self._eps = truncation_epsilon
        if _theta_hi is None:
            _theta_hi, _ = _truncation_theta(fn, truncation_epsilon)
        self.theta_lo = _THETA_LO
        self.theta_hi = max(float(_theta_hi), 10.0 * _THETA_LO)
        self.n_points = int(n_points)
        self._cache = {} if _cache is None else _cache
        log_lo, log_hi = math.log(self.theta_lo), math.log(self.theta_hi)
        # Cache keys are grid indices on the finest admissible grid, so
        # refinement levels share evaluations exactly.
        self._fine_segments = _CURVE_POINTS_MAX - 1
        step = (self.n_points - 1)
        xs = np.empty(self.n_points)
        ys = np.empty(self.n_points)
        for i in range(self.n_points):
            fine_idx = i * self._fine_segments // step
            frac = fine_idx / self._fine_segments
            log_t = log_lo + (log_hi - log_lo) * frac
            if fine_idx not in self._cache:
                self._cache[fine_idx] = float(fn(math.exp(log_t)))
            xs[i] = log_t
            ys[i] = self._cache[fine_idx]
        self._interp = PchipInterpolator(xs, ys, extrapolate=False)
        self._y_lo = ys[0]
        self._y_hi = ys[-1]

    def refined(self) -> "CoverageCurve":
        """Curve with doubled grid density, reusing existing evaluations."""
        return CoverageCurve(
            self._fn,
            n_points=min(2 * (self.n_points - 1) + 1, _CURVE_POINTS_MAX),
            truncation_epsilon=self._eps,
            _cache=self._cache,
            _theta_hi=self.theta_hi,
        )

    def __call__(self, theta: float) -> float:
        if theta <= self.theta_lo:
            return self._y_lo
        if theta >= self.theta_hi:
            return self._y_hi
        return float(self._interp(math.log(theta)))


def mean_rate(s: Scenario, cov: Callable[[float], float], settings: QuadratureSettings = DEFAULT_1D) -> float:
    """Mean spectral efficiency (bit/s/Hz) implied by a coverage function.

    Integrates cov(theta)/(1+theta) over all thresholds, i.e. the mean of
    log2(1 + SINR).  Computed in u = ln(1+theta) coordinates; the upper
    limit follows the truncation rule and, in the interference-limited
    case, the remaining power-law tail (cov ~ theta^(-2/alpha)) is added
    in closed form.
    """
    if isinstance(cov, CoverageCurve):
        theta_hi = cov.theta_hi
        peak = cov(_THETA_LO) / (1.0 + _THETA_LO)
        settings = _CURVE_RATE_SETTINGS
    else:
        theta_hi, peak = _truncation_theta(cov, settings.truncation_epsilon)
    if peak <= 0.0:
        return 0.0

    u_hi = math.log1p(theta_hi)
    val = integrate_interval(lambda u: cov(math.expm1(u)), 0.0, u_hi, settings)
    if s.sigma2 == 0.0:
        val += (s.alpha / 2.0) * cov(theta_hi)
    return max(val, 0.0) / _LN2


def _converged_rate(s: Scenario, fn: Callable[[float], float]) -> float:
    """Rate through the memoized-curve path, refined until stable."""
    curve = CoverageCurve(fn)
    rate = mean_rate(s, curve)
    while curve.n_points < _CURVE_POINTS_MAX:
        curve = curve.refined()
        new_rate = mean_rate(s, curve)
        if abs(new_rate - rate) < _RATE_REFINE_TOL:
            return new_rate
        rate = new_rate
    return rate


class RateBreakdown(NamedTuple):
    rate_mbs: float
    rate_sbs: float
    p_assoc_sbs: float
    rate: float


def rate_breakdown(s: Scenario, model: AssociationModel | str) -> RateBreakdown:
    """Per-event mean rates and their association-weighted mixture."""
    model = AssociationModel(model)
    if model is AssociationModel.NONCOOP:
        p = assoc_prob_sbs_noncoop(s)
    else:
        p = geometry.sbs_win_prob_coop(s)
    rate_m = _converged_rate(s, coverage_fn(s, model, "mbs"))
    rate_s = _converged_rate(s, coverage_fn(s, model, "sbs"))
    return RateBreakdown(rate_m, rate_s, p, (1.0 - p) * rate_m + p * rate_s)


def mean_rate_mixture(s: Scenario, model: AssociationModel | str) -> float:
    """Association-weighted mean achievable rate (bit/s/Hz)."""
    return rate_breakdown(s, model).rate


# ---------------------------------------------------------------------------
# Power, throughput, energy efficiency
# ---------------------------------------------------------------------------


def power_breakdown(s: Scenario, model: AssociationModel | str) -> dict[str, float]:
    """Voronoi-cell power draw: macro share, small-tier share, total (W).

    The macro draws its static floor plus an output share proportional to
    the fraction of the cell's users it keeps.  Users offloaded to small
    cells cost P_s each (times cluster size and backhaul overhead when
    cooperating).
    """
    model = AssociationModel(model)
    pm = s.power_model
    if model is AssociationModel.NONCOOP:
        p_assoc = assoc_prob_sbs_noncoop(s)
        small = pm.n_users * p_assoc * s.p_s
    else:
        p_assoc = geometry.sbs_win_prob_coop(s)
        small = s.k * pm.n_users * p_assoc * (s.p_s + pm.p_backhaul)
    dynamic = pm.n_users * pm.p_max * (1.0 - p_assoc) / pm.n_max if pm.n_users else 0.0
    macro = pm.p_static + dynamic
    return {
        "p_assoc_sbs": p_assoc,
        "macro_w": macro,
        "small_w": small,
        "total_w": macro + small,
    }


def power_total(s: Scenario, model: AssociationModel | str) -> float:
    """Total Voronoi-cell power draw (W) for the chosen model."""
    return power_breakdown(s, model)["total_w"]


class ThroughputEnergy(NamedTuple):
    throughput_bps: float
    ee_bits_per_joule: float


def throughput_and_ee(
    s: Scenario,
    model: AssociationModel | str,
    rate: float | None = None,
    power: float | None = None,
) -> ThroughputEnergy:
    """Cell throughput n*rate*B (bit/s) and energy efficiency (bit/J).

    ``rate`` (bit/s/Hz) and ``power`` (W) may be passed in when already
    computed; otherwise they are evaluated here.
    """
    if rate is None:
        rate = mean_rate_mixture(s, model)
    if power is None:
        power = power_total(s, model)
    throughput = s.power_model.n_users * rate * s.bandwidth_hz
    if power <= 0.0:
        raise ScenarioError(
            "degenerate-power",
            "total power is zero (all power-model parameters are zero); "
            "energy efficiency is undefined",
        )
    return ThroughputEnergy(throughput, throughput / power)


def _check_theta(theta: float) -> None:
    if theta <= 0:
        raise ValueError("theta must be > 0 (linear SINR threshold)")


def _clip_prob(x: float) -> float:
    return min(max(x, 0.0), 1.0)
