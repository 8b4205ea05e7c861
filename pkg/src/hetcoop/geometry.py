"""Distance distributions between the typical user and its serving BS(s).

The typical user sits at the origin of two independent homogeneous PPPs
(macro and small tier).  This module provides the unconditional
nearest-neighbor law, the joint law of the k nearest small cells, the
serving-distance laws conditioned on who wins the received-signal-strength
comparison, and the probability that a macro BS at distance r beats the
cooperative small-cell cluster.

Distances are meters, densities BS/m^2 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from hetcoop.model import Scenario
from hetcoop.quadrature import (
    DEFAULT_1D,
    DEFAULT_2D,
    integrate_interval,
    integrate_ordered_2d,
    integrate_semi_infinite,
)

# Exponent arguments beyond this are treated as total decay (exp underflows
# around 745; staying below avoids 0*inf -> nan in prefactor products).
_EXP_CUTOFF = 700.0


class UnsupportedCaseError(ValueError):
    """Requested an analytic path outside its validity region."""


@dataclass(frozen=True)
class DistanceVector:
    """Ordered distances of the k nearest small cells to the typical user."""

    r: tuple[float, ...]

    def __post_init__(self) -> None:
        arr = tuple(float(x) for x in self.r)
        object.__setattr__(self, "r", arr)
        if len(arr) == 0:
            raise ValueError("distance vector must not be empty")
        if any(x <= 0 for x in arr):
            raise ValueError("distances must be strictly positive")
        if any(b < a for a, b in zip(arr, arr[1:])):
            raise ValueError("distance vector must be non-decreasing")

    @property
    def k(self) -> int:
        return len(self.r)


def _ordered(distances: DistanceVector | Sequence[float] | Iterable[float]) -> np.ndarray:
    """Validate ordering and return distances as an array.

    Unordered input is rejected, never silently sorted: the joint law below
    is only a density on the ordered wedge.
    """
    if isinstance(distances, DistanceVector):
        return np.asarray(distances.r, dtype=float)
    return np.asarray(DistanceVector(tuple(distances)).r, dtype=float)


def nearest_distance_pdf(lam: float, r):
    """PDF of the distance to the nearest point of a PPP of intensity lam.

    f(r) = 2*pi*lam*r * exp(-pi*lam*r^2), the derivative of one minus the
    void probability of the disk of radius r.
    """
    r = np.asarray(r, dtype=float)
    out = 2.0 * math.pi * lam * r * np.exp(-math.pi * lam * r * r)
    return out if out.ndim else float(out)


def joint_ordered_pdf(lambda_s: float, distances) -> float:
    """Joint PDF of the ordered distances to the k nearest small cells.

    f(r_1..r_k) = (2*pi*lam)^k * exp(-lam*pi*r_k^2) * prod_j r_j on the
    ordered wedge r_1 <= ... <= r_k; unordered input raises ValueError.
    """
    arr = _ordered(distances)
    k = arr.size
    expo = lambda_s * math.pi * arr[-1] ** 2
    if expo > _EXP_CUTOFF:
        return 0.0
    return (2.0 * math.pi * lambda_s) ** k * math.exp(-expo) * float(np.prod(arr))


def sbs_win_prob_noncoop(s: Scenario) -> float:
    """Probability the nearest small cell beats the nearest macro in RSS.

    Closed form 1 / (1 + (lambda_m/lambda_s) * (P_m/P_s)^(2/alpha)).
    """
    return 1.0 / (1.0 + (s.lambda_m / s.lambda_s) * s.power_ratio ** (2.0 / s.alpha))


def serving_pdf_macro_noncoop(s: Scenario, r) -> float:
    """Serving-distance PDF given the user associates with a macro BS.

    The conditioning event removes small cells from the disk where they
    would have won, which tilts the nearest-macro law by the small-tier
    survival factor and renormalizes.
    """
    r = np.asarray(r, dtype=float)
    c = s.lambda_m + s.lambda_s * (s.p_s / s.p_m) ** (2.0 / s.alpha)
    norm = 1.0 - sbs_win_prob_noncoop(s)
    out = 2.0 * math.pi * s.lambda_m * r / norm * np.exp(-math.pi * r * r * c)
    return out if out.ndim else float(out)


def serving_pdf_small_noncoop(s: Scenario, r) -> float:
    """Serving-distance PDF given the user associates with a small cell."""
    r = np.asarray(r, dtype=float)
    c = s.lambda_s + s.lambda_m * (s.p_m / s.p_s) ** (2.0 / s.alpha)
    norm = sbs_win_prob_noncoop(s)
    out = 2.0 * math.pi * s.lambda_s * r / norm * np.exp(-math.pi * r * r * c)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Macro-vs-cluster win probability
#
# win(r) = P( P_m r^-alpha / P_s  >  sum_{j<=k} r_{s,j}^-alpha ),
# the chance that a macro BS at distance r still beats the joint RSS of the
# k nearest small cells.  No closed form exists for general (k, alpha).
# ---------------------------------------------------------------------------


def macro_win_prob_pair_quartic(s: Scenario, r: float) -> float:
    """Macro-vs-cluster win probability, special case k=2 and alpha=4.

    Exact single integral over phi in (0, pi/4), obtained by mapping the
    pair (r1^-2, r2^-2) to polar coordinates inside the disk of radius
    omega*r^-2 (omega = sqrt(P_m/P_s)):

        integral  (pi*lam_s/sin(phi) + omega*r^-2)
                  / ((cos(phi)/r)^2 * omega)
                  * exp(-pi*lam_s*r^2 / (omega*sin(phi))) dphi

    The integrand vanishes at phi -> 0 (the exponential dominates), so an
    open rule that never samples the endpoint evaluates it cleanly.
    """
    if s.k != 2 or s.alpha != 4:
        raise UnsupportedCaseError(
            "closed-form pair integral needs k=2 and alpha=4; "
            "use macro_win_prob_generic instead"
        )
    if r < 0:
        raise ValueError("r must be >= 0")
    if r == 0.0:
        return 1.0  # infinite macro RSS beats any finite cluster sum
    omega = s.amplitude_ratio
    lam_s = s.lambda_s
    r2 = r * r
    base = math.pi * lam_s * r2 / omega  # exponent scale, divided by sin(phi)

    def integrand(phi: float) -> float:
        sin_phi = math.sin(phi)
        expo = base / sin_phi
        if expo > _EXP_CUTOFF:
            return 0.0
        cos_phi = math.cos(phi)
        num = math.pi * lam_s / sin_phi + omega / r2
        den = (cos_phi * cos_phi / r2) * omega
        return num / den * math.exp(-expo)

    val = integrate_interval(integrand, 0.0, math.pi / 4.0, DEFAULT_1D)
    return min(max(val, 0.0), 1.0)


def _macro_win_prob_pair(s: Scenario, r: float) -> float:
    """k=2 win probability for any alpha, by reducing the ordered double
    integral against the joint nearest-pair law to one dimension.

    The win event {r1^-a + r2^-a < T}, T = (P_m/P_s) r^-a, pins the inner
    (r2) integral's lower limit to max(r1, (T - r1^-a)^(-1/a)); the inner
    integral of the joint law is then available in closed form, leaving a
    single integral over r1 plus an exact tail term.
    """
    if r == 0.0:
        return 1.0
    a = s.alpha
    lam_s = s.lambda_s
    t_thresh = s.power_ratio * r ** (-a)
    r1_lo = t_thresh ** (-1.0 / a)
    knee = (2.0 / t_thresh) ** (1.0 / a)  # where the two inner limits cross

    def integrand(u: float) -> float:
        w = t_thresh - u ** (-a)
        if w <= 0.0:
            return 0.0
        expo = lam_s * math.pi * w ** (-2.0 / a)
        if expo > _EXP_CUTOFF:
            return 0.0
        return 2.0 * math.pi * lam_s * u * math.exp(-expo)

    seg = integrate_interval(integrand, r1_lo, knee, DEFAULT_1D)
    tail_expo = lam_s * math.pi * knee * knee
    tail = math.exp(-tail_expo) if tail_expo < _EXP_CUTOFF else 0.0
    return min(max(seg + tail, 0.0), 1.0)


def macro_win_prob_generic(s: Scenario, r: float, mc_settings=None):
    """Macro-vs-cluster win probability straight from its definition.

    k=1 is the small-tier void probability in closed form; k=2 is exact
    nested quadrature; for k > 2 the value is delegated to the Monte Carlo
    engine and returned as an McEstimate carrying its standard error
    (pass ``mc_settings`` to control replication count and seed).
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    if s.k == 1:
        return math.exp(-s.lambda_s * math.pi * (s.p_s / s.p_m) ** (2.0 / s.alpha) * r * r)
    if s.k == 2:
        return _macro_win_prob_pair(s, r)
    from hetcoop import montecarlo  # local import keeps layering one-way

    settings = mc_settings or montecarlo.SimSettings(n_reps=100_000, seed=0)
    return montecarlo.estimate_macro_win(s, r, settings)


@lru_cache(maxsize=32)
def macro_win_fast(s: Scenario) -> Callable[[float], float]:
    """Cached per-scenario evaluator of the macro-vs-cluster win probability.

    k=1 stays in closed form.  For k=2 the exact integral is tabulated on a
    dense grid in (r/rho)^2 (rho = the win-transition length scale) and
    monotonically interpolated; tabulation error stays below ~2e-5, two
    orders of magnitude under the loosest tolerance this evaluator feeds
    (coverage and rate integrals at >= 1e-3).
    """
    if s.k == 1:
        coef = s.lambda_s * math.pi * (s.p_s / s.p_m) ** (2.0 / s.alpha)

        def closed(r: float) -> float:
            return math.exp(-coef * r * r)

        return closed
    if s.k != 2:
        raise UnsupportedCaseError("analytic cooperative path supports k in {1, 2} only")

    exact = (
        (lambda r: macro_win_prob_pair_quartic(s, r))
        if s.alpha == 4
        else (lambda r: _macro_win_prob_pair(s, r))
    )
    rho = s.power_ratio ** (1.0 / s.alpha) / math.sqrt(math.pi * s.lambda_s)
    x_max = 64.0  # (r/rho)^2 beyond which the win probability is ~1e-30
    xs = np.linspace(0.0, x_max, 1025)
    ys = np.array([exact(rho * math.sqrt(x)) for x in xs])
    interp = PchipInterpolator(xs, ys, extrapolate=False)
    inv_rho2 = 1.0 / (rho * rho)

    def fast(r: float) -> float:
        x = r * r * inv_rho2
        if x >= x_max:
            return 0.0
        return float(interp(x))

    return fast


# ---------------------------------------------------------------------------
# Cooperative association probability and conditional serving laws
# ---------------------------------------------------------------------------


def _eta(s: Scenario, distances: np.ndarray) -> float:
    """P_m divided by the cluster's summed mean RSS; eta^(1/alpha) is the
    exclusion radius the cluster win imposes on the macro tier."""
    rss_sum = s.p_s * float(np.sum(distances ** (-s.alpha)))
    return s.p_m / rss_sum


@lru_cache(maxsize=64)
def sbs_win_prob_coop(s: Scenario) -> float:
    """Probability the k nearest small cells jointly beat the nearest macro.

    Integral of the macro-tier void factor exp(-lambda_m*pi*eta^(2/alpha))
    against the joint nearest-cluster law over the ordered wedge.  Exact
    quadrature for k in {1, 2}; larger clusters are Monte Carlo territory.
    """
    scale = 1.0 / math.sqrt(math.pi * s.lambda_s)
    two_over_a = 2.0 / s.alpha
    if s.k == 1:

        def f1(r: float) -> float:
            eta = _eta(s, np.array([r]))
            expo = s.lambda_m * math.pi * eta**two_over_a + s.lambda_s * math.pi * r * r
            if expo > _EXP_CUTOFF:
                return 0.0
            return math.exp(-expo) * 2.0 * math.pi * s.lambda_s * r

        return integrate_semi_infinite(f1, 0.0, DEFAULT_1D, scale=scale)
    if s.k == 2:
        pref = (2.0 * math.pi * s.lambda_s) ** 2

        def f2(r1: float, r2: float) -> float:
            eta = _eta(s, np.array([r1, r2]))
            expo = s.lambda_m * math.pi * eta**two_over_a + s.lambda_s * math.pi * r2 * r2
            if expo > _EXP_CUTOFF:
                return 0.0
            return math.exp(-expo) * pref * r1 * r2

        return integrate_ordered_2d(f2, DEFAULT_2D, scale=scale)
    raise UnsupportedCaseError(
        "analytic cooperative association supports k in {1, 2}; "
        "use the Monte Carlo estimator for larger clusters"
    )


def macro_win_mass_coop(s: Scenario) -> float:
    """Integral of nearest-macro PDF times the win probability.

    Equals one minus the cooperative small-tier association probability,
    through an entirely different computation; the two routes cross-check
    each other in the test suite.
    """
    win = macro_win_fast(s)
    scale = 1.0 / math.sqrt(math.pi * s.lambda_m)
    return integrate_semi_infinite(
        lambda r: nearest_distance_pdf(s.lambda_m, r) * win(r),
        0.0,
        DEFAULT_1D,
        scale=scale,
    )


def serving_pdf_macro_coop(s: Scenario, r: float) -> float:
    """Serving-distance PDF given the macro beats the cooperative cluster.

    Nearest-macro law times the win probability, normalized by the macro's
    total win mass (computed independently from the cluster-side integral,
    so unit mass here is a genuine consistency check, not a tautology).
    """
    if s.k == 1:
        coef = s.lambda_s * math.pi * (s.p_s / s.p_m) ** (2.0 / s.alpha)
        win = math.exp(-coef * r * r)
    elif s.k == 2:
        win = (
            macro_win_prob_pair_quartic(s, r)
            if s.alpha == 4
            else _macro_win_prob_pair(s, r)
        )
    else:
        raise UnsupportedCaseError("analytic cooperative path supports k in {1, 2} only")
    norm = 1.0 - sbs_win_prob_coop(s)
    return nearest_distance_pdf(s.lambda_m, r) * win / norm


def serving_pdf_small_coop(s: Scenario, distances) -> float:
    """Joint serving-distance PDF given the cluster beats the macro.

    Joint nearest-cluster law times the macro-tier void factor, normalized
    by the cooperative association probability.
    """
    arr = _ordered(distances)
    if arr.size != s.k:
        raise ValueError(f"expected {s.k} distances, got {arr.size}")
    eta = _eta(s, arr)
    expo = s.lambda_m * math.pi * eta ** (2.0 / s.alpha)
    if expo > _EXP_CUTOFF:
        return 0.0
    return math.exp(-expo) * joint_ordered_pdf(s.lambda_s, arr) / sbs_win_prob_coop(s)
