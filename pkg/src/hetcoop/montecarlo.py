"""Brute-force Monte Carlo oracle for the two-tier network.

Every analytic quantity in this package has an empirical counterpart here,
estimated by explicitly sampling Poisson point processes on a disk around
the typical user, drawing per-link Rayleigh fading, applying the RSS
association rules and measuring SINR.

Reproducibility contract: replication blocks draw from Philox streams
separated by disjoint counter ranges derived from (seed, block index), and
aggregation runs in block order, so results are bit-identical for a given
seed regardless of worker count or scheduling.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from hetcoop.analytic import AssociationModel
from hetcoop.model import Scenario

_SINR_BLOCK = 4096  # replications per stream block, per-realization path
_FAST_TARGET_POINTS = 4_000_000  # flat points per block, vectorized paths
_U_FLOOR = 1e-30  # uniform-draw floor; keeps squared distances positive


class InsufficientSamplesWarning(UserWarning):
    """Estimate's standard error exceeds the requested target."""


@dataclass(frozen=True)
class SimSettings:
    """Simulation controls.

    ``radius_max`` is the sampling disk radius in meters; ``None`` resolves
    to :func:`default_radius` for the scenario at hand.
    """

    n_reps: int
    seed: int
    radius_max: float | None = None
    n_workers: int = 1

    def __post_init__(self) -> None:
        if self.n_reps < 1:
            raise ValueError("n_reps must be >= 1")
        if self.radius_max is not None and self.radius_max <= 0:
            raise ValueError("radius_max must be > 0")
        if self.n_workers < 1:
            raise ValueError("n_workers must be >= 1")


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo point estimate with provenance."""

    mean: float
    stderr: float
    n_reps: int
    seed: int
    metric_id: str
    n_resampled: int = 0


def default_radius(s: Scenario) -> float:
    """Simulation disk radius: ten mean nearest-neighbor scales of the
    sparser tier, which keeps the untracked interference tail far below
    Monte Carlo noise for alpha >= 3."""
    return 10.0 * max(
        1.0 / math.sqrt(math.pi * s.lambda_m),
        1.0 / math.sqrt(math.pi * s.lambda_s),
    )


def _stream(seed: int, block_index: int) -> np.random.Generator:
    """Independent generator for one replication block.

    Blocks occupy disjoint 2^128-state counter ranges of the same keyed
    Philox cipher, so streams never overlap and block results do not depend
    on which worker runs them.
    """
    return np.random.Generator(np.random.Philox(key=seed, counter=block_index << 128))


def _blocks(n_reps: int, block_size: int) -> list[tuple[int, int]]:
    """(block_index, reps_in_block) partition, independent of worker count."""
    out = []
    idx = 0
    remaining = n_reps
    while remaining > 0:
        take = min(block_size, remaining)
        out.append((idx, take))
        idx += 1
        remaining -= take
    return out


def _run_blocks(fn, args_list: Sequence[tuple], n_workers: int) -> list:
    if n_workers <= 1 or len(args_list) <= 1:
        return [fn(args) for args in args_list]
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(fn, args_list))


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    n = values.size
    mean = float(np.mean(values))
    if n < 2:
        return mean, float("inf")
    return mean, float(np.std(values, ddof=1) / math.sqrt(n))


# ---------------------------------------------------------------------------
# Point process sampling
# ---------------------------------------------------------------------------


def sample_ppp(lam: float, radius_max: float, rng: np.random.Generator) -> np.ndarray:
    """One PPP realization on the disk of radius ``radius_max``: distances
    from the typical user at the origin, unsorted.

    The point count is Poisson(lam * pi * R^2) and positions are uniform on
    the disk; since every downstream statistic is isotropic, only the radial
    coordinates are materialized (squared distances uniform on (0, R^2)).
    An empty realization is returned as an empty array; resampling guards
    live in the simulation paths that need nonempty processes.
    """
    if lam < 0 or radius_max <= 0:
        raise ValueError("need lam >= 0 and radius_max > 0")
    n = rng.poisson(lam * math.pi * radius_max * radius_max)
    u = np.maximum(rng.random(n), _U_FLOOR)
    return radius_max * np.sqrt(u)


# ---------------------------------------------------------------------------
# Full SINR simulation (per-realization path)
# ---------------------------------------------------------------------------


def _one_realization(
    s: Scenario,
    model: AssociationModel,
    combining: str,
    r2_disk: float,
    mu_m: float,
    mu_s: float,
    rng: np.random.Generator,
) -> tuple[bool, float, int]:
    """Sample one network realization; returns (sbs_won, sinr, resamples)."""
    k_req = s.k if model is AssociationModel.COOP else 1
    resamples = 0
    while True:
        n_m = rng.poisson(mu_m)
        n_s = rng.poisson(mu_s)
        if n_m >= 1 and n_s >= k_req:
            break
        resamples += 1
    d2m = r2_disk * np.maximum(rng.random(n_m), _U_FLOOR)
    d2s = r2_disk * np.maximum(rng.random(n_s), _U_FLOOR)

    neg_a2 = -s.alpha / 2.0
    mean_rss_m = s.p_m * d2m**neg_a2  # fading-averaged RSS per macro BS
    mean_rss_s = s.p_s * d2s**neg_a2
    h_m = rng.exponential(size=n_m)
    h_s = rng.exponential(size=n_s)
    total_m = float(mean_rss_m @ h_m)
    total_s = float(mean_rss_s @ h_s)

    i_macro = int(np.argmin(d2m))
    macro_rss = float(mean_rss_m[i_macro])

    if model is AssociationModel.NONCOOP:
        i_small = int(np.argmin(d2s))
        sbs_won = float(mean_rss_s[i_small]) > macro_rss
        if sbs_won:
            signal = float(mean_rss_s[i_small] * h_s[i_small])
            interference = total_m + total_s - signal
        else:
            signal = float(macro_rss * h_m[i_macro])
            interference = total_m - signal + total_s
    else:
        k = s.k
        if k < n_s:
            cluster = np.argpartition(d2s, k - 1)[:k]
        else:
            cluster = np.arange(n_s)
        cluster_mean = float(mean_rss_s[cluster].sum())
        sbs_won = cluster_mean > macro_rss
        if sbs_won:
            if combining == "power_sum":
                # One effective unit-mean exponential on the summed mean RSS.
                signal = float(rng.exponential() * cluster_mean)
            elif combining == "coherent":
                # Squared magnitude of the complex amplitude sum with
                # independent CN(0,1) channels (uniform phases).
                z = rng.standard_normal(2 * k)
                amp = np.sqrt(mean_rss_s[cluster] / 2.0)
                re = float(amp @ z[:k])
                imag = float(amp @ z[k:])
                signal = re * re + imag * imag
            else:
                raise ValueError(f"unknown combining mode: {combining!r}")
            interference = total_m + total_s - float(mean_rss_s[cluster] @ h_s[cluster])
        else:
            signal = float(macro_rss * h_m[i_macro])
            interference = total_m - signal + total_s
    interference = max(interference, 0.0)
    sinr = signal / (interference + s.sigma2)
    return bool(sbs_won), sinr, resamples


def simulate_realization(
    s: Scenario,
    model: AssociationModel | str,
    rng: np.random.Generator,
    radius_max: float | None = None,
    combining: str = "power_sum",
) -> dict:
    """Simulate a single realization; returns winner tier, SINR and rate."""
    model = AssociationModel(model)
    radius = radius_max if radius_max is not None else default_radius(s)
    r2 = radius * radius
    mu_m = s.lambda_m * math.pi * r2
    mu_s = s.lambda_s * math.pi * r2
    sbs_won, sinr, _ = _one_realization(s, model, combining, r2, mu_m, mu_s, rng)
    return {
        "winner": "sbs" if sbs_won else "mbs",
        "sinr": sinr,
        "rate": math.log2(1.0 + sinr),
    }


def _sinr_block(args) -> tuple[np.ndarray, np.ndarray, int]:
    s, model, combining, radius, seed, block_idx, n = args
    rng = _stream(seed, block_idx)
    r2 = radius * radius
    mu_m = s.lambda_m * math.pi * r2
    mu_s = s.lambda_s * math.pi * r2
    won = np.empty(n, dtype=bool)
    sinr = np.empty(n, dtype=float)
    resamples = 0
    for i in range(n):
        won[i], sinr[i], extra = _one_realization(s, model, combining, r2, mu_m, mu_s, rng)
        resamples += extra
    return won, sinr, resamples


def collect_sinr_samples(
    s: Scenario,
    model: AssociationModel | str,
    settings: SimSettings,
    combining: str = "power_sum",
) -> tuple[np.ndarray, np.ndarray, int]:
    """(sbs_won, sinr) arrays over all replications, in block order."""
    model = AssociationModel(model)
    radius = settings.radius_max if settings.radius_max is not None else default_radius(s)
    args = [
        (s, model, combining, radius, settings.seed, idx, n)
        for idx, n in _blocks(settings.n_reps, _SINR_BLOCK)
    ]
    parts = _run_blocks(_sinr_block, args, settings.n_workers)
    won = np.concatenate([p[0] for p in parts])
    sinr = np.concatenate([p[1] for p in parts])
    resamples = sum(p[2] for p in parts)
    return won, sinr, resamples


# ---------------------------------------------------------------------------
# Vectorized nearest-distance path (association, macro-vs-cluster oracle)
# ---------------------------------------------------------------------------


def _sufficient_radius(lam: float, k: int) -> float:
    """Disk radius whose Poisson mass below k points is ~1e-12 or less, so
    nearest-k statistics on the disk match the infinite process."""
    return math.sqrt((60.0 + 10.0 * k) / (math.pi * lam))


def _poisson_at_least(rng: np.random.Generator, mu: float, n: int, minimum: int) -> tuple[np.ndarray, int]:
    counts = rng.poisson(mu, n)
    resamples = 0
    while True:
        bad = counts < minimum
        n_bad = int(bad.sum())
        if n_bad == 0:
            return counts, resamples
        counts[bad] = rng.poisson(mu, n_bad)
        resamples += n_bad


def _k_smallest_sq_radii(
    rng: np.random.Generator, mu: float, r2_disk: float, n: int, k: int
) -> tuple[np.ndarray, int]:
    """Squared distances of the k nearest points per replication, (n, k)."""
    counts, resamples = _poisson_at_least(rng, mu, n, k)
    offsets = np.zeros(n, dtype=np.int64)
    np.cumsum(counts[:-1], out=offsets[1:])
    u = np.maximum(rng.random(int(counts.sum())), _U_FLOOR)
    if k == 1:
        smallest = np.minimum.reduceat(u, offsets)[:, None]
    else:
        seg = np.repeat(np.arange(n, dtype=np.int64), counts)
        order = np.lexsort((u, seg))
        u_sorted = u[order]
        smallest = np.column_stack([u_sorted[offsets + j] for j in range(k)])
    return r2_disk * smallest, resamples


def _nearest_block(args) -> tuple[np.ndarray, np.ndarray, int]:
    s, k_small, radius_cap, seed, block_idx, n = args
    rng = _stream(seed, block_idx)
    r_m = min(_sufficient_radius(s.lambda_m, 1), radius_cap)
    r_s = min(_sufficient_radius(s.lambda_s, k_small), radius_cap)
    mu_m = s.lambda_m * math.pi * r_m * r_m
    mu_s = s.lambda_s * math.pi * r_s * r_s
    d2m, res_m = _k_smallest_sq_radii(rng, mu_m, r_m * r_m, n, 1)
    d2s, res_s = _k_smallest_sq_radii(rng, mu_s, r_s * r_s, n, k_small)
    return d2m[:, 0], d2s, res_m + res_s


def _collect_nearest(
    s: Scenario, k_small: int, settings: SimSettings
) -> tuple[np.ndarray, np.ndarray, int]:
    """Nearest macro (squared) and k nearest small (squared) per replication.

    Uses per-tier disks just large enough that the nearest-k statistic is
    exact to ~1e-12 (the global interference radius is irrelevant here and
    would waste orders of magnitude of sampling effort).
    """
    radius_cap = settings.radius_max if settings.radius_max is not None else default_radius(s)
    mu_guess = max(
        s.lambda_m * math.pi * min(_sufficient_radius(s.lambda_m, 1), radius_cap) ** 2
        + s.lambda_s * math.pi * min(_sufficient_radius(s.lambda_s, k_small), radius_cap) ** 2,
        1.0,
    )
    block = max(1024, int(_FAST_TARGET_POINTS / mu_guess))
    args = [
        (s, k_small, radius_cap, settings.seed, idx, n)
        for idx, n in _blocks(settings.n_reps, block)
    ]
    parts = _run_blocks(_nearest_block, args, settings.n_workers)
    d2m = np.concatenate([p[0] for p in parts])
    d2s = np.vstack([p[1] for p in parts])
    resamples = sum(p[2] for p in parts)
    return d2m, d2s, resamples


def estimate_association(
    s: Scenario, model: AssociationModel | str, settings: SimSettings
) -> McEstimate:
    """Empirical probability that the small tier wins the RSS comparison."""
    model = AssociationModel(model)
    k_small = s.k if model is AssociationModel.COOP else 1
    d2m, d2s, resamples = _collect_nearest(s, k_small, settings)
    neg_a2 = -s.alpha / 2.0
    macro_rss = s.p_m * d2m**neg_a2
    small_rss = s.p_s * (d2s**neg_a2).sum(axis=1)
    won = (small_rss > macro_rss).astype(float)
    mean, stderr = _mean_stderr(won)
    return McEstimate(
        mean=mean,
        stderr=stderr,
        n_reps=settings.n_reps,
        seed=settings.seed,
        metric_id=f"assoc_sbs_{model.value}",
        n_resampled=resamples,
    )


def estimate_macro_win_multi(
    s: Scenario, radii: Sequence[float], settings: SimSettings
) -> list[McEstimate]:
    """Empirical macro-vs-cluster win probability at several macro distances,
    sharing one set of cluster samples across all radii."""
    _, d2s, resamples = _collect_nearest_small_only(s, settings)
    neg_a2 = -s.alpha / 2.0
    cluster_sum = (d2s**neg_a2).sum(axis=1)  # sum of r_j^-alpha
    out = []
    for r in radii:
        threshold = s.power_ratio * float(r) ** (-s.alpha)
        won = (threshold > cluster_sum).astype(float)
        mean, stderr = _mean_stderr(won)
        out.append(
            McEstimate(
                mean=mean,
                stderr=stderr,
                n_reps=settings.n_reps,
                seed=settings.seed,
                metric_id=f"macro_win_r{float(r):g}",
                n_resampled=resamples,
            )
        )
    return out


def _small_only_block(args) -> tuple[np.ndarray, int]:
    s, radius_cap, seed, block_idx, n = args
    rng = _stream(seed, block_idx)
    r_s = min(_sufficient_radius(s.lambda_s, s.k), radius_cap)
    mu_s = s.lambda_s * math.pi * r_s * r_s
    return _k_smallest_sq_radii(rng, mu_s, r_s * r_s, n, s.k)


def _collect_nearest_small_only(s: Scenario, settings: SimSettings) -> tuple[None, np.ndarray, int]:
    radius_cap = settings.radius_max if settings.radius_max is not None else default_radius(s)
    r_s = min(_sufficient_radius(s.lambda_s, s.k), radius_cap)
    mu = max(s.lambda_s * math.pi * r_s * r_s, 1.0)
    block = max(1024, int(_FAST_TARGET_POINTS / mu))
    args = [
        (s, radius_cap, settings.seed, idx, n) for idx, n in _blocks(settings.n_reps, block)
    ]
    parts = _run_blocks(_small_only_block, args, settings.n_workers)
    d2s = np.vstack([p[0] for p in parts])
    resamples = sum(p[1] for p in parts)
    return None, d2s, resamples


def estimate_macro_win(s: Scenario, r: float, settings: SimSettings) -> McEstimate:
    """Single-radius version of :func:`estimate_macro_win_multi`."""
    return estimate_macro_win_multi(s, [r], settings)[0]


# ---------------------------------------------------------------------------
# Interference Laplace transform oracle
# ---------------------------------------------------------------------------


def _laplace_block(args) -> np.ndarray:
    s, lap_s, excl_macro, excl_small, radius, seed, block_idx, n = args
    rng = _stream(seed, block_idx)
    neg_a2 = -s.alpha / 2.0
    interference = np.zeros(n)
    for lam, power, d in (
        (s.lambda_m, s.p_m, excl_macro),
        (s.lambda_s, s.p_s, excl_small),
    ):
        d2_lo = d * d
        d2_hi = radius * radius
        if d2_hi <= d2_lo:
            continue
        mu = lam * math.pi * (d2_hi - d2_lo)
        counts = rng.poisson(mu, n)
        total = int(counts.sum())
        # Annulus PPP: squared radii uniform on (d^2, R^2).
        d2 = d2_lo + (d2_hi - d2_lo) * np.maximum(rng.random(total), _U_FLOOR)
        h = rng.exponential(size=total)
        seg = np.repeat(np.arange(n, dtype=np.int64), counts)
        interference += np.bincount(seg, weights=power * d2**neg_a2 * h, minlength=n)
    return np.exp(-lap_s * interference)


def estimate_laplace(
    s: Scenario,
    lap_s: float,
    excl_macro: float,
    excl_small: float,
    settings: SimSettings,
) -> McEstimate:
    """Sample mean of exp(-lap_s * I) with interferers outside fixed
    exclusion radii; the empirical Laplace transform of interference."""
    radius = settings.radius_max if settings.radius_max is not None else default_radius(s)
    mu = max(s.lambda_m * math.pi * radius**2 + s.lambda_s * math.pi * radius**2, 1.0)
    block = max(256, int(_FAST_TARGET_POINTS / mu))
    args = [
        (s, lap_s, excl_macro, excl_small, radius, settings.seed, idx, n)
        for idx, n in _blocks(settings.n_reps, block)
    ]
    parts = _run_blocks(_laplace_block, args, settings.n_workers)
    values = np.concatenate(parts)
    mean, stderr = _mean_stderr(values)
    return McEstimate(
        mean=mean,
        stderr=stderr,
        n_reps=settings.n_reps,
        seed=settings.seed,
        metric_id=f"laplace_s{lap_s:g}",
    )


# ---------------------------------------------------------------------------
# Coverage / rate estimators and the metric dispatcher
# ---------------------------------------------------------------------------


def _conditional_estimate(
    values: np.ndarray, mask: np.ndarray, metric_id: str, settings: SimSettings, resamples: int
) -> McEstimate:
    subset = values[mask]
    if subset.size == 0:
        return McEstimate(float("nan"), float("inf"), 0, settings.seed, metric_id, resamples)
    mean, stderr = _mean_stderr(subset)
    return McEstimate(mean, stderr, int(subset.size), settings.seed, metric_id, resamples)


def coverage_table(
    s: Scenario,
    model: AssociationModel | str,
    thetas: Sequence[float],
    settings: SimSettings,
    combining: str = "power_sum",
) -> dict[str, McEstimate]:
    """Association, conditional/overall coverage at each threshold, and mean
    rate, all from a single simulation pass."""
    model = AssociationModel(model)
    won, sinr, resamples = collect_sinr_samples(s, model, settings, combining)
    tag = model.value
    out: dict[str, McEstimate] = {}
    won_f = won.astype(float)
    mean, stderr = _mean_stderr(won_f)
    out[f"assoc_sbs_{tag}"] = McEstimate(
        mean, stderr, settings.n_reps, settings.seed, f"assoc_sbs_{tag}", resamples
    )
    all_mask = np.ones(won.size, dtype=bool)
    for theta in thetas:
        covered = (sinr > theta).astype(float)
        for event, mask in (("mbs", ~won), ("sbs", won), ("overall", all_mask)):
            metric_id = f"cov_{event}_{tag}_theta{theta:g}"
            out[metric_id] = _conditional_estimate(covered, mask, metric_id, settings, resamples)
    rate = np.log2(1.0 + sinr)
    mean, stderr = _mean_stderr(rate)
    out[f"rate_{tag}"] = McEstimate(
        mean, stderr, settings.n_reps, settings.seed, f"rate_{tag}", resamples
    )
    return out


def estimate_coverage(
    s: Scenario,
    model: AssociationModel | str,
    theta: float,
    settings: SimSettings,
    event: str = "overall",
    combining: str = "power_sum",
) -> McEstimate:
    """Empirical P(SINR > theta), overall or conditioned on the serving tier."""
    if event not in ("overall", "mbs", "sbs"):
        raise ValueError("event must be one of overall|mbs|sbs")
    table = coverage_table(s, model, [theta], settings, combining)
    return table[f"cov_{event}_{AssociationModel(model).value}_theta{theta:g}"]


def estimate_rate(
    s: Scenario,
    model: AssociationModel | str,
    settings: SimSettings,
    combining: str = "power_sum",
) -> McEstimate:
    """Empirical mean of log2(1 + SINR) under the chosen association model."""
    model = AssociationModel(model)
    won, sinr, resamples = collect_sinr_samples(s, model, settings, combining)
    rate = np.log2(1.0 + sinr)
    mean, stderr = _mean_stderr(rate)
    return McEstimate(
        mean, stderr, settings.n_reps, settings.seed, f"rate_{model.value}", resamples
    )


_METRICS = ("assoc", "coverage", "rate", "macro_win", "laplace")


def estimate(
    metric: str,
    s: Scenario,
    model: AssociationModel | str = AssociationModel.NONCOOP,
    settings: SimSettings | None = None,
    theta: float | None = None,
    radius: float | None = None,
    lap_s: float | None = None,
    excl_macro: float | None = None,
    excl_small: float | None = None,
    event: str = "overall",
    combining: str = "power_sum",
    target_stderr: float | None = None,
) -> McEstimate:
    """Dispatch to the estimator for ``metric``.

    Metrics: ``assoc`` (small-tier association frequency), ``coverage``
    (needs ``theta``), ``rate``, ``macro_win`` (needs ``radius``),
    ``laplace`` (needs ``lap_s``, ``excl_macro``, ``excl_small``).  When
    ``target_stderr`` is given and not met, an InsufficientSamplesWarning
    is emitted (the estimate is still returned).
    """
    if settings is None:
        raise ValueError("settings is required")
    if metric == "assoc":
        result = estimate_association(s, model, settings)
    elif metric == "coverage":
        if theta is None:
            raise ValueError("coverage needs theta")
        result = estimate_coverage(s, model, theta, settings, event=event, combining=combining)
    elif metric == "rate":
        result = estimate_rate(s, model, settings, combining=combining)
    elif metric == "macro_win":
        if radius is None:
            raise ValueError("macro_win needs radius")
        result = estimate_macro_win(s, radius, settings)
    elif metric == "laplace":
        if lap_s is None or excl_macro is None or excl_small is None:
            raise ValueError("laplace needs lap_s, excl_macro and excl_small")
        result = estimate_laplace(s, lap_s, excl_macro, excl_small, settings)
    else:
        raise ValueError(f"unknown metric {metric!r}; choose from {_METRICS}")
    if target_stderr is not None and not (result.stderr <= target_stderr):
        warnings.warn(
            f"{result.metric_id}: stderr {result.stderr:.3g} exceeds target "
            f"{target_stderr:.3g}; increase n_reps",
            InsufficientSamplesWarning,
            stacklevel=2,
        )
    return result
