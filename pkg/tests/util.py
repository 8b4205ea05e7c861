"""Shared test oracles: brute-force sums and binned goodness-of-fit checks."""

from __future__ import annotations

import numpy as np
from scipy import integrate, stats


def riemann_midpoint(f, a: float, b: float, n: int) -> float:
    """Midpoint Riemann sum with n panels; the brute-force integral oracle."""
    edges = np.linspace(a, b, n + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    return float(np.sum(f(mids)) * (b - a) / n)


def chi2_binned_1d(samples: np.ndarray, pdf, n_bins: int = 25) -> tuple[float, float]:
    """Chi-squared statistic of samples against a density, plus the 1%
    critical value.  Bins come from sample quantiles (plus open tails);
    expected masses are quadratures of the density over each bin.
    """
    qs = np.quantile(samples, np.linspace(0.0, 1.0, n_bins + 1)[1:-1])
    edges = np.concatenate(([0.0], qs, [np.inf]))
    observed, _ = np.histogram(samples, bins=edges)
    n = samples.size
    expected = np.empty(n_bins)
    acc = 0.0
    for i in range(n_bins - 1):
        mass, _ = integrate.quad(pdf, edges[i], edges[i + 1], limit=200)
        expected[i] = n * mass
        acc += mass
    expected[-1] = n * max(1.0 - acc, 1e-12)
    stat = float(np.sum((observed - expected) ** 2 / expected))
    crit = float(stats.chi2.ppf(0.99, n_bins - 1))
    return stat, crit


def chi2_binned_2d(samples: np.ndarray, pdf2, n_bins: int = 5) -> tuple[float, float]:
    """Chi-squared check of ordered pair samples (n, 2) against a joint
    density on {0 < r1 < r2}.  Rectangular cells from marginal quantiles;
    cell masses integrate the density over the cell intersected with the
    ordered wedge; residual mass goes to a catch-all cell.
    """
    r1, r2 = samples[:, 0], samples[:, 1]
    e1 = np.concatenate(([0.0], np.quantile(r1, np.linspace(0, 1, n_bins + 1)[1:-1]), [np.inf]))
    e2 = np.concatenate(([0.0], np.quantile(r2, np.linspace(0, 1, n_bins + 1)[1:-1]), [np.inf]))
    n = samples.shape[0]
    observed, _, _ = np.histogram2d(r1, r2, bins=(e1, e2))

    # Integration needs finite limits; clip the open tails far into the
    # density's negligible-mass region based on the samples themselves.
    hi1 = float(np.max(r1)) * 3.0
    hi2 = float(np.max(r2)) * 3.0
    cells = []
    acc = 0.0
    for i in range(n_bins):
        for j in range(n_bins):
            a1, b1 = e1[i], min(e1[i + 1], hi1)
            a2, b2 = e2[j], min(e2[j + 1], hi2)
            if b2 <= a1:  # cell entirely below the wedge
                cells.append((observed[i, j], 0.0))
                continue
            mass, _ = integrate.dblquad(
                lambda rr2, rr1: pdf2(rr1, rr2),
                a1,
                b1,
                lambda rr1: max(a2, rr1),
                lambda rr1: max(b2, rr1),
                epsabs=1e-10,
                epsrel=1e-8,
            )
            cells.append((observed[i, j], n * mass))
            acc += mass
    # catch-all for mass the finite integration window missed
    obs_sum = sum(o for o, _ in cells)
    cells.append((n - obs_sum, n * max(1.0 - acc, 1e-12)))

    stat = 0.0
    dof = -1
    rest_obs = 0.0
    rest_exp = 0.0
    for obs, exp in cells:
        if exp < 8.0:  # merge sparse cells
            rest_obs += obs
            rest_exp += exp
            continue
        stat += (obs - exp) ** 2 / exp
        dof += 1
    if rest_exp >= 8.0:
        stat += (rest_obs - rest_exp) ** 2 / rest_exp
        dof += 1
    crit = float(stats.chi2.ppf(0.99, max(dof, 1)))
    return float(stat), crit


def sample_nearest_sbs_distances(lam: float, radius: float, n_reps: int, k: int, seed: int) -> np.ndarray:
    """Independent brute-force sampler of the k nearest PPP distances,
    written against raw numpy (no package code) for oracle independence.
    Disk radius must make P(fewer than k points) negligible.
    """
    rng = np.random.default_rng(seed)
    mu = lam * np.pi * radius * radius
    counts = rng.poisson(mu, n_reps)
    while (counts < k).any():
        bad = counts < k
        counts[bad] = rng.poisson(mu, int(bad.sum()))
    total = int(counts.sum())
    r = radius * np.sqrt(rng.random(total))
    seg = np.repeat(np.arange(n_reps), counts)
    order = np.lexsort((r, seg))
    r_sorted = r[order]
    offsets = np.zeros(n_reps, dtype=np.int64)
    np.cumsum(counts[:-1], out=offsets[1:])
    return np.column_stack([r_sorted[offsets + j] for j in range(k)])
