"""Adaptive quadrature for semi-infinite and ordered triangular domains.

Thin deterministic layer over QUADPACK (scipy.integrate.quad).  Semi-infinite
integrals either go through QUADPACK's own infinite-interval transform or,
when the caller supplies a characteristic ``scale`` L, through the rational
map r = lower + L*t/(1-t) onto (0, 1).  All integrands in this package have
Gaussian or exponential tails, for which both maps are well conditioned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 200
    truncation_epsilon: float = 1e-12  # tail cutoff for threshold integrals

    def __post_init__(self) -> None:
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be > 0")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be >= 0")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_1D = QuadratureSettings()
DEFAULT_2D = QuadratureSettings(rel_tol=1e-6, abs_tol=1e-10)


class ToleranceNotMetError(ArithmeticError):
    """Quadrature did not converge; carries the best available estimate."""

    def __init__(self, message: str, estimate: float, error_estimate: float):
        super().__init__(message)
        self.estimate = estimate
        self.error_estimate = error_estimate


def _checked_quad(
    f: Callable[[float], float],
    a: float,
    b: float,
    settings: QuadratureSettings,
    rel_tol: float | None = None,
) -> float:
    rel = settings.rel_tol if rel_tol is None else rel_tol
    with np.errstate(over="ignore", invalid="ignore"):
        out = integrate.quad(
            f,
            a,
            b,
            epsabs=settings.abs_tol,
            epsrel=rel,
            limit=settings.max_subdivisions,
            full_output=True,
        )
    value, abserr = out[0], out[1]
    message = out[3] if len(out) > 3 else None
    if not math.isfinite(value):
        raise ToleranceNotMetError(
            f"quadrature did not converge on [{a}, {b}]: {message or 'non-finite result'}",
            estimate=value,
            error_estimate=abserr,
        )
    # QUADPACK may flag e.g. roundoff trouble while the achieved error is
    # still within tolerance; trust the error estimate (with slack for its
    # own uncertainty) and fail only when it misses the target.
    if abserr > 10.0 * max(settings.abs_tol, rel * abs(value)) + 1e-300:
        raise ToleranceNotMetError(
            f"quadrature error estimate {abserr:.3e} exceeds tolerance on [{a}, {b}]"
            + (f" ({message})" if message else ""),
            estimate=value,
            error_estimate=abserr,
        )
    return value


def integrate_interval(
    f: Callable[[float], float],
    a: float,
    b: float,
    settings: QuadratureSettings = DEFAULT_1D,
) -> float:
    """Integrate f on the finite interval [a, b].

    Gauss-Kronrod panels never evaluate at the endpoints, so integrands with
    removable endpoint singularities are acceptable.
    """
    return _checked_quad(f, a, b, settings)


def integrate_semi_infinite(
    f: Callable[[float], float],
    lower: float,
    settings: QuadratureSettings = DEFAULT_1D,
    scale: float | None = None,
) -> float:
    """Integrate f on [lower, inf).

    ``scale``, when given, is the characteristic decay length of the
    integrand; the domain is then mapped through r = lower + scale*t/(1-t)
    so adaptive refinement happens in well-scaled coordinates.  Without it
    QUADPACK's built-in infinite-interval transform is used.

    Raises ToleranceNotMetError (carrying the best estimate) when the
    subdivision budget is exhausted or the integral diverges.
    """
    if scale is None:
        return _checked_quad(f, lower, np.inf, settings)
    if scale <= 0:
        raise ValueError("scale must be > 0")

    def mapped(t: float) -> float:
        onem = 1.0 - t
        r = lower + scale * t / onem
        return f(r) * scale / (onem * onem)

    return _checked_quad(mapped, 0.0, 1.0, settings)


def integrate_ordered_2d(
    f: Callable[[float, float], float],
    settings: QuadratureSettings = DEFAULT_2D,
    scale: float | None = None,
) -> float:
    """Integrate f over the ordered wedge {0 < r1 < r2 < inf}.

    Computed as an iterated adaptive integral: outer over r1 in [0, inf),
    inner over r2 in [r1, inf).  The inner integral runs at a tighter
    tolerance so its residual error behaves as noise well below the outer
    tolerance.
    """
    inner_rel = settings.rel_tol / 20.0

    def _inner(r1: float) -> float:
        if scale is None:
            return _checked_quad(lambda r2: f(r1, r2), r1, np.inf, settings, rel_tol=inner_rel)

        def mapped(t: float) -> float:
            onem = 1.0 - t
            r2 = r1 + scale * t / onem
            return f(r1, r2) * scale / (onem * onem)

        return _checked_quad(mapped, 0.0, 1.0, settings, rel_tol=inner_rel)

    if scale is None:
        return _checked_quad(_inner, 0.0, np.inf, settings)

    def mapped_outer(t: float) -> float:
        onem = 1.0 - t
        r1 = scale * t / onem
        return _inner(r1) * scale / (onem * onem)

    return _checked_quad(mapped_outer, 0.0, 1.0, settings)
