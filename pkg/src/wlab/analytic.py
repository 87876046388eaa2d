"""Closed-form laws for first and last hitting times, and related functionals.

Two parameter families appear throughout: the first-hitting time T_a of
level a by a standard Brownian motion from 0, with density

    f_a(t) = |a| exp(-a^2 / (2t)) / sqrt(2 pi t^3),

and the last time g that a three-dimensional Bessel process from r > 0
visits its all-time infimum, with density

    p_r(t) = (1 - exp(-r^2 / (2t))) / (r sqrt(2 pi t)).

p_r is exactly the mixture of f_a over a = r*u with u uniform on (0,1],
which is the identity :func:`mixture_identity_gap` checks numerically.

Quadrature note: p_r blows up like t^(-1/2) at 0+, so every integral of it
here is computed after the substitution t = u^2, under which the integrand
2u * p_r(u^2) becomes smooth and bounded by 2/(r sqrt(2 pi)). The heavy
t^(-3/2) tail is cut at a point T where the analytic tail bound drops
below the tolerance budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .stats import integrate_adaptive

__all__ = [
    "HitLawParams", "GLawParams",
    "first_hit_density", "first_hit_tail_bound",
    "g_density", "g_tail_bound", "g_cdf", "g_cdf_table",
    "g_laplace", "g_laplace_numeric",
    "infimum_cdf", "azema_z", "mixture_identity_gap",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class HitLawParams:
    """Level a != 0 for the Brownian first-hitting time T_a."""

    a: float

    def __post_init__(self):
        if not math.isfinite(self.a) or self.a == 0.0:
            raise ParameterError(f"level a must be finite and nonzero, got {self.a}")


@dataclass(frozen=True)
class GLawParams:
    """Start radius r > 0 for the last-hitting-time law."""

    r: float

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r > 0.0):
            raise ParameterError(f"radius r must be positive, got {self.r}")


def _positive_times(t) -> np.ndarray:
    ts = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(ts)) or np.any(ts <= 0.0):
        raise DomainError(f"time must be finite and positive, got {t}")
    return ts


def first_hit_density(params: HitLawParams, t) -> float | np.ndarray:
    """Density of T_a at t > 0. Accepts scalars or arrays."""
    ts = _positive_times(t)
    out = (abs(params.a) * np.exp(-params.a * params.a / (2.0 * ts))
           / (_SQRT_2PI * ts * np.sqrt(ts)))
    return float(out) if np.isscalar(t) or ts.ndim == 0 else out


def first_hit_tail_bound(params: HitLawParams, t_lo: float) -> float:
    """Upper bound for the mass of T_a beyond t_lo.

    Drops the exponential factor: tail <= |a| sqrt(2 / (pi t_lo)).
    """
    if t_lo <= 0.0:
        return 1.0
    return min(1.0, abs(params.a) * math.sqrt(2.0 / (math.pi * t_lo)))


def g_density(params: GLawParams, t) -> float | np.ndarray:
    """Density p_r of the last hitting time at t > 0. Scalars or arrays."""
    ts = _positive_times(t)
    out = -np.expm1(-params.r * params.r / (2.0 * ts)) / (
        params.r * _SQRT_2PI * np.sqrt(ts))
    return float(out) if np.isscalar(t) or ts.ndim == 0 else out


def g_tail_bound(params: GLawParams, t_lo: float) -> float:
    """Upper bound for the mass of g beyond t_lo: r / sqrt(2 pi t_lo)."""
    if t_lo <= 0.0:
        return 1.0
    return min(1.0, params.r / math.sqrt(2.0 * math.pi * t_lo))


def _g_integrand_sqrt(params: GLawParams, u: float) -> float:
    """2u * p_r(u^2), the density after the t = u^2 substitution.

    The factor u cancels exactly, leaving a bounded smooth function with
    value 2/(r sqrt(2 pi)) at u = 0.
    """
    r = params.r
    if u <= 0.0:
        return 2.0 / (r * _SQRT_2PI)
    return -2.0 * math.expm1(-r * r / (2.0 * u * u)) / (r * _SQRT_2PI)


def g_cdf(params: GLawParams, t: float, tol: float = 1e-10) -> float:
    """P(g <= t) by adaptive quadrature of the density."""
    if not math.isfinite(t) or t < 0.0:
        raise DomainError(f"time must be finite and nonnegative, got {t}")
    if t == 0.0:
        return 0.0
    val = integrate_adaptive(lambda u: _g_integrand_sqrt(params, u),
                             0.0, math.sqrt(t), tol)
    return min(1.0, max(0.0, val))


def g_cdf_table(params: GLawParams, times, tol: float = 1e-12):
    """g_cdf at many times, via one incremental sweep in sorted order.

    Adjacent times share quadrature work: the integral is accumulated
    segment by segment, so the cost is one pass regardless of how many
    evaluation points there are. Each segment carries tolerance ``tol``.
    """
    ts = np.asarray(times, dtype=float)
    scalar = np.isscalar(times) or ts.ndim == 0
    ts = np.atleast_1d(ts)
    if not np.all(np.isfinite(ts)) or np.any(ts < 0.0):
        raise DomainError("times must be finite and nonnegative")
    order = np.argsort(ts, kind="stable")
    out = np.empty_like(ts)
    acc = 0.0
    prev_u = 0.0
    fn = lambda u: _g_integrand_sqrt(params, u)
    for idx in order:
        u = math.sqrt(ts[idx])
        if u > prev_u:
            acc += max(0.0, integrate_adaptive(fn, prev_u, u, tol))
            prev_u = u
        out[idx] = min(1.0, acc)
    return float(out[0]) if scalar else out


def g_laplace(params: GLawParams, lam: float) -> float:
    """Closed-form E[exp(-lam * g)] = (1 - exp(-sqrt(2 lam) r)) / (sqrt(2 lam) r)."""
    if not (math.isfinite(lam) and lam > 0.0):
        raise DomainError(f"lam must be positive, got {lam}")
    x = math.sqrt(2.0 * lam) * params.r
    return -math.expm1(-x) / x


def g_laplace_numeric(params: GLawParams, lam: float,
                      tol: float = 1e-8) -> float:
    """E[exp(-lam * g)] by quadrature of the density, for cross-checking
    the closed form through an independent route."""
    if not (math.isfinite(lam) and lam > 0.0):
        raise DomainError(f"lam must be positive, got {lam}")

    def f(u: float) -> float:
        return math.exp(-lam * u * u) * _g_integrand_sqrt(params, u)

    def tail(u_lo: float) -> float:
        t_lo = u_lo * u_lo
        return math.exp(-lam * t_lo) * g_tail_bound(params, t_lo)

    return integrate_adaptive(f, 0.0, math.inf, tol, tail_bound=tail)


def infimum_cdf(params: GLawParams, x) -> float | np.ndarray:
    """CDF of the all-time infimum of the radial process: clamp(x/r, 0, 1)."""
    xs = np.asarray(x, dtype=float)
    out = np.clip(xs / params.r, 0.0, 1.0)
    return float(out) if np.isscalar(x) or xs.ndim == 0 else out


def azema_z(path, t_index: int) -> float:
    """Ratio of running infimum to current value at one sample index.

    Requires strictly positive path values up to the index; the result
    lies in (0, 1] and equals 1 exactly when the current value is the
    running minimum.
    """
    vals = path.values
    if not (0 <= t_index < vals.size):
        raise DomainError(
            f"index {t_index} outside path of length {vals.size}")
    head = vals[:t_index + 1]
    if np.any(head <= 0.0):
        raise DomainError("path must be strictly positive up to the index")
    return float(head.min() / vals[t_index])


def mixture_identity_gap(params: GLawParams, t: float,
                         tol: float = 1e-10) -> float:
    """| p_r(t) - integral_0^1 f_{r u}(t) du |.

    The mixture of first-hit densities over a uniform level fraction
    reproduces the last-hitting density exactly; this returns the
    numerical gap so callers can assert how close to zero it is.
    """
    ts = _positive_times(t)
    t_val = float(ts)
    r = params.r
    denom = _SQRT_2PI * t_val * math.sqrt(t_val)
    if denom == 0.0 or not math.isfinite(denom):
        raise DomainError(
            f"t={t_val} puts the mixture integrand outside double range")
    coef = 1.0 / denom

    def f(u: float) -> float:
        a = r * u
        return a * math.exp(-a * a / (2.0 * t_val)) * coef

    # The integrand is concentrated on u in [0, sqrt(2 t) / r]; when t is
    # small that sliver is invisible to bisection started from [0, 1], so
    # integrate over doubling segments anchored at the scale.  Past 32
    # scales the exponent is at least 1024 and the integrand underflows
    # to an exact zero, so the final piece costs nothing.
    scale = math.sqrt(2.0 * t_val) / r
    bounds = [0.0]
    b = scale
    while b < 1.0:
        bounds.append(b)
        b *= 2.0
        if b > 32.0 * scale:
            break
    bounds.append(1.0)
    mix = sum(integrate_adaptive(f, a, b, tol)
              for a, b in zip(bounds[:-1], bounds[1:]))
    return abs(g_density(params, t_val) - mix)
