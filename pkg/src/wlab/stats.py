"""Statistical substrate: KS tests, adaptive quadrature, normality checks.

Everything downstream (identity verification, law comparisons, the CLI)
reports through the :class:`TestReport` type defined here, and every JSON
report emitted by the command line validates against ``REPORT_SCHEMA``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import kolmogorov

from .errors import (DegenerateInputError, DomainError, NumericError,
                     ParameterError, ShapeError, ValidationError)

__all__ = [
    "EmpiricalCdf", "KsResult", "CheckResult", "TestReport", "REPORT_SCHEMA",
    "ks_one_sample", "ks_two_sample", "integrate_adaptive", "normality_check",
]

_MIN_KS_N = 8


@dataclass(frozen=True)
class KsResult:
    """Outcome of a Kolmogorov-Smirnov comparison.

    ``n2`` is 0 for one-sample tests. The p-value uses the asymptotic
    Kolmogorov distribution with the effective sample size.
    """
    statistic: float
    p_value: float
    n1: int
    n2: int = 0

    def __post_init__(self):
        if not (0.0 <= self.statistic <= 1.0):
            raise ValidationError(f"KS statistic {self.statistic} outside [0, 1]")


@dataclass(frozen=True)
class CheckResult:
    """One named check inside a TestReport."""
    name: str
    statistic: float
    passed: bool
    p_value: float | None = None
    threshold: float | None = None
    n1: int = 0
    n2: int = 0
    detail: str = ""


@dataclass
class TestReport:
    """Outcome of a statistical or analytic verification.

    Carries the individual checks plus enough provenance (seed, grid
    descriptor, process tag) to rerun the computation.
    """
    __test__ = False  # not a pytest case despite the Test prefix
    name: str
    passed: bool
    checks: list[CheckResult] = field(default_factory=list)
    seed: int | None = None
    process_tag: str | None = None
    grid: dict | None = None
    alpha: float | None = None
    notes: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_jsonable(self) -> dict:
        from . import __version__
        return {
            "report": self.name,
            "passed": bool(self.passed),
            "version": __version__,
            "seed": self.seed,
            "process_tag": self.process_tag,
            "grid": self.grid,
            "alpha": self.alpha,
            "notes": list(self.notes),
            "checks": [asdict(c) for c in self.checks],
            "extra": self.extra,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_jsonable(), indent=indent, sort_keys=True)


#: JSON schema (draft-07) that every report emitted by the CLI satisfies.
REPORT_SCHEMA: dict = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["report", "passed", "version", "checks"],
    "properties": {
        "report": {"type": "string"},
        "passed": {"type": "boolean"},
        "version": {"type": "string"},
        "seed": {"type": ["integer", "null"]},
        "process_tag": {"type": ["string", "null"]},
        "grid": {"type": ["object", "null"]},
        "alpha": {"type": ["number", "null"]},
        "notes": {"type": "array", "items": {"type": "string"}},
        "extra": {"type": "object"},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "statistic", "passed"],
                "properties": {
                    "name": {"type": "string"},
                    "statistic": {"type": "number"},
                    "passed": {"type": "boolean"},
                    "p_value": {"type": ["number", "null"]},
                    "threshold": {"type": ["number", "null"]},
                    "n1": {"type": "integer"},
                    "n2": {"type": "integer"},
                    "detail": {"type": "string"},
                },
            },
        },
    },
}


class EmpiricalCdf:
    """Right-continuous empirical distribution function of a 1-D sample."""

    def __init__(self, sample: Sequence[float] | np.ndarray):
        data = np.asarray(sample, dtype=float).ravel()
        if data.size == 0:
            raise DegenerateInputError("empty sample")
        if not np.all(np.isfinite(data)):
            raise ValidationError("sample contains non-finite values")
        self.sorted = np.sort(data)
        self.n = data.size

    def __call__(self, x):
        idx = np.searchsorted(self.sorted, x, side="right")
        return idx / self.n


def _eval_cdf(cdf: Callable, xs: np.ndarray) -> np.ndarray:
    """Evaluate a model CDF at sorted points, accepting scalar-only callables."""
    try:
        out = np.asarray(cdf(xs), dtype=float)
        if out.shape == xs.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(cdf(x)) for x in xs])


def ks_one_sample(sample: Sequence[float] | np.ndarray, cdf: Callable) -> KsResult:
    """One-sample KS test of a sample against a model CDF.

    The statistic is the larger of the two one-sided sup gaps evaluated at
    the sample points; the p-value comes from the asymptotic Kolmogorov
    distribution at sqrt(n) * D.
    """
    xs = np.sort(np.asarray(sample, dtype=float).ravel())
    n = xs.size
    if n < _MIN_KS_N:
        raise DegenerateInputError(
            f"one-sample KS needs n >= {_MIN_KS_N}, got {n}")
    if not np.all(np.isfinite(xs)):
        raise ValidationError("sample contains non-finite values")
    f = _eval_cdf(cdf, xs)
    if np.any(f < -1e-12) or np.any(f > 1 + 1e-12):
        raise ValidationError("model CDF left [0, 1] at a sample point")
    if np.any(np.diff(f) < -1e-12):
        raise ValidationError("model CDF is not monotone at the sample points")
    f = np.clip(f, 0.0, 1.0)
    i = np.arange(n)
    d_plus = np.max((i + 1) / n - f)
    d_minus = np.max(f - i / n)
    d = float(min(max(d_plus, d_minus, 0.0), 1.0))
    p = float(kolmogorov(math.sqrt(n) * d))
    return KsResult(d, p, n, 0)


def ks_two_sample(a: Sequence[float] | np.ndarray,
                  b: Sequence[float] | np.ndarray) -> KsResult:
    """Two-sample KS test with the asymptotic p-value at the effective n."""
    xa = np.sort(np.asarray(a, dtype=float).ravel())
    xb = np.sort(np.asarray(b, dtype=float).ravel())
    n1, n2 = xa.size, xb.size
    if n1 == 0 or n2 == 0:
        raise ShapeError("two-sample KS got an empty sample")
    if n1 < _MIN_KS_N or n2 < _MIN_KS_N:
        raise DegenerateInputError(
            f"two-sample KS needs both n >= {_MIN_KS_N}, got {n1}, {n2}")
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(xb))):
        raise ValidationError("sample contains non-finite values")
    pooled = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, pooled, side="right") / n1
    fb = np.searchsorted(xb, pooled, side="right") / n2
    d = float(min(np.max(np.abs(fa - fb)), 1.0))
    n_eff = n1 * n2 / (n1 + n2)
    p = float(kolmogorov(math.sqrt(n_eff) * d))
    return KsResult(d, p, n1, n2)


def _simpson(f, a, fa, b, fb):
    mid = 0.5 * (a + b)
    fm = f(mid)
    if not math.isfinite(fm):
        raise NumericError(f"integrand not finite at {mid}")
    return mid, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb)


# 48 halvings take any span within a few decades of the float lattice;
# past ~52 the bisection midpoint collides with an endpoint and the
# panel comparison degenerates to an exact zero, so a deeper limit could
# never bind and non-convergence would be silent instead of reported
_MAX_DEPTH = 48
_MAX_TAIL_DOUBLINGS = 200


def integrate_adaptive(f: Callable[[float], float], lo: float, hi: float,
                       tol: float = 1e-10,
                       tail_bound: Callable[[float], float] | None = None) -> float:
    """Adaptive Simpson quadrature with an absolute error target.

    ``hi`` may be ``inf`` if ``tail_bound(T)`` gives a bound on the
    integral beyond T; integration then stops at a T where the bound is
    below tol/2 and the remaining budget covers the finite part.

    Raises NumericError (carrying the best estimate and the achieved
    tolerance) if the subdivision limit is hit before the target.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    if not math.isfinite(lo):
        raise DomainError("lower limit must be finite")
    if math.isinf(hi):
        if tail_bound is None:
            raise DomainError("infinite upper limit requires a tail bound")
        # Find the cutoff first, then integrate segment by segment over
        # the doubling boundaries. Integrating [lo, cutoff] in one piece
        # would let the acceptance rule pass on near-zero coarse samples
        # of a huge interval without ever resolving where the mass sits.
        bounds = [lo, max(lo + 1.0, 1.0)]
        for _ in range(_MAX_TAIL_DOUBLINGS):
            if tail_bound(bounds[-1]) < tol / 2.0:
                break
            bounds.append(bounds[-1] * 2.0)
        else:
            raise NumericError("tail bound never fell below tol/2")
        budget = 0.5 * tol / (len(bounds) - 1)
        total = 0.0
        achieved = 0.0
        failed = False
        for a, b in zip(bounds[:-1], bounds[1:]):
            part, part_achieved, part_failed = _adaptive_finite(f, a, b,
                                                                budget)
            total += part
            achieved += part_achieved
            failed = failed or part_failed
    else:
        if not hi > lo:
            raise DomainError(f"need lo < hi, got [{lo}, {hi}]")
        total, achieved, failed = _adaptive_finite(f, lo, hi, tol)
    if failed and achieved > tol:
        raise NumericError(
            f"subdivision limit reached; achieved {achieved:.3e} > tol {tol:.3e}",
            estimate=total, achieved_tol=achieved)
    return total


def _adaptive_finite(f, lo: float, hi: float,
                     budget: float) -> tuple[float, float, bool]:
    """Adaptive Simpson core on a finite interval.

    Returns (estimate, achieved error bound, whether any subinterval hit
    the depth limit while still out of budget).
    """
    fa, fb = f(lo), f(hi)
    if not (math.isfinite(fa) and math.isfinite(fb)):
        raise NumericError("integrand not finite at an endpoint")
    m, fm, whole = _simpson(f, lo, fa, hi, fb)
    stack = [(lo, fa, hi, fb, m, fm, whole, budget, 0)]
    total = 0.0
    achieved = 0.0
    failed = False
    while stack:
        a, fa, b, fb, m, fm, s, eps, depth = stack.pop()
        lm, flm, s_left = _simpson(f, a, fa, m, fm)
        rm, frm, s_right = _simpson(f, m, fm, b, fb)
        delta = s_left + s_right - s
        if abs(delta) <= 15.0 * eps or depth >= _MAX_DEPTH:
            total += s_left + s_right + delta / 15.0
            achieved += abs(delta) / 15.0
            if abs(delta) > 15.0 * eps:
                failed = True
        else:
            stack.append((a, fa, m, fm, lm, flm, s_left, eps / 2.0, depth + 1))
            stack.append((m, fm, b, fb, rm, frm, s_right, eps / 2.0, depth + 1))
    return total, achieved, failed


def normality_check(increments: Sequence[float] | np.ndarray,
                    mean0: float, var0: float) -> TestReport:
    """Check that a sample is consistent with N(mean0, var0).

    Three checks: the mean within 4 standard errors, the sample variance
    within 5 relative standard errors of var0, and the excess kurtosis
    within 5 standard errors of zero.
    """
    xs = np.asarray(increments, dtype=float).ravel()
    n = xs.size
    if n < 100:
        raise DegenerateInputError(f"normality check needs n >= 100, got {n}")
    if var0 <= 0:
        raise ParameterError(f"var0 must be positive, got {var0}")
    if not np.all(np.isfinite(xs)):
        raise ValidationError("sample contains non-finite values")

    mean = float(np.mean(xs))
    z_mean = (mean - mean0) / math.sqrt(var0 / n)
    c_mean = CheckResult("mean", z_mean, abs(z_mean) <= 4.0, threshold=4.0, n1=n)

    s2 = float(np.var(xs, ddof=1))
    rel_se = math.sqrt(2.0 / (n - 1))
    ratio = s2 / var0
    c_var = CheckResult("variance-ratio", ratio,
                        abs(ratio - 1.0) <= 5.0 * rel_se,
                        threshold=5.0 * rel_se, n1=n,
                        detail=f"sample var {s2:.6g} vs {var0:.6g}")

    centered = xs - mean
    m2 = float(np.mean(centered ** 2))
    m4 = float(np.mean(centered ** 4))
    # a degenerate sample has no defined kurtosis; report 0 and let the
    # variance-ratio check carry the failure
    kurt = m4 / (m2 * m2) - 3.0 if m2 > 0.0 else 0.0
    se_k = math.sqrt(24.0 / n)
    c_kurt = CheckResult("excess-kurtosis", kurt, abs(kurt) <= 5.0 * se_k,
                         threshold=5.0 * se_k, n1=n)

    checks = [c_mean, c_var, c_kurt]
    return TestReport(name="normality", passed=all(c.passed for c in checks),
                      checks=checks)
