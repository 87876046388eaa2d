"""Path decomposition of the radial process, and the law verifications.

The construction: run a Brownian motion B' from r until it first reaches
the level m = r*U (U uniform on (0,1]), call that time g, then continue
with m plus an independent three-dimensional radial process from 0. The
glued path is a BES(3) from r; m is its all-time infimum and g the last
time the infimum is visited. Each verification operation here checks one
piece of that statement against the closed forms in :mod:`wlab.analytic`
or against the direct radial sampler.

Discretization choices that matter for the statistics:

* A sample at exactly time g with value exactly m is inserted into the
  glued grid. The pre piece stays strictly above m by the first-passage
  definition and the post piece is m plus a nonnegative radius, so the
  full-path discrete infimum equals m exactly, which removes the
  O(sqrt(dt)) bias a plain grid minimum would add to the infimum-law test.
* Crossing detection defaults to endpoint straddling. The Brownian-bridge
  within-step detection (``bridge_crossing=True``) samples, per step, the
  exact probability that the continuous path dips to m inside the step;
  verification pipelines enable it because at dt = 1e-3 the straddle-only
  variant misses enough early crossings to push the g-law KS statistic
  past its acceptance threshold.
* Construction grids open with a few geometrically shrinking sub-steps
  near 0 (see :func:`williams_grid`) because a few percent of the g mass
  sits below the first uniform step.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .analytic import (GLawParams, g_cdf, g_cdf_table, g_laplace,
                       infimum_cdf)
from .errors import (DegenerateInputError, DomainError, GridError,
                     ParameterError, ShapeError, TruncationError)
from .paths import (Path, PathEnsemble, ProcessParams, TimeGrid,
                    _radial_from, stream_rng)
from .stats import CheckResult, TestReport, ks_one_sample, ks_two_sample, \
    normality_check

__all__ = [
    "WilliamsRealization", "GEstimate", "construct_williams", "estimate_g",
    "verify_bes3_law", "verify_g_law", "verify_infimum_law", "verify_azema",
    "residual_bm_check", "williams_grid", "WilliamsBatch",
    "run_williams_batch", "azema_study", "write_realizations_csv",
]


@dataclass(frozen=True)
class WilliamsRealization:
    """One glued path with its construction metadata.

    ``g`` is the glue time, ``m`` the level r*u the pre piece ran down to,
    ``pre_grid_len`` the number of samples strictly before g. A truncated
    realization (hitting not observed before the horizon) carries the
    partial path with ``g`` = nan; most consumers must exclude it.
    """

    path: Path
    g: float
    m: float
    u: float
    pre_grid_len: int
    truncated: bool = False

    @property
    def horizon(self) -> float:
        return self.path.grid.horizon


@dataclass(frozen=True)
class GEstimate:
    """Finite-horizon estimate of the last infimum-visit time."""

    g_hat: float
    i_hat: float
    horizon: float
    truncation_flag: bool
    stability_window: float = 0.0


def construct_williams(r: float, grid: TimeGrid, rng,
                       *, bridge_crossing: bool = False,
                       u_override: float | None = None) -> WilliamsRealization:
    """Build one glued realization on the given grid.

    ``rng`` is the path's own generator (or an integer, taken as a master
    seed for stream 0). Draw order within the stream: the uniform for u,
    one normal per grid step for the pre piece, then (bridge mode only)
    one uniform per grid step, then the post-piece normals, three per
    remaining grid time. ``u_override`` forces u without consuming the
    uniform; it exists for tests.

    Raises TruncationError, carrying the partial path, when the level is
    not reached before the horizon. The partial path is a valid radial
    path on its window (the glued process agrees with B' before g), so
    marginal statistics at early times may still use it.
    """
    if not (math.isfinite(r) and r > 0.0):
        raise ParameterError(f"r must be positive, got {r}")
    times = grid.times
    if times[0] != 0.0:
        raise GridError("the decomposition grid must start at t = 0")
    if isinstance(rng, (int, np.integer)):
        rng = stream_rng(int(rng), 0)

    if u_override is not None:
        u = float(u_override)
        if not (0.0 < u <= 1.0):
            raise ParameterError(f"u must lie in (0, 1], got {u}")
    else:
        u = 1.0 - rng.random()
    m = r * u

    diffs = np.diff(times)
    incs = rng.standard_normal(diffs.size) * np.sqrt(diffs)
    b = np.empty(times.size)
    b[0] = r
    np.cumsum(incs, out=b[1:])
    b[1:] += r

    if u == 1.0:
        g = 0.0
        hit_idx = -1
    else:
        d0 = b[:-1] - m
        d1 = b[1:] - m
        if bridge_crossing:
            us = rng.random(diffs.size)
            arg = np.minimum(-2.0 * d0 * d1 / diffs, 0.0)
            hit = us < np.exp(arg)
        else:
            hit = d1 <= 0.0
        if not np.any(hit):
            raise TruncationError(
                f"level {m:g} not reached before horizon {times[-1]:g}",
                partial_path=Path(grid, b), u=u, m=m)
        j = int(np.argmax(hit))
        b0, b1 = b[j], b[j + 1]
        if b1 <= m:
            if b1 == m:
                g = float(times[j + 1])
            else:
                g = float(times[j] + diffs[j] * (b0 - m) / (b0 - b1))
        else:
            # bridge-detected within-step crossing between two endpoints
            # above m: split the step by the relative distances to m
            g = float(times[j] + diffs[j] * (b0 - m) / ((b0 - m) + (b1 - m)))
        hit_idx = j

    pre_mask = times < g
    post_mask = times > g
    post_times = times[post_mask]
    out_times = np.concatenate([times[pre_mask], [g], post_times])
    offsets = post_times - g
    if offsets.size:
        radii, _ = _radial_from(np.zeros(3),
                                np.diff(np.concatenate([[0.0], offsets])),
                                rng)
        post_vals = m + radii
    else:
        post_vals = np.empty(0)
    out_vals = np.concatenate([b[pre_mask], [m], post_vals])
    return WilliamsRealization(
        path=Path(TimeGrid.explicit(out_times), out_vals),
        g=g, m=m, u=u, pre_grid_len=int(pre_mask.sum()))


def estimate_g(path: Path, stability_window: float) -> GEstimate:
    """Last grid time at which the running infimum strictly decreases.

    Exact value ties resolve to the later index. The truncation flag is
    set when that time falls within ``stability_window`` of the horizon,
    meaning the infimum may still have been decreasing at cutoff.
    """
    horizon = path.grid.horizon
    if not (0.0 <= stability_window < horizon - path.grid.times[0]):
        raise ParameterError(
            f"stability window must lie in [0, horizon), got {stability_window}")
    vals = path.values
    i_hat = float(vals.min())
    idx = int(np.flatnonzero(vals == i_hat)[-1])
    g_hat = float(path.grid.times[idx])
    return GEstimate(g_hat=g_hat, i_hat=i_hat, horizon=horizon,
                     truncation_flag=(horizon - g_hat) <= stability_window,
                     stability_window=stability_window)


def verify_bes3_law(williams_ens: PathEnsemble, direct_ens: PathEnsemble,
                    check_times: Sequence[float], alpha: float) -> TestReport:
    """Two-sample KS comparison of marginals at each check time."""
    if not np.array_equal(williams_ens.grid.times, direct_ens.grid.times):
        raise GridError("ensembles must share one grid")
    checks = []
    for ct in check_times:
        i = williams_ens.grid.index_of(ct)
        ks = ks_two_sample(williams_ens.values[:, i], direct_ens.values[:, i])
        checks.append(CheckResult(
            name=f"ks@t={ct:g}", statistic=ks.statistic,
            passed=ks.p_value > alpha, p_value=ks.p_value, threshold=alpha,
            n1=ks.n1, n2=ks.n2))
    return TestReport(
        name="bes3-marginals", passed=all(c.passed for c in checks),
        checks=checks, seed=williams_ens.master_seed,
        process_tag=f"{williams_ens.process_tag} vs {direct_ens.process_tag}",
        grid=williams_ens.grid.descriptor(), alpha=alpha)


class _GRecord(NamedTuple):
    g: float
    truncated: bool
    horizon: float


def verify_g_law(realizations: Iterable, r: float, alpha: float,
                 lambdas: Sequence[float] = (0.5, 2.0)) -> TestReport:
    """KS and Laplace-transform tests of the glue-time law.

    Consumes anything with ``g``, ``truncated``, and ``horizon``
    attributes (realizations or batch records). Truncated entries are
    excluded from the KS sample; the KS reference is the law conditioned
    on g <= horizon, since an unconditional comparison at any finite
    horizon carries a deterministic deficit of exactly the tail mass.
    The Laplace checks use the whole population, counting a truncated
    path's contribution as 0 (its true contribution is below
    exp(-lambda*horizon)), which keeps them unbiased under truncation.
    """
    gs = []
    n_total = 0
    n_trunc = 0
    horizon = 0.0
    for rec in realizations:
        n_total += 1
        horizon = max(horizon, float(rec.horizon))
        if rec.truncated:
            n_trunc += 1
        else:
            gs.append(rec.g)
    gs = np.asarray(gs, dtype=float)
    if gs.size < 1000:
        raise DegenerateInputError(
            f"g-law test needs >= 1000 untruncated realizations, got {gs.size}")
    params = GLawParams(r)
    total_mass = g_cdf(params, horizon, tol=1e-10)

    def cond_cdf(xs):
        return g_cdf_table(params, xs, tol=1e-12) / total_mass

    ks = ks_one_sample(gs, cond_cdf)
    checks = [CheckResult(
        name="ks-g", statistic=ks.statistic, passed=ks.p_value > alpha,
        p_value=ks.p_value, threshold=alpha, n1=ks.n1,
        detail=f"reference conditioned on g <= {horizon:g} "
               f"(mass {total_mass:.6f})")]
    for lam in lambdas:
        y = np.exp(-lam * gs)
        total = float(y.sum())
        est = total / n_total
        sq = float(np.dot(y, y))
        var = (sq - total * total / n_total) / (n_total - 1)
        se = math.sqrt(max(var, 0.0) / n_total)
        target = g_laplace(params, lam)
        z = (est - target) / se if se > 0 else math.inf * (est != target)
        checks.append(CheckResult(
            name=f"laplace@lam={lam:g}", statistic=float(z),
            passed=abs(z) <= 4.0, threshold=4.0, n1=n_total,
            detail=f"estimate {est:.6f} vs closed form {target:.6f}"))
    frac = n_trunc / n_total
    checks.append(CheckResult(
        name="truncation-fraction", statistic=frac, passed=frac <= 0.10,
        threshold=0.10, n1=n_total))
    notes = [f"excluded {n_trunc} truncated of {n_total} "
             f"(fraction {frac:.4f})"]
    if frac > 0.10:
        notes.append("bias-warning: truncation above 10%, law tests are "
                     "conditioned on an unrepresentative subset")
    return TestReport(
        name="g-law", passed=all(c.passed for c in checks), checks=checks,
        alpha=alpha, notes=notes,
        extra={"horizon": horizon, "n_total": n_total,
               "n_truncated": n_trunc, "r": r})


def verify_infimum_law(infimums: Sequence[float] | np.ndarray, r: float,
                       alpha: float, n_truncated: int = 0) -> TestReport:
    """KS test of full-path infima of untruncated realizations vs x/r."""
    infs = np.asarray(infimums, dtype=float)
    params = GLawParams(r)
    ks = ks_one_sample(infs, lambda xs: infimum_cdf(params, xs))
    n_total = infs.size + n_truncated
    frac = n_truncated / n_total if n_total else 0.0
    checks = [
        CheckResult(name="ks-infimum", statistic=ks.statistic,
                    passed=ks.p_value > alpha, p_value=ks.p_value,
                    threshold=alpha, n1=ks.n1),
        CheckResult(name="truncation-fraction", statistic=frac,
                    passed=frac <= 0.10, threshold=0.10, n1=n_total),
    ]
    return TestReport(
        name="infimum-law", passed=all(c.passed for c in checks),
        checks=checks, alpha=alpha,
        notes=[f"{n_truncated} truncated excluded of {n_total}"],
        extra={"r": r})


def verify_azema(direct_ens: PathEnsemble, realizations_g: Sequence[GEstimate],
                 t: float, n_bins: int) -> TestReport:
    """Calibration of P(g > t) against the pathwise ratio I_t / R_t.

    Bins paths by Z = I_t/R_t and compares, per bin, the frequency of
    {g_hat > t} with the bin's mean Z. Conditionally on the Z values the
    bin frequency is a sum of independent Bernoulli(Z_i) draws, so the
    comparison uses the exact standard error sqrt(sum Z_i(1-Z_i))/n.
    """
    n = direct_ens.n_paths
    if len(realizations_g) != n:
        raise ShapeError(
            f"{len(realizations_g)} estimates for {n} paths")
    if n_bins < 1:
        raise ParameterError("need at least one bin")
    h_min = min(e.horizon for e in realizations_g)
    w_max = max(e.stability_window for e in realizations_g)
    if t > h_min - w_max:
        raise DomainError(
            f"t={t:g} is beyond horizon-stability_window={h_min - w_max:g}; "
            "the event {g_hat > t} is not resolvable there")
    n_flagged = sum(1 for e in realizations_g if e.truncation_flag)
    if n_flagged > 0.10 * n:
        raise DegenerateInputError(
            f"{n_flagged} of {n} estimates carry the truncation flag; "
            "need at least 90% untruncated")

    i_t = direct_ens.grid.index_of(t)
    head = direct_ens.values[:, :i_t + 1]
    if np.any(head <= 0.0):
        raise DomainError("paths must be strictly positive up to t")
    z = head.min(axis=1) / direct_ens.values[:, i_t]
    events = np.fromiter((e.g_hat > t for e in realizations_g),
                         dtype=bool, count=n)

    notes = []
    nb = int(n_bins)
    while True:
        idx = np.minimum((z * nb).astype(int), nb - 1)
        counts = np.bincount(idx, minlength=nb)
        if np.all(counts > 0) or nb == 1:
            break
        nb //= 2
    if nb != n_bins:
        notes.append(f"reduced n_bins from {n_bins} to {nb} to avoid "
                     "empty bins")

    checks = []
    for b in range(nb):
        mask = idx == b
        n_b = int(mask.sum())
        zb = z[mask]
        freq = float(events[mask].mean())
        zbar = float(zb.mean())
        se = math.sqrt(float(np.sum(zb * (1.0 - zb)))) / n_b
        gap = abs(freq - zbar)
        passed = gap <= 4.0 * se if se > 0.0 else gap == 0.0
        checks.append(CheckResult(
            name=f"bin{b}[{b / nb:.2f},{(b + 1) / nb:.2f}]",
            statistic=gap, passed=passed, threshold=4.0 * se, n1=n_b,
            detail=f"freq {freq:.4f} vs mean-Z {zbar:.4f}"))
    return TestReport(
        name="azema-calibration", passed=all(c.passed for c in checks),
        checks=checks, seed=direct_ens.master_seed,
        process_tag=direct_ens.process_tag,
        grid=direct_ens.grid.descriptor(), notes=notes,
        extra={"t": t, "n_bins_used": nb, "n_flagged": n_flagged})


def residual_bm_check(direct_ens: PathEnsemble, alpha: float) -> TestReport:
    """Invert the drift integral and test the leftover increments.

    For a path R of the three-dimensional radial process, the increments
    R_{i+1} - R_i - dt/R_i (left-endpoint rule for the dt/R integral)
    must look like Brownian increments: mean zero, variance dt, Gaussian
    shape. A uniform grid is required.
    """
    dt = direct_ens.grid.dt
    if np.any(direct_ens.values <= 0.0):
        raise DomainError("the drift integral needs strictly positive paths")
    resid = (np.diff(direct_ens.values, axis=1)
             - dt / direct_ens.values[:, :-1])
    rep = normality_check(resid.ravel(), 0.0, dt)
    return TestReport(
        name="residual-bm", passed=rep.passed, checks=rep.checks,
        seed=direct_ens.master_seed, process_tag=direct_ens.process_tag,
        grid=direct_ens.grid.descriptor(), alpha=alpha,
        extra={"dt": dt, "n_increments": int(resid.size)})


# ---------------------------------------------------------------------------
# pipelines

def williams_grid(r: float, horizon_factor: float = 200.0,
                  knee_factor: float = 20.0, dt_factor: float = 1e-3,
                  ratio: float = 1.01, opening: bool = True) -> TimeGrid:
    """Construction grid: fine uniform head, geometric tail, plus a few
    shrinking sub-steps near 0 so early crossings are resolvable.

    All factors scale with r^2 (Brownian scaling), so the same relative
    resolution holds for any start level.
    """
    r2 = r * r
    dt = dt_factor * r2
    horizon = horizon_factor * r2
    knee = knee_factor * r2
    if knee >= horizon:
        base_grid = TimeGrid.uniform(horizon, dt)
    else:
        base_grid = TimeGrid.geometric_tail(dt, knee, horizon, ratio)
    if not opening:
        return base_grid
    base = base_grid.times
    ramp = []
    x = 1e-5 * r2
    while x < dt * (1.0 - 1e-9):
        ramp.append(x)
        x *= 4.0
    return TimeGrid.explicit(np.concatenate([[0.0], ramp, base[1:]]))


@dataclass
class WilliamsBatch:
    """Compact per-realization summaries of one construction run.

    Holds everything the law verifications need (values at the check
    times, g, m, u, full-path infimum, truncation mask) without keeping
    the paths themselves, so large batches stay small in memory.
    """

    r: float
    master_seed: int
    n_paths: int
    check_times: tuple[float, ...]
    check_values: np.ndarray
    g: np.ndarray
    m: np.ndarray
    u: np.ndarray
    infimum: np.ndarray
    truncated: np.ndarray
    horizon: float
    bridge_crossing: bool
    grid_descriptor: dict

    @property
    def n_truncated(self) -> int:
        return int(self.truncated.sum())

    def marginal_ensemble(self) -> PathEnsemble:
        """Values at {0} + check_times as an ensemble for marginal tests.

        Truncated realizations are included: before the glue time the
        glued process coincides with the pre piece, so their check-time
        values are valid marginal samples, and dropping them would skew
        the comparison toward paths with early glue times.
        """
        grid = TimeGrid.explicit([0.0, *self.check_times])
        values = np.column_stack([
            np.full(self.n_paths, self.r), self.check_values])
        return PathEnsemble(grid, values, self.master_seed,
                            f"williams[r={self.r:g}]")

    def g_records(self) -> list[_GRecord]:
        return [_GRecord(float(self.g[i]), bool(self.truncated[i]),
                         self.horizon) for i in range(self.n_paths)]

    def untruncated_infima(self) -> np.ndarray:
        return self.infimum[~self.truncated]


def run_williams_batch(r: float, n_paths: int, master_seed: int,
                       *, grid: TimeGrid | None = None,
                       check_times: Sequence[float] = (0.5, 1.0, 5.0),
                       bridge_crossing: bool = True,
                       horizon_factor: float = 2000.0,
                       knee_factor: float = 5.0,
                       dt_factor: float = 1e-3,
                       ratio: float = 1.01) -> WilliamsBatch:
    """Construct n_paths realizations and reduce each to its summaries.

    The default grid reaches 2000 r^2 (not the construction default of
    200 r^2): the verification pipelines condition their references on
    g <= horizon, and the longer horizon keeps both the truncated
    fraction and the conditioning distortion of the m law far below the
    acceptance thresholds.
    """
    if n_paths < 1:
        raise ParameterError("need at least one realization")
    if grid is None:
        grid = williams_grid(r, horizon_factor, knee_factor, dt_factor,
                             ratio)
    cts = tuple(float(c) for c in check_times)
    base_idx = [grid.index_of(c) for c in cts]
    k = len(cts)
    check_values = np.empty((n_paths, k))
    g = np.empty(n_paths)
    m = np.empty(n_paths)
    u = np.empty(n_paths)
    infimum = np.empty(n_paths)
    truncated = np.zeros(n_paths, dtype=bool)
    for i in range(n_paths):
        rng = stream_rng(master_seed, i)
        try:
            rec = construct_williams(r, grid, rng,
                                     bridge_crossing=bridge_crossing)
            pgrid = rec.path.grid
            for j, c in enumerate(cts):
                check_values[i, j] = rec.path.values[pgrid.index_of(c)]
            g[i] = rec.g
            m[i] = rec.m
            u[i] = rec.u
            infimum[i] = rec.path.values.min()
        except TruncationError as err:
            pvals = err.partial_path.values
            for j, bi in enumerate(base_idx):
                check_values[i, j] = pvals[bi]
            g[i] = math.nan
            m[i] = err.m
            u[i] = err.u
            infimum[i] = pvals.min()
            truncated[i] = True
    return WilliamsBatch(
        r=r, master_seed=master_seed, n_paths=n_paths, check_times=cts,
        check_values=check_values, g=g, m=m, u=u, infimum=infimum,
        truncated=truncated, horizon=grid.horizon,
        bridge_crossing=bridge_crossing, grid_descriptor=grid.descriptor())


def write_realizations_csv(batch: WilliamsBatch, out: io.TextIOBase | str,
                           estimates: Sequence[GEstimate] | None = None) -> None:
    """Per-realization metadata CSV (id, u, m, g, g_hat, truncated)."""
    close = False
    if isinstance(out, str):
        out = open(out, "w", encoding="utf-8", newline="\n")
        close = True
    try:
        from . import __version__
        out.write(f"# williams realizations, version={__version__}\n")
        out.write(f"# master_seed={batch.master_seed}\n")
        out.write(f"# r={batch.r:.17g}, horizon={batch.horizon:.17g}\n")
        out.write("realization_id,u,m,g,g_hat,truncated\n")
        for i in range(batch.n_paths):
            g_hat = (f"{estimates[i].g_hat:.17g}"
                     if estimates is not None else "")
            out.write(f"{i},{batch.u[i]:.17g},{batch.m[i]:.17g},"
                      f"{batch.g[i]:.17g},{g_hat},"
                      f"{str(bool(batch.truncated[i])).lower()}\n")
    finally:
        if close:
            out.close()


# ---------------------------------------------------------------------------
# adaptive continuation for the calibration of P(g > t)

_kernel = None


def _min_tracking_kernel():
    """Compile (once) the adaptive step loop for the radial continuation.

    The step size contracts quadratically as the path approaches its
    running minimum (dt = beta^2 * gap^2, floored at beta^2 (q a)^2 and
    capped at cap_frac * t). Every step is previsible, so each increment
    is an exact three-dimensional Gaussian regardless of the step-size
    sequence; only the *detection* of sub-step dips is approximate, and
    the quadratic contraction makes the probability of an undetected dip
    below the running minimum negligible next to the bin tolerances.
    """
    global _kernel
    if _kernel is None:
        from numba import njit

        @njit(cache=True)
        def kernel(w, t, a, t_max, beta, q, cap_frac, normals, i0,
                   out_t, out_v):
            n_out = 0
            i = i0
            while t < t_max and i + 3 <= normals.size and n_out < out_t.size:
                r = math.sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2])
                gap = r - a
                dt = beta * beta * gap * gap
                floor = beta * beta * q * q * a * a
                if dt < floor:
                    dt = floor
                # when the minimum is extremely deep the quadratic floor
                # can drop below the spacing of floats near t, and t + dt
                # would not advance; keep every step a few ulps wide
                ulp_floor = 5e-16 * t
                if dt < ulp_floor:
                    dt = ulp_floor
                cap = cap_frac * t
                if dt > cap:
                    dt = cap
                rem = t_max - t
                if dt > rem:
                    dt = rem
                s = math.sqrt(dt)
                w[0] += s * normals[i]
                w[1] += s * normals[i + 1]
                w[2] += s * normals[i + 2]
                i += 3
                t += dt
                r = math.sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2])
                out_t[n_out] = t
                out_v[n_out] = r
                n_out += 1
                if r < a:
                    a = r
            return n_out, i, t, a

        _kernel = kernel
    return _kernel


def _continue_tracking_min(rng, coords, t0: float, a0: float, t_max: float,
                           beta: float, q: float, cap_frac: float,
                           block: int = 6144) -> tuple[np.ndarray, np.ndarray]:
    """Extend a radial path from (t0, coords) to t_max with adaptive steps.

    Returns the continuation sample times and radii. Normals are drawn
    from ``rng`` in fixed-size blocks so the draw sequence per stream is
    deterministic.
    """
    kernel = _min_tracking_kernel()
    w = np.array(coords, dtype=float)
    t, a = float(t0), float(a0)
    out_t = np.empty(4096)
    out_v = np.empty(4096)
    ts_parts, vs_parts = [], []
    normals = rng.standard_normal(block)
    i = 0
    while t < t_max:
        n_out, i, t, a = kernel(w, t, a, t_max, beta, q, cap_frac,
                                normals, i, out_t, out_v)
        if n_out:
            ts_parts.append(out_t[:n_out].copy())
            vs_parts.append(out_v[:n_out].copy())
        if t < t_max and i + 3 > normals.size:
            normals = rng.standard_normal(block)
            i = 0
    if not ts_parts:
        return np.empty(0), np.empty(0)
    return np.concatenate(ts_parts), np.concatenate(vs_parts)


def azema_study(r: float, t: float, n_paths: int, master_seed: int,
                n_bins: int = 10, *, prefix_dt: float = 1e-3,
                horizon: float | None = None, beta: float = 0.15,
                q: float = 0.01, cap_frac: float = 0.01) -> TestReport:
    """End-to-end calibration of P(g > t) against I_t / R_t.

    Simulates the radial process exactly on a fine uniform grid over
    [0, t], then continues each path with the adaptive min-tracking
    scheme out to ``horizon`` (default 1e5 * r^2, far enough that the
    probability of the all-time infimum being attained later is well
    under the bin tolerances). g is then estimated per path from the
    combined samples and handed to :func:`verify_azema`.
    """
    if horizon is None:
        horizon = 1e5 * r * r
    stability_window = 0.01 * horizon
    if not t < horizon - stability_window:
        raise DomainError("t must be well inside the continuation horizon")
    grid = TimeGrid.uniform(t, prefix_dt)
    diffs = np.diff(grid.times)
    coords0 = np.array([r, 0.0, 0.0])
    prefix = np.empty((n_paths, grid.n))
    estimates = []
    for i in range(n_paths):
        rng = stream_rng(master_seed, i)
        radii, coords = _radial_from(coords0, diffs, rng)
        prefix[i, 0] = r
        prefix[i, 1:] = radii
        a0 = float(prefix[i].min())
        ts, vs = _continue_tracking_min(rng, coords, t, a0, horizon,
                                        beta, q, cap_frac)
        full = Path(TimeGrid.explicit(np.concatenate([grid.times, ts])),
                    np.concatenate([prefix[i], vs]))
        estimates.append(estimate_g(full, stability_window))
    params = ProcessParams(r0=r, dim_n=3)
    ens = PathEnsemble(grid, prefix, master_seed,
                       f"bes-norm[{params.signature()}]")
    report = verify_azema(ens, estimates, t, n_bins)
    report.extra.update(horizon=horizon, beta=beta, q=q,
                        cap_frac=cap_frac, prefix_dt=prefix_dt, r=r)
    return report
