"""Command line front end.

Every run is reproducible from its arguments: randomness comes only from
``--seed`` (no wall-clock or OS entropy), artifacts embed the seed, grid,
parameters, and tool version, and file writes go through a temp file and
an atomic rename. JSON reports all share the schema in
:data:`wlab.stats.REPORT_SCHEMA`; table commands wrap their rows in the
same report envelope so a single validator covers every JSON artifact.

Exit codes: 0 all checks passed, 1 a statistical check failed, 2 invalid
usage or parameters, 3 numeric failure (non-convergent quadrature,
non-finite values).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass

from . import __version__
from .analytic import (GLawParams, g_density, g_laplace, g_laplace_numeric)
from .errors import NumericError, WlabError
from .paths import (ProcessParams, TimeGrid, build_ensemble,
                    write_ensemble_csv)
from .pi import PiTestConfig, pi_residuals
from .stats import CheckResult, TestReport
from .williams import (azema_study, residual_bm_check, run_williams_batch,
                       verify_bes3_law, verify_g_law)

__all__ = ["main", "build_parser", "RunConfig"]


@dataclass(frozen=True)
class RunConfig:
    """Validated common run parameters."""

    seed: int
    n_paths: int
    r: float
    horizon: float
    dt: float
    alpha: float

    def __post_init__(self):
        if self.n_paths < 1:
            raise WlabError(f"n-paths must be >= 1, got {self.n_paths}")
        if not self.dt > 0.0:
            raise WlabError(f"dt must be positive, got {self.dt}")
        if not self.horizon > self.dt:
            raise WlabError(
                f"horizon {self.horizon} must exceed dt {self.dt}")
        if not 0.0 < self.alpha < 1.0:
            raise WlabError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (math.isfinite(self.r) and self.r > 0.0):
            raise WlabError(f"r must be positive, got {self.r}")
        if not 0 <= self.seed < 2 ** 64:
            raise WlabError(f"seed must fit in 64 bits, got {self.seed}")


def _comma_floats(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}") from err
    if not vals:
        raise argparse.ArgumentTypeError("empty value list")
    return vals


def _time_pairs(text: str) -> tuple[tuple[float, float], ...]:
    pairs = []
    try:
        for tok in text.split(","):
            t_str, s_str = tok.split(":")
            pairs.append((float(t_str), float(s_str)))
    except ValueError as err:
        raise argparse.ArgumentTypeError(
            f"expected t:s pairs like 1:0.5, got {text!r}") from err
    return tuple(pairs)


def _write_text(out: str | None, text: str) -> None:
    """Atomic write-then-rename; '-' or None means stdout."""
    if out is None or out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return
    tmp = out + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
        if not text.endswith("\n"):
            fh.write("\n")
    os.replace(tmp, out)


def _report_csv(report: TestReport) -> str:
    lines = [
        f"# wlab report={report.name}, version={__version__}",
        f"# seed={report.seed}, passed={str(report.passed).lower()}",
        "name,statistic,passed,p_value,threshold,n1,n2,detail",
    ]
    for c in report.checks:
        p = "" if c.p_value is None else f"{c.p_value:.17g}"
        thr = "" if c.threshold is None else f"{c.threshold:.17g}"
        detail = c.detail.replace(",", ";")
        lines.append(f"{c.name},{c.statistic:.17g},"
                     f"{str(c.passed).lower()},{p},{thr},{c.n1},{c.n2},"
                     f"{detail}")
    return "\n".join(lines) + "\n"


def _emit_report(args, report: TestReport) -> int:
    if args.format == "csv":
        _write_text(args.out, _report_csv(report))
    else:
        _write_text(args.out, report.to_json())
    return 0 if report.passed else 1


def _table_report(name: str, seed: int, columns: list[str],
                  rows: list[list[float]], params: dict) -> TestReport:
    return TestReport(name=name, passed=True, seed=seed,
                      extra={"columns": columns, "rows": rows,
                             "params": params})


def _emit_table(args, name: str, columns: list[str],
                rows: list[list[float]], params: dict) -> int:
    if args.format == "json":
        rep = _table_report(name, args.seed, columns, rows, params)
        _write_text(args.out, rep.to_json())
        return 0
    lines = [f"# wlab table={name}, version={__version__}",
             f"# seed={args.seed}",
             f"# params={params}",
             ",".join(columns)]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" for v in row))
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def _params_from(args) -> ProcessParams:
    return ProcessParams(x0=getattr(args, "x0", 0.0),
                         drift_a=getattr(args, "drift", 0.0),
                         sigma=getattr(args, "sigma", 1.0),
                         dim_n=getattr(args, "dim", 3),
                         r0=getattr(args, "r", 1.0))


# ---------------------------------------------------------------------------
# command handlers

def _cmd_simulate(args) -> int:
    RunConfig(args.seed, args.n_paths, args.r, args.horizon, args.dt,
              args.alpha)
    grid = TimeGrid.uniform(args.horizon, args.dt)
    ens = build_ensemble(args.process, grid, _params_from(args),
                         args.n_paths, args.seed)
    if args.format == "json":
        rep = TestReport(
            name="simulate", passed=True, seed=ens.master_seed,
            process_tag=ens.process_tag, grid=grid.descriptor(),
            extra={"values": ens.values.tolist(),
                   "times": grid.times.tolist()})
        _write_text(args.out, rep.to_json())
        return 0
    import io
    buf = io.StringIO()
    write_ensemble_csv(ens, buf)
    _write_text(args.out, buf.getvalue())
    return 0


def _cmd_verify_pi(args) -> int:
    cfg = PiTestConfig(test_times=args.times)
    needed = sorted({0.0} | {t for t, _ in args.times}
                    | {t + s for t, s in args.times})
    grid = TimeGrid.explicit(needed)
    ens = build_ensemble(args.process, grid, _params_from(args),
                         args.n_paths, args.seed)
    rrep = pi_residuals(ens, cfg)
    checks = [CheckResult(
        name=f"{e.functional}@t={e.t:g};s={e.s:g}", statistic=e.z,
        passed=abs(e.z) <= cfg.z_threshold, threshold=cfg.z_threshold,
        n1=e.n_used, detail=f"estimate {e.estimate:.6g} "
                            f"stderr {e.stderr:.3g}")
              for e in rrep.entries]
    rep = TestReport(
        name="pi-residuals", passed=rrep.passed, checks=checks,
        seed=args.seed, process_tag=ens.process_tag,
        grid=grid.descriptor(), alpha=args.alpha,
        extra={"residual_report": rrep.to_jsonable()})
    return _emit_report(args, rep)


def _cmd_verify_williams(args) -> int:
    RunConfig(args.seed, args.n_paths, args.r, 2.0, 1.0, args.alpha)
    batch = run_williams_batch(args.r, args.n_paths, args.seed,
                               check_times=args.check_times,
                               horizon_factor=args.horizon_factor)
    wm = batch.marginal_ensemble()
    direct = build_ensemble(
        "bes-norm", wm.grid, ProcessParams(r0=args.r), args.n_paths,
        args.seed + 1)
    rep = verify_bes3_law(wm, direct, args.check_times, args.alpha)
    rep.extra.update(n_truncated=batch.n_truncated,
                     horizon=batch.horizon)
    return _emit_report(args, rep)


def _cmd_verify_g_law(args) -> int:
    RunConfig(args.seed, args.n_paths, args.r, 2.0, 1.0, args.alpha)
    batch = run_williams_batch(args.r, args.n_paths, args.seed,
                               check_times=(),
                               horizon_factor=args.horizon_factor)
    rep = verify_g_law(batch.g_records(), args.r, args.alpha)
    rep.seed = args.seed
    return _emit_report(args, rep)


def _cmd_verify_azema(args) -> int:
    RunConfig(args.seed, args.n_paths, args.r, 2.0, 1.0, args.alpha)
    rep = azema_study(args.r, args.t, args.n_paths, args.seed,
                      n_bins=args.bins)
    return _emit_report(args, rep)


def _cmd_density_table(args) -> int:
    params = GLawParams(args.r)
    rows = [[t, float(g_density(params, t))] for t in args.t]
    return _emit_table(args, "density-table", ["t", "density"], rows,
                       {"r": args.r})


def _cmd_laplace_table(args) -> int:
    params = GLawParams(args.r)
    rows = []
    for lam in args.lambdas:
        closed = g_laplace(params, lam)
        numeric = g_laplace_numeric(params, lam)
        rows.append([lam, closed, numeric, abs(closed - numeric)])
    return _emit_table(args, "laplace-table",
                       ["lambda", "closed_form", "numeric", "abs_error"],
                       rows, {"r": args.r})


def _cmd_residual_bm(args) -> int:
    RunConfig(args.seed, args.n_paths, args.r, args.horizon, args.dt,
              args.alpha)
    grid = TimeGrid.uniform(args.horizon, args.dt)
    ens = build_ensemble(args.process, grid, ProcessParams(r0=args.r),
                         args.n_paths, args.seed)
    rep = residual_bm_check(ens, args.alpha)
    return _emit_report(args, rep)


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wlab",
        description="Simulation and verification of Brownian ratio "
                    "martingales, three-dimensional radial paths, and "
                    "last-hitting-time laws.")
    parser.add_argument("--version", action="version",
                        version=f"wlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, n_paths, fmt="json"):
        p.add_argument("--seed", type=int, default=0,
                       help="master seed; the only source of randomness")
        p.add_argument("--n-paths", type=int, default=n_paths)
        p.add_argument("--r", type=float, default=1.0,
                       help="start level of the radial process")
        p.add_argument("--alpha", type=float, default=0.01,
                       help="significance level for KS style checks")
        p.add_argument("--out", default="-",
                       help="output path, '-' for stdout")
        p.add_argument("--format", choices=("csv", "json"), default=fmt)

    p = sub.add_parser("simulate", help="sample an ensemble to a file")
    common(p, n_paths=100, fmt="csv")
    p.add_argument("--process", default="bes-norm",
                   choices=("bm", "bm-drift", "tbt", "bes-norm", "bes-sde"))
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-2)
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--drift", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--dim", type=int, default=3)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("verify-pi",
                       help="projective invariance residuals of a process")
    common(p, n_paths=100000)
    p.add_argument("--process", default="tbt",
                   choices=("bm", "bm-drift", "tbt"))
    p.add_argument("--times", type=_time_pairs, default=((1.0, 0.5),),
                   help="comma separated t:s pairs, e.g. 1:0.5,2:1")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--drift", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.set_defaults(func=_cmd_verify_pi)

    p = sub.add_parser("verify-williams",
                       help="glued construction vs direct sampler marginals")
    common(p, n_paths=10000)
    p.add_argument("--check-times", type=_comma_floats,
                   default=(0.5, 1.0, 5.0))
    p.add_argument("--horizon-factor", type=float, default=2000.0,
                   help="construction horizon in units of r^2")
    p.set_defaults(func=_cmd_verify_williams)

    p = sub.add_parser("verify-g-law",
                       help="law of the glue time vs its closed forms")
    common(p, n_paths=10000)
    p.add_argument("--horizon-factor", type=float, default=2000.0,
                   help="construction horizon in units of r^2")
    p.set_defaults(func=_cmd_verify_g_law)

    p = sub.add_parser("verify-azema",
                       help="P(g > t) calibration against I_t / R_t")
    common(p, n_paths=20000)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--bins", type=int, default=10)
    p.set_defaults(func=_cmd_verify_azema)

    p = sub.add_parser("density-table",
                       help="closed-form last-hit density at given times")
    common(p, n_paths=1, fmt="csv")
    p.add_argument("--t", type=_comma_floats, default=(0.5, 1.0, 2.0))
    p.set_defaults(func=_cmd_density_table)

    p = sub.add_parser("laplace-table",
                       help="closed vs numeric Laplace transform of the law")
    common(p, n_paths=1, fmt="csv")
    p.add_argument("--lambdas", type=_comma_floats, default=(0.1, 1.0, 10.0))
    p.set_defaults(func=_cmd_laplace_table)

    p = sub.add_parser("residual-bm",
                       help="drift-corrected increments against Brownian law")
    common(p, n_paths=1000)
    p.add_argument("--process", default="bes-norm",
                   choices=("bes-norm", "bes-sde"))
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.set_defaults(func=_cmd_residual_bm)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericError as err:
        print(f"wlab: numeric failure: {err}", file=sys.stderr)
        return 3
    except WlabError as err:
        print(f"wlab: {err}", file=sys.stderr)
        return 2
    except (ValueError, FloatingPointError) as err:
        print(f"wlab: numeric failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main(argv=None))
