"""Time grids, sampled paths, ensembles, and the process samplers.

Randomness discipline: every path in an ensemble gets its own counter-based
generator derived from ``(master_seed, stream_index)`` via Philox counter
jumps, so regeneration is bit-exact no matter how many paths are produced,
in what order, or on how many workers. Within one stream each sampler draws
in a fixed documented order (time-major, then dimension), which is what
makes "same seed, same path" guarantees meaningful across samplers that
share an underlying Brownian realization.
"""

from __future__ import annotations

import io
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .errors import (GridError, NumericError, ParameterError, ShapeError,
                     ValidationError)

__all__ = [
    "TimeGrid", "Path", "ProcessParams", "PathEnsemble", "stream_rng",
    "sample_bm", "sample_bm_drift", "sample_tbt", "sample_bes_norm",
    "sample_bes_sde", "running_infimum", "build_ensemble", "SAMPLERS",
    "write_ensemble_csv", "read_ensemble_csv",
    "write_ensemble_bin", "read_ensemble_bin",
]

_SEED_BOUND = 2 ** 64
_UNIFORM_RTOL = 1e-9
_SDE_FLOOR = 1e-8


def stream_rng(master_seed: int, stream_index: int) -> np.random.Generator:
    """Generator for one path stream, derived from (master seed, index).

    Uses the Philox counter-based generator keyed by the master seed with
    the counter jumped to a disjoint block per stream, so streams are
    independent and the derivation does not depend on generation order.
    """
    if not (0 <= master_seed < _SEED_BOUND):
        raise ParameterError(f"master seed must fit in 64 bits, got {master_seed}")
    if stream_index < 0:
        raise ParameterError(f"stream index must be nonnegative, got {stream_index}")
    base = np.random.Philox(key=master_seed)
    return np.random.Generator(base.jumped(stream_index))


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing sample times starting at or after zero.

    ``kind`` records how the grid was built: "uniform" (constant spacing),
    "geometric-tail" (uniform up to a knee, geometric growth after), or
    "explicit" (arbitrary).
    """

    times: np.ndarray
    kind: str = "explicit"

    def __post_init__(self):
        ts = np.asarray(self.times, dtype=float)
        ts.setflags(write=False)
        object.__setattr__(self, "times", ts)
        if ts.ndim != 1 or ts.size < 2:
            raise GridError("grid needs at least two sample times")
        if not np.all(np.isfinite(ts)):
            raise GridError("grid times must be finite")
        if ts[0] < 0.0:
            raise GridError(f"grid must start at t >= 0, got {ts[0]}")
        diffs = np.diff(ts)
        if np.any(diffs <= 0.0):
            raise GridError("grid times must be strictly increasing")
        if self.kind not in ("uniform", "geometric-tail", "explicit"):
            raise GridError(f"unknown grid kind {self.kind!r}")
        if self.kind == "uniform":
            d0 = float(np.median(diffs))
            if np.any(np.abs(diffs - d0) > _UNIFORM_RTOL * max(d0, 1.0)):
                raise GridError("uniform grid has non-uniform spacing")

    @classmethod
    def uniform(cls, horizon: float, dt: float, t0: float = 0.0) -> "TimeGrid":
        if dt <= 0 or horizon <= t0:
            raise GridError(f"bad uniform grid: t0={t0}, horizon={horizon}, dt={dt}")
        n_steps = int(round((horizon - t0) / dt))
        if n_steps < 1:
            raise GridError("uniform grid would have fewer than two points")
        ts = t0 + dt * np.arange(n_steps + 1)
        return cls(ts, "uniform")

    @classmethod
    def geometric_tail(cls, dt: float, knee: float, horizon: float,
                       ratio: float = 1.01, t0: float = 0.0) -> "TimeGrid":
        """Uniform spacing dt on [t0, knee], spacing growing by ``ratio`` after."""
        if not (t0 < knee <= horizon) or dt <= 0 or ratio <= 1.0:
            raise GridError("bad geometric-tail grid parameters")
        head = cls.uniform(knee, dt, t0).times
        tail = []
        t, step = float(head[-1]), dt
        while t < horizon:
            step *= ratio
            t = min(t + step, horizon)
            tail.append(t)
        return cls(np.concatenate([head, np.asarray(tail)]), "geometric-tail")

    @classmethod
    def explicit(cls, times: Sequence[float] | np.ndarray) -> "TimeGrid":
        return cls(np.asarray(times, dtype=float), "explicit")

    @property
    def n(self) -> int:
        return int(self.times.size)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def dt(self) -> float:
        if self.kind != "uniform":
            raise GridError("dt is only defined for uniform grids")
        return float(self.times[1] - self.times[0])

    def index_of(self, t: float) -> int:
        """Index of a grid time, matched to within 1e-12 absolute or relative."""
        idx = int(np.searchsorted(self.times, t))
        for j in (idx - 1, idx, idx + 1):
            if 0 <= j < self.times.size:
                tj = self.times[j]
                if abs(tj - t) <= 1e-12 * max(1.0, abs(t)):
                    return j
        raise GridError(f"time {t} is not a grid time")

    def descriptor(self) -> dict:
        return {"kind": self.kind, "n_times": self.n,
                "t0": float(self.times[0]), "horizon": self.horizon}


@dataclass(frozen=True)
class Path:
    """One sampled trajectory on a grid."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        vs = np.asarray(self.values, dtype=float)
        vs.setflags(write=False)
        object.__setattr__(self, "values", vs)
        if vs.shape != self.grid.times.shape:
            raise ShapeError(
                f"path has {vs.size} values for {self.grid.n} grid times")
        if not np.all(np.isfinite(vs)):
            raise ValidationError("path contains non-finite values")


@dataclass(frozen=True)
class ProcessParams:
    """Parameters shared by the samplers.

    x0 is the start value for the Brownian family, drift_a and sigma the
    drift and scale, dim_n the dimension for the radial processes, and r0
    the radial start.
    """

    x0: float = 0.0
    drift_a: float = 0.0
    sigma: float = 1.0
    dim_n: int = 3
    r0: float = 1.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in
                   (self.x0, self.drift_a, self.sigma, self.r0)):
            raise ParameterError("process parameters must be finite")
        if self.sigma < 0:
            raise ParameterError(f"sigma must be nonnegative, got {self.sigma}")
        if not (isinstance(self.dim_n, (int, np.integer)) and self.dim_n >= 1):
            raise ParameterError(f"dim_n must be an integer >= 1, got {self.dim_n}")
        if self.r0 < 0:
            raise ParameterError(f"r0 must be nonnegative, got {self.r0}")

    def signature(self) -> str:
        return (f"x0={self.x0:g},a={self.drift_a:g},sigma={self.sigma:g},"
                f"n={self.dim_n},r0={self.r0:g}")


class PathEnsemble:
    """A set of paths on one grid with full regeneration provenance.

    Stores values as an (n_paths, n_times) float64 matrix. The triple
    (master_seed, grid, process_tag) pins the generating computation, so
    regeneration is bit-exact.
    """

    def __init__(self, grid: TimeGrid, values: np.ndarray, master_seed: int,
                 process_tag: str):
        vals = np.asarray(values, dtype=float)
        if vals.ndim != 2 or vals.shape[1] != grid.n:
            raise ShapeError(
                f"ensemble values must be (n_paths, {grid.n}), got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("ensemble contains non-finite values")
        if not (0 <= master_seed < _SEED_BOUND):
            raise ParameterError("master seed must fit in 64 bits")
        self.grid = grid
        self.values = vals
        self.master_seed = int(master_seed)
        self.process_tag = str(process_tag)

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    def path(self, i: int) -> Path:
        return Path(self.grid, self.values[i])

    @property
    def paths(self) -> tuple[Path, ...]:
        return tuple(self.path(i) for i in range(self.n_paths))

    def values_at(self, t: float) -> np.ndarray:
        return self.values[:, self.grid.index_of(t)]

    def descriptor(self) -> dict:
        d = self.grid.descriptor()
        d.update(n_paths=self.n_paths, master_seed=self.master_seed,
                 process_tag=self.process_tag)
        return d


def _standard_bm(grid: TimeGrid, rng: np.random.Generator) -> np.ndarray:
    """Standard Brownian values on the grid, started at 0 at times[0].

    Draw order: one normal per grid step, in time order. All Brownian-type
    samplers below consume this realization first, which is what ties e.g.
    the time-scaled sampler to the plain one at equal seeds.
    """
    diffs = np.diff(grid.times)
    incs = rng.standard_normal(diffs.size) * np.sqrt(diffs)
    out = np.empty(grid.n)
    out[0] = 0.0
    np.cumsum(incs, out=out[1:])
    return out


def sample_bm(grid: TimeGrid, params: ProcessParams,
              rng: np.random.Generator) -> Path:
    """Brownian motion from x0. sigma and drift fields are ignored."""
    return Path(grid, params.x0 + _standard_bm(grid, rng))


def sample_bm_drift(grid: TimeGrid, params: ProcessParams,
                    rng: np.random.Generator) -> Path:
    """Brownian motion with scale sigma and linear drift: x0 + sigma*B_t + a*t."""
    b = _standard_bm(grid, rng)
    return Path(grid, params.x0 + params.sigma * b + params.drift_a * grid.times)


def sample_tbt(grid: TimeGrid, params: ProcessParams,
               rng: np.random.Generator) -> Path:
    """Time-scaled Brownian path x0 + sigma * t * B_t + a * t.

    Uses the same underlying Brownian realization that sample_bm would
    produce from the same stream, so the two are couplable seed by seed.
    """
    b = _standard_bm(grid, rng)
    return Path(grid, params.x0 + params.sigma * grid.times * b
                + params.drift_a * grid.times)


def _radial_from(coords0: np.ndarray, dts: np.ndarray,
                 rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Radii of a dim-d Brownian point after each step, plus final coords.

    Exact in law at the sampled times for any step sizes. Draw order:
    (n_steps, dim) normals, time-major.
    """
    dim = coords0.size
    incs = rng.standard_normal((dts.size, dim)) * np.sqrt(dts)[:, None]
    pos = coords0 + np.cumsum(incs, axis=0)
    return np.sqrt(np.sum(pos * pos, axis=1)), pos[-1]


def sample_bes_norm(grid: TimeGrid, params: ProcessParams,
                    rng: np.random.Generator) -> Path:
    """Radial part of dim_n-dimensional Brownian motion from radius r0.

    values[i] = || (r0, 0, ..., 0) + W(t_i) ||, which is exact in law at
    the grid times for any grid.
    """
    coords0 = np.zeros(params.dim_n)
    coords0[0] = params.r0
    radii, _ = _radial_from(coords0, np.diff(grid.times), rng)
    return Path(grid, np.concatenate([[params.r0], radii]))


def sample_bes_sde(grid: TimeGrid, params: ProcessParams,
                   rng: np.random.Generator) -> Path:
    """Euler scheme for dX = dB + ((n-1)/2) dt / X from r0 > 0.

    Requires a uniform grid. A positivity floor at 1e-8 clips any step
    that lands at or below zero; floor events trigger a RuntimeWarning
    since they signal the scheme left its domain of validity.
    """
    if params.r0 <= 0:
        raise ParameterError("the SDE scheme needs r0 > 0")
    dt = grid.dt
    diffs = np.diff(grid.times)
    incs = rng.standard_normal(diffs.size) * np.sqrt(diffs)
    c = 0.5 * (params.dim_n - 1)
    out = np.empty(grid.n)
    out[0] = params.r0
    # accumulate increments in a running sum so that the n = 1 case matches
    # sample_bm bit for bit (x0 + sequential partial sums, same association)
    s = 0.0
    x = params.r0
    n_floored = 0
    for i in range(diffs.size):
        s = s + (incs[i] + c * dt / x)
        x = params.r0 + s
        if not math.isfinite(x):
            raise NumericError(f"SDE state became non-finite at step {i + 1}")
        if x < _SDE_FLOOR:
            x = _SDE_FLOOR
            s = x - params.r0
            n_floored += 1
        out[i + 1] = x
    if n_floored:
        warnings.warn(
            f"positivity floor hit {n_floored} time(s); the Euler scheme is "
            "outside its domain of validity", RuntimeWarning, stacklevel=2)
    return Path(grid, out)


def running_infimum(path: Path) -> Path:
    """Prefix minimum of a path, as a path on the same grid."""
    return Path(path.grid, np.minimum.accumulate(path.values))


SAMPLERS: dict[str, Callable] = {
    "bm": sample_bm,
    "bm-drift": sample_bm_drift,
    "tbt": sample_tbt,
    "bes-norm": sample_bes_norm,
    "bes-sde": sample_bes_sde,
}


def build_ensemble(sampler: str | Callable, grid: TimeGrid,
                   params: ProcessParams, n_paths: int,
                   master_seed: int) -> PathEnsemble:
    """Generate an ensemble with one independent stream per path."""
    if n_paths < 1:
        raise ParameterError(f"need at least one path, got {n_paths}")
    if isinstance(sampler, str):
        if sampler not in SAMPLERS:
            raise ParameterError(f"unknown sampler {sampler!r}")
        name, fn = sampler, SAMPLERS[sampler]
    else:
        fn = sampler
        name = getattr(sampler, "__name__", "custom")
    values = np.empty((n_paths, grid.n))
    for i in range(n_paths):
        values[i] = fn(grid, params, stream_rng(master_seed, i)).values
    tag = f"{name}[{params.signature()}]"
    return PathEnsemble(grid, values, master_seed, tag)


# ---------------------------------------------------------------------------
# serialization

_CSV_FLOAT = "%.17g"


def write_ensemble_csv(ens: PathEnsemble, out: io.TextIOBase | str) -> None:
    """Long-format CSV (path_id, t, value) with provenance comments."""
    close = False
    if isinstance(out, str):
        out = open(out, "w", encoding="utf-8", newline="\n")
        close = True
    try:
        from . import __version__
        out.write(f"# wlab ensemble, version={__version__}\n")
        out.write(f"# master_seed={ens.master_seed}\n")
        out.write(f"# process_tag={ens.process_tag}\n")
        out.write(f"# grid_kind={ens.grid.kind}\n")
        out.write("path_id,t,value\n")
        times = ens.grid.times
        for i in range(ens.n_paths):
            row = ens.values[i]
            for j in range(times.size):
                out.write(f"{i},{_CSV_FLOAT % times[j]},{_CSV_FLOAT % row[j]}\n")
    finally:
        if close:
            out.close()


def read_ensemble_csv(src: io.TextIOBase | str) -> PathEnsemble:
    """Read an ensemble written by :func:`write_ensemble_csv`."""
    close = False
    if isinstance(src, str):
        src = open(src, "r", encoding="utf-8")
        close = True
    try:
        meta = {"master_seed": "0", "process_tag": "unknown",
                "grid_kind": "explicit"}
        header_seen = False
        ids, ts, vs = [], [], []
        for line in src:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    k, _, v = body.partition("=")
                    meta[k.strip()] = v.strip()
                continue
            if not header_seen:
                if line != "path_id,t,value":
                    raise ValidationError(f"unexpected CSV header: {line!r}")
                header_seen = True
                continue
            a, b, c = line.split(",")
            ids.append(int(a)); ts.append(float(b)); vs.append(float(c))
    finally:
        if close:
            src.close()
    if not ids:
        raise ValidationError("CSV contains no path rows")
    ids_a = np.asarray(ids)
    n_paths = ids_a.max() + 1
    n_times = ids_a.size // n_paths
    if n_paths * n_times != ids_a.size:
        raise ValidationError("CSV rows do not form a full matrix")
    times = np.asarray(ts[:n_times])
    grid = TimeGrid(times, meta["grid_kind"])
    values = np.asarray(vs).reshape(n_paths, n_times)
    return PathEnsemble(grid, values, int(meta["master_seed"]),
                        meta["process_tag"])


_BIN_MAGIC = b"WLAB1"


def write_ensemble_bin(ens: PathEnsemble, out: io.RawIOBase | str) -> None:
    """Binary ensemble: magic, JSON header, then row-major float64 values."""
    close = False
    if isinstance(out, str):
        out = open(out, "wb")
        close = True
    try:
        from . import __version__
        header = json.dumps({
            "version": __version__,
            "kind": ens.grid.kind,
            "times": [float(t) for t in ens.grid.times],
            "master_seed": ens.master_seed,
            "process_tag": ens.process_tag,
            "n_paths": ens.n_paths,
        }).encode("utf-8")
        out.write(_BIN_MAGIC)
        out.write(len(header).to_bytes(4, "little"))
        out.write(header)
        out.write(np.ascontiguousarray(ens.values, dtype="<f8").tobytes())
    finally:
        if close:
            out.close()


def read_ensemble_bin(src: io.RawIOBase | str) -> PathEnsemble:
    """Read an ensemble written by :func:`write_ensemble_bin`, bit-exactly."""
    close = False
    if isinstance(src, str):
        src = open(src, "rb")
        close = True
    try:
        magic = src.read(len(_BIN_MAGIC))
        if magic != _BIN_MAGIC:
            raise ValidationError(f"bad magic {magic!r}, not an ensemble file")
        hlen = int.from_bytes(src.read(4), "little")
        header = json.loads(src.read(hlen).decode("utf-8"))
        times = np.asarray(header["times"], dtype=float)
        grid = TimeGrid(times, header["kind"])
        n_paths = int(header["n_paths"])
        raw = src.read(n_paths * times.size * 8)
        values = np.frombuffer(raw, dtype="<f8").reshape(n_paths, times.size)
        return PathEnsemble(grid, values.astype(float),
                            int(header["master_seed"]), header["process_tag"])
    finally:
        if close:
            src.close()
