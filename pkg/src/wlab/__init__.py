"""Simulation and verification toolkit for Brownian ratio martingales,
three-dimensional Bessel paths, and last-hitting-time laws.

The package splits into process sampling (:mod:`wlab.paths`), projective
invariance residual tests (:mod:`wlab.pi`), closed-form laws and their
numerical checks (:mod:`wlab.analytic`), the path decomposition pipeline
(:mod:`wlab.williams`), statistical machinery (:mod:`wlab.stats`), and a
command line front end (:mod:`wlab.cli`).
"""

__version__ = "0.1.0"

from .errors import (DegenerateInputError, DomainError, GridError,
                     NumericError, ParameterError, ShapeError,
                     TruncationError, ValidationError, WlabError)
from .paths import (Path, PathEnsemble, ProcessParams, TimeGrid,
                    build_ensemble, running_infimum, sample_bes_norm,
                    sample_bes_sde, sample_bm, sample_bm_drift, sample_tbt,
                    stream_rng)

__all__ = [
    "__version__",
    "WlabError", "GridError", "ParameterError", "DomainError", "ShapeError",
    "DegenerateInputError", "ValidationError", "NumericError",
    "TruncationError",
    "TimeGrid", "Path", "ProcessParams", "PathEnsemble",
    "stream_rng", "build_ensemble", "running_infimum",
    "sample_bm", "sample_bm_drift", "sample_tbt",
    "sample_bes_norm", "sample_bes_sde",
]
