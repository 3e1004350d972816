"""Python access to the spcp sampler and diagnostics.

Values are on the model scale (dB / 10, years since the first visit).
Effect columns of ``phi`` are beta0, beta1, lambda0, lambda1, eta.
"""

from ._core import (
    NumericalError,
    PosteriorSamples,
    SpatialGraph,
    ValidationError,
    VFSeries,
    auc,
    cli,
    cp_probability,
    dic,
    fit,
    geweke,
    graph_from_angle_csv,
    load_vf_csv,
    max_metric,
    mspe,
    predictive_mean,
    read_samples_dir,
    simulate,
    standard_graph,
    write_samples_dir,
)

EFFECTS = ("beta0", "beta1", "lambda0", "lambda1", "eta")

__all__ = [
    "EFFECTS",
    "NumericalError",
    "PosteriorSamples",
    "SpatialGraph",
    "ValidationError",
    "VFSeries",
    "auc",
    "cli",
    "cp_probability",
    "dic",
    "fit",
    "geweke",
    "graph_from_angle_csv",
    "load_vf_csv",
    "max_metric",
    "mspe",
    "predictive_mean",
    "read_samples_dir",
    "simulate",
    "standard_graph",
    "write_samples_dir",
]
