"""ATE estimation under covariate-adaptive randomization."""

from ._core import (
    ConfigError,
    DataError,
    __version__,
    assign,
    bounds,
    builtin_dgps,
    estimate,
    replication_seed,
    sample,
    simulate,
    strata_labels,
    true_ate,
)

__all__ = [
    "ConfigError",
    "DataError",
    "__version__",
    "assign",
    "bounds",
    "builtin_dgps",
    "estimate",
    "replication_seed",
    "sample",
    "simulate",
    "strata_labels",
    "true_ate",
]
