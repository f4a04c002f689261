"""Surrogate benchmarks for model-merging hyperparameter optimization.

Pipeline: define a search space over merging hyperparameters, collect
(configuration, score) data against a cheap true objective, train
gradient-boosted-tree surrogates on the collected data, then run and compare
black-box optimizers against either objective.
"""

from .errors import (
    GenerationFailure,
    InvalidArgument,
    MergebenchError,
    ParseError,
    UndefinedMetric,
    UnsupportedVersion,
)
from .space import (
    Configuration,
    SearchSpace,
    VariableSpec,
    dfs_space,
    embed_model_wise,
    ps_space,
    space_by_name,
)

__version__ = "0.1.0"

__all__ = [
    "Configuration",
    "GenerationFailure",
    "InvalidArgument",
    "MergebenchError",
    "ParseError",
    "SearchSpace",
    "UndefinedMetric",
    "UnsupportedVersion",
    "VariableSpec",
    "dfs_space",
    "embed_model_wise",
    "ps_space",
    "space_by_name",
    "__version__",
]
