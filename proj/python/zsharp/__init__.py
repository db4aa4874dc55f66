"""Z-score filtered sharpness-aware minimization."""

from ._zsharp import (
    ConfigError,
    ShapeError,
    __version__,
    compute_perturbation,
    config_keys,
    filter_gradient,
    gen_two_moons,
    norm2,
    percentile_threshold,
    train,
    verify_constant_step,
)

__all__ = [
    "ConfigError",
    "ShapeError",
    "__version__",
    "compute_perturbation",
    "config_keys",
    "filter_gradient",
    "gen_two_moons",
    "norm2",
    "percentile_threshold",
    "train",
    "verify_constant_step",
]
