"""Pixel-based RL with contrastive forward-dynamics representation learning."""

from ._core import (
    CheckpointError,
    ConfigurationError,
    Env,
    NotReadyError,
    NumericsError,
    ema_blend,
    evaluate,
    export_curves,
    info_nce,
    intrinsic_reward,
    prediction_error,
    random_baseline,
    random_crop,
    train,
    __version__,
)

__all__ = [
    "CheckpointError",
    "ConfigurationError",
    "Env",
    "NotReadyError",
    "NumericsError",
    "ema_blend",
    "evaluate",
    "export_curves",
    "info_nce",
    "intrinsic_reward",
    "prediction_error",
    "random_baseline",
    "random_crop",
    "train",
    "__version__",
]
