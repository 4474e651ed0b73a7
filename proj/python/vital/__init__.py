"""Adversarial tracking-by-detection at desk scale."""

from ._vital import (
    BoundingBox,
    ConfigError,
    ContractError,
    DimensionError,
    IoError,
    OutOfBoundsError,
    RunConfig,
    canonical_masks,
    center_error,
    cost_sensitive,
    cross_entropy,
    entropy,
    evaluate,
    generate_sequence,
    gradcheck,
    iou,
    precision_at,
    success_auc,
    suite_names,
    track,
)

__all__ = [
    "BoundingBox",
    "ConfigError",
    "ContractError",
    "DimensionError",
    "IoError",
    "OutOfBoundsError",
    "RunConfig",
    "canonical_masks",
    "center_error",
    "cost_sensitive",
    "cross_entropy",
    "entropy",
    "evaluate",
    "generate_sequence",
    "gradcheck",
    "iou",
    "precision_at",
    "success_auc",
    "suite_names",
    "track",
]
