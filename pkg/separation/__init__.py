from separation.matrix import (
    AngleStats,
    Radius,
    SeparationMatrix,
    VerificationReport,
    build_separation_matrix,
    grow_separation_matrix,
    head_backward,
    head_forward,
    load_matrix,
    pairwise_angle_stats,
    pairwise_cosine_matrix,
    save_matrix,
    verify_separation,
)

__all__ = [
    "AngleStats",
    "Radius",
    "SeparationMatrix",
    "VerificationReport",
    "build_separation_matrix",
    "grow_separation_matrix",
    "head_backward",
    "head_forward",
    "load_matrix",
    "pairwise_angle_stats",
    "pairwise_cosine_matrix",
    "save_matrix",
    "verify_separation",
]
