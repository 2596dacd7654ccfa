"""Parcel tampering detection: rectification, similarity scoring and decision stumps."""

from ._core import (
    TamperkitError,
    cw_ssim,
    generate_benchmark,
    hog_similarity,
    homogenize,
    load_annotations,
    mae,
    ms_ssim,
    oks,
    read_png,
    rectify_face,
    roc_auc,
    run_cli,
    score_pair,
    ssim,
    to_grayscale,
    train_stump,
    write_png,
)

__all__ = [
    "TamperkitError",
    "cw_ssim",
    "generate_benchmark",
    "hog_similarity",
    "homogenize",
    "load_annotations",
    "mae",
    "ms_ssim",
    "oks",
    "read_png",
    "rectify_face",
    "roc_auc",
    "run_cli",
    "score_pair",
    "ssim",
    "to_grayscale",
    "train_stump",
    "write_png",
]
