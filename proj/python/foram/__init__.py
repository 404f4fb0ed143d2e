"""Microfossil specimen extraction, classification and MC-dropout analysis."""

from foram._core import (
    Backbone,
    Classifier,
    RuntimeFailure,
    ValidationError,
    apply_photometric,
    augment_image,
    class_names,
    connected_components,
    detect_specimens,
    flag_difficult,
    gaussian_blur,
    gaussian_kernel,
    generate_synthetic,
    mc_predict,
    mc_summarize,
    measure_candidates,
    stratified_split,
    threshold,
    to_grayscale,
)

__all__ = [
    "Backbone",
    "Classifier",
    "RuntimeFailure",
    "ValidationError",
    "apply_photometric",
    "augment_image",
    "class_names",
    "connected_components",
    "detect_specimens",
    "flag_difficult",
    "gaussian_blur",
    "gaussian_kernel",
    "generate_synthetic",
    "mc_predict",
    "mc_summarize",
    "measure_candidates",
    "stratified_split",
    "threshold",
    "to_grayscale",
]

__version__ = "0.1.0"
