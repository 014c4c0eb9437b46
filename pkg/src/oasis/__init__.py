"""Spatiotemporal salinity imputation toolkit.

A diffusion-adversarial imputation model over sparse drifter
trajectories, with reversible instance normalization, attention-based
window context, classical and neural baselines, tide-covariate fitting,
an evaluation harness, and an HTTP inference service.
"""

from . import (baselines, dan, errors, experiment, features, gdc, metrics,
               nn, revin, scheduler, tensorize, tide)

__version__ = "0.1.0"

__all__ = [
    "baselines", "dan", "errors", "experiment", "features", "gdc", "metrics",
    "nn", "revin", "scheduler", "tensorize", "tide", "__version__",
]
