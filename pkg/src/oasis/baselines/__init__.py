"""Reference baselines behind one fit/predict interface.

Every baseline exposes ``kind``, ``fit(data)`` and ``predict(points) ->
psu array`` so the evaluation harness can swap models by name alone.
"""

from ..errors import InvalidConfig
from .gwr import GwrBaseline, GwrConfig, GwrResult, gwr_fit_predict
from .kriging import (KrigingBaseline, KrigingModel, Variogram,
                      empirical_variogram, fit_variogram, kriging_fit,
                      pairwise_distance)
from .neural import GanBaseline, LstmBaseline, MlpBaseline, NeuralConfig

BASELINES = {
    "kriging": KrigingBaseline,
    "gwr": GwrBaseline,
    "mlp": MlpBaseline,
    "lstm": LstmBaseline,
    "gan": GanBaseline,
}


def make_baseline(kind, **options):
    """Instantiate a baseline by name; options are kind-specific."""
    try:
        cls = BASELINES[kind]
    except KeyError:
        raise InvalidConfig(
            f"unknown baseline {kind!r}; choose from {sorted(BASELINES)}")
    return cls(**options)


def neural_baseline_fit(kind, data, **options):
    """Fit one of the neural baselines (mlp, lstm, gan) and return it."""
    if kind not in ("mlp", "lstm", "gan"):
        raise InvalidConfig(f"{kind!r} is not a neural baseline")
    return make_baseline(kind, **options).fit(data)


__all__ = [
    "BASELINES", "GanBaseline", "GwrBaseline", "GwrConfig", "GwrResult",
    "KrigingBaseline", "KrigingModel", "LstmBaseline", "MlpBaseline",
    "NeuralConfig", "Variogram", "empirical_variogram", "fit_variogram",
    "gwr_fit_predict", "kriging_fit", "make_baseline", "neural_baseline_fit",
    "pairwise_distance",
]
