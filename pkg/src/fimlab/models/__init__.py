"""Statistical models used by the studies."""
from .base import Model
from .expfam import ExpFamilyModel, expfam_lemma6_gap
from .gaussian_mean import GaussianMeanModel
from .mixture import MixtureGaussianModel
from .signal_noise import DEFAULT_UTU, SignalPlusNoiseModel
from .statespace import KalmanRun, LinearStateSpaceModel

_REGISTRY = {
    "mixture": MixtureGaussianModel,
    "signal_noise": SignalPlusNoiseModel,
    "statespace": LinearStateSpaceModel,
    "expfam": ExpFamilyModel,
    "gaussian_mean": GaussianMeanModel,
}


def model_from_config(cfg):
    """Build a model from a ``{"model": name, ...}`` mapping."""
    try:
        cls = _REGISTRY[cfg["model"]]
    except KeyError:
        raise ValueError(f"unknown model in config: {cfg!r}") from None
    return cls.from_config(cfg)


__all__ = [
    "DEFAULT_UTU",
    "ExpFamilyModel",
    "GaussianMeanModel",
    "KalmanRun",
    "LinearStateSpaceModel",
    "MixtureGaussianModel",
    "Model",
    "SignalPlusNoiseModel",
    "expfam_lemma6_gap",
    "model_from_config",
]
