"""Expected vs observed Fisher information, SPSA perturbation studies and
Monte Carlo FIM estimation."""
from importlib.metadata import PackageNotFoundError, version

from .covariance import discrepancy_study, expected_fim_scaled, mc_cov_mle, observed_fim, typical_outcome
from .exceptions import FimlabError
from .experiments import list_experiments, run
from .kernels import BACKEND
from .mcfim import HessianEstimateConfig, fim_basic, fim_benchmark, fim_feedback, fim_indep
from .models import (
    ExpFamilyModel,
    GaussianMeanModel,
    LinearStateSpaceModel,
    MixtureGaussianModel,
    SignalPlusNoiseModel,
)
from .solvers import fit, newton_mle, stochastic_search_mle
from .spsa import GainSchedule, mse_compare, spsa_run

try:
    __version__ = version("fimlab")
except PackageNotFoundError:
    __version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ExpFamilyModel",
    "FimlabError",
    "GainSchedule",
    "GaussianMeanModel",
    "HessianEstimateConfig",
    "LinearStateSpaceModel",
    "MixtureGaussianModel",
    "SignalPlusNoiseModel",
    "__version__",
    "discrepancy_study",
    "expected_fim_scaled",
    "fim_basic",
    "fim_benchmark",
    "fim_feedback",
    "fim_indep",
    "fit",
    "list_experiments",
    "mc_cov_mle",
    "mse_compare",
    "newton_mle",
    "observed_fim",
    "run",
    "spsa_run",
    "stochastic_search_mle",
    "typical_outcome",
]
