"""EEPHND mixture distribution and survival-analysis toolkit."""

__version__ = "0.1.0"

from .distributions import (  # noqa: E402
    EephndParams, EepParams, GammaRayleighParams, HalfNormalParams, LogNormalParams,
    cdf, hazard, odds, pdf, quantile, survival,
)
from .estimation import FitConfig, FitResult, bootstrap_ci, fit_mle, information_criteria, log_likelihood  # noqa: E402
from .rng import RngStream  # noqa: E402

__all__ = [
    "EephndParams", "EepParams", "HalfNormalParams", "LogNormalParams", "GammaRayleighParams",
    "pdf", "cdf", "survival", "hazard", "odds", "quantile",
    "FitConfig", "FitResult", "fit_mle", "bootstrap_ci", "information_criteria", "log_likelihood",
    "RngStream",
]
