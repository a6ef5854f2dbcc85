"""Exponentially weighted aggregation with a spectral Student prior."""

from .core import (
    Correlated,
    DiscreteBounded,
    Gaussian,
    Rademacher,
    SharedMagnitudeSymmetric,
    Uniform,
    check_assumption_c,
    empirical_loss,
    psnr,
    sample_noise,
)
from .errors import ArgumentError, ConfigurationError, DimensionError, DivergenceError, EwaError, UnsupportedNoiseError
from .prior import PriorConfig, grad_log_prior, kl_shift_bound, log_prior_unnormalized, sample_prior
from .sampler import (
    DiscreteDictionary,
    LmcConfig,
    PosteriorConfig,
    discrete_ewa,
    grad_log_posterior,
    lmc_chain,
    log_posterior_unnormalized,
    mc_ewa,
    newa,
    solve_ridge_m,
)

__version__ = "0.1.0"
