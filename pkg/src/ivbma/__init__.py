"""Instrumental variable Bayesian model averaging via conditional Bayes factors."""

from .core import (
    Dataset,
    DegenerateError,
    GaussianPosterior,
    ParameterState,
    build_doubled_system,
    lambda_posterior,
    log_integrated_lik_first,
    log_integrated_lik_second,
    residuals,
    rho_posterior,
    sur_lambda_posterior,
)
from .kernels import CholeskyError, cholesky, inv_wishart_sample, log_det_psd, make_rng, mvn_sample
from .models import ModelPair, is_valid_pair, log_prior, neighborhood_propose
from .sampler import ChainTrace, SamplerConfig, SamplerError, iv_sweep, ivbma_sweep, run_chain, run_chains
from .simulate import SimSpec, default_truth, generate
from .summary import (
    PosteriorSummary,
    conditional_density,
    model_size_trajectory,
    replicate_mse,
    summarize,
)

__version__ = "0.1.0"
