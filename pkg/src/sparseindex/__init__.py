"""Sparse single-index regression by Gibbs-posterior sampling.

The estimator draws one realization (index direction, trigonometric link)
from the distribution with density proportional to exp(-lambda * R_n)
under a sparsity-enforcing hierarchical prior, sampled with a
reversible-jump Metropolis-Hastings chain.  Lasso, Nadaraya-Watson, and
HHI single-index baselines plus a benchmark harness round out the package.
"""

from .baselines import (
    HHIModel,
    KernelModel,
    LassoModel,
    hhi_fit,
    hhi_predict,
    lasso_fit,
    nw_predict,
    nw_select_bandwidth,
)
from .bench import CsvSource, ExperimentSpec, ResultRow, emit_link_plot, run_experiment, summarize
from .core import (
    Dataset,
    GibbsConfig,
    IndexVector,
    LinkCoeffs,
    ModelState,
    empirical_risk,
    eval_dictionary,
    eval_link,
    make_state,
    predict,
    theoretical_lambda,
)
from .data import NormalizationParams, SyntheticSpec, augment_noise, load_csv, normalize, simulate
from .prior import (
    ball_volume,
    face_measure,
    log_prior_index,
    log_prior_link,
    sample_index_face,
    sample_prior,
)
from .sampler import (
    ChainTrace,
    KernelChoice,
    Proposal,
    accept_step,
    dens_s_sample,
    fit,
    least_squares_coeffs,
    propose,
    run_chain,
    stabilization_diag,
)
from .validate import posterior_oracle_check

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "IndexVector",
    "LinkCoeffs",
    "ModelState",
    "GibbsConfig",
    "eval_dictionary",
    "eval_link",
    "predict",
    "empirical_risk",
    "make_state",
    "theoretical_lambda",
    "ball_volume",
    "face_measure",
    "log_prior_index",
    "log_prior_link",
    "sample_index_face",
    "sample_prior",
    "KernelChoice",
    "Proposal",
    "ChainTrace",
    "least_squares_coeffs",
    "dens_s_sample",
    "propose",
    "accept_step",
    "run_chain",
    "stabilization_diag",
    "fit",
    "LassoModel",
    "KernelModel",
    "HHIModel",
    "lasso_fit",
    "nw_predict",
    "nw_select_bandwidth",
    "hhi_fit",
    "hhi_predict",
    "SyntheticSpec",
    "NormalizationParams",
    "simulate",
    "load_csv",
    "normalize",
    "augment_noise",
    "CsvSource",
    "ExperimentSpec",
    "ResultRow",
    "run_experiment",
    "summarize",
    "emit_link_plot",
    "posterior_oracle_check",
    "__version__",
]
