"""Spherical Cauchy and Poisson-kernel distributions on the unit hypersphere.

Density evaluation, exact and rejection sampling, maximum-likelihood
location fitting, two-sample likelihood-ratio testing, spherical
regression, ML discriminant analysis, EM-fitted finite mixtures, and a
deterministic simulation harness.
"""

from ._errors import ComponentCollapseError, NumericalError
from ._kernels import BACKEND as KERNEL_BACKEND
from .classify import (
    Classifier,
    CrossValidationResult,
    adjusted_rand_index,
    cross_validate,
    predict_class,
    predict_labels,
    train,
)
from .dataio import DirectionalData, load_directional_csv, load_matrix_csv, write_csv
from .density import (
    log_density_difference,
    log_norm_const,
    logpdf,
    pdf,
    pkb_logpdf,
    sc_logpdf,
)
from .experiments import ExperimentSpec, ReportTable, run_experiment
from .lrt import (
    H0Fit,
    TwoSampleTestResult,
    fit_common_location,
    lrt_bootstrap_pvalue,
    lrt_two_sample,
)
from .mixtures import (
    ClusteringResult,
    MixtureModel,
    e_step,
    em_fit,
    loglik_mixture,
    m_step,
    map_assignments,
    select_k,
)
from .mle import FitResult, fit, fit_hybrid, fit_nr, loglik, loglik_mrho, score_and_hessian
from .regression import (
    RegressionModel,
    fisher_information,
    fit_metric,
    fit_regression,
    predict,
)
from .rng import RngStream, as_generator
from .sampling import SamplerDiagnostics, sample, sample_pkb, sample_sc
from .sphere import (
    FAMILIES,
    SphericalParams,
    as_directional,
    direction_at_angle,
    gamma_to_rho,
    normalize,
    random_orthogonal,
    rho_to_gamma,
    sample_uniform_sphere,
)

__version__ = "0.1.0"

__all__ = [
    "Classifier",
    "ClusteringResult",
    "ComponentCollapseError",
    "CrossValidationResult",
    "DirectionalData",
    "ExperimentSpec",
    "FAMILIES",
    "FitResult",
    "H0Fit",
    "KERNEL_BACKEND",
    "MixtureModel",
    "NumericalError",
    "RegressionModel",
    "ReportTable",
    "RngStream",
    "SamplerDiagnostics",
    "SphericalParams",
    "TwoSampleTestResult",
    "adjusted_rand_index",
    "as_directional",
    "as_generator",
    "cross_validate",
    "direction_at_angle",
    "e_step",
    "em_fit",
    "fisher_information",
    "fit",
    "fit_common_location",
    "fit_hybrid",
    "fit_metric",
    "fit_nr",
    "fit_regression",
    "gamma_to_rho",
    "load_directional_csv",
    "load_matrix_csv",
    "log_density_difference",
    "log_norm_const",
    "loglik",
    "loglik_mixture",
    "loglik_mrho",
    "logpdf",
    "lrt_bootstrap_pvalue",
    "lrt_two_sample",
    "m_step",
    "map_assignments",
    "normalize",
    "pdf",
    "pkb_logpdf",
    "predict",
    "predict_class",
    "predict_labels",
    "random_orthogonal",
    "rho_to_gamma",
    "run_experiment",
    "sample",
    "sample_pkb",
    "sample_sc",
    "sample_uniform_sphere",
    "sc_logpdf",
    "score_and_hessian",
    "select_k",
    "train",
    "write_csv",
]
