"""TailCoR: tail correlation from interquantile ranges of projected pairs."""

__version__ = "0.1.0"

from .bootstrap import BootstrapEstimate, BootstrapSpec, block_indices, bootstrap_matrix, bootstrap_pair
from .errors import *  # noqa: F401,F403
from .matrix import MatrixEstimate, PsiWarning, pooled_nonlinear, tailcor_matrix, unvech, vech
from .pair import (
    AutoSign,
    Fixed,
    GridSearch,
    PairEstimate,
    TailConfig,
    alternative_tailcor,
    choose_angle,
    nonlinear_component,
    project,
    standardize,
    tailcor,
    tailcor_asymmetric,
)
from .panel import Panel, load_panel
from .quantiles import (
    NormalizationPair,
    inv_norm_cdf,
    iqr,
    quantile_descriptives,
    s_g,
    sample_quantile,
    semi_iqr_lower,
    semi_iqr_upper,
)
from .rank import (
    SemiSide,
    kendall_tau,
    rho_from_kendall,
    semi_correlation,
    semi_covariance,
    semi_variance,
    semi_variance_of_sum,
)
from .rolling import RollingResult, WindowSpec, cross_sectional_average, roll, roll_ranges, window_starts
from .simulation import EllipticalModel, McDesign, McReport, equicorrelated, population_quantile, run_mc, sample
