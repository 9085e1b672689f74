"""Robust characteristic-function test for equality of k regression curves."""

from .bandwidth import BandwidthSpec, cv_select
from .ecf_test import (
    IntegrationWeight,
    NullDistribution,
    ResidualSet,
    TestResult,
    WeightFunction,
    default_weights,
    ecf_norm_sq,
    estimate_null,
    local_power,
    p_value,
    residuals,
    test_statistic,
)
from .pipeline import TestOptions, compare_curves
from .robust_core import (
    RhoFunction,
    ScaleEstimate,
    diff_median_scale,
    mad_scale,
    tau_scale,
)
from .smoothing import (
    CLASSICAL,
    ROBUST,
    FitResult,
    Kernel,
    PooledFit,
    Sample,
    fit_population,
    kde,
    local_m_fit,
    nadaraya_watson,
    pooled_mu0,
)

__version__ = "0.1.0"
