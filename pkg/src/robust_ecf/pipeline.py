"""End-to-end test: scale, bandwidth, fits, pooled fit, statistic, null, p-value."""

from dataclasses import dataclass
import warnings

from .bandwidth import BandwidthSpec, BandwidthWarning, cv_select
from .ecf_test import (
    IntegrationWeight,
    TestResult,
    default_weights,
    estimate_null,
    p_value,
    residuals,
    test_statistic,
)
from .errors import ValidationError
from .robust_core import RhoFunction, diff_median_scale
from .smoothing import CLASSICAL, ROBUST, Kernel, fit_population, pooled_mu0


@dataclass
class TestOptions:
    """Configuration of one run of the test."""

    bandwidth: object = None  # BandwidthSpec or a list of them, one per population
    rho: RhoFunction = None
    kernel: Kernel = None
    weight_quantiles: tuple = (0.05, 0.95)
    smooth_weight: bool = False
    integration_weight: IntegrationWeight = None
    n_draws: int = 10_000
    seed: int = 0
    quiet: bool = True

    __test__ = False

    def bandwidth_specs(self, k):
        spec = self.bandwidth if self.bandwidth is not None else BandwidthSpec.cv()
        if isinstance(spec, BandwidthSpec):
            return [spec] * k
        specs = list(spec)
        if len(specs) != k:
            raise ValidationError(f"need {k} bandwidth specs, got {len(specs)}")
        return specs


def select_bandwidths(samples, method, options, sigmas=None):
    specs = options.bandwidth_specs(len(samples))
    rho = options.rho or RhoFunction.tukey()
    hs = []
    with warnings.catch_warnings():
        if options.quiet:
            warnings.simplefilter("ignore", BandwidthWarning)
        for j, (smp, spec) in enumerate(zip(samples, specs)):
            sig = sigmas[j] if sigmas is not None else None
            if method == ROBUST and sig is None:
                sig = diff_median_scale(smp)
            hs.append(cv_select(smp, spec, method, rho, sig, options.kernel))
    return hs


def compare_curves(samples, method=ROBUST, options=None, weights=None):
    """Run the test on ``samples`` (k >= 2) and return a ``TestResult``."""
    options = options or TestOptions()
    if len(samples) < 2:
        raise ValidationError("need at least two populations")
    if method not in (CLASSICAL, ROBUST):
        raise ValidationError(f"unknown method {method!r}")
    kernel = options.kernel or Kernel()
    rho = options.rho or RhoFunction.tukey()
    sigmas = [diff_median_scale(s) for s in samples] if method == ROBUST else None
    hs = select_bandwidths(samples, method, options, sigmas)
    fits = [
        fit_population(s, method, h, kernel, rho, sigmas[j] if sigmas else None)
        for j, (s, h) in enumerate(zip(samples, hs))
    ]
    pooled = pooled_mu0(samples, fits)
    if weights is None:
        weights = default_weights(samples, options.weight_quantiles, options.smooth_weight)
    res = residuals(samples, fits, pooled, weights)
    w = options.integration_weight or IntegrationWeight()
    T, norms = test_statistic(res, w)
    null = estimate_null(samples, res, fits, pooled, weights, w, options.n_draws, options.seed)
    n = sum(s.n for s in samples)
    p = p_value(T, null, n)
    return TestResult(T, n * T, p, null, norms, method, fits, hs, weights, pooled)
