"""Kernel smoothers: density estimates, Nadaraya-Watson, local M-fits and the
pooled regression estimate under the null hypothesis.

Missing values are represented by NaN.  A query point gets NaN when no
observation falls inside its kernel window.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import InsufficientData, ValidationError
from .robust_core import (
    RhoFunction,
    ScaleEstimate,
    diff_median_scale,
    residual_sd,
)

CLASSICAL = "classical"
ROBUST = "robust"

EPANECHNIKOV = "epanechnikov"
TRIWEIGHT = "triweight"


@dataclass(frozen=True)
class Kernel:
    """Compactly supported kernel on [-1, 1]."""

    family: str = EPANECHNIKOV

    def __post_init__(self):
        if self.family not in (EPANECHNIKOV, TRIWEIGHT):
            raise ValidationError(f"unknown kernel {self.family!r}")

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        v = np.maximum(1.0 - u * u, 0.0)
        if self.family == EPANECHNIKOV:
            return 0.75 * v
        return 35.0 / 32.0 * v**3

    @property
    def roughness(self):
        """Integral of K^2."""
        return 0.6 if self.family == EPANECHNIKOV else 350.0 / 429.0

    @property
    def second_moment(self):
        """Integral of u^2 K(u)."""
        return 0.2 if self.family == EPANECHNIKOV else 1.0 / 9.0

    @property
    def reference_factor(self):
        """Normal-reference constant: h = factor * sd * n^(-1/5) for this kernel."""
        return (8 * math.sqrt(math.pi) * self.roughness / (3 * self.second_moment**2)) ** 0.2

    def scaled(self, u, h):
        """K_h(u) = K(u / h) / h."""
        return self(np.asarray(u, dtype=float) / h) / h

    def weight_matrix(self, at, x, h):
        """Matrix of K_h(at_i - x_l), shape (len(at), len(x))."""
        at = np.asarray(at, dtype=float)
        x = np.asarray(x, dtype=float)
        return self.scaled(at[:, None] - x[None, :], h)


@dataclass
class Sample:
    x: np.ndarray
    y: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).ravel()
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.x.shape != self.y.shape:
            raise ValidationError(
                f"sample {self.label!r}: x and y lengths differ "
                f"({self.x.size} vs {self.y.size})"
            )
        if self.x.size < 2:
            raise InsufficientData(f"sample {self.label!r} needs at least 2 points")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise ValidationError(f"sample {self.label!r} has non-finite values")

    @property
    def n(self):
        return self.x.size

    def transform_y(self, a, b):
        return Sample(self.x, a * self.y + b, self.label)


def _check_h(h):
    if not (h > 0 and math.isfinite(h)):
        raise ValidationError(f"bandwidth must be positive and finite, got {h}")


def kde(sample, kernel, h, at):
    """Kernel density estimate of the covariate at the query points."""
    _check_h(h)
    x = sample.x if isinstance(sample, Sample) else np.asarray(sample, dtype=float)
    return kernel.weight_matrix(at, x, h).mean(axis=1)


def _nw_from_weights(K, y):
    s = K.sum(axis=1)
    out = np.full(K.shape[0], np.nan)
    ok = s > 0
    out[ok] = K[ok] @ y / s[ok]
    return out


def nadaraya_watson(sample, kernel, h, at):
    """Local average of responses; NaN where the window is empty."""
    _check_h(h)
    return _nw_from_weights(kernel.weight_matrix(at, sample.x, h), sample.y)


def weighted_median_rows(K, y):
    """Lower weighted median of ``y`` for each row of weights ``K``."""
    order = np.argsort(y, kind="stable")
    ys = y[order]
    cw = np.cumsum(K[:, order], axis=1)
    half = 0.5 * cw[:, -1]
    idx = np.argmax(cw >= half[:, None], axis=1)
    return ys[idx]


def _local_m_from_weights(K, y, rho, sigma, maxiter=100, tol=1e-8):
    q = K.shape[0]
    a = np.full(q, np.nan)
    converged = np.zeros(q, dtype=bool)
    nonempty = K.sum(axis=1) > 0
    if not nonempty.any():
        return a, converged
    a[nonempty] = weighted_median_rows(K[nonempty], y)
    active = np.flatnonzero(nonempty)
    for _ in range(maxiter):
        Ka = K[active]
        w = Ka * rho.weights((y[None, :] - a[active, None]) / sigma)
        s = w.sum(axis=1)
        stuck = s <= 0
        new = np.where(stuck, a[active], (w @ y) / np.where(stuck, 1.0, s))
        done = (np.abs(new - a[active]) <= tol * sigma) & ~stuck
        a[active] = new
        converged[active[done]] = True
        # rows whose window holds no point with nonzero weight cannot move
        active = active[~done & ~stuck]
        if active.size == 0:
            break
    return a, converged


def local_m_fit(sample, rho, sigma, kernel, h, at, maxiter=100, tol=1e-8,
                full_output=False):
    """Local M-smoother by IRLS from the local weighted median.

    Solves ``sum K_h(x - X_i) psi((Y_i - a) / sigma) = 0`` at each query
    point.  Empty windows give NaN.  With ``full_output`` a boolean
    convergence mask is returned as well; non-converged points keep the
    last iterate.
    """
    _check_h(h)
    s = sigma.sigma if isinstance(sigma, ScaleEstimate) else float(sigma)
    if not s > 0:
        raise ValidationError("sigma must be positive")
    K = kernel.weight_matrix(at, sample.x, h)
    a, converged = _local_m_from_weights(K, sample.y, rho, s, maxiter, tol)
    if full_output:
        return a, converged
    return a


@dataclass
class FitResult:
    """Per-population regression fit evaluated at the sample's covariates."""

    sample: Sample
    m_hat: np.ndarray
    sigma_hat: ScaleEstimate
    bandwidth: float
    method: str
    kernel: Kernel = field(default_factory=Kernel)
    rho: RhoFunction = field(default_factory=RhoFunction.least_squares)
    converged: np.ndarray = None

    @property
    def flagged(self):
        return ~np.isfinite(self.m_hat)

    @property
    def n_nonconverged(self):
        if self.converged is None:
            return 0
        return int(np.sum(~self.converged & np.isfinite(self.m_hat)))

    def predict(self, at):
        if self.method == CLASSICAL:
            return nadaraya_watson(self.sample, self.kernel, self.bandwidth, at)
        return local_m_fit(self.sample, self.rho, self.sigma_hat, self.kernel,
                           self.bandwidth, at)

    def residuals(self):
        return (self.sample.y - self.m_hat) / self.sigma_hat.sigma


def fit_population(sample, method, h, kernel=None, rho=None, sigma=None):
    """Fit one population.

    The classical fit is Nadaraya-Watson with the residual root mean
    square as scale.  The robust fit is the local M-smoother with the
    difference-based scale unless ``sigma`` is supplied.
    """
    kernel = kernel or Kernel()
    _check_h(h)
    if method == CLASSICAL:
        m = nadaraya_watson(sample, kernel, h, sample.x)
        ok = np.isfinite(m)
        sig = sigma or residual_sd(sample.y[ok] - m[ok])
        return FitResult(sample, m, sig, h, CLASSICAL, kernel,
                         RhoFunction.least_squares(), np.isfinite(m))
    if method == ROBUST:
        rho = rho or RhoFunction.tukey()
        sig = sigma or diff_median_scale(sample)
        m, conv = local_m_fit(sample, rho, sig, kernel, h, sample.x, full_output=True)
        return FitResult(sample, m, sig, h, ROBUST, kernel, rho, conv)
    raise ValidationError(f"unknown method {method!r}")


@dataclass
class PooledFit:
    """Pooled regression estimate under the null, per population.

    ``f_hat_j[s]`` has shape (k, n_s): row j is the density estimate of
    population j at population s's covariates.  ``m_hat_j[s]`` holds the
    matching regression estimates.
    """

    mu0_hat: list
    f_hat_j: list
    f_hat: list
    m_hat_j: list
    proportions: np.ndarray


def pooled_mu0(samples, fits):
    """Density-weighted mixture of the per-population fits.

    Each population's density estimate uses that population's own kernel
    and bandwidth.
    """
    if len(samples) != len(fits):
        raise ValidationError("need one fit per sample")
    sizes = np.array([s.n for s in samples], dtype=float)
    props = sizes / sizes.sum()
    mu0, fj_all, f_all, m_all = [], [], [], []
    for s, smp in enumerate(samples):
        fj = np.vstack([kde(samples[j], fits[j].kernel, fits[j].bandwidth, smp.x)
                        for j in range(len(samples))])
        mj = np.vstack([fits[j].m_hat if j == s else fits[j].predict(smp.x)
                        for j in range(len(samples))])
        f = props @ fj
        contrib = np.where(fj > 0, fj * np.nan_to_num(mj), 0.0)
        # a positive density with a missing fit cannot be mixed in
        bad = np.any((fj > 0) & ~np.isfinite(mj), axis=0) | (f <= 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            m0 = (props @ contrib) / f
        m0[bad] = np.nan
        mu0.append(m0)
        fj_all.append(fj)
        f_all.append(f)
        m_all.append(mj)
    return PooledFit(mu0, fj_all, f_all, m_all, props)
