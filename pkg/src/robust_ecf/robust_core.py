"""Score functions and robust scale estimators.

Two rho families are provided: Tukey's bisquare (bounded, redescending)
and Huber (monotone).  Huber with ``c = inf`` is least squares and is
what the classical smoother uses.

For Tukey the loss is normalised so that ``sup rho = 1`` while ``psi``
keeps the conventional form ``u * (1 - (u/c)**2)**2``; the two differ by
the constant ``6 / c**2`` (see ``RhoFunction.derivative_scale``).  Every
M-estimate and every ratio such as ``tau / nu**2`` is unaffected by that
constant.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import ndtri

from .errors import DegenerateScale, InsufficientData, ValidationError

TUKEY = "tukey"
HUBER = "huber"

DIFF_MEDIAN = "diff-median"
MAD = "mad"
TAU = "tau"
RESIDUAL_SD = "residual-sd"

#: Phi^{-1}(3/4), the MAD consistency constant at the normal.
NORMAL_Q75 = float(ndtri(0.75))

TUKEY_EFFICIENT_C = 4.685
TAU_SCALE_C = 3.0


@dataclass(frozen=True)
class RhoFunction:
    """A rho/psi family with its tuning constant."""

    family: str = TUKEY
    c: float = TUKEY_EFFICIENT_C

    def __post_init__(self):
        if self.family not in (TUKEY, HUBER):
            raise ValidationError(f"unknown rho family {self.family!r}")
        if not self.c > 0:
            raise ValidationError("tuning constant c must be positive")
        if self.family == TUKEY and math.isinf(self.c):
            raise ValidationError("Tukey bisquare needs a finite c")

    @classmethod
    def tukey(cls, c=TUKEY_EFFICIENT_C):
        return cls(TUKEY, c)

    @classmethod
    def huber(cls, c=1.345):
        return cls(HUBER, c)

    @classmethod
    def least_squares(cls):
        return cls(HUBER, math.inf)

    @property
    def bounded(self):
        return self.family == TUKEY

    @property
    def derivative_scale(self):
        """Constant ``k`` with ``d rho / du = k * psi``."""
        if self.family == TUKEY:
            return 6.0 / self.c**2
        return 1.0

    @property
    def psi_sup(self):
        """sup |psi(u)|."""
        if self.family == TUKEY:
            # attained at u = c / sqrt(5)
            return self.c / math.sqrt(5.0) * (1.0 - 1.0 / 5.0) ** 2
        return self.c

    def rho(self, u):
        u = np.asarray(u, dtype=float)
        if self.family == TUKEY:
            v = np.minimum((u / self.c) ** 2, 1.0)
            return 1.0 - (1.0 - v) ** 3
        a = np.abs(u)
        if math.isinf(self.c):
            return 0.5 * u**2
        return np.where(a <= self.c, 0.5 * u**2, self.c * a - 0.5 * self.c**2)

    def psi(self, u):
        u = np.asarray(u, dtype=float)
        if self.family == TUKEY:
            v = (u / self.c) ** 2
            return np.where(v < 1.0, u * (1.0 - v) ** 2, 0.0)
        return np.clip(u, -self.c, self.c)

    def psi_prime(self, u):
        u = np.asarray(u, dtype=float)
        if self.family == TUKEY:
            v = (u / self.c) ** 2
            return np.where(v < 1.0, (1.0 - v) * (1.0 - 5.0 * v), 0.0)
        return np.where(np.abs(u) <= self.c, 1.0, 0.0)

    def psi_second(self, u):
        u = np.asarray(u, dtype=float)
        if self.family == TUKEY:
            v = (u / self.c) ** 2
            return np.where(v < 1.0, 4.0 * u / self.c**2 * (5.0 * v - 3.0), 0.0)
        return np.zeros_like(u)

    def weights(self, u):
        """IRLS weights psi(u)/u, with the limit psi'(0) at u = 0."""
        u = np.asarray(u, dtype=float)
        if self.family == TUKEY:
            v = (u / self.c) ** 2
            return np.where(v < 1.0, (1.0 - v) ** 2, 0.0)
        if math.isinf(self.c):
            return np.ones_like(u)
        a = np.abs(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(a <= self.c, 1.0, self.c / a)


@dataclass(frozen=True)
class ScaleEstimate:
    sigma: float
    method: str = DIFF_MEDIAN

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DegenerateScale(f"scale must be positive and finite, got {self.sigma}")


def diff_median_scale(sample):
    """Difference-based robust scale.

    Pairs are sorted by covariate (stable, so ties keep their original
    order) and the median absolute successive response difference is
    rescaled to be Fisher-consistent at the normal.
    """
    x = np.asarray(sample.x, dtype=float)
    y = np.asarray(sample.y, dtype=float)
    if x.size < 2:
        raise InsufficientData("difference-based scale needs at least 2 points")
    order = np.argsort(x, kind="stable")
    med = np.median(np.abs(np.diff(y[order])))
    if med == 0:
        raise DegenerateScale("median of successive differences is zero")
    return ScaleEstimate(float(med / (math.sqrt(2.0) * NORMAL_Q75)), DIFF_MEDIAN)


def _mad(r):
    return float(np.median(np.abs(r - np.median(r))))


def mad_scale(residuals):
    r = np.asarray(residuals, dtype=float)
    if r.size == 0:
        raise InsufficientData("empty residual vector")
    m = _mad(r)
    if m == 0:
        raise DegenerateScale("MAD is zero")
    return ScaleEstimate(m / NORMAL_Q75, MAD)


def tau_scale(residuals, c=TAU_SCALE_C):
    """MAD-standardised tau-scale with a Tukey rho at ``c``."""
    r = np.asarray(residuals, dtype=float)
    if r.size == 0:
        raise InsufficientData("empty residual vector")
    m = _mad(r)
    if m == 0:
        raise DegenerateScale("MAD is zero")
    s = m / NORMAL_Q75
    tau2 = s**2 * float(np.mean(RhoFunction(TUKEY, c).rho(r / s)))
    return ScaleEstimate(math.sqrt(tau2), TAU)


def residual_sd(residuals):
    """Root mean square of residuals, the least-squares scale."""
    r = np.asarray(residuals, dtype=float)
    if r.size == 0:
        raise InsufficientData("empty residual vector")
    s = math.sqrt(float(np.mean(r**2)))
    if s == 0:
        raise DegenerateScale("residuals are identically zero")
    return ScaleEstimate(s, RESIDUAL_SD)
