"""Leave-one-out cross-validated bandwidth selection."""

from dataclasses import dataclass
import warnings

import numpy as np

from .errors import AllDegenerate, DegenerateScale, ValidationError
from .robust_core import RhoFunction, diff_median_scale, tau_scale
from .smoothing import (
    CLASSICAL,
    ROBUST,
    Kernel,
    _local_m_from_weights,
    _nw_from_weights,
)

FIXED = "fixed"
CV = "cv"

LEAST_SQUARES = "ls"
TAU_CRITERION = "tau"

MAX_FLAGGED_FRACTION = 0.05


class BandwidthWarning(UserWarning):
    pass


@dataclass(frozen=True)
class BandwidthSpec:
    """Either a fixed bandwidth or a grid searched by cross-validation.

    ``grid=None`` with ``mode="cv"`` means the default normal-reference grid
    built from the sample at selection time.
    """

    mode: str = CV
    h: float = None
    grid: tuple = None
    criterion: str = None

    def __post_init__(self):
        if self.mode == FIXED:
            if self.h is None or not self.h > 0:
                raise ValidationError("fixed bandwidth must be positive")
        elif self.mode == CV:
            if self.grid is not None:
                g = np.asarray(self.grid, dtype=float)
                if g.size == 0:
                    raise ValidationError("bandwidth grid is empty")
                if np.any(g <= 0) or np.any(np.diff(g) <= 0):
                    raise ValidationError("bandwidth grid must be positive and strictly increasing")
                object.__setattr__(self, "grid", tuple(float(v) for v in g))
            if self.criterion not in (None, LEAST_SQUARES, TAU_CRITERION):
                raise ValidationError(f"unknown CV criterion {self.criterion!r}")
        else:
            raise ValidationError(f"unknown bandwidth mode {self.mode!r}")

    @classmethod
    def fixed(cls, h):
        return cls(FIXED, h=float(h))

    @classmethod
    def cv(cls, grid=None, criterion=None):
        return cls(CV, grid=grid, criterion=criterion)


def reference_bandwidth(x, kernel=None):
    """Normal-reference pilot bandwidth for ``kernel`` (Epanechnikov: 2.345 sd n^-1/5)."""
    x = np.asarray(x, dtype=float)
    kernel = kernel or Kernel()
    return kernel.reference_factor * float(np.std(x, ddof=1)) * x.size ** (-0.2)


def default_grid(x, kernel=None, size=20, low=0.5, high=3.0):
    """Log-spaced grid from ``low`` to ``high`` times the reference bandwidth."""
    h_ref = reference_bandwidth(x, kernel)
    return np.geomspace(low * h_ref, high * h_ref, size)


def check_admissible(h, n):
    """Warn when n * h**4 > 1, i.e. the bias is unlikely to be negligible."""
    if n * h**4 > 1:
        warnings.warn(f"bandwidth {h:.4g} with n={n} gives n*h^4 = {n * h**4:.3g} > 1",
                      BandwidthWarning, stacklevel=2)


def loo_predictions(sample, h, method, rho=None, sigma=None, kernel=None):
    """Leave-one-out fitted values at every observation (NaN if empty)."""
    kernel = kernel or Kernel()
    K = kernel.weight_matrix(sample.x, sample.x, h)
    np.fill_diagonal(K, 0.0)
    if method == CLASSICAL:
        return _nw_from_weights(K, sample.y)
    s = sigma.sigma if hasattr(sigma, "sigma") else float(sigma)
    pred, _ = _local_m_from_weights(K, sample.y, rho or RhoFunction.tukey(), s)
    return pred


def cv_curve(sample, grid, method, rho=None, sigma=None, kernel=None, criterion=None):
    """Cross-validation criterion at every grid bandwidth.

    Returns ``(values, eligible)``; ineligible bandwidths (too many empty
    leave-one-out windows) get ``inf``.
    """
    grid = np.asarray(grid, dtype=float)
    if criterion is None:
        criterion = LEAST_SQUARES if method == CLASSICAL else TAU_CRITERION
    if method == ROBUST and sigma is None:
        sigma = diff_median_scale(sample)
    resid = np.vstack([
        sample.y - loo_predictions(sample, h, method, rho, sigma, kernel) for h in grid
    ])
    flagged = ~np.isfinite(resid)
    eligible = flagged.mean(axis=1) <= MAX_FLAGGED_FRACTION
    values = np.full(grid.size, np.inf)
    if not eligible.any():
        return values, eligible
    keep = ~np.any(flagged[eligible], axis=0)
    for i in np.flatnonzero(eligible):
        r = resid[i, keep]
        if criterion == LEAST_SQUARES:
            values[i] = float(np.mean(r**2))
        else:
            try:
                values[i] = tau_scale(r).sigma ** 2
            except DegenerateScale:
                values[i] = 0.0
    return values, eligible


def cv_select(sample, spec, method, rho=None, sigma=None, kernel=None):
    """Bandwidth for one population according to ``spec``."""
    if spec.mode == FIXED:
        check_admissible(spec.h, sample.n)
        return spec.h
    grid = np.asarray(spec.grid if spec.grid is not None else default_grid(sample.x, kernel))
    if grid.size == 1:
        return float(grid[0])
    values, eligible = cv_curve(sample, grid, method, rho, sigma, kernel, spec.criterion)
    if not eligible.any():
        raise AllDegenerate(
            f"every grid bandwidth leaves more than {MAX_FLAGGED_FRACTION:.0%} "
            "of leave-one-out windows empty"
        )
    # argmin takes the first minimum, i.e. the smaller h on ties
    h = float(grid[int(np.argmin(values))])
    check_admissible(h, sample.n)
    return h
