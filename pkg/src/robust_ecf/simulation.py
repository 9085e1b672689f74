"""Monte Carlo level and power studies.

Scenarios follow the two-population design with uniform covariates on
[0, 1], error scales sqrt(0.25) and sqrt(0.5), null models M1-M4, fixed
alternatives MA1-MA4 and the contamination schemes C0-C4.  Every random
draw comes from a stream keyed by (seed, replication, population,
purpose), so a replication's data do not depend on the model, the test,
the contamination rate or on execution order.
"""

from dataclasses import dataclass, field, replace
import math
import warnings

import numpy as np
from scipy.stats import norm

from . import rng as _rng
from .bandwidth import BandwidthSpec
from .errors import ConfigError, RobustECFError
from .pipeline import TestOptions, compare_curves
from .smoothing import CLASSICAL, ROBUST, Sample

BOTH = "both"

MODELS = {
    "M1": (lambda x: np.ones_like(x), lambda x: np.ones_like(x)),
    "M2": (lambda x: x, lambda x: x),
    "M3": (lambda x: np.sin(2 * np.pi * x), lambda x: np.sin(2 * np.pi * x)),
    "M4": (np.exp, np.exp),
    "MA1": (lambda x: np.ones_like(x), lambda x: 1 + 0.5 * x),
    "MA2": (lambda x: x, lambda x: x + 0.5 * x),
    "MA3": (lambda x: np.sin(2 * np.pi * x), lambda x: np.sin(2 * np.pi * x) + 0.5 * x),
    "MA4": (np.exp, lambda x: np.exp(x) + 0.5 * x),
}

#: Null model paired with each fixed alternative (same first curve).
NULL_OF = {"MA1": "M1", "MA2": "M2", "MA3": "M3", "MA4": "M4"}

DEFAULT_SIGMAS = (math.sqrt(0.25), math.sqrt(0.50))

MIXTURE_NOTE = (
    "contamination mixtures use the stated outlier percentage as the outlier "
    "weight, e.g. C1 = 0.95 N(0,1) + 0.05 N(5j, 0.1^2)"
)


@dataclass(frozen=True)
class ContaminationSpec:
    """Error law: N(0,1) with probability 1 - rate, else N(mean_j, sd^2)."""

    kind: str = "C0"
    rate: float = 0.0
    outlier_means: tuple = ()
    outlier_sd: float = 0.1

    def __post_init__(self):
        if not 0 <= self.rate < 1:
            raise ConfigError("rate must be in [0, 1)", "contamination.rate")
        if self.kind == "C0" and self.rate != 0:
            raise ConfigError("C0 has no contamination", "contamination.rate")
        if not self.outlier_sd > 0:
            raise ConfigError("outlier_sd must be positive", "contamination.outlier_sd")

    @classmethod
    def named(cls, kind):
        presets = {
            "C0": (0.0, (0.0, 0.0)),
            "C1": (0.05, (5.0, 10.0)),
            "C2": (0.05, (-5.0, 5.0)),
            "C3": (0.05, (-10.0, 10.0)),
            # only the first sample is contaminated
            "C4": (0.10, (10.0, None)),
        }
        if kind not in presets:
            raise ConfigError(f"unknown contamination {kind!r}", "contamination")
        rate, means = presets[kind]
        return cls(kind, rate, means, 0.1)

    def rate_for(self, j):
        if self.rate == 0:
            return 0.0
        if j < len(self.outlier_means) and self.outlier_means[j] is None:
            return 0.0
        return self.rate

    def mean_for(self, j):
        if j < len(self.outlier_means) and self.outlier_means[j] is not None:
            return float(self.outlier_means[j])
        return 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    model: str = "M1"
    contamination: ContaminationSpec = field(default_factory=ContaminationSpec)
    sizes: tuple = (100, 100)
    sigmas: tuple = DEFAULT_SIGMAS
    alpha: float = 0.05
    replications: int = 1000
    seed: int = 0
    bandwidth: BandwidthSpec = field(default_factory=BandwidthSpec.cv)
    test: str = BOTH
    n_draws: int = 10_000
    weight_quantiles: tuple = (0.05, 0.95)
    curves: tuple = None  # optional explicit (m_1, ..., m_k) callables

    def __post_init__(self):
        if self.curves is None and self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}", "model")
        if any(int(n) < 20 for n in self.sizes):
            raise ConfigError("every sample size must be at least 20", "sizes")
        if len(self.sigmas) != len(self.sizes):
            raise ConfigError("need one sigma per population", "sigmas")
        if any(not s > 0 for s in self.sigmas):
            raise ConfigError("sigmas must be positive", "sigmas")
        if not 0 < self.alpha <= 1:
            raise ConfigError("alpha must be in (0, 1]", "alpha")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1", "replications")
        if self.test not in (CLASSICAL, ROBUST, BOTH):
            raise ConfigError(f"unknown test {self.test!r}", "test")

    @property
    def k(self):
        return len(self.sizes)

    @property
    def methods(self):
        return (CLASSICAL, ROBUST) if self.test == BOTH else (self.test,)

    def regression(self, j):
        if self.curves is not None:
            return self.curves[j]
        return MODELS[self.model][j]


def contaminated_errors(spec, j, n, seed, rep):
    """Error draws for population j; identical to clean draws when rate is 0."""
    z = _rng.stream(seed, rep, j, _rng.ERROR).standard_normal(n)
    rate = spec.rate_for(j)
    if rate == 0:
        return z
    g = _rng.stream(seed, rep, j, _rng.CONTAMINATION)
    hit = g.random(n) < rate
    out = g.normal(spec.mean_for(j), spec.outlier_sd, n)
    return np.where(hit, out, z)


def generate(sc, rep, shift=None):
    """Samples for replication ``rep``.

    ``shift`` optionally adds a function of x to each population's curve;
    it is used for contiguous alternatives.
    """
    samples = []
    for j, n in enumerate(sc.sizes):
        n = int(n)
        x = _rng.stream(sc.seed, rep, j, _rng.COVARIATE).random(n)
        eps = contaminated_errors(sc.contamination, j, n, sc.seed, rep)
        m = sc.regression(j)(x)
        if shift is not None and shift[j] is not None:
            m = m + shift[j](x)
        samples.append(Sample(x, m + sc.sigmas[j] * eps, label=f"pop{j + 1}"))
    return samples


def level_band(alpha, replications, gamma=0.01):
    """[L1, L2] binomial band around ``alpha`` at significance ``gamma``."""
    half = norm.ppf(1 - gamma / 2) * math.sqrt(alpha * (1 - alpha) / replications)
    return alpha - half, alpha + half


def _options(sc, rep):
    return TestOptions(
        bandwidth=sc.bandwidth,
        weight_quantiles=sc.weight_quantiles,
        n_draws=sc.n_draws,
        # seed the null draws per replication, shared by both tests
        seed=int(np.random.SeedSequence(sc.seed, spawn_key=(rep,)).generate_state(1)[0]),
    )


def replicate_pvalues(sc, rep, shift=None):
    """p-value per method for one replication (NaN marks a failed fit)."""
    samples = generate(sc, rep, shift)
    out = {}
    opts = _options(sc, rep)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for method in sc.methods:
            try:
                out[method] = compare_curves(samples, method, opts).p_value
            except (RobustECFError, np.linalg.LinAlgError):
                out[method] = math.nan
    return out


def _run_pvalues(sc, shift=None, n_jobs=1):
    reps = range(sc.replications)
    if n_jobs == 1:
        rows = [replicate_pvalues(sc, r, shift) for r in reps]
    else:
        from joblib import Parallel, delayed

        rows = Parallel(n_jobs=n_jobs)(delayed(replicate_pvalues)(sc, r, shift) for r in reps)
    return {m: np.array([row[m] for row in rows]) for m in sc.methods}


@dataclass
class RejectionRow:
    contamination: str
    model: str
    sizes: tuple
    test: str
    frequency: float
    failed: int
    replications: int
    outside_band: bool
    delta: float = None


@dataclass
class RejectionTable:
    rows: list
    alpha: float
    band: tuple
    notes: tuple = (MIXTURE_NOTE,)

    def frequency(self, test, delta=None):
        for r in self.rows:
            if r.test == test and (delta is None or r.delta == delta):
                return r.frequency
        raise KeyError((test, delta))

    def extend(self, other):
        self.rows.extend(other.rows)
        return self


def _rows_from_pvalues(sc, pvals, delta=None):
    band = level_band(sc.alpha, sc.replications)
    rows = []
    for method, p in pvals.items():
        ok = np.isfinite(p)
        freq = float(np.mean(p[ok] <= sc.alpha)) if ok.any() else math.nan
        rows.append(RejectionRow(
            sc.contamination.kind, sc.model, tuple(int(n) for n in sc.sizes), method,
            freq, int((~ok).sum()), sc.replications,
            not (band[0] <= freq <= band[1]), delta,
        ))
    return rows


def run_level_power(sc, n_jobs=1, return_pvalues=False):
    """Rejection frequency per test for one scenario."""
    pvals = _run_pvalues(sc, n_jobs=n_jobs)
    table = RejectionTable(_rows_from_pvalues(sc, pvals), sc.alpha,
                           level_band(sc.alpha, sc.replications))
    if return_pvalues:
        return table, pvals
    return table


@dataclass(frozen=True)
class ContiguousSpec:
    """Alternatives m_2 = m_1 + Delta * direction(x) / sqrt(n)."""

    delta_grid: tuple = (0.0, 2.0, 4.0, 6.0, 8.0)
    direction: object = None  # callable of x, default identity

    def __post_init__(self):
        g = np.asarray(self.delta_grid, dtype=float)
        if g.size == 0 or np.any(np.diff(g) < 0) or 0.0 not in g:
            raise ConfigError("delta grid must be sorted ascending and contain 0", "delta_grid")


def run_contiguous(sc, cs, n_jobs=1):
    """Power curve over ``cs.delta_grid`` for a two-population null scenario."""
    if sc.k != 2:
        raise ConfigError("contiguous alternatives need exactly two populations", "sizes")
    n = sum(int(s) for s in sc.sizes)
    direction = cs.direction or (lambda x: x)
    rows = []
    for delta in cs.delta_grid:
        shift = None
        if delta != 0:
            scale = delta / math.sqrt(n)
            shift = (None, lambda x, s=scale: s * direction(x))
        pvals = _run_pvalues(sc, shift, n_jobs)
        rows.extend(_rows_from_pvalues(sc, pvals, float(delta)))
    return RejectionTable(rows, sc.alpha, level_band(sc.alpha, sc.replications))


def with_fixed_bandwidth(sc, h):
    return replace(sc, bandwidth=BandwidthSpec.fixed(h))
