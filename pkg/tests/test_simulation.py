import math

import numpy as np
import pytest
from scipy import stats

from robust_ecf.errors import ConfigError
from robust_ecf.simulation import (
    ContaminationSpec,
    ContiguousSpec,
    ScenarioConfig,
    contaminated_errors,
    generate,
    level_band,
    replicate_pvalues,
    run_contiguous,
    run_level_power,
    with_fixed_bandwidth,
)


def fast(**kw):
    base = dict(sizes=(40, 40), replications=6, n_draws=300, seed=3)
    base.update(kw)
    return with_fixed_bandwidth(ScenarioConfig(**base), 0.3)


class TestGenerate:
    def test_clean_errors_standard_normal(self):
        z = contaminated_errors(ContaminationSpec(), 0, 100_000, seed=1, rep=0)
        assert abs(z.mean()) < 0.02
        assert stats.kstest(z, "norm").statistic < 0.01

    def test_deterministic(self):
        sc = ScenarioConfig(model="M3", seed=7)
        a, b = generate(sc, 4), generate(sc, 4)
        for s, t in zip(a, b):
            np.testing.assert_array_equal(s.x, t.x)
            np.testing.assert_array_equal(s.y, t.y)
        assert not np.array_equal(generate(sc, 5)[0].x, a[0].x)

    def test_covariates_shared_across_models(self):
        a = generate(ScenarioConfig(model="M1", seed=2), 0)
        b = generate(ScenarioConfig(model="MA4", seed=2), 0)
        np.testing.assert_array_equal(a[1].x, b[1].x)
        np.testing.assert_allclose(b[1].y - a[1].y,
                                   np.exp(a[1].x) + 0.5 * a[1].x - 1.0, rtol=1e-12)

    def test_c4_second_sample_clean(self):
        sc = ScenarioConfig(model="M1", contamination=ContaminationSpec.named("C4"), seed=1)
        clean = ScenarioConfig(model="M1", seed=1)
        for rep in range(5):
            np.testing.assert_array_equal(generate(sc, rep)[1].y, generate(clean, rep)[1].y)
            # first sample: about 10% of points near 1 + sigma * 10
            hit = generate(sc, rep)[0].y > 1 + 0.5 * 5
            assert 0 < hit.sum() < 30

    def test_contamination_rate_and_location(self):
        spec = ContaminationSpec.named("C3")
        e = contaminated_errors(spec, 1, 200_000, seed=0, rep=0)
        out = np.abs(e - 10.0) < 1
        assert out.mean() == pytest.approx(0.05, abs=0.003)
        assert e[out].std() == pytest.approx(0.1, rel=0.02)
        e0 = contaminated_errors(spec, 0, 200_000, seed=0, rep=0)
        assert np.mean(np.abs(e0 + 10.0) < 1) == pytest.approx(0.05, abs=0.003)

    def test_rate_zero_matches_clean(self):
        spec = ContaminationSpec("custom", 0.0, (5.0, 5.0))
        np.testing.assert_array_equal(contaminated_errors(spec, 0, 500, 4, 2),
                                      contaminated_errors(ContaminationSpec(), 0, 500, 4, 2))

    def test_contamination_uses_clean_draws_elsewhere(self):
        spec = ContaminationSpec.named("C1")
        e = contaminated_errors(spec, 0, 1000, 3, 0)
        z = contaminated_errors(ContaminationSpec(), 0, 1000, 3, 0)
        same = e == z
        assert 0.9 < same.mean() < 1.0


class TestConfig:
    def test_invalid(self):
        with pytest.raises(ConfigError):
            ScenarioConfig(model="M9")
        with pytest.raises(ConfigError):
            ScenarioConfig(sizes=(10, 100))
        with pytest.raises(ConfigError):
            ContaminationSpec("C0", 0.1)
        with pytest.raises(ConfigError):
            ContiguousSpec((2.0, 4.0))
        with pytest.raises(ConfigError):
            ContiguousSpec((0.0, 4.0, 2.0))

    def test_level_band(self):
        lo, hi = level_band(0.05, 1000)
        half = stats.norm.ppf(0.995) * math.sqrt(0.05 * 0.95 / 1000)
        assert (lo, hi) == pytest.approx((0.05 - half, 0.05 + half))
        assert lo == pytest.approx(0.0322, abs=1e-4)


class TestRuns:
    def test_alpha_one_rejects_always(self):
        t = run_level_power(fast(alpha=1.0))
        assert all(r.frequency == 1.0 for r in t.rows)

    def test_table_contract(self):
        t = run_level_power(fast())
        assert [r.test for r in t.rows] == ["classical", "robust"]
        for r in t.rows:
            assert 0 <= r.frequency <= 1 and r.failed == 0
            assert r.outside_band == (not t.band[0] <= r.frequency <= t.band[1])

    def test_reproducible(self):
        sc = fast(test="robust")
        _, p1 = run_level_power(sc, return_pvalues=True)
        _, p2 = run_level_power(sc, return_pvalues=True)
        np.testing.assert_array_equal(p1["robust"], p2["robust"])

    def test_test_choice_does_not_change_data(self):
        p_both = replicate_pvalues(fast(), 2)
        p_rob = replicate_pvalues(fast(test="robust"), 2)
        assert p_both["robust"] == p_rob["robust"]

    def test_parallel_matches_serial(self):
        pytest.importorskip("joblib")
        sc = fast(test="robust", replications=4)
        _, p1 = run_level_power(sc, return_pvalues=True)
        _, p2 = run_level_power(sc, n_jobs=2, return_pvalues=True)
        np.testing.assert_array_equal(p1["robust"], p2["robust"])

    def test_contiguous_zero_is_level(self):
        sc = fast(model="M2")
        level = run_level_power(sc)
        curve = run_contiguous(sc, ContiguousSpec((0.0, 8.0)))
        for test in ("classical", "robust"):
            assert curve.frequency(test, 0.0) == level.frequency(test)

    def test_contiguous_needs_two(self):
        sc = ScenarioConfig(model="M1", sizes=(30, 30, 30), sigmas=(1, 1, 1),
                            curves=(np.sin, np.sin, np.sin))
        with pytest.raises(ConfigError):
            run_contiguous(sc, ContiguousSpec())

    def test_three_populations(self):
        f = lambda x: x  # noqa: E731
        sc = with_fixed_bandwidth(ScenarioConfig(
            sizes=(40, 50, 60), sigmas=(0.5, 0.5, 0.7), curves=(f, f, f),
            replications=2, n_draws=300, test="robust"), 0.3)
        t = run_level_power(sc)
        assert t.rows[0].failed == 0
