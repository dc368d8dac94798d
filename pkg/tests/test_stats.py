import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cegb.errors import EmptySample
from cegb.stats import BootstrapConfig, normal_quantile, proportion, quantile, summarize, wilson_interval

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_quantile_examples():
    assert quantile([5.0], 0.5) == 5.0
    assert quantile([1, 2, 3, 4], 0.5) == 2.5
    # h = (4 - 1) * 0.25 = 0.75 -> 1 + 0.75 * (2 - 1)
    assert quantile([1, 2, 3, 4], 0.25) == 1.75


def test_quantile_empty():
    with pytest.raises(EmptySample):
        quantile([], 0.5)


@given(st.lists(finite, min_size=1, max_size=40), st.floats(0, 1))
def test_quantile_matches_numpy_linear(xs, q):
    assert quantile(xs, q) == pytest.approx(float(np.quantile(xs, q)), rel=1e-12, abs=1e-9)


@given(st.lists(finite, min_size=1, max_size=30), st.floats(0, 1), st.floats(0, 1), st.randoms())
def test_quantile_monotone_and_permutation_invariant(xs, q1, q2, rnd):
    lo, hi = sorted((q1, q2))
    assert quantile(xs, lo) <= quantile(xs, hi)
    ys = list(xs)
    rnd.shuffle(ys)
    assert quantile(xs, q1) == quantile(ys, q1)
    assert quantile(xs, 0) == min(xs) and quantile(xs, 1) == max(xs)


def test_summarize_constant_sample_is_degenerate():
    s = summarize([2.5] * 4, BootstrapConfig(seed=7))
    assert (s.median, s.q1, s.q3, s.ci95) == (2.5, 2.5, 2.5, (2.5, 2.5))
    assert s.iqr == 0 and s.method == "bootstrap-percentile"


def test_summarize_is_deterministic():
    cfg = BootstrapConfig(resamples=2000, seed=42)
    assert summarize([1, 2, 3], cfg) == summarize([1, 2, 3], cfg)


def test_summarize_ci_brackets_median_and_narrows():
    rng = np.random.Generator(np.random.PCG64(2024))
    cfg = BootstrapConfig(seed=1)
    small = summarize(rng.standard_normal(30), cfg)
    big = summarize(rng.standard_normal(300), cfg)
    for s in (small, big):
        assert s.ci95[0] <= s.median <= s.ci95[1]
        assert s.q1 <= s.median <= s.q3
    assert big.ci95[1] - big.ci95[0] < small.ci95[1] - small.ci95[0]


def test_bootstrap_config_checks():
    with pytest.raises(ValueError):
        BootstrapConfig(resamples=50)
    with pytest.raises(ValueError):
        BootstrapConfig(confidence=1.0)
    with pytest.raises(ValueError):
        BootstrapConfig(seed=-1)
    a, b = BootstrapConfig(seed=3).derive("x"), BootstrapConfig(seed=3).derive("y")
    assert a.seed != b.seed and a == BootstrapConfig(seed=3).derive("x")


def test_normal_quantile():
    assert normal_quantile(0.975) == pytest.approx(1.959964, abs=5e-7)


# Frozen from an independent oracle: root-finding (scipy brentq) on the
# score-test boundary (p_hat - p)^2 = z^2 p (1 - p) / n.
WILSON_ORACLE = [
    (0, 10, 0.0, 0.277532799863),
    (5, 5, 0.565517535217, 1.0),
    (9, 10, 0.595849973204, 0.982123786905),
    (1, 3, 0.061491944720, 0.792340399198),
    (37, 50, 0.604468427352, 0.841284725064),
]


@pytest.mark.parametrize("g,n,lo,hi", WILSON_ORACLE)
def test_wilson_matches_score_inversion(g, n, lo, hi):
    got = wilson_interval(g, n, 0.95)
    assert got == pytest.approx((lo, hi), abs=1e-9)


def test_wilson_zero_successes_exact_zero():
    assert wilson_interval(0, 10, 0.95)[0] == 0.0
    assert wilson_interval(5, 5, 0.95)[1] == 1.0


def test_wilson_errors():
    with pytest.raises(EmptySample):
        wilson_interval(0, 0)
    with pytest.raises(ValueError):
        wilson_interval(4, 3)


@given(st.integers(1, 400).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))))
def test_wilson_contains_point(gn):
    g, n = gn
    lo, hi = wilson_interval(g, n)
    assert 0.0 <= lo <= g / n <= hi <= 1.0


@given(st.integers(1, 9), st.integers(1, 9))
@settings(max_examples=50)
def test_wilson_narrows_with_n(num, scale):
    # same ratio g/n = num/10 at growing n
    widths = []
    for k in (scale, scale * 2, scale * 4):
        lo, hi = wilson_interval(num * k, 10 * k)
        widths.append(hi - lo)
    assert widths[0] > widths[1] > widths[2]


def test_proportion():
    p = proportion(3, 4)
    assert p.point == 0.75 and p.wilson95[0] < 0.75 < p.wilson95[1]
    assert not math.isnan(p.point)


def test_summary_singleton():
    s = summarize([3.23])
    assert (s.n, s.median, s.ci95) == (1, 3.23, (3.23, 3.23))


def test_summarize_empty():
    with pytest.raises(EmptySample):
        summarize([])
