import math
import random

import pytest
import scipy.special
import scipy.stats
from hypothesis import given, strategies as st

from jitfeedback.stats import (
    DegenerateDistribution,
    LengthMismatch,
    TooFewPoints,
    fisher_pearson_skewness,
    pearson,
    population_std,
    regularized_incomplete_beta,
    student_t_p_two_sided,
)


def skewness_oracle(xs):
    n = len(xs)
    mu = sum(xs) / n
    m2 = sum((x - mu) ** 2 for x in xs) / n
    m3 = sum((x - mu) ** 3 for x in xs) / n
    return m3 / m2**1.5


class TestSkewness:
    def test_symmetric_is_zero(self):
        assert fisher_pearson_skewness([1, 2, 3]) == pytest.approx(0.0, abs=1e-12)

    def test_fixed_case(self):
        # m2 = 27, m3 = 162, g1 = 162 / 27**1.5
        assert fisher_pearson_skewness([1, 1, 1, 13]) == pytest.approx(1.1547005, abs=1e-7)

    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            fisher_pearson_skewness([1.0])

    def test_degenerate(self):
        with pytest.raises(DegenerateDistribution):
            fisher_pearson_skewness([5.0, 5.0, 5.0])

    @given(
        st.lists(st.floats(-100, 100), min_size=3, max_size=50),
        st.floats(-10, 10),
        st.floats(0.1, 10),
    )
    def test_affine_invariance(self, xs, a, b):
        if population_std(xs) < 1e-6:
            return
        shifted = [a + b * x for x in xs]
        assert fisher_pearson_skewness(shifted) == pytest.approx(
            fisher_pearson_skewness(xs), abs=1e-6
        )

    def test_matches_oracle_randomized(self):
        rng = random.Random(1)
        for _ in range(500):
            xs = [rng.uniform(-50, 50) for _ in range(rng.randint(2, 20))]
            if population_std(xs) < 1e-9:
                continue
            assert fisher_pearson_skewness(xs) == pytest.approx(
                skewness_oracle(xs), abs=1e-9
            )


class TestPearson:
    def test_perfect_linearity(self):
        result = pearson([1, 2, 3, 4], [2, 4, 6, 8])
        assert result.r == pytest.approx(1.0)
        assert result.p_two_sided == pytest.approx(0.0, abs=1e-12)

    def test_fixed_case(self):
        # cov = -1/3, both stds sqrt(2/3)
        result = pearson([1, 2, 3], [6, 4, 5])
        assert result.r == pytest.approx(-0.5, abs=1e-12)
        # df=1: two-sided p = I_{0.75}(0.5, 0.5) = 2/3
        assert result.p_two_sided == pytest.approx(2 / 3, abs=1e-9)

    def test_antisymmetry(self):
        xs = [1.0, 2.0, 5.0, 9.0]
        result = pearson(xs, [-x for x in xs])
        assert result.r == pytest.approx(-1.0)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            pearson([1, 2, 3], [1, 2])

    def test_too_few(self):
        with pytest.raises(TooFewPoints):
            pearson([1, 2], [3, 4])

    def test_degenerate(self):
        with pytest.raises(DegenerateDistribution):
            pearson([1, 1, 1], [1, 2, 3])

    def test_matches_scipy_randomized(self):
        rng = random.Random(2)
        for _ in range(500):
            n = rng.randint(3, 30)
            x = [rng.gauss(0, 3) for _ in range(n)]
            y = [rng.gauss(0, 3) for _ in range(n)]
            expected = scipy.stats.pearsonr(x, y)
            result = pearson(x, y)
            assert result.r == pytest.approx(expected.statistic, abs=1e-9)
            assert result.p_two_sided == pytest.approx(expected.pvalue, abs=1e-9)

    @given(
        st.lists(st.floats(-50, 50), min_size=4, max_size=20),
        st.floats(0.5, 5),
        st.floats(-5, 5),
    )
    def test_affine_invariance(self, xs, scale, shift):
        rng = random.Random(int(sum(xs)) & 0xFFFF)
        ys = [rng.gauss(0, 1) for _ in xs]
        if population_std(xs) < 1e-6 or population_std(ys) < 1e-6:
            return
        base = pearson(xs, ys)
        transformed = pearson([shift + scale * x for x in xs], ys)
        assert transformed.r == pytest.approx(base.r, abs=1e-9)

    def test_abs_r_bounded(self):
        rng = random.Random(3)
        for _ in range(200):
            n = rng.randint(3, 10)
            x = [rng.uniform(-1, 1) for _ in range(n)]
            y = [rng.uniform(-1, 1) for _ in range(n)]
            try:
                assert abs(pearson(x, y).r) <= 1.0
            except DegenerateDistribution:
                pass


class TestIncompleteBeta:
    def test_against_scipy_grid(self):
        for a in (0.5, 1.0, 2.5, 10.0, 50.0):
            for b in (0.5, 1.0, 3.0, 20.0):
                for x in (0.0, 0.001, 0.1, 0.25, 0.5, 0.75, 0.9, 0.999, 1.0):
                    expected = scipy.special.betainc(a, b, x)
                    assert regularized_incomplete_beta(a, b, x) == pytest.approx(
                        expected, abs=1e-8
                    ), (a, b, x)

    def test_t_tail_against_scipy(self):
        for df in (1, 2, 5, 30, 200):
            for t in (0.0, 0.3, 1.0, 2.5, 7.0):
                expected = 2 * scipy.stats.t.sf(abs(t), df)
                assert student_t_p_two_sided(t, df) == pytest.approx(expected, abs=1e-9)

    def test_symmetry_in_t(self):
        assert student_t_p_two_sided(1.7, 9) == pytest.approx(
            student_t_p_two_sided(-1.7, 9), abs=1e-15
        )

    def test_invalid_df(self):
        with pytest.raises(ValueError):
            student_t_p_two_sided(1.0, 0)
