"""Statistics primitives implemented from scratch so the analytics layer has
no numerical dependencies: population central moments, Fisher-Pearson
skewness, Pearson correlation with a two-sided t test, and the regularized
incomplete beta function backing the Student-t tail.
"""

import math
from dataclasses import dataclass
from typing import Sequence


class TooFewPoints(ValueError):
    pass


class DegenerateDistribution(ValueError):
    """All points identical: variance is zero and moments are undefined."""


class LengthMismatch(ValueError):
    pass


def mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs)


def central_moment(xs: Sequence[float], k: int) -> float:
    """Population central moment m_k = (1/n) * sum((x - mean)^k)."""
    mu = mean(xs)
    return sum((x - mu) ** k for x in xs) / len(xs)


def population_std(xs: Sequence[float]) -> float:
    return math.sqrt(central_moment(xs, 2))


def fisher_pearson_skewness(xs: Sequence[float]) -> float:
    """g1 = m3 / m2^(3/2) from population central moments."""
    if len(xs) < 2:
        raise TooFewPoints(f"need at least 2 points, got {len(xs)}")
    m2 = central_moment(xs, 2)
    if m2 <= 0.0:
        raise DegenerateDistribution("zero variance")
    m3 = central_moment(xs, 3)
    return m3 / m2**1.5


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    p_two_sided: float
    n: int

    def to_dict(self) -> dict:
        return {"r": self.r, "p_two_sided": self.p_two_sided, "n": self.n}


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Pearson r from population moments, with a two-sided p value.

    p comes from t = r*sqrt((n-2)/(1-r^2)) against the Student t
    distribution with n-2 degrees of freedom.
    """
    if len(x) != len(y):
        raise LengthMismatch(f"len(x)={len(x)} != len(y)={len(y)}")
    n = len(x)
    if n < 3:
        raise TooFewPoints(f"need at least 3 pairs, got {n}")
    mx, my = mean(x), mean(y)
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx <= 0.0 or syy <= 0.0:
        raise DegenerateDistribution("zero variance in one argument")
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    r = sxy / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if 1.0 - r * r <= 0.0:
        return CorrelationResult(r=r, p_two_sided=0.0, n=n)
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return CorrelationResult(r=r, p_two_sided=student_t_p_two_sided(t, n - 2), n=n)


def student_t_p_two_sided(t: float, df: int) -> float:
    """P(|T| >= |t|) for T ~ Student t with ``df`` degrees of freedom."""
    if df < 1:
        raise ValueError("df must be >= 1")
    x = df / (df + t * t)
    return regularized_incomplete_beta(df / 2.0, 0.5, x)


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) via a continued-fraction expansion; absolute error ~1e-12.

    Uses the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) to keep the continued
    fraction in its fast-converging region.
    """
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


_TINY = 1e-300
_CF_EPS = 1e-14
_CF_MAX_ITER = 500


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    # Modified Lentz evaluation of the standard incomplete-beta fraction.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"continued fraction did not converge for a={a}, b={b}, x={x}")
