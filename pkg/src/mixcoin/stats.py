"""Small statistics helpers for the experiment drivers and tests."""
from __future__ import annotations

from collections import Counter
from math import sqrt

from scipy import stats as _st


def binomial_sd(p: float, n: int) -> float:
    """Standard deviation of an empirical rate over n Bernoulli(p) trials."""
    return sqrt(p * (1 - p) / n)


def within_sds(observed: float, p: float, n: int, k: float = 3.0) -> bool:
    return abs(observed - p) <= k * binomial_sd(p, n)


def chi_square_uniform(values, categories: int) -> tuple[float, float]:
    """(statistic, p-value) of a goodness-of-fit test against uniform on range(categories)."""
    counts = Counter(values)
    observed = [counts.get(i, 0) for i in range(categories)]
    if sum(observed) != len(values):
        raise ValueError("values outside the category range")
    res = _st.chisquare(observed)
    return float(res.statistic), float(res.pvalue)


def total_variation(samples, support) -> float:
    """TV distance between the empirical distribution of samples and uniform on support."""
    support = list(support)
    counts = Counter(samples)
    n = len(samples)
    u = 1 / len(support)
    extra = sum(c for k, c in counts.items() if k not in set(support)) / n
    return 0.5 * (sum(abs(counts.get(s, 0) / n - u) for s in support) + extra)
