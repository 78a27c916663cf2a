"""
Gaussian tail probabilities for comparator leaves.

The CDF goes through scipy's complementary error function, which keeps
full relative precision in both tails.
"""

import math

from scipy import special

_SQRT2 = math.sqrt(2.0)


def normal_cdf(z: float) -> float:
    """Standard normal CDF, clamped to [0, 1]"""
    return min(1.0, max(0.0, 0.5 * float(special.erfc(-z / _SQRT2))))


def normal_sf(z: float) -> float:
    """Standard normal survival function 1 - CDF(z)"""
    return min(1.0, max(0.0, 0.5 * float(special.erfc(z / _SQRT2))))


def normal_quantile(p: float) -> float:
    return float(special.ndtri(p))


def prob_below(mean: float, variance: float, threshold: float, inclusive: bool) -> float:
    """
    Pr(X < t) (or X <= t when inclusive) for X ~ N(mean, variance).

    Zero variance degenerates to a step at the mean.
    """
    if variance <= 0.0:
        if inclusive:
            return 1.0 if mean <= threshold else 0.0
        return 1.0 if mean < threshold else 0.0
    return normal_cdf((threshold - mean) / math.sqrt(variance))


def prob_above(mean: float, variance: float, threshold: float, inclusive: bool) -> float:
    """Pr(X > t) (or X >= t when inclusive) for X ~ N(mean, variance)"""
    if variance <= 0.0:
        if inclusive:
            return 1.0 if mean >= threshold else 0.0
        return 1.0 if mean > threshold else 0.0
    return normal_sf((threshold - mean) / math.sqrt(variance))


def prob_compare(mean: float, variance: float, op: str, threshold: float) -> float:
    """Pr(X op t) for X ~ N(mean, variance); equality has probability 0 unless degenerate"""
    if op == 'gt':
        return prob_above(mean, variance, threshold, inclusive=False)
    if op == 'ge':
        return prob_above(mean, variance, threshold, inclusive=True)
    if op == 'lt':
        return prob_below(mean, variance, threshold, inclusive=False)
    if op == 'le':
        return prob_below(mean, variance, threshold, inclusive=True)
    if op in ('eq', 'ne'):
        equal = 1.0 if variance <= 0.0 and mean == threshold else 0.0
        return equal if op == 'eq' else 1.0 - equal
    raise ValueError(f"not a comparison: {op}")


def wilson_interval(successes: int, n: int, confidence: float):
    """
    Two-sided Wilson score interval for a binomial proportion.

    Returns:
        (low, high)
    """
    if n <= 0:
        raise ValueError("Wilson interval needs n > 0")
    z = normal_quantile(0.5 + confidence / 2.0)
    return _wilson(successes, n, z)


def wilson_lower(successes: int, n: int, confidence: float) -> float:
    """One-sided Wilson lower bound at the given confidence level"""
    if n <= 0:
        raise ValueError("Wilson bound needs n > 0")
    return _wilson(successes, n, normal_quantile(confidence))[0]


def _wilson(successes: int, n: int, z: float):
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    centre = (p + z2 / (2.0 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom
    low = max(0.0, centre - half)
    high = min(1.0, centre + half)
    # Rounding can push the bounds past the point estimate at p in {0, 1}
    return min(low, p), max(high, p)
