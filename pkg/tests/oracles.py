"""Brute-force reference computations, independent of the package."""

import math


def pois_pmf(lam, x):
    return math.exp(x * math.log(lam) - lam - math.lgamma(x + 1))


def nb_pmf(mu, phi, x):
    return math.exp(
        math.lgamma(x + phi) - math.lgamma(phi) - math.lgamma(x + 1)
        + phi * math.log(phi / (phi + mu)) + x * math.log(mu / (phi + mu))
    )


def pmf(family, mean, phi, x):
    return pois_pmf(mean, x) if family == "poisson" else nb_pmf(mean, phi, x)


def expect(f, family, mean, phi=None, n=300):
    return math.fsum(f(x) * pmf(family, mean, phi, x) for x in range(n))


def grid_correlation(joint, n):
    """Correlation of a joint pmf given as joint(a, b) on 0..n-1 squared."""
    cells = [(a, b, joint(a, b)) for a in range(n) for b in range(n)]
    e1 = math.fsum(a * p for a, b, p in cells)
    e2 = math.fsum(b * p for a, b, p in cells)
    v1 = math.fsum((a - e1) ** 2 * p for a, b, p in cells)
    v2 = math.fsum((b - e2) ** 2 * p for a, b, p in cells)
    cov = math.fsum((a - e1) * (b - e2) * p for a, b, p in cells)
    return cov / math.sqrt(v1 * v2)
