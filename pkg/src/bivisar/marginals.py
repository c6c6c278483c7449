"""Univariate count distributions used as margins.

Both families are parameterized by their mean. The negative binomial
additionally carries a dispersion ``phi`` with variance ``mu + mu**2 / phi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

POISSON = "poisson"
NEGBIN = "negbin"
FAMILIES = (POISSON, NEGBIN)

TAIL_MASS = 1e-12
MAX_SUPPORT = 400


class ParameterError(ValueError):
    """Raised for parameters outside a distribution's domain."""


def log_pmf(family, mean, phi, x):
    """Vectorized log-pmf; broadcasts over ``mean``, ``phi`` and ``x``."""
    x = np.asarray(x, dtype=float)
    mean = np.asarray(mean, dtype=float)
    if family == POISSON:
        return x * np.log(mean) - mean - gammaln(x + 1.0)
    phi = np.asarray(phi, dtype=float)
    log_total = np.log(phi + mean)
    return (
        gammaln(x + phi)
        - gammaln(phi)
        - gammaln(x + 1.0)
        + phi * (np.log(phi) - log_total)
        + x * (np.log(mean) - log_total)
    )


def p1_over_p0(family, mean, phi=None):
    """Ratio P(X=1)/P(X=0), in closed form."""
    if family == POISSON:
        return mean
    return phi * mean / (phi + mean)


@dataclass(frozen=True)
class Marginal:
    """A Poisson(mean) or NegBin(mean, phi) distribution on 0, 1, 2, ..."""

    family: str
    mean: float
    phi: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}")
        if not (math.isfinite(self.mean) and self.mean > 0):
            raise ParameterError(f"mean must be positive, got {self.mean}")
        if self.family == NEGBIN:
            if self.phi is None or not (math.isfinite(self.phi) and self.phi > 0):
                raise ParameterError(f"phi must be positive, got {self.phi}")
        elif self.phi is not None:
            raise ParameterError("Poisson margin takes no dispersion")

    @property
    def is_poisson(self) -> bool:
        return self.family == POISSON

    def pmf(self, x):
        x_arr = np.asarray(x)
        if np.any(x_arr < 0):
            raise ParameterError("support is the nonnegative integers")
        out = np.exp(log_pmf(self.family, self.mean, self.phi, x_arr))
        return float(out) if out.ndim == 0 else out

    def pmf_vector(self, n: int) -> np.ndarray:
        """Probabilities of 0..n-1."""
        return np.exp(log_pmf(self.family, self.mean, self.phi, np.arange(n)))

    def variance(self) -> float:
        if self.is_poisson:
            return self.mean
        return self.mean + self.mean**2 / self.phi

    def mean_sd(self) -> tuple[float, float]:
        return self.mean, math.sqrt(self.variance())

    def truncation_point(self) -> int:
        """Smallest x with CDF(x) > 1 - 1e-12, capped at 400."""
        cdf = np.cumsum(self.pmf_vector(MAX_SUPPORT + 1))
        hits = np.nonzero(cdf > 1.0 - TAIL_MASS)[0]
        return int(hits[0]) if hits.size else MAX_SUPPORT

    def laplace_at_one(self) -> float:
        """E[exp(-X)]."""
        c = 1.0 - math.exp(-1.0)
        if self.is_poisson:
            return math.exp(-self.mean * c)
        return (self.phi / (self.phi + self.mean * c)) ** self.phi

    def expected_x_t_pow_x(self, t: float) -> float:
        """E[X t**X] for 0 < t <= 1."""
        if not 0.0 < t <= 1.0:
            raise ParameterError(f"t must lie in (0, 1], got {t}")
        if self.is_poisson:
            n = self.truncation_point() + 1
            x = np.arange(n)
            return float(np.sum(x * t**x * self.pmf_vector(n)))
        r = self.phi
        p = self.mean / (self.phi + self.mean)
        return ((1.0 - p) / (1.0 - p * t)) ** r * (p * t * r / (1.0 - p * t))


def Poisson(lam: float) -> Marginal:
    return Marginal(POISSON, float(lam))


def NegBin(mu: float, phi: float) -> Marginal:
    return Marginal(NEGBIN, float(mu), float(phi))


def parse_marginal(text: str) -> Marginal:
    """Parse ``poisson:1.3`` or ``negbin:1.2,2``."""
    family, _, args = text.partition(":")
    family = family.strip().lower()
    try:
        values = [float(v) for v in args.split(",") if v.strip()]
    except ValueError:
        raise ParameterError(f"cannot parse marginal {text!r}") from None
    if family in ("poisson", "pois") and len(values) == 1:
        return Poisson(values[0])
    if family in ("negbin", "nb") and len(values) == 2:
        return NegBin(*values)
    raise ParameterError(f"cannot parse marginal {text!r}; use poisson:LAM or negbin:MU,PHI")
