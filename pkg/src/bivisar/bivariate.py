"""Sarmanov joint pmf P1(x1) P2(x2) [1 + omega q1(x1) q2(x2)].

Also: the admissible omega interval, the Dixon-Coles closed form used as an
independent check, correlations, plot tables and exact sampling.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from bivisar.marginals import NEGBIN, POISSON, Marginal, Poisson
from bivisar.qcatalog import QFunction, ans_constant, make_q

OMEGA_CAP = 1e6
FEASIBILITY_SLACK = 1e-12


class FeasibilityError(ValueError):
    """omega makes some joint probability negative."""


class DegenerateQError(ValueError):
    """A q-function is identically zero."""


class InadmissibleQError(ValueError):
    """A q-function does not have zero mean under its margin."""


@dataclass(frozen=True)
class OmegaInterval:
    lower: float
    upper: float

    def __contains__(self, omega: float) -> bool:
        slack = FEASIBILITY_SLACK * max(1.0, abs(omega))
        return self.lower - slack <= omega <= self.upper + slack

    @property
    def width(self) -> float:
        return self.upper - self.lower


def omega_bounds_from_extrema(lo1, hi1, lo2, hi2, cap: float = OMEGA_CAP):
    """Vectorized omega interval from q extrema (inf_i, sup_i) of each side."""
    prods = np.stack(np.broadcast_arrays(lo1 * lo2, lo1 * hi2, hi1 * lo2, hi1 * hi2))
    pos = np.where(prods > 0, prods, 0.0).max(axis=0)
    neg = np.where(prods < 0, prods, 0.0).min(axis=0)
    with np.errstate(divide="ignore"):
        lower = np.where(pos > 0, -1.0 / pos, -cap)
        upper = np.where(neg < 0, -1.0 / neg, cap)
    return np.maximum(lower, -cap), np.minimum(upper, cap)


def omega_bounds(q1: QFunction, q2: QFunction, cap: float = OMEGA_CAP) -> OmegaInterval:
    """Largest interval of omega keeping 1 + omega q1 q2 >= 0 everywhere."""
    lo1, hi1 = q1.bounds()
    lo2, hi2 = q2.bounds()
    if lo1 == hi1 == 0.0 or lo2 == hi2 == 0.0:
        raise DegenerateQError("q-function is identically zero")
    lower, upper = omega_bounds_from_extrema(lo1, hi1, lo2, hi2, cap)
    return OmegaInterval(float(lower), float(upper))


class ScoreMatrix(NamedTuple):
    probs: np.ndarray
    truncated_mass: float


@dataclass(frozen=True)
class BivariateModel:
    """Two margins joined by a Sarmanov dependence term.

    Both q-functions must have zero mean under their margins unless
    ``unsafe=True``; omega must lie in :func:`omega_bounds`.
    """

    q1: QFunction
    q2: QFunction
    omega: float = 0.0
    unsafe: bool = False

    def __post_init__(self):
        object.__setattr__(self, "omega", float(self.omega))
        if not self.unsafe:
            for side, q in (("first", self.q1), ("second", self.q2)):
                if not q.is_admissible():
                    raise InadmissibleQError(
                        f"{side} q-function {q.name} has residual {q.zero_mean_residual():.6g}; "
                        "use repair_q() or pass unsafe=True"
                    )
        interval = self.omega_interval()
        if self.omega not in interval:
            raise FeasibilityError(
                f"omega={self.omega} outside feasible interval [{interval.lower}, {interval.upper}]"
            )

    @classmethod
    def independent(cls, margin1: Marginal, margin2: Marginal) -> BivariateModel:
        return cls(make_q("one_p", margin1), make_q("one_p", margin2), 0.0)

    @property
    def margin1(self) -> Marginal:
        return self.q1.marginal

    @property
    def margin2(self) -> Marginal:
        return self.q2.marginal

    def omega_interval(self) -> OmegaInterval:
        return omega_bounds(self.q1, self.q2)

    def dependence(self, x1, x2):
        return 1.0 + self.omega * self.q1(x1) * self.q2(x2)

    def joint_pmf(self, x1, x2):
        x1, x2 = np.asarray(x1), np.asarray(x2)
        p = self.margin1.pmf(x1) * self.margin2.pmf(x2) * self.dependence(x1, x2)
        return float(p) if np.ndim(p) == 0 else p

    def grid_size(self) -> int:
        """X* covering both margins and both active supports."""
        return max(self.q1.summation_limit(), self.q2.summation_limit())

    def score_matrix(self, max_goals: int | None = None) -> ScoreMatrix:
        n = (self.grid_size() if max_goals is None else int(max_goals)) + 1
        if n < 2:
            raise ValueError("max_goals must be >= 1")
        p1 = self.margin1.pmf_vector(n)
        p2 = self.margin2.pmf_vector(n)
        probs = np.outer(p1, p2) * (1.0 + self.omega * np.outer(self.q1.values(n), self.q2.values(n)))
        return ScoreMatrix(probs, float(1.0 - probs.sum()))

    def correlation(self, method: str = "auto") -> float:
        _, s1 = self.margin1.mean_sd()
        _, s2 = self.margin2.mean_sd()
        return self.omega * u_value(self.q1, method) * u_value(self.q2, method) / (s1 * s2)

    def sample(self, rng: np.random.Generator, size=None):
        """Exact draws by inverse CDF over the truncated score grid."""
        probs = self.score_matrix().probs
        n = probs.shape[1]
        cdf = np.cumsum(probs.ravel())
        u = rng.random(size) * cdf[-1]
        idx = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
        x1, x2 = np.divmod(idx, n)
        if size is None:
            return int(x1), int(x2)
        return x1, x2


def u_value(q: QFunction, method: str = "auto") -> float:
    """E[X q(X)], in closed form where one is known, else by summation."""
    m = q.marginal
    if method not in ("auto", "closed", "sum"):
        raise ValueError(f"unknown method {method!r}")
    if method != "sum" and not q.repaired:
        if q.kind == "dc":
            return m.mean * math.exp(-m.mean)
        if q.kind == "ans":
            mu, phi = m.mean, m.phi
            d = (mu + phi) ** 2 - mu * phi
            return (phi * (mu + phi) / d) ** phi * (mu * phi**2 / d - mu)
        if q.kind == "laplace" and m.family == NEGBIN:
            return m.expected_x_t_pow_x(math.exp(-1.0)) - m.laplace_at_one() * m.mean
    if method == "closed":
        raise ValueError(f"no closed form for u with q kind {q.name}")
    n = q.summation_limit() + 1
    x = np.arange(n)
    return float(np.sum(x * q.values(n) * m.pmf_vector(n)))


def dc_closed_form_pmf(lambda1, lambda2, omega_tilde, x1, x2) -> float:
    """Dixon-Coles pmf: tau(x1, x2) times the Poisson product."""
    lo = max(-1.0 / lambda1, -1.0 / lambda2)
    hi = min(1.0 / (lambda1 * lambda2), 1.0)
    slack = FEASIBILITY_SLACK * max(1.0, abs(omega_tilde))
    if not lo - slack <= omega_tilde <= hi + slack:
        raise FeasibilityError(f"omega_tilde={omega_tilde} outside [{lo}, {hi}]")
    if x1 == 0 and x2 == 0:
        tau = 1.0 - lambda1 * lambda2 * omega_tilde
    elif x1 == 0 and x2 == 1:
        tau = 1.0 + lambda1 * omega_tilde
    elif x1 == 1 and x2 == 0:
        tau = 1.0 + lambda2 * omega_tilde
    elif x1 == 1 and x2 == 1:
        tau = 1.0 - omega_tilde
    else:
        tau = 1.0
    return tau * Poisson(lambda1).pmf(x1) * Poisson(lambda2).pmf(x2)


def correlation_interval(q1: QFunction, q2: QFunction) -> tuple[float, float]:
    """(min rho, max rho) over the feasible omega interval."""
    interval = omega_bounds(q1, q2)
    _, s1 = q1.marginal.mean_sd()
    _, s2 = q2.marginal.mean_sd()
    unit = u_value(q1) * u_value(q2) / (s1 * s2)
    ends = (interval.lower * unit, interval.upper * unit)
    return min(ends), max(ends)


DEFAULT_MEANS = tuple(0.25 * k for k in range(1, 17))
DEFAULT_PHIS = (0.5, 1.0, 2.0, 5.0, 20.0)


def _margins(family: str, means: Iterable[float], phis: Iterable[float]):
    for m in means:
        if family == POISSON:
            yield Marginal(POISSON, float(m))
        else:
            for f in phis:
                yield Marginal(NEGBIN, float(m), float(f))


def correlation_range(
    kind1: str,
    kind2: str | None = None,
    family1: str = POISSON,
    family2: str | None = None,
    means=DEFAULT_MEANS,
    phis=DEFAULT_PHIS,
    s: int | None = None,
    repaired: bool = False,
) -> list[dict]:
    """One row per grid point with the omega interval and implied rho range."""
    kind2 = kind1 if kind2 is None else kind2
    family2 = family1 if family2 is None else family2
    rows = []
    for m1 in _margins(family1, means, phis):
        q1 = make_q(kind1, m1, s, repaired)
        for m2 in _margins(family2, means, phis):
            q2 = make_q(kind2, m2, s, repaired)
            interval = omega_bounds(q1, q2)
            rho_lo, rho_hi = correlation_interval(q1, q2)
            rows.append(
                {
                    "mean1": m1.mean,
                    "phi1": m1.phi,
                    "mean2": m2.mean,
                    "phi2": m2.phi,
                    "omega_lo": interval.lower,
                    "omega_hi": interval.upper,
                    "rho_min": rho_lo,
                    "rho_max": rho_hi,
                }
            )
    return rows


def range_envelope(rows: list[dict]) -> list[dict]:
    """Min/max rho per first-margin mean over everything else."""
    out: dict[float, dict] = {}
    for r in rows:
        e = out.setdefault(r["mean1"], {"mean1": r["mean1"], "rho_min": math.inf, "rho_max": -math.inf})
        e["rho_min"] = min(e["rho_min"], r["rho_min"])
        e["rho_max"] = max(e["rho_max"], r["rho_max"])
    return [out[k] for k in sorted(out)]


def write_rows_csv(rows: list[dict], path_or_file) -> None:
    if not rows:
        return
    fields = list(rows[0])
    own = isinstance(path_or_file, str)
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if v is None else (repr(v) if isinstance(v, float) else v)) for k, v in r.items()})
    finally:
        if own:
            fh.close()


def score_matrix_rows(matrix: ScoreMatrix) -> list[dict]:
    probs = matrix.probs
    return [
        {"home_goals": a, "away_goals": b, "probability": float(probs[a, b])}
        for a in range(probs.shape[0])
        for b in range(probs.shape[1])
    ]
