"""Catalog of q-functions for Sarmanov-family models.

A q-function is bounded, non-constant and has zero expectation under its
margin. Finite-support kinds move probability among scores ``0..s`` only;
``laplace`` and ``ans`` act on the whole support.

All evaluation goes through :func:`q_table` / :func:`q_values`, which
broadcast over arrays of means and dispersions so the likelihood code can
evaluate one q-function per match in a single call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from bivisar.marginals import NEGBIN, POISSON, Marginal, log_pmf, p1_over_p0

ADMISSIBLE_TOL = 1e-8

POISSON_ONLY = ("dc", "hat", "hat_s", "tilde", "general_s")
NEGBIN_ONLY = ("nb", "hat_nb", "tilde_nb", "ans")
ANY_FAMILY = ("one_p", "two_p", "three_p", "laplace")
KINDS = POISSON_ONLY + ANY_FAMILY + NEGBIN_ONLY
INFINITE_SUPPORT = ("laplace", "ans")
WITH_ORDER = ("hat_s", "general_s")

DESCRIPTIONS = {
    "dc": "Dixon-Coles: (-lam, 1, 0, ...)",
    "hat": "quadratic shift: (-lam^2, lam, 0, ...)",
    "hat_s": "order-s shift: (-lam^s, lam^(s-1), 0, ...)",
    "tilde": "three-point shift: (-lam^2, -lam, 4, 0, ...)",
    "general_s": "(s+1)-point shift: -x! lam^(s-x) for x<s, s*s! at x=s",
    "one_p": "(-P1/P0, 1, 0, ...)",
    "two_p": "(mu, -mu P0/P1, 0, ...)",
    "three_p": "(-mu P1/P0, mu, 0, ...)",
    "nb": "NB Dixon-Coles: (-phi mu/(phi+mu), 1, 0, ...)",
    "hat_nb": "(-mu^2, mu (phi+mu)/phi, 0, ...)",
    "tilde_nb": "(-mu^2, -mu (phi+mu)/phi, 4 mu phi/(phi+mu), 0, ...); fails the zero-mean condition",
    "laplace": "exp(-x) - L(1)",
    "ans": "(phi/(phi+mu))^x - c",
}


class QKindError(ValueError):
    """Raised when a q kind is unknown or incompatible with its margin."""


class RepairError(ValueError):
    """Raised when a q-function cannot be moment-repaired."""


def _ipow(base, n: int):
    # Repeated products keep e.g. lam**2 bit-identical across kinds.
    out = np.ones_like(base)
    for _ in range(n):
        out = out * base
    return out


def check_kind(kind: str, family: str, s: int | None = None) -> None:
    if kind not in KINDS:
        raise QKindError(f"unknown q kind {kind!r}; valid kinds: {', '.join(KINDS)}")
    if kind in POISSON_ONLY and family != POISSON:
        raise QKindError(f"q kind {kind!r} requires a Poisson margin")
    if kind in NEGBIN_ONLY and family != NEGBIN:
        raise QKindError(f"q kind {kind!r} requires a negative binomial margin")
    if kind in WITH_ORDER:
        if s is None or isinstance(s, bool) or int(s) != s or s < 1:
            raise QKindError(f"q kind {kind!r} needs an integer order s >= 1, got {s!r}")
    elif s is not None:
        raise QKindError(f"q kind {kind!r} takes no order s")


def support_max(kind: str, s: int | None = None) -> int | None:
    """Largest score with a nonzero q value, or None for full-support kinds."""
    if kind in INFINITE_SUPPORT:
        return None
    if kind in ("tilde", "tilde_nb"):
        return 2
    if kind == "general_s":
        return int(s)
    return 1


def ans_constant(mean, phi):
    """c = E[(phi/(phi+mu))**X] under NegBin(mu, phi)."""
    theta = phi / (phi + mean)
    return theta**phi * (1.0 - (1.0 - theta) * theta) ** (-phi)


def laplace_constant(family, mean, phi=None):
    c = 1.0 - math.exp(-1.0)
    if family == POISSON:
        return np.exp(-mean * c)
    return (phi / (phi + mean * c)) ** phi


def q_table(kind, family, mean, phi=None, s=None, repaired=False):
    """Values on the active support ``0..support_max``; shape ``mean.shape + (smax+1,)``."""
    m = np.asarray(mean, dtype=float)
    f = None if phi is None else np.asarray(phi, dtype=float)
    if kind == "dc":
        cols = [-m, np.ones_like(m)]
    elif kind == "hat":
        cols = [-_ipow(m, 2), m]
    elif kind == "hat_s":
        cols = [-_ipow(m, s), _ipow(m, s - 1)]
    elif kind == "tilde":
        cols = [-_ipow(m, 2), -m, np.full_like(m, 4.0)]
    elif kind == "general_s":
        cols = [-math.factorial(x) * _ipow(m, s - x) for x in range(s)]
        cols.append(np.full_like(m, float(s * math.factorial(s))))
    elif kind in ("one_p", "nb"):
        cols = [-p1_over_p0(family, m, f), np.ones_like(m)]
    elif kind == "two_p":
        cols = [m, -m / p1_over_p0(family, m, f)]
    elif kind == "three_p":
        cols = [-m * p1_over_p0(family, m, f), m]
    elif kind == "hat_nb":
        cols = [-_ipow(m, 2), m * (f + m) / f]
    elif kind == "tilde_nb":
        cols = [-_ipow(m, 2), -m * (f + m) / f, 4.0 * m * f / (f + m)]
    else:
        raise QKindError(f"q kind {kind!r} has no finite table")
    table = np.stack(np.broadcast_arrays(*cols), axis=-1)
    if repaired:
        top = table.shape[-1] - 1
        logp = log_pmf(family, m[..., None], None if f is None else f[..., None], np.arange(top + 1))
        p = np.exp(logp - logp[..., top:top + 1])
        if np.any(~np.isfinite(p)) or np.any(np.exp(logp[..., top]) == 0.0):
            raise RepairError("P(s) underflows to zero; cannot repair")
        table = table.copy()
        table[..., top] = -np.sum(table[..., :top] * p[..., :top], axis=-1)
    return table


def q_values(kind, family, mean, phi=None, x=0, s=None, repaired=False):
    """q evaluated at scores ``x``, broadcasting ``x`` against the parameters."""
    x = np.asarray(x)
    m = np.asarray(mean, dtype=float)
    if kind == "laplace":
        return np.exp(-x.astype(float)) - laplace_constant(family, m, phi)
    if kind == "ans":
        f = np.asarray(phi, dtype=float)
        return (f / (f + m)) ** x - ans_constant(m, f)
    table = q_table(kind, family, m, phi, s, repaired)
    top = table.shape[-1] - 1
    xi = np.minimum(x, top)
    table_b, xi_b = np.broadcast_arrays(table, xi[..., None]) if table.ndim > 1 else (table, xi)
    if table.ndim > 1:
        vals = np.take_along_axis(table_b, xi_b[..., :1], axis=-1)[..., 0]
    else:
        vals = table[xi]
    return np.where(x > top, 0.0, vals)


def q_extrema(kind, family, mean, phi=None, s=None, repaired=False):
    """(inf, sup) of q over the whole support, including tail limits."""
    m = np.asarray(mean, dtype=float)
    if kind == "laplace":
        lap = laplace_constant(family, m, phi)
        return -lap, 1.0 - lap
    if kind == "ans":
        c = ans_constant(m, np.asarray(phi, dtype=float))
        return -c, 1.0 - c
    table = q_table(kind, family, m, phi, s, repaired)
    # zero is attained beyond the active support
    return np.minimum(table.min(axis=-1), 0.0), np.maximum(table.max(axis=-1), 0.0)


@dataclass(frozen=True)
class QFunction:
    """A catalog q-function bound to its margin.

    ``repaired=True`` replaces the value at the top of the active support
    with the one that restores zero mean (see :func:`repair_q`).
    """

    kind: str
    marginal: Marginal
    s: int | None = None
    repaired: bool = False

    def __post_init__(self):
        check_kind(self.kind, self.marginal.family, self.s)
        if self.s is not None:
            object.__setattr__(self, "s", int(self.s))
        if self.repaired and self.kind in INFINITE_SUPPORT:
            raise RepairError(f"q kind {self.kind!r} has infinite support; repair unsupported")

    @property
    def name(self) -> str:
        base = self.kind if self.s is None else f"{self.kind}({self.s})"
        return f"repaired[{base}]" if self.repaired else base

    @property
    def support_max(self) -> int | None:
        return support_max(self.kind, self.s)

    @property
    def base(self) -> QFunction:
        return QFunction(self.kind, self.marginal, self.s)

    def _args(self):
        m = self.marginal
        return self.kind, m.family, m.mean, m.phi

    def __call__(self, x):
        out = q_values(*self._args(), x=x, s=self.s, repaired=self.repaired)
        return float(out) if np.ndim(out) == 0 else out

    def values(self, n: int) -> np.ndarray:
        """q(0), ..., q(n-1)."""
        return np.asarray(self(np.arange(n)), dtype=float)

    def tail_limit(self) -> float:
        if self.kind == "laplace":
            return -self.marginal.laplace_at_one()
        if self.kind == "ans":
            return -float(ans_constant(self.marginal.mean, self.marginal.phi))
        return 0.0

    def summation_limit(self) -> int:
        top = self.support_max or 0
        return max(top, self.marginal.truncation_point())

    def zero_mean_residual(self) -> float:
        """sum_x q(x) P(x) over the truncated support."""
        n = self.summation_limit() + 1
        return float(np.sum(self.values(n) * self.marginal.pmf_vector(n)))

    def is_admissible(self, tol: float = ADMISSIBLE_TOL) -> bool:
        return abs(self.zero_mean_residual()) <= tol

    def bounds(self) -> tuple[float, float]:
        lo, hi = q_extrema(*self._args(), s=self.s, repaired=self.repaired)
        return float(lo), float(hi)


def make_q(kind: str, marginal: Marginal, s: int | None = None, repaired: bool = False) -> QFunction:
    return QFunction(kind, marginal, s, repaired)


def repair_q(q: QFunction) -> QFunction:
    """Return a zero-mean version of a finite-support q.

    Already-admissible functions come back unchanged. Otherwise the value at
    the largest active score s becomes ``-sum_{x<s} q(x) P(x) / P(s)``.
    """
    if q.kind in INFINITE_SUPPORT:
        raise RepairError(f"q kind {q.kind!r} has infinite support; repair unsupported")
    if q.repaired or q.is_admissible():
        return q
    repaired = QFunction(q.kind, q.marginal, q.s, repaired=True)
    repaired(0)  # surfaces RepairError when P(s) underflows
    return repaired


def parse_q(text: str) -> tuple[str, int | None, bool]:
    """Parse ``dc``, ``general_s:3``, ``repaired:tilde_nb`` into (kind, s, repaired)."""
    repaired = False
    text = text.strip().lower()
    if text.startswith("repaired:"):
        repaired, text = True, text[len("repaired:"):]
    kind, _, order = text.partition(":")
    s = None
    if order:
        try:
            s = int(order)
        except ValueError:
            raise QKindError(f"bad order in {text!r}") from None
    if kind not in KINDS:
        raise QKindError(f"unknown q kind {kind!r}; valid kinds: {', '.join(KINDS)}")
    return kind, s, repaired
