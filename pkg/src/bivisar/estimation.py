"""Likelihood, maximum-likelihood fitting and AIC comparison.

omega is fitted on an unconstrained scale. For the current mean parameters
the feasible interval [lo, hi] is intersected over every ordered team
pairing, and

    omega = lo + (hi - lo) * expit(raw + logit(-lo / (hi - lo)))

so raw = 0 is exactly independence and every raw value is feasible for
every fixture between known teams.
"""

from __future__ import annotations

import hashlib
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from bivisar.bivariate import BivariateModel, omega_bounds_from_extrema
from bivisar.marginals import NEGBIN, POISSON, Marginal, log_pmf
from bivisar.qcatalog import check_kind, make_q, q_extrema, q_values
from bivisar.regression import (
    INTERCEPT_ONLY,
    TEAM_EFFECTS,
    Layout,
    MatchRecord,
    RegressionParams,
    TeamIndex,
    pack,
    unpack,
)

log = logging.getLogger(__name__)

LOG_MEAN_BOUND = 10.0
LOG_PHI_BOUNDS = (-5.0, 12.0)
OMEGA_RAW_BOUND = 30.0


class UnknownModelError(KeyError):
    pass


class ComparisonError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    """One row of the model-comparison tables."""

    name: str
    alias: str
    family1: str
    family2: str
    q1: str | None = None
    q2: str | None = None
    s1: int | None = None
    s2: int | None = None
    repaired: bool = False
    regression: str = INTERCEPT_ONLY

    def __post_init__(self):
        if (self.q1 is None) != (self.q2 is None):
            raise ValueError("both or neither side need a q kind")
        if self.q1 is not None:
            check_kind(self.q1, self.family1, self.s1)
            check_kind(self.q2, self.family2, self.s2)

    @property
    def has_omega(self) -> bool:
        return self.q1 is not None

    def with_regression(self, regression: str) -> ModelSpec:
        return ModelSpec(
            self.name, self.alias, self.family1, self.family2,
            self.q1, self.q2, self.s1, self.s2, self.repaired, regression,
        )

    def layout(self, n_teams: int = 0) -> Layout:
        return Layout(
            self.regression,
            n_teams if self.regression == TEAM_EFFECTS else 0,
            self.family1 == NEGBIN,
            self.family2 == NEGBIN,
            self.has_omega,
        )


def _row(name, alias, family, q=None, repaired=False):
    return ModelSpec(name, alias, family, family, q, q, repaired=repaired)


MODELS = (
    _row("double Poisson", "dp", POISSON),
    _row("double negative binomial", "dnb", NEGBIN),
    _row("Dixon and Coles Poisson", "dc", POISSON, "dc"),
    _row("Dixon and Coles Poisson with q-hat", "dc_hat", POISSON, "hat"),
    _row("Dixon and Coles Poisson with q-tilde", "dc_tilde", POISSON, "tilde"),
    _row("Dixon and Coles negative binomial with q_nb", "dc_nb", NEGBIN, "nb"),
    _row("Dixon and Coles negative binomial with q-hat_nb", "dc_hat_nb", NEGBIN, "hat_nb"),
    # printed q-tilde_nb is not zero-mean; fitted in repaired form
    _row("Dixon and Coles negative binomial with q-tilde_nb", "dc_tilde_nb", NEGBIN, "tilde_nb", True),
    _row("Sarmanov Poisson", "sar_pois", POISSON, "laplace"),
    _row("Sarmanov negative binomial", "sar_nb", NEGBIN, "laplace"),
    _row("Alternative Negative binomial Sarmanov", "ans", NEGBIN, "ans"),
)


def model_names() -> list[str]:
    return [m.name for m in MODELS]


def get_model(name: str, regression: str = INTERCEPT_ONLY) -> ModelSpec:
    key = name.strip().lower()
    for m in MODELS:
        if key in (m.name.lower(), m.alias):
            return m.with_regression(regression)
    valid = "\n  ".join(f"{m.alias:12s} {m.name}" for m in MODELS)
    raise UnknownModelError(f"unknown model {name!r}; valid models:\n  {valid}")


def data_key(matches) -> str:
    """Fingerprint used to refuse comparisons across datasets."""
    h = hashlib.sha1()
    for m in matches:
        h.update(f"{m.home_team}\x1f{m.away_team}\x1f{m.home_goals}\x1f{m.away_goals}\n".encode())
    return h.hexdigest()


@dataclass(frozen=True)
class MatchArrays:
    home_idx: np.ndarray
    away_idx: np.ndarray
    x1: np.ndarray
    x2: np.ndarray

    @classmethod
    def build(cls, matches, teams: TeamIndex) -> MatchArrays:
        return cls(
            teams.indices([m.home_team for m in matches]),
            teams.indices([m.away_team for m in matches]),
            np.array([m.home_goals for m in matches], dtype=int),
            np.array([m.away_goals for m in matches], dtype=int),
        )


def _phis(spec: ModelSpec, params: RegressionParams):
    return (params.phi1 if spec.family1 == NEGBIN else None,
            params.phi2 if spec.family2 == NEGBIN else None)


def _extrema(spec, t1, t2, phi1, phi2):
    lo1, hi1 = q_extrema(spec.q1, spec.family1, t1, phi1, spec.s1, spec.repaired)
    lo2, hi2 = q_extrema(spec.q2, spec.family2, t2, phi2, spec.s2, spec.repaired)
    return lo1, hi1, lo2, hi2


def omega_bracket(spec: ModelSpec, params: RegressionParams, teams: TeamIndex | None = None):
    """Feasible omega interval common to every ordered pairing of known teams."""
    if spec.regression == TEAM_EFFECTS:
        k = len(teams)
        h, g = np.nonzero(~np.eye(k, dtype=bool))
    else:
        h = g = np.zeros(1, dtype=int)
    t1, t2 = params.means(h, g)
    lower, upper = omega_bounds_from_extrema(*_extrema(spec, t1, t2, *_phis(spec, params)))
    return float(np.max(lower)), float(np.min(upper))


def omega_from_raw(raw: float, lo: float, hi: float) -> float:
    if raw == 0.0:
        return 0.0
    p0 = -lo / (hi - lo)
    return float(lo + (hi - lo) * expit(raw + logit(p0)))


def raw_from_omega(omega: float, lo: float, hi: float) -> float:
    if omega == 0.0:
        return 0.0
    p0 = -lo / (hi - lo)
    return float(logit((omega - lo) / (hi - lo)) - logit(p0))


def match_loglik(spec, params, arrays: MatchArrays, omega: float | None = None,
                 check_bounds: bool = True) -> np.ndarray:
    """Per-match log-likelihood contributions; -inf where infeasible.

    ``check_bounds=False`` skips the per-match omega interval test, valid
    when omega already lies in the bracket over all pairings.
    """
    t1, t2 = params.means(arrays.home_idx, arrays.away_idx)
    phi1, phi2 = _phis(spec, params)
    ll = log_pmf(spec.family1, t1, phi1, arrays.x1) + log_pmf(spec.family2, t2, phi2, arrays.x2)
    if spec.has_omega and omega != 0.0:
        q1 = q_values(spec.q1, spec.family1, t1, phi1, arrays.x1, spec.s1, spec.repaired)
        q2 = q_values(spec.q2, spec.family2, t2, phi2, arrays.x2, spec.s2, spec.repaired)
        dep = 1.0 + omega * q1 * q2
        bad = dep <= 0
        if check_bounds:
            lower, upper = omega_bounds_from_extrema(*_extrema(spec, t1, t2, phi1, phi2))
            bad |= (omega < lower * (1 + 1e-12)) | (omega > upper * (1 + 1e-12))
        with np.errstate(divide="ignore", invalid="ignore"):
            ll = ll + np.where(bad, -np.inf, np.log(np.where(bad, 1.0, dep)))
    return np.where(np.isnan(ll), -np.inf, ll)


def loglik(spec: ModelSpec, params: RegressionParams, matches, teams: TeamIndex | None = None,
           omega: float | None = None) -> float:
    """Total log-likelihood; ``omega`` overrides the value implied by ``params``."""
    if teams is None:
        teams = TeamIndex.from_matches(matches)
    arrays = matches if isinstance(matches, MatchArrays) else MatchArrays.build(matches, teams)
    if omega is None:
        omega = implied_omega(spec, params, teams)
    return float(np.sum(match_loglik(spec, params, arrays, omega)))


def implied_omega(spec, params, teams) -> float:
    if not spec.has_omega:
        return 0.0
    lo, hi = omega_bracket(spec, params, teams)
    return omega_from_raw(params.omega_raw, lo, hi)


@dataclass(frozen=True)
class FitConfig:
    max_iter: int = 1000
    tol: float = 1e-9
    n_starts: int = 3
    seed: int = 20240601


@dataclass
class FittedModel:
    spec: ModelSpec
    params: RegressionParams
    teams: TeamIndex
    loglik: float
    n_obs: int
    converged: bool
    omega: float = 0.0
    config: FitConfig = field(default_factory=FitConfig)
    data_key: str = ""
    start_logliks: tuple[float, ...] = ()

    @property
    def n_params(self) -> int:
        return self.params.layout.size

    @property
    def aic(self) -> float:
        return aic(self.loglik, self.n_params)

    def means(self, home_team: str, away_team: str) -> tuple[float, float]:
        if self.spec.regression == INTERCEPT_ONLY:
            return float(np.exp(self.params.home)), float(np.exp(self.params.away))
        h = np.array(self.teams.index(home_team))
        g = np.array(self.teams.index(away_team))
        t1, t2 = self.params.means(h, g)
        return float(t1), float(t2)

    def model_for(self, home_team: str | None = None, away_team: str | None = None) -> BivariateModel:
        t1, t2 = self.means(home_team, away_team)
        return build_model(self.spec, self.params, t1, t2, self.omega)


def build_model(spec: ModelSpec, params: RegressionParams, mean1: float, mean2: float,
                omega: float) -> BivariateModel:
    phi1, phi2 = _phis(spec, params)
    m1 = Marginal(spec.family1, mean1, phi1)
    m2 = Marginal(spec.family2, mean2, phi2)
    if not spec.has_omega:
        return BivariateModel.independent(m1, m2)
    q1 = make_q(spec.q1, m1, spec.s1, spec.repaired)
    q2 = make_q(spec.q2, m2, spec.s2, spec.repaired)
    return BivariateModel(q1, q2, omega)


def aic(loglik_value: float, n_params: int) -> float:
    return 2.0 * n_params - 2.0 * loglik_value


def _clip_log(x, floor=0.05):
    return math.log(max(float(x), floor))


def _dispersion_guess(goals: np.ndarray) -> float:
    m, v = goals.mean(), goals.var(ddof=1) if goals.size > 1 else 0.0
    if v > m > 0:
        return float(np.clip(m * m / (v - m), 0.1, 1e4))
    return 100.0


def initial_vector(spec: ModelSpec, layout: Layout, teams: TeamIndex, arrays: MatchArrays) -> np.ndarray:
    """Method-of-moments start."""
    x1, x2 = arrays.x1.astype(float), arrays.x2.astype(float)
    m1, m2 = x1.mean(), x2.mean()
    if layout.regression == INTERCEPT_ONLY:
        head = [_clip_log(m1), _clip_log(m2)]
    else:
        k = len(teams)
        overall = max((m1 + m2) / 2.0, 0.05)
        scored = np.zeros(k)
        conceded = np.zeros(k)
        played = np.zeros(k)
        np.add.at(scored, arrays.home_idx, x1)
        np.add.at(scored, arrays.away_idx, x2)
        np.add.at(conceded, arrays.home_idx, x2)
        np.add.at(conceded, arrays.away_idx, x1)
        np.add.at(played, arrays.home_idx, 1)
        np.add.at(played, arrays.away_idx, 1)
        played = np.maximum(played, 1)
        att = np.log(np.maximum(scored / played, 0.05))
        dfn = np.log(np.maximum(conceded / played, 0.05) / overall)
        dfn -= dfn.mean()
        home = _clip_log(m1) - _clip_log(m2)
        att -= home / 2.0
        head = [home, *att, *dfn[:-1]]
    tail = []
    if layout.nb_home:
        tail.append(math.log(_dispersion_guess(x1)))
    if layout.nb_away:
        tail.append(math.log(_dispersion_guess(x2)))
    if layout.has_omega:
        tail.append(0.0)
    return np.array(head + tail, dtype=float)


def _bounds(layout: Layout):
    b = [(-LOG_MEAN_BOUND, LOG_MEAN_BOUND)] * layout.n_mean_params
    b += [LOG_PHI_BOUNDS] * (layout.nb_home + layout.nb_away)
    if layout.has_omega:
        b.append((-OMEGA_RAW_BOUND, OMEGA_RAW_BOUND))
    return b


def central_gradient(f, x: np.ndarray, f_bounds=None) -> np.ndarray:
    """Central differences with step 1e-6 * max(1, |x_i|)."""
    g = np.empty_like(x)
    for i in range(x.size):
        h = 1e-6 * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def _negative_loglik_factory(spec, layout, teams, arrays):
    n = arrays.x1.size

    def objective(v):
        params = unpack(v, layout)
        omega = implied_omega(spec, params, teams)
        # the bracket covers every pairing, so per-match bounds hold
        ll = float(np.sum(match_loglik(spec, params, arrays, omega, check_bounds=False)))
        if not math.isfinite(ll):
            return 1e10
        return -ll / n

    return objective


def _warn_singular(teams: TeamIndex, arrays: MatchArrays) -> None:
    scored = np.zeros(len(teams))
    np.add.at(scored, arrays.home_idx, arrays.x1)
    np.add.at(scored, arrays.away_idx, arrays.x2)
    for name, s in zip(teams.teams, scored):
        if s == 0:
            warnings.warn(f"team {name!r} scored no goals; its attack estimate is unbounded", RuntimeWarning)


def fit(spec: ModelSpec, matches, config: FitConfig | None = None) -> FittedModel:
    """Multi-start bounded quasi-Newton maximum likelihood."""
    config = config or FitConfig()
    matches = list(matches)
    teams = TeamIndex.from_matches(matches)
    layout = spec.layout(len(teams))
    if spec.regression == TEAM_EFFECTS and len(teams) < 2:
        raise ValueError("team effects need at least two distinct teams")
    if len(matches) < layout.size:
        raise ValueError(f"{len(matches)} matches cannot identify {layout.size} parameters")
    arrays = MatchArrays.build(matches, teams)
    if spec.regression == TEAM_EFFECTS:
        _warn_singular(teams, arrays)

    objective = _negative_loglik_factory(spec, layout, teams, arrays)
    mom = initial_vector(spec, layout, teams, arrays)
    zero = np.zeros(layout.size)
    rng = np.random.default_rng(config.seed)
    starts = [zero, mom]
    while len(starts) < max(config.n_starts, 1):
        starts.append(mom + rng.normal(0.0, 0.1, layout.size))
    starts = starts[: max(config.n_starts, 1)]

    n = arrays.x1.size
    best = None
    start_ll = []
    for x0 in starts:
        start_ll.append(-objective(x0) * n)
        res = minimize(
            objective,
            x0,
            jac=lambda v: central_gradient(objective, v),
            method="L-BFGS-B",
            bounds=_bounds(layout),
            options={"maxiter": config.max_iter, "ftol": config.tol, "gtol": 1e-8},
        )
        log.debug("start -> %s (%s)", -res.fun * n, res.message)
        if best is None or res.fun < best.fun:
            best = res
    params = unpack(best.x, layout)
    omega = implied_omega(spec, params, teams)
    ll = loglik(spec, params, arrays, teams, omega)
    converged = bool(best.success) or best.nit < config.max_iter
    return FittedModel(
        spec=spec,
        params=params,
        teams=teams,
        loglik=ll,
        n_obs=len(matches),
        converged=converged,
        omega=omega,
        config=config,
        data_key=data_key(matches),
        start_logliks=tuple(start_ll),
    )


def compare(fits: list[FittedModel]) -> list[dict]:
    """Rows sorted by AIC with the minimum flagged as preferred."""
    if not fits:
        return []
    keys = {f.data_key for f in fits}
    if len(keys) > 1:
        raise ComparisonError("fits were made on different datasets")
    rows = sorted(
        (
            {
                "model": f.spec.name,
                "alias": f.spec.alias,
                "regression": f.spec.regression,
                "loglik": f.loglik,
                "n_params": f.n_params,
                "aic": f.aic,
                "omega": f.omega,
                "converged": f.converged,
            }
            for f in fits
        ),
        key=lambda r: r["aic"],
    )
    for i, r in enumerate(rows):
        r["preferred"] = i == 0
    return rows


def format_comparison(rows: list[dict]) -> str:
    width = max((len(r["model"]) for r in rows), default=5)
    lines = [f"{'model':<{width}}  {'AIC':>10}  {'loglik':>10}  k"]
    for r in rows:
        mark = " *" if r["preferred"] else ""
        lines.append(f"{r['model']:<{width}}  {r['aic']:>10.2f}  {r['loglik']:>10.2f}  {r['n_params']}{mark}")
    return "\n".join(lines)
