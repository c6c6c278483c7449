"""Log-linear mean predictors and flat parameter layouts.

Team-effects layout::

    log theta1 = home + att[h] + def[g]
    log theta2 = att[g] + def[h]

with sum(def) == 0 (the last defence is minus the sum of the others).
Intercept-only layout: log theta1 and log theta2 are two free constants.
Dispersions enter as log(phi) and omega as an unconstrained raw value.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

INTERCEPT_ONLY = "intercept"
TEAM_EFFECTS = "teams"


class LayoutError(ValueError):
    pass


class UnknownTeamError(KeyError):
    pass


@dataclass(frozen=True)
class MatchRecord:
    home_team: str
    away_team: str
    home_goals: int
    away_goals: int
    date: dt.date | None = None
    season: str = ""

    def __post_init__(self):
        if self.home_team == self.away_team:
            raise ValueError(f"team {self.home_team!r} cannot play itself")
        if self.home_goals < 0 or self.away_goals < 0:
            raise ValueError("goals must be nonnegative")


@dataclass(frozen=True)
class TeamIndex:
    teams: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.teams)) != len(self.teams):
            raise ValueError("duplicate team names")

    @classmethod
    def from_matches(cls, matches) -> TeamIndex:
        names = {m.home_team for m in matches} | {m.away_team for m in matches}
        return cls(tuple(sorted(names)))

    def __len__(self):
        return len(self.teams)

    def index(self, team: str) -> int:
        try:
            return self.teams.index(team)
        except ValueError:
            raise UnknownTeamError(team) from None

    def indices(self, teams) -> np.ndarray:
        lookup = {t: i for i, t in enumerate(self.teams)}
        try:
            return np.array([lookup[t] for t in teams], dtype=int)
        except KeyError as exc:
            raise UnknownTeamError(exc.args[0]) from None


@dataclass(frozen=True)
class Layout:
    """Which blocks a flat parameter vector holds, and where."""

    regression: str
    n_teams: int = 0
    nb_home: bool = False
    nb_away: bool = False
    has_omega: bool = True

    def __post_init__(self):
        if self.regression not in (INTERCEPT_ONLY, TEAM_EFFECTS):
            raise LayoutError(f"unknown regression {self.regression!r}")
        if self.regression == TEAM_EFFECTS and self.n_teams < 2:
            raise LayoutError("team effects need at least two teams")

    @property
    def n_mean_params(self) -> int:
        if self.regression == INTERCEPT_ONLY:
            return 2
        return 1 + self.n_teams + (self.n_teams - 1)

    @property
    def size(self) -> int:
        return self.n_mean_params + self.nb_home + self.nb_away + self.has_omega


@dataclass(frozen=True)
class RegressionParams:
    """Structured view of a flat parameter vector.

    For the intercept-only layout ``home`` and ``away`` are the two log-means
    and ``att``/``def_free`` are empty. ``log_phi*`` are None for Poisson sides.
    """

    layout: Layout
    home: float
    away: float = 0.0
    att: np.ndarray = field(default_factory=lambda: np.zeros(0))
    def_free: np.ndarray = field(default_factory=lambda: np.zeros(0))
    log_phi1: float | None = None
    log_phi2: float | None = None
    omega_raw: float | None = None

    @property
    def defence(self) -> np.ndarray:
        return np.append(self.def_free, -np.sum(self.def_free))

    @property
    def phi1(self) -> float | None:
        return None if self.log_phi1 is None else float(np.exp(self.log_phi1))

    @property
    def phi2(self) -> float | None:
        return None if self.log_phi2 is None else float(np.exp(self.log_phi2))

    def log_means(self, home_idx, away_idx):
        """Vectorized (log theta1, log theta2) for index arrays."""
        if self.layout.regression == INTERCEPT_ONLY:
            shape = np.shape(home_idx)
            return np.full(shape, self.home), np.full(shape, self.away)
        d = self.defence
        eta1 = self.home + self.att[home_idx] + d[away_idx]
        eta2 = self.att[away_idx] + d[home_idx]
        return eta1, eta2

    def means(self, home_idx, away_idx):
        eta1, eta2 = self.log_means(home_idx, away_idx)
        return np.exp(eta1), np.exp(eta2)


def pack(params: RegressionParams) -> np.ndarray:
    lay = params.layout
    parts = [[params.home]]
    if lay.regression == INTERCEPT_ONLY:
        parts.append([params.away])
    else:
        parts += [params.att, params.def_free]
    if lay.nb_home:
        parts.append([params.log_phi1])
    if lay.nb_away:
        parts.append([params.log_phi2])
    if lay.has_omega:
        parts.append([params.omega_raw])
    return np.concatenate([np.asarray(p, dtype=float) for p in parts])


def unpack(vector, layout: Layout) -> RegressionParams:
    v = np.asarray(vector, dtype=float)
    if v.ndim != 1 or v.size != layout.size:
        raise LayoutError(f"expected {layout.size} parameters, got {v.size}")
    k = layout.n_teams
    if layout.regression == INTERCEPT_ONLY:
        kw = {"home": float(v[0]), "away": float(v[1])}
        pos = 2
    else:
        kw = {"home": float(v[0]), "att": v[1:1 + k].copy(), "def_free": v[1 + k:2 * k].copy()}
        pos = 2 * k
    if layout.nb_home:
        kw["log_phi1"] = float(v[pos])
        pos += 1
    if layout.nb_away:
        kw["log_phi2"] = float(v[pos])
        pos += 1
    if layout.has_omega:
        kw["omega_raw"] = float(v[pos])
    return RegressionParams(layout, **kw)


def predict_means(params: RegressionParams, teams: TeamIndex, home_team: str, away_team: str):
    """(theta1, theta2) for one pairing."""
    if params.layout.regression == INTERCEPT_ONLY:
        return float(np.exp(params.home)), float(np.exp(params.away))
    h, g = teams.index(home_team), teams.index(away_team)
    t1, t2 = params.means(np.array(h), np.array(g))
    return float(t1), float(t2)
