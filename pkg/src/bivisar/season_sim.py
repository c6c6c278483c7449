"""Monte Carlo simulation of the remaining fixtures of a season."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from bivisar.regression import UnknownTeamError


@dataclass(frozen=True)
class Fixture:
    home_team: str
    away_team: str
    matchday: int = 1

    def __post_init__(self):
        if self.home_team == self.away_team:
            raise ValueError(f"team {self.home_team!r} cannot play itself")
        if self.matchday < 1:
            raise ValueError("matchday must be >= 1")


@dataclass
class PointsDistribution:
    teams: tuple[str, ...]
    current: dict[str, int]
    final: np.ndarray  # (n_sims, n_teams)

    @property
    def n_sims(self) -> int:
        return self.final.shape[0]

    def points(self, team: str) -> np.ndarray:
        return self.final[:, self.teams.index(team)]


def match_points(home_goals, away_goals):
    """(home points, away points) with 3/1/0 scoring."""
    home = np.where(home_goals > away_goals, 3, np.where(home_goals == away_goals, 1, 0))
    away = np.where(away_goals > home_goals, 3, np.where(home_goals == away_goals, 1, 0))
    return home, away


def simulate_season(fitted, current_table: dict[str, int], fixtures, n_sims: int,
                    seed: int) -> PointsDistribution:
    """Score every fixture ``n_sims`` times from one static fitted model."""
    if n_sims < 1:
        raise ValueError("n_sims must be >= 1")
    fixtures = list(fixtures)
    names = set(current_table)
    for fx in fixtures:
        names.update((fx.home_team, fx.away_team))
    if fitted.spec.regression != "intercept":
        for t in names:
            if t not in fitted.teams.teams:
                raise UnknownTeamError(t)
    teams = tuple(sorted(names))
    col = {t: i for i, t in enumerate(teams)}
    base = np.array([current_table.get(t, 0) for t in teams], dtype=np.int64)
    final = np.tile(base, (n_sims, 1))
    rng = np.random.default_rng(seed)
    models = {}
    for fx in fixtures:
        key = (fx.home_team, fx.away_team)
        if key not in models:
            models[key] = fitted.model_for(*key)
        x1, x2 = models[key].sample(rng, n_sims)
        ph, pa = match_points(x1, x2)
        final[:, col[fx.home_team]] += ph
        final[:, col[fx.away_team]] += pa
    return PointsDistribution(teams, {t: int(current_table.get(t, 0)) for t in teams}, final)


def nearest_rank(sorted_values: np.ndarray, prob: float):
    n = sorted_values.size
    rank = min(max(math.ceil(prob * n), 1), n)
    return sorted_values[rank - 1]


def prediction_intervals(dist: PointsDistribution, level: float = 0.95) -> dict[str, tuple[int, int]]:
    """Nearest-rank (1-level)/2 and (1+level)/2 quantiles per team."""
    alpha = (1.0 - level) / 2.0
    out = {}
    for j, t in enumerate(dist.teams):
        col = np.sort(dist.final[:, j])
        out[t] = (int(nearest_rank(col, alpha)), int(nearest_rank(col, 1.0 - alpha)))
    return out


def interval_rows(dist: PointsDistribution, level: float = 0.95, observed: dict | None = None) -> list[dict]:
    iv = prediction_intervals(dist, level)
    rows = []
    for j, t in enumerate(dist.teams):
        row = {
            "team": t,
            "current_points": dist.current[t],
            "lo": iv[t][0],
            "hi": iv[t][1],
            "mean": float(dist.final[:, j].mean()),
        }
        if observed is not None:
            row["observed"] = observed.get(t, "")
        rows.append(row)
    return rows


def points_table(matches) -> dict[str, int]:
    table: dict[str, int] = {}
    for m in matches:
        ph, pa = match_points(np.array(m.home_goals), np.array(m.away_goals))
        table[m.home_team] = table.get(m.home_team, 0) + int(ph)
        table[m.away_team] = table.get(m.away_team, 0) + int(pa)
    return table
