"""Synthetic leagues drawn from known model parameters."""

from __future__ import annotations

import datetime as dt

import numpy as np

from bivisar.estimation import FitConfig, FittedModel, ModelSpec, raw_from_omega, omega_bracket
from bivisar.regression import TEAM_EFFECTS, MatchRecord, RegressionParams, TeamIndex
from bivisar.season_sim import Fixture


def round_robin(teams, legs: int = 2) -> list[Fixture]:
    """Circle-method schedule; the second leg swaps venues."""
    teams = list(teams)
    if len(teams) % 2:
        teams.append(None)
    n = len(teams)
    rounds = []
    order = teams[:]
    for r in range(n - 1):
        pairs = []
        for i in range(n // 2):
            a, b = order[i], order[n - 1 - i]
            if a is not None and b is not None:
                pairs.append((a, b) if (r + i) % 2 == 0 else (b, a))
        rounds.append(pairs)
        order = [order[0]] + [order[-1]] + order[1:-1]
    fixtures = []
    day = 1
    for leg in range(legs):
        for pairs in rounds:
            for a, b in pairs:
                fixtures.append(Fixture(a, b, day) if leg % 2 == 0 else Fixture(b, a, day))
            day += 1
    return fixtures


def truth_model(spec: ModelSpec, teams, home: float, att, defence, phi1=None, phi2=None,
                omega: float | None = None, omega_fraction: float | None = None,
                away: float = 0.0) -> FittedModel:
    """A FittedModel holding known parameters, for simulation.

    ``defence`` must sum to zero. Give either ``omega`` or
    ``omega_fraction`` (signed share of the upper/lower feasible limit).
    """
    teams = TeamIndex(tuple(teams))
    layout = spec.layout(len(teams))
    defence = np.asarray(defence, dtype=float)
    if spec.regression == TEAM_EFFECTS and abs(defence.sum()) > 1e-12:
        raise ValueError("defence effects must sum to zero")
    kw = dict(home=float(home))
    if spec.regression == TEAM_EFFECTS:
        kw.update(att=np.asarray(att, dtype=float), def_free=defence[:-1].copy())
    else:
        kw.update(away=float(away))
    if layout.nb_home:
        kw["log_phi1"] = float(np.log(phi1))
    if layout.nb_away:
        kw["log_phi2"] = float(np.log(phi2))
    if layout.has_omega:
        kw["omega_raw"] = 0.0
    params = RegressionParams(layout, **kw)
    value = 0.0
    if layout.has_omega:
        lo, hi = omega_bracket(spec, params, teams)
        if omega_fraction is not None:
            value = omega_fraction * (hi if omega_fraction > 0 else -lo)
        elif omega is not None:
            value = float(omega)
        params = RegressionParams(layout, **{**kw, "omega_raw": raw_from_omega(value, lo, hi)})
    return FittedModel(spec, params, teams, float("nan"), 0, True, value, FitConfig())


def simulate_matches(truth: FittedModel, fixtures, rng: np.random.Generator,
                     season: str = "sim", start: dt.date = dt.date(2021, 8, 28)) -> list[MatchRecord]:
    """One draw per fixture, in fixture order."""
    cache = {}
    out = []
    for fx in fixtures:
        key = (fx.home_team, fx.away_team)
        if key not in cache:
            cache[key] = truth.model_for(*key)
        x1, x2 = cache[key].sample(rng)
        date = start + dt.timedelta(days=7 * (fx.matchday - 1))
        out.append(MatchRecord(fx.home_team, fx.away_team, x1, x2, date, season))
    return out


def simulate_intercept_data(truth: FittedModel, n: int, rng: np.random.Generator) -> list[MatchRecord]:
    """n matches between two placeholder sides from an intercept-only model."""
    model = truth.model_for()
    x1, x2 = model.sample(rng, n)
    return [MatchRecord("H", "A", int(a), int(b), None, "sim") for a, b in zip(x1, x2)]
