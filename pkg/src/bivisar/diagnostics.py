"""Data and fit diagnostics: dependence ratios, independence test,
overdispersion envelopes and the absolute-difference fit metric."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

log = logging.getLogger(__name__)


class DegenerateTableError(ValueError):
    pass


def _goals(data):
    x1 = np.array([m.home_goals for m in data], dtype=int)
    x2 = np.array([m.away_goals for m in data], dtype=int)
    return x1, x2


@dataclass
class RatioTable:
    max_score: int
    ratio: np.ndarray  # nan where a marginal total is zero
    se: np.ndarray
    n: int

    def rows(self) -> list[dict]:
        out = []
        for a in range(self.max_score + 1):
            for b in range(self.max_score + 1):
                out.append({"home_goals": a, "away_goals": b,
                            "ratio": float(self.ratio[a, b]), "se": float(self.se[a, b])})
        return out

    def format(self) -> str:
        """Home goals down, away goals across; SE in parentheses."""
        k = self.max_score + 1
        head = "    " + "".join(f"{b:>14d}" for b in range(k))
        lines = [head]
        for a in range(k):
            cells = []
            for b in range(k):
                r, s = self.ratio[a, b], self.se[a, b]
                cells.append(f"{'-':>14s}" if np.isnan(r) else f"{r:>6.2f} ({s:4.2f})".rjust(14))
            lines.append(f"{a:>4d}" + "".join(cells))
        return "\n".join(lines)


def _ratios(x1, x2, max_score):
    n = x1.size
    k = max_score + 1
    joint = np.zeros((k, k))
    keep = (x1 <= max_score) & (x2 <= max_score)
    np.add.at(joint, (x1[keep], x2[keep]), 1.0)
    rows = np.bincount(x1, minlength=k)[:k].astype(float)
    cols = np.bincount(x2, minlength=k)[:k].astype(float)
    expected = np.outer(rows, cols) / n
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(expected > 0, joint / expected, np.nan)


def ratio_table(data, max_score: int = 4, bootstrap_B: int = 1000, seed: int = 0) -> RatioTable:
    """Joint frequency over product of marginal frequencies, bootstrap SEs."""
    x1, x2 = _goals(data)
    n = x1.size
    if n == 0:
        raise ValueError("no matches")
    if max_score < 1:
        raise ValueError("max_score must be >= 1")
    ratio = _ratios(x1, x2, max_score)
    rng = np.random.default_rng(seed)
    reps = np.empty((bootstrap_B,) + ratio.shape)
    for b in range(bootstrap_B):
        idx = rng.integers(0, n, n)
        reps[b] = _ratios(x1[idx], x2[idx], max_score)
    with np.errstate(invalid="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-nan cells
        se = np.nanstd(reps, axis=0, ddof=1) if bootstrap_B > 1 else np.zeros_like(ratio)
    se = np.where(np.isnan(ratio), np.nan, np.nan_to_num(se))
    return RatioTable(max_score, ratio, se, n)


def contingency(x1, x2, pool_at: int = 5) -> np.ndarray:
    """Counts on 0..pool_at-1 plus a pooled ``pool_at+`` bucket per margin."""
    a = np.minimum(x1, pool_at)
    b = np.minimum(x2, pool_at)
    table = np.zeros((pool_at + 1, pool_at + 1))
    np.add.at(table, (a, b), 1.0)
    return table


def pearson_independence(table: np.ndarray):
    """(statistic, dof, p) after dropping empty rows and columns."""
    t = np.asarray(table, dtype=float)
    t = t[t.sum(axis=1) > 0][:, t.sum(axis=0) > 0]
    if t.shape[0] < 2 or t.shape[1] < 2:
        raise DegenerateTableError("need at least two nonempty rows and columns")
    expected = np.outer(t.sum(axis=1), t.sum(axis=0)) / t.sum()
    mask = expected > 0
    stat = float(np.sum((t[mask] - expected[mask]) ** 2 / expected[mask]))
    dof = (t.shape[0] - 1) * (t.shape[1] - 1)
    return stat, dof, float(stats.chi2.sf(stat, dof))


def chi_square_independence(data, pool_at: int = 5):
    x1, x2 = _goals(data)
    return pearson_independence(contingency(x1, x2, pool_at))


def empirical_grid(data, max_goals: int = 11) -> np.ndarray:
    x1, x2 = _goals(data)
    k = max_goals + 1
    grid = np.zeros((k, k))
    keep = (x1 <= max_goals) & (x2 <= max_goals)
    np.add.at(grid, (x1[keep], x2[keep]), 1.0)
    return grid / x1.size


def model_grid(fitted, data, max_goals: int = 11) -> np.ndarray:
    """Score probabilities averaged over the matches in ``data``."""
    if fitted.spec.regression == "intercept":
        return fitted.model_for().score_matrix(max_goals).probs
    cache = {}
    total = np.zeros((max_goals + 1, max_goals + 1))
    for m in data:
        key = (m.home_team, m.away_team)
        if key not in cache:
            cache[key] = fitted.model_for(*key).score_matrix(max_goals).probs
        total += cache[key]
    return total / len(data)


def abs_prob_diff_grid(probs: np.ndarray, data, max_goals: int = 11) -> float:
    emp = empirical_grid(data, max_goals)
    return 100.0 * float(np.sum(np.abs(probs[: max_goals + 1, : max_goals + 1] - emp)))


def abs_prob_diff(fitted, data, max_goals: int = 11) -> float:
    """100 x sum of |model - empirical| over scores 0-0 .. 11-11."""
    return abs_prob_diff_grid(model_grid(fitted, data, max_goals), data, max_goals)


def _team_venue_goals(data):
    groups: dict[tuple[str, str], list[int]] = {}
    for m in data:
        groups.setdefault((m.home_team, "home"), []).append(m.home_goals)
        groups.setdefault((m.away_team, "away"), []).append(m.away_goals)
    return groups


def poisson_variance_envelope(means, n: int, reps: int = 10_000, level: float = 0.95, seed: int = 0):
    """Quantiles of the sample variance of n Poisson(m) draws, per m."""
    rng = np.random.default_rng(seed)
    alpha = (1.0 - level) / 2.0
    lo, hi = [], []
    for m in means:
        v = rng.poisson(m, size=(reps, n)).var(axis=1, ddof=1)
        lo.append(np.quantile(v, alpha))
        hi.append(np.quantile(v, 1.0 - alpha))
    return np.asarray(lo), np.asarray(hi)


def mean_variance_summary(data, reps: int = 10_000, seed: int = 0, grid=None):
    """Per (team, venue) mean/variance with a Poisson Monte Carlo envelope.

    Returns (rows, envelope) where envelope rows hold mean, lo, hi.
    """
    rows = []
    for (team, venue), goals in sorted(_team_venue_goals(data).items()):
        g = np.asarray(goals, dtype=float)
        if g.size < 2:
            log.warning("skipping %s/%s: fewer than two matches", team, venue)
            continue
        rows.append({"team": team, "venue": venue, "n": int(g.size),
                     "mean": float(g.mean()), "variance": float(g.var(ddof=1))})
    if not rows:
        return rows, []
    n_med = int(np.median([r["n"] for r in rows]))
    top = max(r["mean"] for r in rows)
    grid = np.asarray(grid if grid is not None else np.linspace(0.05, max(top, 0.1) * 1.1 + 0.05, 25))
    lo, hi = poisson_variance_envelope(grid, max(n_med, 2), reps, seed=seed)
    for r in rows:
        elo = float(np.interp(r["mean"], grid, lo))
        ehi = float(np.interp(r["mean"], grid, hi))
        r["env_lo"], r["env_hi"] = elo, ehi
        r["flag"] = "over" if r["variance"] > ehi else ("under" if r["variance"] < elo else "")
    envelope = [{"mean": float(m), "lo": float(a), "hi": float(b)} for m, a, b in zip(grid, lo, hi)]
    return rows, envelope


def season_correlations(data) -> list[dict]:
    """Pearson correlation of home and away goals per season."""
    seasons: dict[str, list] = {}
    for m in data:
        seasons.setdefault(m.season, []).append((m.home_goals, m.away_goals))
    out = []
    for s in sorted(seasons):
        arr = np.asarray(seasons[s], dtype=float)
        if len(arr) < 2 or arr[:, 0].std() == 0 or arr[:, 1].std() == 0:
            rho = math.nan
        else:
            rho = float(np.corrcoef(arr[:, 0], arr[:, 1])[0, 1])
        out.append({"season": s, "n": len(arr), "correlation": rho})
    return out
