"""Match CSV ingestion and fitted-model documents.

Model documents are flat ``key = value`` text under ``[section]`` headers.
Floats are written with 17 significant digits so they re-parse bit-exactly.
"""

from __future__ import annotations

import csv
import datetime as dt
import os
import tempfile
import warnings
from dataclasses import dataclass

import numpy as np

from bivisar.estimation import FitConfig, FittedModel, get_model
from bivisar.regression import INTERCEPT_ONLY, MatchRecord, RegressionParams, TeamIndex
from bivisar.season_sim import Fixture

MATCH_HEADER = ["date", "season", "home_team", "away_team", "home_goals", "away_goals"]
FIXTURE_HEADER = ["matchday", "home_team", "away_team"]
FORMAT_VERSION = 1


class DataError(ValueError):
    pass


class ModelFileError(ValueError):
    pass


@dataclass
class Dataset:
    matches: list[MatchRecord]
    league: str = ""

    @property
    def seasons(self) -> set[str]:
        return {m.season for m in self.matches}

    def __len__(self):
        return len(self.matches)


def _read_rows(path, header):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if [h.strip() for h in first] != header:
            raise DataError(f"{path}:1: expected header {','.join(header)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            yield lineno, [c.strip() for c in row]


def load_matches(path, league: str = "") -> Dataset:
    matches = []
    seen = set()
    for lineno, (date, season, home, away, hg, ag) in _read_rows(path, MATCH_HEADER):
        try:
            day = dt.date.fromisoformat(date)
            hgi, agi = int(hg), int(ag)
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
        if hgi < 0 or agi < 0:
            raise DataError(f"{path}:{lineno}: goals must be nonnegative")
        if home == away:
            raise DataError(f"{path}:{lineno}: team {home!r} cannot play itself")
        key = (date, season, home, away, hgi, agi)
        if key in seen:
            warnings.warn(f"{path}:{lineno}: duplicate row kept", RuntimeWarning)
        seen.add(key)
        matches.append(MatchRecord(home, away, hgi, agi, day, season))
    if not matches:
        raise DataError(f"{path}: no matches after header")
    return Dataset(matches, league or os.path.splitext(os.path.basename(str(path)))[0])


def _atomic_write(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_matches(matches, path) -> None:
    lines = [",".join(MATCH_HEADER)]
    for m in matches:
        date = m.date.isoformat() if m.date else ""
        lines.append(f"{date},{m.season},{m.home_team},{m.away_team},{m.home_goals},{m.away_goals}")
    _atomic_write(path, "\n".join(lines) + "\n")


def load_fixtures(path) -> list[Fixture]:
    out = []
    for lineno, (day, home, away) in _read_rows(path, FIXTURE_HEADER):
        try:
            out.append(Fixture(home, away, int(day)))
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
    return out


def save_fixtures(fixtures, path) -> None:
    lines = [",".join(FIXTURE_HEADER)] + [f"{f.matchday},{f.home_team},{f.away_team}" for f in fixtures]
    _atomic_write(path, "\n".join(lines) + "\n")


def _f(x: float) -> str:
    return format(float(x), ".17g")


def dumps_fit(fitted: FittedModel) -> str:
    p = fitted.params
    spec = fitted.spec
    out = [
        "# bivisar fitted model",
        "[meta]",
        f"format_version = {FORMAT_VERSION}",
        f"model = {spec.name}",
        f"alias = {spec.alias}",
        f"regression = {spec.regression}",
        "",
        "[teams]",
    ]
    out += [f"{i} = {t}" for i, t in enumerate(fitted.teams.teams)]
    out += ["", "[params]", f"home = {_f(p.home)}"]
    if spec.regression == INTERCEPT_ONLY:
        out.append(f"away = {_f(p.away)}")
    else:
        out += [f"att.{i} = {_f(v)}" for i, v in enumerate(p.att)]
        out += [f"def.{i} = {_f(v)}" for i, v in enumerate(p.def_free)]
    if p.log_phi1 is not None:
        out.append(f"log_phi1 = {_f(p.log_phi1)}")
    if p.log_phi2 is not None:
        out.append(f"log_phi2 = {_f(p.log_phi2)}")
    if p.omega_raw is not None:
        out.append(f"omega_raw = {_f(p.omega_raw)}")
    c = fitted.config
    out += [
        "",
        "[fit]",
        f"omega = {_f(fitted.omega)}",
        f"loglik = {_f(fitted.loglik)}",
        f"aic = {_f(fitted.aic)}",
        f"n_params = {fitted.n_params}",
        f"n_obs = {fitted.n_obs}",
        f"converged = {str(fitted.converged).lower()}",
        f"data_key = {fitted.data_key}",
        "",
        "[config]",
        f"max_iter = {c.max_iter}",
        f"tol = {_f(c.tol)}",
        f"n_starts = {c.n_starts}",
        f"seed = {c.seed}",
    ]
    return "\n".join(out) + "\n"


def save_fit(fitted: FittedModel, path) -> None:
    _atomic_write(path, dumps_fit(fitted))


def _sections(text: str) -> dict[str, dict[str, str]]:
    sections: dict[str, dict[str, str]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = sections.setdefault(line[1:-1], {})
            continue
        if current is None or "=" not in line:
            raise ModelFileError(f"line {lineno}: unexpected {raw!r}")
        key, _, value = line.partition("=")
        current[key.strip()] = value.strip()
    return sections


def loads_fit(text: str) -> FittedModel:
    sec = _sections(text)
    for name in ("meta", "teams", "params", "fit"):
        if name not in sec:
            raise ModelFileError(f"missing [{name}] section")
    meta = sec["meta"]
    version = meta.get("format_version")
    if version != str(FORMAT_VERSION):
        raise ModelFileError(f"unsupported format_version {version!r}; expected {FORMAT_VERSION}")
    try:
        spec = get_model(meta["alias"], meta["regression"])
        team_items = sorted(sec["teams"].items(), key=lambda kv: int(kv[0]))
        teams = TeamIndex(tuple(v for _, v in team_items))
        layout = spec.layout(len(teams))
        pr = sec["params"]
        kw: dict = {"home": float(pr["home"])}
        if layout.regression == INTERCEPT_ONLY:
            kw["away"] = float(pr["away"])
        else:
            k = len(teams)
            kw["att"] = np.array([float(pr[f"att.{i}"]) for i in range(k)])
            kw["def_free"] = np.array([float(pr[f"def.{i}"]) for i in range(k - 1)])
        for key in ("log_phi1", "log_phi2", "omega_raw"):
            if key in pr:
                kw[key] = float(pr[key])
        params = RegressionParams(layout, **kw)
        fit = sec["fit"]
        cfg = sec.get("config", {})
        config = FitConfig(
            int(cfg.get("max_iter", FitConfig.max_iter)),
            float(cfg.get("tol", FitConfig.tol)),
            int(cfg.get("n_starts", FitConfig.n_starts)),
            int(cfg.get("seed", FitConfig.seed)),
        )
        return FittedModel(
            spec=spec,
            params=params,
            teams=teams,
            loglik=float(fit["loglik"]),
            n_obs=int(fit["n_obs"]),
            converged=fit["converged"] == "true",
            omega=float(fit.get("omega", 0.0)),
            config=config,
            data_key=fit.get("data_key", ""),
        )
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ModelFileError):
            raise
        raise ModelFileError(f"malformed model document: {exc}") from None


def load_fit(path) -> FittedModel:
    with open(path, encoding="utf-8") as fh:
        return loads_fit(fh.read())
