"""Write a synthetic league (played matches + remaining fixtures) from known
ANS team-effects parameters, and optionally fit it to produce a model file.

    python3 scripts/make_synthetic_league.py --out-dir data/ --fit
"""

import argparse
import datetime as dt
import math
import os

import numpy as np

from bivisar.data_io import save_fit, save_fixtures, save_matches
from bivisar.estimation import fit, get_model
from bivisar.regression import TEAM_EFFECTS
from bivisar.synthetic import round_robin, simulate_matches, truth_model


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out-dir", default="data")
    ap.add_argument("--teams", type=int, default=12)
    ap.add_argument("--played", type=int, default=15, help="matchdays already played")
    ap.add_argument("--seasons", type=int, default=1, help="extra complete seasons prepended")
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--fit", action="store_true", help="also fit ANS and save league.model")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    teams = [f"Team{i:02d}" for i in range(args.teams)]
    att = math.log(1.4) + rng.normal(0, 0.3, args.teams)
    d = rng.normal(0, 0.3, args.teams)
    d -= d.mean()
    truth = truth_model(get_model("ans", TEAM_EFFECTS), teams, 0.25, att, d, 10.0, 10.0, omega_fraction=0.5)

    fixtures = round_robin(teams)
    history = []
    for s in range(args.seasons):
        start = dt.date(2021 - args.seasons + s, 8, 28)
        history += simulate_matches(truth, fixtures, rng, season=f"past{s + 1}", start=start)
    season = simulate_matches(truth, fixtures, rng, season="current")
    played = [m for m, fx in zip(season, fixtures) if fx.matchday <= args.played]
    rest = [fx for fx in fixtures if fx.matchday > args.played]

    os.makedirs(args.out_dir, exist_ok=True)
    save_matches(history + played, os.path.join(args.out_dir, "league.csv"))
    save_matches(season, os.path.join(args.out_dir, "full_season.csv"))
    save_fixtures(rest, os.path.join(args.out_dir, "rest.csv"))
    print(f"{len(history) + len(played)} matches, {len(rest)} remaining fixtures -> {args.out_dir}")
    print(f"true omega = {truth.omega:.4f}")
    if args.fit:
        f = fit(truth.spec, history + played)
        save_fit(f, os.path.join(args.out_dir, "league.model"))
        print(f"fitted omega = {f.omega:.4f}, loglik = {f.loglik:.3f}, aic = {f.aic:.3f}")


if __name__ == "__main__":
    main()
