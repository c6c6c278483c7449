"""bivisar command line."""

from __future__ import annotations

import argparse
import io
import logging
import os
import sys

import numpy as np

from bivisar import data_io, diagnostics
from bivisar.bivariate import (
    BivariateModel,
    correlation_range,
    range_envelope,
    score_matrix_rows,
    write_rows_csv,
)
from bivisar.estimation import (
    MODELS,
    FitConfig,
    compare,
    fit,
    format_comparison,
    get_model,
)
from bivisar.marginals import NEGBIN, POISSON, Marginal, parse_marginal
from bivisar.qcatalog import DESCRIPTIONS, KINDS, INFINITE_SUPPORT, make_q, parse_q, repair_q
from bivisar.regression import INTERCEPT_ONLY, TEAM_EFFECTS
from bivisar.season_sim import interval_rows, points_table, simulate_season

DEFAULT_SEED = 20240601

EPILOG = "models (alias  name):\n" + "\n".join(f"  {m.alias:12s} {m.name}" for m in MODELS)
EPILOG += "\n\nq kinds:\n" + "\n".join(f"  {k:10s} {DESCRIPTIONS[k]}" for k in KINDS)
EPILOG += "\n  (prefix 'repaired:' for the zero-mean repair, suffix ':s' for an order)"


def _emit(rows, out, fmt, text=None):
    """Write rows as CSV (or ``text`` when fmt == txt) to a path or stdout."""
    if fmt == "txt" and text is not None:
        payload = text + "\n"
    else:
        buf = io.StringIO()
        write_rows_csv(rows, buf)
        payload = buf.getvalue()
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)


def _regression(args):
    return TEAM_EFFECTS if args.regression == "teams" else INTERCEPT_ONLY


def cmd_fit(args):
    data = data_io.load_matches(args.data)
    spec = get_model(args.model, _regression(args))
    print(f"seed: {args.seed}")
    fitted = fit(spec, data.matches, FitConfig(n_starts=args.n_starts, seed=args.seed))
    print(f"{spec.name}: loglik={fitted.loglik:.4f} aic={fitted.aic:.2f} omega={fitted.omega:.6g} "
          f"converged={fitted.converged}")
    if args.out:
        data_io.save_fit(fitted, args.out)
    return 0


def _model_list(text):
    if text.strip().lower() == "all":
        return [m.alias for m in MODELS]
    return [t for t in (s.strip() for s in text.split(",")) if t]


def cmd_compare(args):
    print(f"seed: {args.seed}", file=sys.stderr)
    specs = [get_model(name, _regression(args)) for name in _model_list(args.models)]
    config = FitConfig(n_starts=args.n_starts, seed=args.seed)
    rows = []
    texts = []
    for path in args.data:
        ds = data_io.load_matches(path)
        table = compare([fit(s, ds.matches, config) for s in specs])
        for r in table:
            r["dataset"] = ds.league
        rows += table
        texts.append(f"[{ds.league}]\n" + format_comparison(table))
    _emit(rows, args.out, args.format, "\n\n".join(texts))
    return 0


def cmd_diagnose(args):
    ds = data_io.load_matches(args.data)
    print(f"seed: {args.seed}", file=sys.stderr)
    table = diagnostics.ratio_table(ds.matches, args.max_goals, args.bootstrap_B, args.seed)
    stat, dof, p = diagnostics.chi_square_independence(ds.matches)
    corr = diagnostics.season_correlations(ds.matches)
    mv, envelope = diagnostics.mean_variance_summary(ds.matches, seed=args.seed)
    x1 = np.array([m.home_goals for m in ds.matches])
    x2 = np.array([m.away_goals for m in ds.matches])
    overall = float(np.corrcoef(x1, x2)[0, 1]) if x1.std() > 0 and x2.std() > 0 else float("nan")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_rows_csv(table.rows(), os.path.join(args.out, "ratios.csv"))
        write_rows_csv([{"statistic": stat, "dof": dof, "p_value": p}], os.path.join(args.out, "chisq.csv"))
        write_rows_csv(corr, os.path.join(args.out, "season_correlation.csv"))
        write_rows_csv(mv, os.path.join(args.out, "mean_variance.csv"))
        write_rows_csv(envelope, os.path.join(args.out, "envelope.csv"))
    print(f"matches: {len(ds)}  seasons: {len(ds.seasons)}")
    print("ratio of joint to independent frequency (rows: home goals)")
    print(table.format())
    print(f"chi-squared independence: statistic={stat:.2f} dof={dof} p={p:.3g}")
    print(f"correlation(home, away) = {overall:.3f}")
    flagged = sum(1 for r in mv if r["flag"] == "over")
    print(f"team/venue rows above the Poisson 95% envelope: {flagged} of {len(mv)}")
    return 0


def _scores_model(args):
    if args.fit:
        fitted = data_io.load_fit(args.fit)
        return fitted.model_for(args.home, args.away)
    spec = get_model(args.model)
    means = [float(v) for v in args.means.split(",")]
    phis = [float(v) for v in args.phi.split(",")] if args.phi else [None, None]
    if len(phis) == 1:
        phis = phis * 2
    m1 = Marginal(spec.family1, means[0], phis[0] if spec.family1 == NEGBIN else None)
    m2 = Marginal(spec.family2, means[1], phis[1] if spec.family2 == NEGBIN else None)
    if not spec.has_omega:
        return BivariateModel.independent(m1, m2)
    return BivariateModel(make_q(spec.q1, m1, repaired=spec.repaired),
                          make_q(spec.q2, m2, repaired=spec.repaired), args.omega)


def cmd_scores(args):
    model = _scores_model(args)
    matrix = model.score_matrix(args.max_goals)
    probs = matrix.probs
    text = "\n".join(
        [" " * 4 + "".join(f"{b:>8d}" for b in range(probs.shape[1]))]
        + [f"{a:>4d}" + "".join(f"{v:8.4f}" for v in probs[a]) for a in range(probs.shape[0])]
        + [f"truncated mass: {matrix.truncated_mass:.3g}"]
    )
    _emit(score_matrix_rows(matrix), args.out, args.format, text)
    return 0


def _current_season(matches, season):
    """Matches of ``season``; by default the season of the latest match."""
    if season is None:
        dated = [m for m in matches if m.date is not None]
        season = max(dated, key=lambda m: m.date).season if dated else matches[-1].season
    return [m for m in matches if m.season == season]


def cmd_simulate(args):
    fitted = data_io.load_fit(args.fit)
    fixtures = data_io.load_fixtures(args.fixtures)
    current = {}
    if args.data:
        current = points_table(_current_season(data_io.load_matches(args.data).matches, args.season))
    observed = points_table(data_io.load_matches(args.observed).matches) if args.observed else None
    print(f"seed: {args.seed}", file=sys.stderr)
    dist = simulate_season(fitted, current, fixtures, args.n, args.seed)
    _emit(interval_rows(dist, 0.95, observed), args.out, "csv")
    return 0


def cmd_validate_q(args):
    marginal = parse_marginal(args.marginal)
    kind, s, repaired = parse_q(args.q)
    q = make_q(kind, marginal, s, repaired)
    resid = q.zero_mean_residual()
    lo, hi = q.bounds()
    n = (q.support_max if q.support_max is not None else 5) + 1
    print(f"q: {q.name} on {marginal.family}(mean={marginal.mean}"
          + (f", phi={marginal.phi})" if marginal.phi is not None else ")"))
    print("values: " + ", ".join(f"q({x})={v:.6g}" for x, v in enumerate(q.values(n))))
    print(f"residual: {resid:.6g}")
    print(f"bounds: [{lo:.6g}, {hi:.6g}]")
    if q.is_admissible():
        print("zero-mean condition: satisfied")
        return 0
    print("zero-mean condition: VIOLATED")
    if kind not in INFINITE_SUPPORT:
        fixed = repair_q(q)
        top = fixed.support_max
        print(f"repair suggestion: use repaired:{kind}, q({top}) = {fixed(top):.6g} "
              f"(residual {fixed.zero_mean_residual():.3g})")
    return 1


def cmd_corr_range(args):
    kind, s, repaired = parse_q(args.q)
    family = POISSON if args.family in ("poisson", "pois") else NEGBIN
    rows = correlation_range(kind, family1=family, s=s, repaired=repaired)
    if args.envelope:
        rows = range_envelope(rows)
    _emit(rows, args.out, "csv")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bivisar",
        description="Sarmanov-family bivariate models for football scores.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.set_defaults(func=func)
        return sp

    sp = add("fit", cmd_fit, "fit one model and save it")
    sp.add_argument("--data", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--regression", choices=["intercept", "teams"], default="teams")
    sp.add_argument("--n-starts", type=int, default=3)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--out")

    sp = add("compare", cmd_compare, "AIC table over models and datasets")
    sp.add_argument("--data", required=True, nargs="+")
    sp.add_argument("--models", default="all")
    sp.add_argument("--regression", choices=["intercept", "teams"], default="intercept")
    sp.add_argument("--n-starts", type=int, default=3)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=["csv", "txt"], default="csv")

    sp = add("diagnose", cmd_diagnose, "ratio table, independence test, overdispersion")
    sp.add_argument("--data", required=True)
    sp.add_argument("--bootstrap-B", type=int, default=1000)
    sp.add_argument("--max-goals", type=int, default=4)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--out", help="directory for CSV outputs")

    sp = add("scores", cmd_scores, "score probability matrix")
    sp.add_argument("--fit")
    sp.add_argument("--home")
    sp.add_argument("--away")
    sp.add_argument("--model", default="dc")
    sp.add_argument("--means", default="1.3,1.2")
    sp.add_argument("--phi")
    sp.add_argument("--omega", type=float, default=0.0)
    sp.add_argument("--max-goals", type=int, default=11)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=["csv", "txt"], default="csv")

    sp = add("simulate", cmd_simulate, "Monte Carlo final-points intervals")
    sp.add_argument("--fit", required=True)
    sp.add_argument("--fixtures", required=True)
    sp.add_argument("--data", help="played matches giving current points")
    sp.add_argument("--season", help="season counted for current points (default: latest)")
    sp.add_argument("--observed", help="complete season for an observed column")
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--out")

    sp = add("validate-q", cmd_validate_q, "zero-mean residual and bounds of a q-function")
    sp.add_argument("--q", required=True)
    sp.add_argument("--marginal", required=True, help="poisson:LAM or negbin:MU,PHI")

    sp = add("corr-range", cmd_corr_range, "correlation range over a parameter grid")
    sp.add_argument("--q", required=True)
    sp.add_argument("--family", choices=["poisson", "negbin"], default="poisson")
    sp.add_argument("--envelope", action="store_true", help="min/max per first mean")
    sp.add_argument("--out")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
