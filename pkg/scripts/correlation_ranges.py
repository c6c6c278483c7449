"""Attainable correlation ranges of several q-functions over a mean grid,
reduced to the envelope per home mean (the data behind a range plot).

    python3 scripts/correlation_ranges.py --out ranges.csv
"""

import argparse
import sys

from bivisar.bivariate import correlation_range, range_envelope, write_rows_csv

CASES = [("dc", "poisson"), ("laplace", "poisson"), ("nb", "negbin"), ("laplace", "negbin"), ("ans", "negbin")]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out")
    args = ap.parse_args(argv)
    rows = []
    for kind, family in CASES:
        for r in range_envelope(correlation_range(kind, family1=family)):
            rows.append({"q": kind, "family": family, **r})
    write_rows_csv(rows, args.out or sys.stdout)
    if args.out:
        for kind, family in CASES:
            sub = [r for r in rows if r["q"] == kind and r["family"] == family]
            lo = min(r["rho_min"] for r in sub)
            hi = max(r["rho_max"] for r in sub)
            print(f"{kind:8s} {family:7s} rho in [{lo:+.3f}, {hi:+.3f}]")


if __name__ == "__main__":
    main()
