"""Probabilities of the four low scores under Dixon-Coles as omega-tilde grows.

    python3 scripts/dc_shift_table.py --means 1.3,1.2
"""

import argparse

import numpy as np

from bivisar.bivariate import BivariateModel, omega_bounds
from bivisar.marginals import Poisson
from bivisar.qcatalog import make_q


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--means", default="1.3,1.2")
    ap.add_argument("--step", type=float, default=0.1)
    args = ap.parse_args(argv)
    l1, l2 = (float(v) for v in args.means.split(","))
    q1, q2 = make_q("dc", Poisson(l1)), make_q("dc", Poisson(l2))
    top = -omega_bounds(q1, q2).lower  # largest omega-tilde
    cells = [(0, 0), (0, 1), (1, 0), (1, 1)]
    print("omega_tilde," + ",".join(f"P({a}-{b})" for a, b in cells) + ",rho")
    for wt in np.arange(0.0, top + 1e-12, args.step):
        m = BivariateModel(q1, q2, -wt)
        print(f"{wt:.2f}," + ",".join(f"{m.joint_pmf(a, b):.6f}" for a, b in cells) + f",{m.correlation() + 0.0:.5f}")


if __name__ == "__main__":
    main()
