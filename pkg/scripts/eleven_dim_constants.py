"""How the eleven-dimensional interior constants depend on the bundle rank.

For each rank n the ledger is checked with the rank formula (72 - n, 8 - n)
and with the constants printed for the tangent bundle (61, -3).  Only n = 11
should accept both.  Rank 11 takes a couple of minutes at degree cap 1.

usage: python scripts/eleven_dim_constants.py [ranks...]     (default 4 6 8)
"""
import sys
import time

from transgression.csforms import eleven_dim_ledger
from transgression.formcalc import random_pair, random_point


def all_zero(led):
    return all(r.is_zero() for r in led["residuals"].values())


def main(ranks):
    pt = random_point(11, 0)
    print(f"{'n':>3} {'72-n':>5} {'8-n':>4}  formula  printed(61,-3)  secs")
    for n in ranks:
        t0 = time.perf_counter()
        pair = random_pair(11, n, 400 + n, degree_cap=1, nterms=2, antisymmetric=True)
        ok_formula = all_zero(eleven_dim_ledger(pair, 25, point=pt))
        ok_printed = all_zero(eleven_dim_ledger(pair, 25, point=pt, z1_constant=61, cancel_constant=-3))
        print(f"{n:3d} {72 - n:5d} {8 - n:4d}  {str(ok_formula):7s}  {str(ok_printed):14s}  {time.perf_counter() - t0:.1f}")


if __name__ == "__main__":
    main([int(a) for a in sys.argv[1:]] or [4, 6, 8])
