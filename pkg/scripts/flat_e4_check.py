"""Flat pair on a 7-chart: the top CS form is a multiple of E4 tr[A^7].

Checks {CSPsi_W}^(7) = E4_CONSTANT * E4 * tr[A^7] exactly at a random point
and prints the leading E4 coefficients for reference.
"""
import sys

from transgression.csforms import E4_CONSTANT, flat_suite, gen_flat_pair
from transgression.formcalc import random_point
from transgression.thetalib import eisenstein_e4

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
N = 97
pair = gen_flat_pair(7, 4, seed, shears=10)
res = flat_suite(pair, N, point=random_point(7, seed))
print("E4 status:", res["E4_status"])
print("residual zero:", res["E4_residual"].is_zero())
print("tr[A^7] at point:", res["tr[A^7]"])
print("E4 constant:", E4_CONSTANT)
e4 = eisenstein_e4(N)
for k in range(0, 5):
    print(f"q^{k}: E4 coefficient {e4.coefficient(24 * k)}")
