"""Evaluate the S/T transformation laws numerically and print the residual table."""
import sys

from transgression.numericheck import NumericConfig, check_transformations

terms = int(sys.argv[1]) if len(sys.argv) > 1 else 60
cfg = NumericConfig(product_terms=terms, tol=1e-8)
rep = check_transformations(cfg)
for law, sample, r in rep.entries:
    print(f"{law:28s} {sample:>22s}  {r:.2e}")
print(f"max residual {rep.max_residual:.2e}  passed={rep.passed}")
for n in rep.notes:
    print("note:", n)
