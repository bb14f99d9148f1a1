"""Run every verification suite and write one JSON report per suite.

usage: python scripts/run_all_suites.py [outdir] [--skip eleven]
"""
import json
import os
import sys
import time

from transgression.cli import RunConfig, run_suite

SUITES = ["theta", "modular", "transgression", "dim3", "flat", "loop", "tshift", "numeric", "eleven"]


def main(argv):
    skip = set()
    if "--skip" in argv:
        i = argv.index("--skip")
        skip = set(argv[i + 1].split(","))
        argv = argv[:i] + argv[i + 2:]
    outdir = argv[0] if argv else "reports"
    os.makedirs(outdir, exist_ok=True)
    failed = 0
    for s in SUITES:
        if s in skip:
            continue
        t0 = time.perf_counter()
        rep = run_suite(s, RunConfig())
        with open(os.path.join(outdir, f"{s}.json"), "w") as fh:
            json.dump(rep.to_json(), fh, indent=2)
        nfail = rep.exit_code
        failed += nfail
        print(f"{s:14s} {len(rep.entries):3d} entries  {'FAIL' if nfail else 'ok'}  {time.perf_counter() - t0:.1f}s")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
