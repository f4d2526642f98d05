#!/usr/bin/env python3
"""Cross-check the blow-down recursion against the polyhedral oracle.

    python3 scripts/run_check.py [--max-rank K] [--extra del-pezzo:5 ...]

Exits 1 on any mismatch. ``--extra`` adds surfaces beyond the default list.
"""
import argparse
import sys

from zchambers.cli import CHECK_FAMILIES, run_check
from zchambers.cones import DEFAULT_ORACLE_RANK
from zchambers.values import format_volume


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-rank", type=int, default=DEFAULT_ORACLE_RANK)
    ap.add_argument("--extra", nargs="*", default=[])
    args = ap.parse_args()
    records = run_check(args.max_rank, specs=list(CHECK_FAMILIES) + args.extra)
    for r in records:
        if r["status"] == "skipped":
            print(f"{r['surface']:>10}  skipped  ({r['reason']})")
        else:
            print(f"{r['surface']:>10}  {r['status']:8}  {format_volume(r['recursion'])}")
    sys.exit(1 if any(r["status"] == "mismatch" for r in records) else 0)


if __name__ == "__main__":
    main()
