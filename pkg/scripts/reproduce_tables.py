#!/usr/bin/env python3
"""Print the del Pezzo chamber tables and nef volumes, or write them to a file.

    python3 scripts/reproduce_tables.py [--format md|csv|json] [--workers N] [--out PATH]
"""
import argparse
import sys
import time

from zchambers.cli import cmd_tables


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--format", choices=("md", "csv", "json"), default="md")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()
    t = time.perf_counter()
    _, doc = cmd_tables(args)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            doc.emit(fh)
    else:
        doc.emit()
    print(f"done in {time.perf_counter() - t:.1f}s", file=sys.stderr)


if __name__ == "__main__":
    main()
