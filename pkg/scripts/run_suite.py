#!/usr/bin/env python3
"""Run the acceptance suite at a chosen scale and print one line per check.

Examples:
    python scripts/run_suite.py --scale quick
    python scripts/run_suite.py --scale ci --only bracket_limit pointwise_clt
"""
import argparse
import sys

from pshe.acceptance import CRITERIA, run_suite
from pshe.statlab import all_passed, reports_to_json


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scale", choices=["quick", "ci", "desk"], default="ci")
    ap.add_argument("--seed", type=int, default=20260808)
    ap.add_argument("--only", nargs="*", choices=CRITERIA, default=None)
    ap.add_argument("--json", type=str, default=None)
    args = ap.parse_args()
    reports = run_suite(args.scale, args.seed, only=args.only)
    if args.json:
        reports_to_json(reports, args.json)
    return 0 if all_passed(reports) else 1


if __name__ == "__main__":
    sys.exit(main())
