"""Run a scenario file and write report.csv, report.md and AP traces to an output directory.

    python3 scripts/run_battery.py scenarios/battery.yaml --out results/battery
"""

import argparse
import os
import sys

from transversal.cli import emit_report, load_scenarios, run_battery, write_trace


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("file", nargs="?", default="scenarios/battery.yaml")
    p.add_argument("--out", default="results/battery")
    p.add_argument("--seed", type=int)
    args = p.parse_args()

    report = run_battery(load_scenarios(args.file), seed_override=args.seed, timing=True)
    os.makedirs(args.out, exist_ok=True)
    emit_report(report, "csv", os.path.join(args.out, "report.csv"))
    emit_report(report, "markdown", os.path.join(args.out, "report.md"))
    for name, tr in report.traces.items():
        write_trace(tr, os.path.join(args.out, f"trace_{name}.csv"))
    print(report.summary())
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
