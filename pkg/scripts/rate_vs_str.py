"""Alternating-projection rate against str for pairs of lines at varying angles.

For lines at angle t the iteration contracts by cos^2 t per cycle and
str = sin(t/2). The table shows the fitted rate next to the two convex bounds
c <= 1 - str^2 and str >= (1 - c)/(3 - c).
"""

import argparse
import csv
import sys

import numpy as np

from transversal.altproj import InsufficientData, fit_rate, one_step_rate, run_ap
from transversal.constants import EstimatorConfig, estimate_str
from transversal.projections import AffineSubspace


def line(theta):
    return AffineSubspace([0.0, 0.0], [[np.cos(theta), np.sin(theta)]])


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--angles", type=int, default=9, help="number of angles in (0, pi/2]")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--out", help="CSV path (default: stdout)")
    args = p.parse_args()

    cfg = EstimatorConfig(samples_per_radius=args.samples)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["angle_deg", "str", "str_exact", "c_fit", "c_exact", "c_upper", "str_lower"])
    for t in np.linspace(np.pi / 2 / args.angles, np.pi / 2, args.angles):
        A, B = line(0.0), line(t)
        s = estimate_str(A, B, [0, 0], cfg).value
        trace = run_ap(A, B, [1.0, 0.0], max_iter=2000)
        try:
            c = fit_rate(trace).c
        except InsufficientData:
            c = one_step_rate(trace)
        w.writerow([round(np.degrees(t), 3), round(s, 5), round(np.sin(t / 2), 5), round(c, 5),
                    round(np.cos(t) ** 2, 5), round(1 - s * s, 5), round((1 - c) / (3 - c), 5)])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
