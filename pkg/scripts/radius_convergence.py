"""Per-radius values of every set-pair estimator on one scenario.

Useful to see whether the finest radius has settled: for tangent balls str
keeps falling with the radius while for lines it is flat.

    python3 scripts/radius_convergence.py scenarios/battery.yaml tangent_balls
"""

import argparse

from transversal.cli import ESTIMATORS, load_scenarios

PAIR_ESTIMATORS = ("str", "str_prime", "tr", "tr_dual", "itr", "itr_c", "itr_w", "str1")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("file")
    p.add_argument("scenario")
    p.add_argument("--estimators", nargs="*", default=PAIR_ESTIMATORS)
    args = p.parse_args()

    sc = {s.name: s for s in load_scenarios(args.file)}[args.scenario]
    A, B = sc.sets()
    cfg = sc.cfg()
    print("estimator," + ",".join(f"r={r:g}" for r in cfg.radii))
    for name in args.estimators:
        if name == "itr_c" and not (A.is_convex and B.is_convex):
            continue
        est = ESTIMATORS[name](A, B, sc.xbar, cfg, graph=sc.graph_pair())
        print(name + "," + ",".join(f"{v:.5f}" for _, v, _ in est.per_radius))


if __name__ == "__main__":
    main()
