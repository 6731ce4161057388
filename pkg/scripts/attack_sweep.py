"""Per-check error rates for each attack over a |beta|^2 grid, written as CSV.

    python3 scripts/attack_sweep.py --checks 1000 --trials 20 --out sweep.csv
"""
import argparse
import csv
import sys

import numpy as np

from cbqsdc.adversary import AttackKind, AttackModel, estimate_detection_rate
from cbqsdc.protocol import RunConfig, Scenario


def rows(scenario: Scenario, checks: int, trials: int, grid, seed: int):
    base = RunConfig(scenario=scenario, n_message_pairs=1, n_check=checks, error_threshold=1.0, seed=seed)
    attacks = [("none", None, None), ("intercept-resend", AttackModel(AttackKind.INTERCEPT_RESEND), None),
               ("cnot", AttackModel(AttackKind.CONTROLLED_NOT), None)]
    attacks += [("entangle-measure", AttackModel.entangle_measure(b2), b2) for b2 in grid]
    for name, attack, b2 in attacks:
        est = estimate_detection_rate(base, attack, trials)
        yield {
            "scenario": scenario.value,
            "attack": name,
            "beta2": "" if b2 is None else b2,
            "per_check": round(est.per_check.value, 6),
            "z_error": round(est.by_basis["Z"].value, 6),
            "x_error": round(est.by_basis["X"].value, 6),
            "abort_rate": round(est.abort.value, 6),
        }


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--scenario", choices=[s.value for s in Scenario], default="bell")
    p.add_argument("--checks", type=int, default=1000)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--points", type=int, default=6, help="grid points in [0, 1] for |beta|^2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    args = p.parse_args()

    grid = [float(v) for v in np.round(np.linspace(0.0, 1.0, args.points), 4)]
    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    writer = None
    for row in rows(Scenario(args.scenario), args.checks, args.trials, grid, args.seed):
        if writer is None:
            writer = csv.DictWriter(out, fieldnames=list(row))
            writer.writeheader()
        writer.writerow(row)
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()
