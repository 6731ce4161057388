"""Print the efficiency comparison table with the row measured from a live run."""
import argparse

from cbqsdc.metrics import comparison_table, efficiency
from cbqsdc.protocol import RunConfig, Scenario, run_scenario

COLUMNS = ("protocol", "kind", "m_u", "q_k", "b_k", "eta1_percent", "eta2_percent",
           "security_checks", "channels", "direct_sending")


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--scenario", choices=[s.value for s in Scenario], default="bell")
    p.add_argument("--pairs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    report = run_scenario(RunConfig(scenario=Scenario(args.scenario), n_message_pairs=args.pairs, seed=args.seed))
    table = [row.to_dict() for row in comparison_table(report)]
    widths = {c: max(len(c), *(len(str(r[c])) for r in table)) for c in COLUMNS}
    print("  ".join(c.ljust(widths[c]) for c in COLUMNS))
    for r in table:
        print("  ".join(str(r[c]).ljust(widths[c]) for c in COLUMNS))
    eff = efficiency(report.m_u, report.q_k, report.b_k)
    print(f"\nexact: eta1 = {eff.eta1}, eta2 = {eff.eta2}")


if __name__ == "__main__":
    main()
