"""Which peer bits each party can pin down, per encoding layout, plus outsider leakage."""
import json

from cbqsdc.metrics import LeakageTarget, exact_mutual_information
from cbqsdc.protocol import LAYOUTS, layout_decodability


def main():
    out = {}
    for name, layout in LAYOUTS.items():
        rep = layout_decodability(name).to_dict()
        if len(layout.users) == 2:
            rep["outsider_mutual_information_bits"] = {
                t.value: {
                    "with_permission": round(exact_mutual_information(layout, t, True), 6),
                    "without_permission": round(exact_mutual_information(layout, t, False), 6),
                }
                for t in (LeakageTarget.ALICE_SECRET, LeakageTarget.BOB_SECRET, LeakageTarget.JOINT)
            }
        out[name] = rep
    print(json.dumps(out, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
