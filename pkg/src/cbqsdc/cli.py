"""Command-line entry point: ``cbqsdc run | tables | attack-sweep``.

Exit codes: 0 the command ran (ABORT verdicts included), 1 bad configuration,
2 an oracle verification failed.
"""
from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from . import checks, swapcalc
from .adversary import AttackKind, AttackModel, Line, estimate_detection_rate, wilson
from .metrics import LeakageTarget, comparison_table, exact_mutual_information, leakage_posterior
from .protocol import RunConfig, Scenario, layout_decodability, run_scenario, trial_seeds
from .qcore import BELL_NAMES, GhzIndex


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", choices=[s.value for s in Scenario], default="bell")
    p.add_argument("--pairs", type=_positive, default=1, help="message groups N")
    p.add_argument("--check", type=_nonneg, default=0, help="check states c")
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=_positive, default=1)
    p.add_argument("--attack", choices=[k.value for k in AttackKind], default="none")
    p.add_argument("--target-line", choices=[t.value for t in Line], default="bob")
    p.add_argument("--layout", choices=["a", "b"], default="a", help="network encoding layout")
    p.add_argument("--check-bases", choices=["ZX", "Z", "X"], default="ZX")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--workers", type=_positive, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cbqsdc", description="Controlled bidirectional QSDC simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run the protocol for a number of seeded trials")
    _add_common(run)
    run.add_argument("--beta2", type=float, default=0.25, help="|beta|^2 for entangle-measure")
    run.add_argument("--no-permission", action="store_true")
    run.add_argument("--ghz-alphabet", choices=["reduced", "full"], default="reduced")
    run.add_argument("--alice-even", action="store_true", help="Alice encodes on the second pair of each group")
    run.add_argument("--leakage", action="store_true", help="add exact leakage posteriors")
    run.add_argument("--verify-tables", action="store_true", help="add oracle table checks")

    tables = sub.add_parser("tables", help="print the swap tables with their oracle status")
    tables.add_argument("--ghz", action="store_true", help="GHZ swap table")
    tables.add_argument("--ghz-bell", action="store_true", help="GHZ pair expanded into Bell triples")
    tables.add_argument("--encoding", action="store_true", help="single-user encoding tables")
    tables.add_argument("--decodability", action="store_true", help="which layouts decode")
    tables.add_argument("--format", choices=["text", "json"], default="text")
    tables.add_argument("--out", default=None)

    sweep = sub.add_parser("attack-sweep", help="per-check error rates across attack parameters")
    _add_common(sweep)
    sweep.add_argument("--beta2", default="0.1,0.25,0.5", help="comma-separated |beta|^2 grid")
    sweep.set_defaults(check=1000, trials=100, threshold=1.0)
    return parser


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def _attack(args, beta2: float) -> AttackModel:
    kind = AttackKind(args.attack)
    target = Line(args.target_line)
    if kind is AttackKind.ENTANGLE_MEASURE:
        return AttackModel.entangle_measure(beta2, target)
    return AttackModel(kind, target=target)


def config_from_args(args) -> RunConfig:
    try:
        return RunConfig(
            scenario=Scenario(args.scenario),
            n_message_pairs=args.pairs,
            n_check=args.check,
            error_threshold=args.threshold,
            seed=args.seed,
            attack=_attack(args, args.beta2 if isinstance(args.beta2, float) else 0.0),
            permission_granted=not getattr(args, "no_permission", False),
            network_layout=args.layout,
            alice_on_odd=not getattr(args, "alice_even", False),
            check_bases=args.check_bases,
            ghz_alphabet=getattr(args, "ghz_alphabet", "reduced"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _one_trial(cfg: RunConfig):
    return run_scenario(cfg)


def _run_trials(cfg: RunConfig, trials: int, workers: int):
    cfgs = [replace(cfg, seed=s) for s in trial_seeds(cfg.seed, trials)] if trials > 1 else [cfg]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_one_trial, cfgs, chunksize=max(1, len(cfgs) // (4 * workers))))
    return [_one_trial(c) for c in cfgs]


def _rate(r) -> dict:
    d = r.to_dict()
    return {"rate": None if r.trials == 0 else round(d["rate"], 12), "count": d["count"], "n": d["n"],
            "ci95": [round(x, 12) for x in d["ci95"]]}


def run_report(args) -> dict:
    cfg = config_from_args(args)
    reports = _run_trials(cfg, args.trials, args.workers)
    verdicts = Counter()
    for r in reports:
        verdicts["ABORT" if r.verdict.aborted else ("WITHHELD" if r.withheld else "CONTINUE")] += 1
    decoded = [r for r in reports if r.decode_ok is not None]
    ok = sum(r.decode_ok for r in decoded)
    decodability = layout_decodability(cfg.layout.name)

    errors = sum(r.verdict.n_errors for r in reports)
    n_checks = sum(r.verdict.n_checks for r in reports)
    by_basis = {}
    for b in ("Z", "X"):
        n = sum(r.verdict.by_basis[b][0] for r in reports)
        e = sum(r.verdict.by_basis[b][1] for r in reports)
        by_basis[b] = _rate(wilson(e, n))

    completed = [r for r in reports if not r.verdict.aborted]
    efficiency = None
    if completed:
        first = completed[0]
        efficiency = {**first.efficiency.to_dict(), "comparison": [row.to_dict() for row in comparison_table(first)]}

    report = {
        "config": {**cfg.to_dict(), "trials": args.trials},
        "verdicts": {k: verdicts.get(k, 0) for k in ("CONTINUE", "ABORT", "WITHHELD")},
        "decode": {
            "attempted": len(decoded),
            "successes": ok,
            "success_rate": round(ok / len(decoded), 12) if decoded else "n/a",
            "withheld": verdicts.get("WITHHELD", 0),
            "layout_decodable": decodability.decodable,
        },
        "error_rates": {
            "per_check": _rate(wilson(errors, n_checks)),
            "by_basis": by_basis,
            "abort": _rate(wilson(verdicts.get("ABORT", 0), len(reports))),
        },
        "efficiency": efficiency,
    }
    if args.leakage:
        report["leakage"] = leakage_section(cfg, completed)
    if args.verify_tables:
        report["table_checks"] = [c.to_dict() for c in checks.all_checks()]
    return report


def leakage_section(cfg: RunConfig, completed) -> dict:
    layout = cfg.layout
    targets = [LeakageTarget.JOINT] + [
        t for t in (LeakageTarget.ALICE_SECRET, LeakageTarget.BOB_SECRET, LeakageTarget.ELENA_SECRET)
        if t.value.upper() in {r.value for r in layout.users}
    ]
    out = {"mutual_information_bits": {}, "posteriors": {}}
    for t in targets:
        out["mutual_information_bits"][t.value] = {
            "with_permission": round(exact_mutual_information(layout, t, True), 12),
            "without_permission": round(exact_mutual_information(layout, t, False), 12),
        }
    if completed:
        view = completed[0].transcript.public_view()
        for t in targets:
            out["posteriors"][t.value] = {
                "with_permission": leakage_posterior(view, t, True).to_dict(),
                "without_permission": leakage_posterior(view, t, False).to_dict(),
            }
    return out


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------


def _bell(b) -> str:
    return BELL_NAMES[b]


def _ghz(g: GhzIndex) -> str:
    return "phi" + "".join(str(x) for x in g)


def tables_report(args) -> tuple[dict, bool]:
    sections = []
    swap_tab = checks.check_swap_table()
    members = checks.check_group_members()
    sections.append({
        "name": "swap groups",
        "grid": {_bell(a): {_bell(b): str(swapcalc.swap_group(a, b)) for b in swapcalc.BELL_INDICES}
                 for a in swapcalc.BELL_INDICES},
        "members": {str(g): sorted(f"{_bell(x)},{_bell(y)}" for x, y in swapcalc.group_members(g))
                    for g in swapcalc.SWAP_GROUPS},
        "checks": [swap_tab.to_dict(), members.to_dict()],
    })
    if args.encoding:
        sections.append({"name": "encoding tables", "checks": [checks.check_encoding_tables().to_dict()]})
    if args.ghz:
        rows = []
        for row in swapcalc.ghz_swap_table():
            rows.append({
                "initial": f"{_ghz(row.left)} x {_ghz(row.right)}",
                "terms": [f"{'+' if s > 0 else '-'}{_ghz(a)}{_ghz(b)}" for a, b, s in row.terms],
                "status": "verified" if checks.check_ghz_row(row) else "failed",
            })
        sections.append({"name": "GHZ swap table", "rows": rows, "checks": [checks.check_ghz_table().to_dict()]})
    if args.ghz_bell:
        zero = GhzIndex(0, 0, 0)
        res = swapcalc.ghz_bell_decomposition_check(zero, zero)
        triples = [{"outcome": " ".join(_bell(b) for b in t), "probability": round(p, 12)}
                   for t, p in sorted(res.observed.items())]
        sections.append({"name": "GHZ to Bell", "initial": f"{_ghz(zero)} x {_ghz(zero)}", "triples": triples,
                         "checks": [checks.check_ghz_bell().to_dict()]})
    if args.decodability:
        from .protocol import LAYOUTS

        sections.append({"name": "layout decodability",
                         "layouts": [layout_decodability(n).to_dict() for n in LAYOUTS]})
    ok = all(c["status"] == "verified" for s in sections for c in s.get("checks", []))
    return {"table_checks": sections, "all_verified": ok}, ok


# ---------------------------------------------------------------------------
# attack-sweep
# ---------------------------------------------------------------------------


def _grid(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad --beta2 grid {text!r}") from None
    if not values or any(not 0 <= v <= 1 for v in values):
        raise ConfigError(f"--beta2 values must lie in [0, 1], got {text!r}")
    return values


def sweep_report(args) -> dict:
    kind = AttackKind(args.attack)
    grid = _grid(args.beta2) if kind is AttackKind.ENTANGLE_MEASURE else [None]
    rows = []
    base = None
    for beta2 in grid:
        args_b = argparse.Namespace(**{**vars(args), "beta2": beta2 if beta2 is not None else 0.0})
        cfg = config_from_args(args_b)
        base = base or cfg
        est = estimate_detection_rate(cfg, trials=args.trials)
        rows.append({
            "attack": kind.value,
            "beta2": beta2,
            "per_check": _rate(est.per_check),
            "z_error": _rate(est.by_basis["Z"]),
            "x_error": _rate(est.by_basis["X"]),
            "abort": _rate(est.abort),
        })
    return {"config": {**base.to_dict(), "trials": args.trials}, "error_rates": rows}


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def render_text(obj, indent: int = 0) -> list[str]:
    """Indented key/value dump of the JSON report, so both formats carry the same numbers."""
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.extend(render_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_fmt(v)}")
    elif isinstance(obj, list):
        for item in obj:
            if isinstance(item, (dict, list)):
                sub = render_text(item, indent + 1)
                lines.append(f"{pad}- {sub[0].strip()}")
                lines.extend(sub[1:])
            else:
                lines.append(f"{pad}- {_fmt(item)}")
    else:
        lines.append(f"{pad}{_fmt(obj)}")
    return lines


def _emit(report: dict, fmt: str, out: str | None) -> None:
    canonical = json.dumps(report, indent=2, sort_keys=True)
    if fmt == "json":
        text = canonical + "\n"
    else:
        # render from the serialized form so both formats show identical values
        text = "\n".join(render_text(json.loads(canonical))) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            report = run_report(args)
            failed = "table_checks" in report and not all(c["status"] == "verified" for c in report["table_checks"])
            _emit(report, args.format, args.out)
            return 2 if failed else 0
        if args.command == "tables":
            report, ok = tables_report(args)
            _emit(report, args.format, args.out)
            return 0 if ok else 2
        report = sweep_report(args)
        _emit(report, args.format, args.out)
        return 0
    except ConfigError as exc:
        print(f"cbqsdc: config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
