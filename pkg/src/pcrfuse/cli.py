"""pcrfuse command line: fuse, decide, experiment.

Exit codes: 0 success, 2 bad input or usage, 3 enumeration capacity exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .analysis import DISPLAY_NAMES, FAST_FUNCTIONALS, FAST_RULES, ExperimentConfig, run_experiment
from .files import InputError, dump, read_problem, read_result, result_doc
from .mass import FUNCTIONALS, MassError, decide
from .rules import RULE_NAMES, CapacityError, PowerWeight, fuse

EXIT_INPUT = 2
EXIT_CAPACITY = 3

CLASSICAL = ("bel", "pl", "betP")


class UsageError(Exception):
    pass


def _parse_alpha(spec: str) -> float:
    key, sep, value = spec.partition("=")
    if not sep or key.strip() != "alpha":
        raise UsageError(f"weight spec must look like alpha=<real>, got {spec!r}")
    try:
        alpha = float(value)
    except ValueError:
        raise UsageError(f"alpha must be a real number, got {value!r}") from None
    if not alpha >= 0:
        raise UsageError("alpha must be non-negative")
    return alpha


def cmd_fuse(args) -> int:
    weight = None
    alpha = None
    if args.rule in ("pcr6f", "pcr6g"):
        if args.weight is None:
            raise UsageError(f"rule {args.rule} requires --weight alpha=<real>")
        alpha = _parse_alpha(args.weight)
        weight = PowerWeight(alpha)
    elif args.weight is not None:
        raise UsageError(f"rule {args.rule} takes no weight")
    experts = read_problem(args.problem)
    fused = fuse(experts, args.rule, weight)
    text = dump(result_doc(fused, args.rule, alpha))
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_decide(args) -> int:
    if args.functional not in FUNCTIONALS:
        raise UsageError(f"unknown functional {args.functional!r}; choose from {', '.join(FUNCTIONALS)}")
    _, m = read_result(args.result)
    if args.functional in CLASSICAL and m.model.kind != "shafer":
        raise UsageError(f"{args.functional} assumes the Shafer model; use Bel, Pl or GPT for {m.model.kind}")
    try:
        report = decide(m, args.functional)
    except MassError as exc:
        raise InputError(f"{type(exc).__name__}: {exc}") from exc
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
        return 0
    width = max(len(n) for n in report.labels)
    for label, value in zip(report.labels, report.values):
        print(f"{label:<{width}}  {value:.6f}")
    print(f"decision: {report.decision_label}")
    if len(report.ties) > 1:
        print(f"ties: {' '.join(report.tie_labels)}")
    return 0


def _int_list(text: str, name: str) -> list[int]:
    out: list[int] = []
    try:
        for part in text.split(","):
            lo, sep, hi = part.partition("..")
            out.extend(range(int(lo), int(hi) + 1) if sep else [int(lo)])
    except ValueError:
        raise UsageError(f"--{name}: expected e.g. 3, 2..7 or 2,3,7; got {text!r}") from None
    return out


def _experiment_options(args) -> dict:
    opts = {"classes": "2..7", "experts": "2", "samples": 1_000_000, "seed": 0, "rules": "pcr6,dp,conjunctive",
            "bins": 100, "functional": "betP", "alpha": 1.0, "workers": 1}
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"--config: {exc}") from None
        unknown = set(loaded) - set(opts)
        if unknown:
            raise UsageError(f"--config: unknown keys {sorted(unknown)}")
        opts.update(loaded)
    for key in opts:
        value = getattr(args, key)
        if value is not None:
            opts[key] = value
    return opts


def cmd_experiment(args) -> int:
    o = _experiment_options(args)
    classes = _int_list(str(o["classes"]), "classes")
    experts = _int_list(str(o["experts"]), "experts")
    rules = tuple(r.strip() for r in str(o["rules"]).split(",") if r.strip())
    samples, bins, workers = int(o["samples"]), int(o["bins"]), int(o["workers"])
    if samples < 1:
        raise UsageError("--samples must be at least 1")
    if bins < 1:
        raise UsageError("--bins must be at least 1")
    configs = []
    for m in experts:
        for n in classes:
            try:
                configs.append(ExperimentConfig(n, m, samples, int(o["seed"]), rules, o["functional"], float(o["alpha"])))
            except ValueError as exc:
                raise UsageError(str(exc)) from None

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "decision_change.csv", "w", newline="", encoding="utf-8") as fc, \
            open(out / "conflict_hist.csv", "w", newline="", encoding="utf-8") as fh:
        dc = csv.writer(fc, lineterminator="\n")
        hc = csv.writer(fh, lineterminator="\n")
        dc.writerow(["pair", "n", "experts", "rate", "ties", "N"])
        pair_names = [f"{DISPLAY_NAMES[p]}/{DISPLAY_NAMES[q]}" for p, q in configs[0].pairs]
        hc.writerow(["n", "experts", "bin", "lo", "hi", "overall", *pair_names])
        for cfg in configs:
            table, hist = run_experiment(cfg, bins=bins, workers=workers)
            for p, q in cfg.pairs:
                dc.writerow([f"{DISPLAY_NAMES[p]}/{DISPLAY_NAMES[q]}", cfg.num_classes, cfg.num_experts,
                             repr(table.rate(p, q)), table.ties[p, q], cfg.num_samples])
            for b in range(bins):
                hc.writerow([cfg.num_classes, cfg.num_experts, b, repr(float(hist.edges[b])),
                             repr(float(hist.edges[b + 1])), int(hist.overall[b]),
                             *(int(hist.conditional[pair][b]) for pair in cfg.pairs)])
            if not args.quiet:
                rates = ", ".join(f"{DISPLAY_NAMES[p]}/{DISPLAY_NAMES[q]} {100 * table.rate(p, q):.2f}%"
                                  for p, q in cfg.pairs)
                print(f"n={cfg.num_classes} M={cfg.num_experts}: {rates}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcrfuse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuse", help="combine the experts of a problem file")
    p.add_argument("problem", help="problem JSON file")
    p.add_argument("--rule", required=True, choices=RULE_NAMES)
    p.add_argument("--weight", help="alpha=<real>, required for pcr6f/pcr6g")
    p.add_argument("-o", "--output", help="result file (default: stdout)")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("decide", help="argmax decision on a result file")
    p.add_argument("result", help="result JSON file written by 'fuse'")
    p.add_argument("--functional", default="betP", help=f"one of {', '.join(FUNCTIONALS)}")
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("experiment", help="Monte Carlo decision-change experiment")
    p.add_argument("--config", help="JSON file with any of the options below")
    p.add_argument("--classes", help="class counts, e.g. 2..7 (default 2..7)")
    p.add_argument("--experts", help="expert counts, e.g. 2,3 (default 2)")
    p.add_argument("--samples", type=int, help="samples per configuration (default 1e6)")
    p.add_argument("--seed", type=int)
    p.add_argument("--rules", help=f"comma list from {', '.join(FAST_RULES)} (default pcr6,dp,conjunctive)")
    p.add_argument("--bins", type=int, help="conflict histogram bins (default 100)")
    p.add_argument("--functional", choices=FAST_FUNCTIONALS, help="decision functional (default betP)")
    p.add_argument("--alpha", type=float, help="exponent for pcr6f/pcr6g (default 1)")
    p.add_argument("--workers", type=int, help="worker processes; output does not depend on it")
    p.add_argument("--out", default=".", help="output directory for the CSV files")
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2
    except InputError as exc:
        print(f"pcrfuse: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CapacityError as exc:
        print(f"pcrfuse: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY


if __name__ == "__main__":
    sys.exit(main())
