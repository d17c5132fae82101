"""Command line: ``tacreorient {run,ablate,demo,plot}``.

Every subcommand takes ``--config`` (YAML merged over the defaults),
``--seed`` and ``--out`` (an output directory, created if missing).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

from ..controller import GROUPS, SCENARIOS
from ..simulation.objects import SUITE_IDS
from .ablation import GROUP_ORDER, format_table, run_ablation, summary, write_results
from .config import ConfigError, echo, load_document, scenario_config
from .demo import run_two_phase_demo
from .plots import MalformedLog, emit_plots
from .runner import run_episode


def _common(p: argparse.ArgumentParser, out: str) -> None:
    p.add_argument("--config", type=Path, default=None, help="YAML file merged over the defaults")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--out", type=Path, default=Path(out), help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tacreorient", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one episode and write its log")
    _common(p, "out/run")
    p.add_argument("--object", choices=SUITE_IDS, default="textured")
    p.add_argument("--scenario", choices=SCENARIOS, default="contact")
    p.add_argument("--group", choices=sorted(GROUPS), default="CG")

    p = sub.add_parser("ablate", help="run the object x group x scenario matrix")
    _common(p, "out/ablation")
    p.add_argument("--seeds", type=int, default=3, help="seeds per cell, counted up from --seed")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--scenario", choices=SCENARIOS, action="append", help="limit to a scenario")
    p.add_argument("--group", choices=GROUP_ORDER, action="append", help="limit to a group")
    p.add_argument("--object", choices=SUITE_IDS, action="append", help="limit to an object")

    p = sub.add_parser("demo", help="two-phase demo: in air, then against a hidden obstacle")
    _common(p, "out/demo")
    p.add_argument("--seeds", type=int, default=5, help="number of seeds, counted up from --seed")

    p = sub.add_parser("plot", help="emit plot-ready series from an episode log")
    _common(p, "out/plots")
    p.add_argument("log", type=Path, help="episode log written by 'run' or 'demo'")
    return parser


def _cmd_run(args, doc) -> int:
    cfg = scenario_config(doc, args.object, args.scenario, group=args.group, seed=args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    log = args.out / f"{args.object}_{args.scenario}_{args.group}_seed{args.seed}.csv"
    out = run_episode(cfg, log)
    record = {**asdict(out), "thresholds": echo(cfg)}
    (args.out / (log.stem + ".json")).write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")
    print(f"{out.label}: error {out.final_error_deg:.2f} deg, slip {out.max_slip_mm:.2f} mm, "
          f"{out.duration_s:.2f} s -> {log}")
    return 0


def _cmd_ablate(args, doc) -> int:
    seeds = list(range(args.seed, args.seed + args.seeds))
    t0 = time.perf_counter()
    results = run_ablation(doc, suite=args.object or SUITE_IDS, groups=args.group or GROUP_ORDER,
                           scenarios=args.scenario or SCENARIOS, seeds=seeds, jobs=args.jobs)
    args.out.mkdir(parents=True, exist_ok=True)
    write_results(results, args.out / "results.csv")
    tables = "\n".join(format_table(results, sc) for sc in (args.scenario or SCENARIOS))
    (args.out / "tables.txt").write_text(tables, encoding="utf-8")
    (args.out / "summary.json").write_text(json.dumps(summary(results), indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")
    print(tables)
    print(f"{len(results)} episodes in {time.perf_counter() - t0:.1f} s -> {args.out}")
    return 0


def _cmd_demo(args, doc) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed in range(args.seed, args.seed + args.seeds):
        d = run_two_phase_demo(doc, seed, log_dir=args.out)
        labels = [p.label for p in d.phases] + ["-"] * (2 - len(d.phases))
        rows.append([seed, *labels, "yes" if d.success else "no"])
        print(f"seed {seed}: in-air {labels[0]}, contact {labels[1]}")
    with open(args.out / "demo.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "in_air", "contact", "both"])
        w.writerows(rows)
    print(f"{sum(r[-1] == 'yes' for r in rows)}/{len(rows)} seeds completed both phases")
    return 0


def _cmd_plot(args, doc) -> int:
    written = emit_plots(args.log, args.out)
    for name, path in written.items():
        print(f"{name}: {path}")
    return 0


COMMANDS = {"run": _cmd_run, "ablate": _cmd_ablate, "demo": _cmd_demo, "plot": _cmd_plot}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = load_document(args.config)
        return COMMANDS[args.command](args, doc)
    except (ConfigError, MalformedLog, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
