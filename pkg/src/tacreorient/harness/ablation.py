"""Ablation matrix: every suite object x group x scenario x seed.

Episodes are independent, so they may run in worker processes; results are
sorted into a fixed order before anything is written, which keeps the
results file byte-identical for identical seeds.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ..controller import GROUPS, SCENARIOS
from ..simulation.objects import SUITE_IDS
from .config import scenario_config
from .runner import SUCCESS, run_episode

GROUP_ORDER = ("NTO", "NCB", "NC", "NOA", "CG")
RESULT_COLUMNS = ("object", "scenario", "group", "seed", "label", "final_error_deg", "max_slip_mm",
                  "duration_s")


@dataclass(frozen=True)
class EpisodeResult:
    object_id: str
    scenario: str
    group: str
    seed: int
    label: str
    final_error_deg: float
    max_slip_mm: float
    duration_s: float

    def row(self) -> list[str]:
        return [self.object_id, self.scenario, self.group, str(self.seed), self.label,
                f"{self.final_error_deg:.6f}", f"{self.max_slip_mm:.6f}", f"{self.duration_s:.3f}"]


def _run_one(job) -> EpisodeResult:
    doc, object_id, scenario, group, seed = job
    out = run_episode(scenario_config(doc, object_id, scenario, group=group, seed=seed))
    return EpisodeResult(object_id, scenario, group, seed, out.label, out.final_error_deg,
                         out.max_slip_mm, out.duration_s)


def run_ablation(doc: Mapping, suite: Sequence[str] = SUITE_IDS, groups: Iterable[str] = GROUP_ORDER,
                 scenarios: Iterable[str] = SCENARIOS, seeds: Sequence[int] = (0, 1, 2),
                 jobs: int = 1) -> list[EpisodeResult]:
    """Run the matrix; results come back ordered by scenario, object, group, seed."""
    groups = [g for g in GROUP_ORDER if g in set(groups)] + sorted(set(groups) - set(GROUP_ORDER))
    for g in groups:
        if g not in GROUPS:
            raise ValueError(f"unknown group {g!r}")
    order = {name: i for i, name in enumerate(suite)}
    work = [(doc, o, sc, g, int(sd)) for sc in scenarios for o in suite for g in groups for sd in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, work, chunksize=1))
    else:
        results = [_run_one(w) for w in work]
    sc_order = {s: i for i, s in enumerate(SCENARIOS)}
    g_order = {g: i for i, g in enumerate(groups)}
    results.sort(key=lambda r: (sc_order.get(r.scenario, 99), order[r.object_id], g_order[r.group], r.seed))
    return results


# -- output -----------------------------------------------------------------------

def results_csv(results: Sequence[EpisodeResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in results:
        w.writerow(r.row())
    return buf.getvalue()


def write_results(results: Sequence[EpisodeResult], path: str | Path) -> Path:
    path = Path(path)
    path.write_text(results_csv(results), encoding="utf-8")
    return path


def read_results(path: str | Path) -> list[EpisodeResult]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [EpisodeResult(r["object"], r["scenario"], r["group"], int(r["seed"]), r["label"],
                          float(r["final_error_deg"]), float(r["max_slip_mm"]), float(r["duration_s"]))
            for r in rows]


def _cell(labels: Sequence[str]) -> str:
    # one mark per seed: a tick for success, the failure label otherwise
    return " ".join("✓" if lab == SUCCESS else lab for lab in labels)


def matrix(results: Sequence[EpisodeResult], scenario: str) -> dict[str, dict[str, list[str]]]:
    """``{object: {group: [label per seed]}}`` for one scenario."""
    out: dict[str, dict[str, list[str]]] = {}
    for r in results:
        if r.scenario == scenario:
            out.setdefault(r.object_id, {}).setdefault(r.group, []).append(r.label)
    return out


def format_table(results: Sequence[EpisodeResult], scenario: str) -> str:
    """Objects as rows, groups as columns; one mark per seed in each cell."""
    m = matrix(results, scenario)
    if not m:
        return f"{scenario}: no episodes\n"
    groups = [g for g in GROUP_ORDER if any(g in row for row in m.values())]
    cells = {o: [_cell(m[o].get(g, [])) for g in groups] for o in m}
    widths = [max(len("object"), *(len(o) for o in m))]
    widths += [max(len(g), *(len(cells[o][i]) for o in m)) for i, g in enumerate(groups)]
    def line(parts):
        return " | ".join(p.ljust(w) for p, w in zip(parts, widths)).rstrip()
    lines = [f"{scenario}", line(["object", *groups]), "-+-".join("-" * w for w in widths)]
    lines += [line([o, *cells[o]]) for o in m]
    return "\n".join(lines) + "\n"


def summary(results: Sequence[EpisodeResult]) -> dict:
    """Counts that the qualitative ablation pattern is judged on."""
    out = {}
    for sc in sorted({r.scenario for r in results}):
        rs = [r for r in results if r.scenario == sc]
        m = matrix(rs, sc)
        by_group = {}
        for g in sorted({r.group for r in rs}):
            labels = [r.label for r in rs if r.group == g]
            objects_with = lambda pred: sum(1 for o in m if any(pred(l) for l in m[o].get(g, [])))
            by_group[g] = {
                "episodes": len(labels),
                "success": labels.count(SUCCESS),
                "objects_all_success": sum(1 for o in m if m[o].get(g) and all(l == SUCCESS for l in m[o][g])),
                "objects_with_failure": objects_with(lambda l: l != SUCCESS),
                "objects_with_slip": objects_with(lambda l: "SL" in l),
                "objects_with_stall": objects_with(lambda l: "ST" in l),
            }
        out[sc] = by_group
    return out
