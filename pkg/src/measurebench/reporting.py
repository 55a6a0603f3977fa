"""Report emission: reliability/ranking/consistency tables, runtime tables,
success statistics, failure counts, comparison data, and the selection guide.

All outputs are deterministic functions of the record store, so re-running
the report step reproduces identical bytes.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .datatypes import CATEGORIES, Category, ReliabilityRecord, TestSpec, TestStatus
from .evaluation import (
    aggregate_reliability,
    consistency,
    ranking,
    runtime_table,
    statistical_comparison,
    trajectory_reliability,
)
from .registry import ExpectedBehaviorTable, MeasureRegistry
from .datatypes import Expectation

MIN_CONSISTENCY = 0.5  # selection-guide screen


def reliability_records_from(records: List[dict], measures: MeasureRegistry,
                             behavior: ExpectedBehaviorTable) -> List[ReliabilityRecord]:
    out = []
    for record in records:
        if record["status"] != TestStatus.SUCCESSFUL.value:
            continue
        spec = TestSpec.from_dict(record["spec"])
        desc = measures.descriptor(spec.measure)
        for category in CATEGORIES:
            expectation = behavior.expectation_for_chain(
                spec.transformation_chain, category
            )
            if expectation == Expectation.NOT_APPLICABLE:
                continue
            r_rel = trajectory_reliability(desc, record["scores"], expectation)
            out.append(
                ReliabilityRecord(
                    measure=spec.measure,
                    category=category,
                    test_id=record["test_id"],
                    dataset=spec.dataset,
                    seed=spec.seed,
                    r_rel=r_rel,
                )
            )
    return out


def _fmt(x: Optional[float], digits: int = 4) -> str:
    return "" if x is None else f"{x:.{digits}f}"


def _write_csv(path: Path, header: List[str], rows: List[List[str]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_reliability_csv(path: Path, cells) -> None:
    """Alphabetical measure rows, mean and std per category."""
    measures = sorted({m for m, _ in cells})
    header = ["measure"]
    for cat in CATEGORIES:
        header += [f"{cat.value}_mean", f"{cat.value}_std"]
    rows = []
    for m in measures:
        row = [m]
        for cat in CATEGORIES:
            stats = cells.get((m, cat))
            row += [_fmt(stats.mean if stats else None),
                    _fmt(stats.std if stats else None)]
        rows.append(row)
    _write_csv(path, header, rows)


def write_ranking_csv(path: Path, ranked) -> None:
    """Rank rows; per category a measure and its mean +- std."""
    depth = max((len(rows) for rows in ranked.values()), default=0)
    header = ["rank"]
    for cat in CATEGORIES:
        header += [f"{cat.value}_measure", f"{cat.value}_mean", f"{cat.value}_std"]
    rows = []
    for i in range(depth):
        row = [str(i + 1)]
        for cat in CATEGORIES:
            entries = ranked.get(cat, [])
            if i < len(entries):
                measure, stats = entries[i]
                row += [measure, _fmt(stats.mean), _fmt(stats.std)]
            else:
                row += ["", "", ""]
        rows.append(row)
    _write_csv(path, header, rows)


def write_consistency_csv(path: Path, records: List) -> None:
    by_key: Dict[Tuple[str, Category, str], float] = {
        (r.measure, r.category, r.axis): r.r_con for r in records
    }
    measures = sorted({r.measure for r in records})
    header = ["measure"]
    for cat in CATEGORIES:
        header += [f"{cat.value}_dataset", f"{cat.value}_seed"]
    rows = []
    for m in measures:
        row = [m]
        for cat in CATEGORIES:
            row += [_fmt(by_key.get((m, cat, "dataset")), 3),
                    _fmt(by_key.get((m, cat, "seed")), 3)]
        rows.append(row)
    _write_csv(path, header, rows)


def _collect_runtimes(records: List[dict]):
    measure_steps = defaultdict(list)
    embed_steps = defaultdict(list)
    for record in records:
        spec = record["spec"]
        dataset = spec["dataset"]
        for i, runtime in enumerate(record.get("runtimes", [])):
            aided = bool(record["cache_aided"][i]) if i < len(record.get("cache_aided", [])) else False
            measure_steps[(spec["measure"], dataset)].append((runtime, aided))
        if spec.get("embedder"):
            for i, runtime in enumerate(record.get("embed_runtimes", [])):
                cached = bool(record["embed_cached"][i]) if i < len(record.get("embed_cached", [])) else False
                embed_steps[(spec["embedder"], dataset)].append((runtime, cached))
    return measure_steps, embed_steps


def write_runtime_csv(path: Path, table, key_name: str) -> None:
    header = [key_name, "dataset", "mean_s", "std_s", "valid", "cached"]
    rows = []
    for (key, dataset) in sorted(table):
        cell = table[(key, dataset)]
        mean = "" if cell.valid == 0 else f"{cell.mean:.3f}"
        std = "" if cell.valid == 0 else f"{cell.std:.3f}"
        rows.append([key, dataset, mean, std, str(cell.valid), str(cell.cached)])
    _write_csv(path, header, rows)


def write_statistics_csv(path: Path, records: List[dict]) -> None:
    """Per measure: attempted tests, successes, and the success rate."""
    totals = defaultdict(int)
    successes = defaultdict(int)
    for record in records:
        measure = record["spec"]["measure"]
        if record["status"] == TestStatus.SUCCESSFUL.value:
            totals[measure] += 1
            successes[measure] += 1
        elif record["status"] == TestStatus.FAILED.value:
            totals[measure] += 1
    rows = []
    for measure in sorted(totals):
        total, succ = totals[measure], successes[measure]
        rate = 100.0 * succ / total if total else 0.0
        rows.append([measure, str(total), str(succ), f"{rate:.1f}"])
    grand_total = sum(totals.values())
    grand_succ = sum(successes.values())
    grand_rate = 100.0 * grand_succ / grand_total if grand_total else 0.0
    rows.append(["TOTAL", str(grand_total), str(grand_succ), f"{grand_rate:.1f}"])
    _write_csv(path, ["measure", "total", "successful", "success_rate_pct"], rows)


def write_failures_csv(path: Path, records: List[dict]) -> None:
    counts = defaultdict(int)
    for record in records:
        if record["status"] == TestStatus.FAILED.value and record.get("failure_reason"):
            counts[record["failure_reason"]] += 1
    rows = [[reason, str(counts[reason])] for reason in sorted(counts)]
    _write_csv(path, ["failure", "count"], rows)


def write_cdd_json(path: Path, result, category: Category) -> None:
    if result is None:
        payload = {"category": category.value,
                   "note": "insufficient data for statistical comparison"}
    else:
        payload = result.to_dict()
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_selection_guide(path: Path, ranked, consistency_records,
                          runtime_measures, measures: MeasureRegistry) -> None:
    """Ranked walk per category with the minimum-consistency screen applied."""
    con_by_key: Dict[Tuple[str, Category, str], float] = {
        (r.measure, r.category, r.axis): r.r_con for r in consistency_records
    }
    runtime_by_measure = defaultdict(list)
    for (measure, _dataset), cell in runtime_measures.items():
        if cell.valid:
            runtime_by_measure[measure].append(cell.mean)

    lines = ["# Measure selection guide", ""]
    lines.append(
        "Per quality category: start from the most reliable measure, skip any "
        f"whose consistency falls below {MIN_CONSISTENCY} on an evaluated axis, "
        "then weigh running time and ease of use against your use case."
    )
    lines.append("")
    for cat in CATEGORIES:
        lines.append(f"## {cat.value}")
        lines.append("")
        recommended = None
        for measure, stats in ranked.get(cat, []):
            cons = [con_by_key.get((measure, cat, axis)) for axis in ("dataset", "seed")]
            screened = any(c is not None and c < MIN_CONSISTENCY for c in cons)
            mean_rt = runtime_by_measure.get(measure)
            rt_note = f", mean runtime {sum(mean_rt) / len(mean_rt):.2f}s" if mean_rt else ""
            embed_note = (
                ", embedder-dependent"
                if measures.descriptor(measure).needs_embedding else ""
            )
            cons_note = "/".join("n.a." if c is None else f"{c:.2f}" for c in cons)
            flag = ""
            if screened:
                flag = " (skipped: inconsistent)"
            elif recommended is None:
                recommended = measure
                flag = " <- recommended"
            lines.append(
                f"- {measure}: r_rel {stats.mean:.3f} +- {stats.std:.3f}, "
                f"consistency dataset/seed {cons_note}{rt_note}{embed_note}{flag}"
            )
        if recommended is None:
            lines.append("- no measure passes the consistency screen")
        lines.append("")
    path.write_text("\n".join(lines) + "\n")


def emit_reports(workspace, measures: MeasureRegistry,
                 behavior: ExpectedBehaviorTable) -> dict:
    """Write every report file into workspace/reports; returns a summary."""
    records = workspace.all_records()
    if not all(r["status"] != TestStatus.ONGOING.value for r in records):
        raise RuntimeError("cannot evaluate: some tests are still ongoing")
    if not records:
        raise RuntimeError("workspace holds no test records")
    reports = Path(workspace.reports_dir)

    rel_records = reliability_records_from(records, measures, behavior)
    cells = aggregate_reliability(rel_records)
    ranked = ranking(cells)
    cons_records = (consistency(rel_records, "dataset")
                    + consistency(rel_records, "seed"))
    measure_steps, embed_steps = _collect_runtimes(records)
    runtime_measures = runtime_table(measure_steps)
    runtime_embedders = runtime_table(embed_steps)

    write_reliability_csv(reports / "reliability.csv", cells)
    write_ranking_csv(reports / "ranking.csv", ranked)
    write_consistency_csv(reports / "consistency.csv", cons_records)
    write_runtime_csv(reports / "runtime_measures.csv", runtime_measures, "measure")
    write_runtime_csv(reports / "runtime_embedders.csv", runtime_embedders, "embedder")
    write_statistics_csv(reports / "statistics.csv", records)
    write_failures_csv(reports / "failures.csv", records)
    comparisons = {}
    for cat in CATEGORIES:
        result = statistical_comparison(rel_records, cat)
        comparisons[cat] = result
        write_cdd_json(reports / f"cdd_{cat.value}.json", result, cat)
    write_selection_guide(reports / "selection_guide.md", ranked, cons_records,
                          runtime_measures, measures)
    measures.dump_catalog(reports / "measures.json")

    top_ranked = {
        cat.value: (ranked[cat][0][0] if ranked.get(cat) else None)
        for cat in CATEGORIES
    }
    return {
        "reliability_records": len(rel_records),
        "top_ranked": top_ranked,
        "files": sorted(p.name for p in reports.iterdir()),
    }
