"""Experiment campaigns, summary metrics and CSV/JSON reports."""
from __future__ import annotations

import csv
import io
import json
import os
import re
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .engine import EngineConfig, RunResult, run
from .instance import ClusteredGraph
from .solution import validate_solution

CSV_HEADER = ["instance", "run", "seed", "best_cost", "time_ms", "pop", "gens", "rmp", "mut_rate", "parents", "memo"]
SUMMARY_HEADER = ["instance", "runs", "bf", "avg", "time_ms"]


class InvariantViolation(RuntimeError):
    pass


def rpd(solution_avg: float, best_avg: float) -> float:
    """Relative percentage deviation of ``solution_avg`` from ``best_avg``."""
    if not best_avg > 0:
        raise ValueError(f"best_avg must be positive, got {best_avg}")
    return (solution_avg - best_avg) / best_avg * 100


def mean_ranks(table: Sequence[Sequence[float]]) -> list[float]:
    """Mean rank per algorithm; each row holds one instance's cost per algorithm.

    Lower cost ranks first and tied costs share the average of their ranks.
    """
    if not table:
        raise ValueError("empty table")
    width = len(table[0])
    totals = [0.0] * width
    for row in table:
        if len(row) != width:
            raise ValueError("ragged table: every instance needs a cost for every algorithm")
        order = sorted(range(width), key=lambda a: row[a])
        i = 0
        while i < width:
            j = i
            while j + 1 < width and row[order[j + 1]] == row[order[i]]:
                j += 1
            shared = (i + j) / 2 + 1
            for pos in range(i, j + 1):
                totals[order[pos]] += shared
            i = j + 1
    return [t / len(table) for t in totals]


@dataclass
class RunRow:
    instance: str
    run: int
    seed: int
    best_cost: float
    time_ms: float
    config: EngineConfig

    def as_list(self) -> list:
        c = self.config
        return [
            self.instance, self.run, self.seed, repr(self.best_cost), f"{self.time_ms:.3f}",
            c.pop_size, c.generations, c.rmp, c.mut_rate, c.parents_k, int(c.memo_enabled),
        ]


@dataclass
class Aggregate:
    instance: str
    runs: int
    bf: float
    avg: float
    time_ms: float


@dataclass
class BenchReport:
    rows: list[RunRow] = field(default_factory=list)
    traces: dict[tuple[str, int], list[float]] = field(default_factory=dict)

    def aggregates(self) -> list[Aggregate]:
        grouped: dict[str, list[RunRow]] = {}
        for row in self.rows:
            grouped.setdefault(row.instance, []).append(row)
        return [
            Aggregate(
                name, len(rs), min(r.best_cost for r in rs),
                statistics.fmean(r.best_cost for r in rs), statistics.fmean(r.time_ms for r in rs),
            )
            for name, rs in grouped.items()
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in self.rows:
            w.writerow(row.as_list())
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for a in self.aggregates():
            w.writerow([a.instance, a.runs, repr(a.bf), repr(a.avg), f"{a.time_ms:.3f}"])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [dict(zip(CSV_HEADER, r.as_list())) for r in self.rows]
        for r in rows:
            r["best_cost"] = float(r["best_cost"])
            r["time_ms"] = float(r["time_ms"])
        aggregates = [a.__dict__ for a in self.aggregates()]
        return json.dumps({"rows": rows, "aggregates": aggregates}, indent=2)


def _unique_names(tasks: Sequence[ClusteredGraph]) -> list[str]:
    names, seen = [], {}
    for t in tasks:
        base = t.id or "instance"
        seen[base] = seen.get(base, 0) + 1
        names.append(base if seen[base] == 1 else f"{base}#{seen[base]}")
    return names


def run_campaign(
    tasks: Sequence[ClusteredGraph],
    config: EngineConfig,
    runs: int = 30,
    check: bool = True,
) -> BenchReport:
    """Run the multitask engine ``runs`` times on one batch of tasks.

    Run ``i`` uses seed ``config.master_seed + i``.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    names = _unique_names(tasks)
    report = BenchReport()
    results: list[RunResult] = []
    for i in range(runs):
        seed = config.master_seed + i
        cfg = EngineConfig(**{**config.__dict__, "master_seed": seed})
        res = run(tasks, cfg)
        results.append(res)
        if check:
            _check(res, tasks)
        for t, name in enumerate(names):
            report.traces[(name, i)] = res.traces[t]
    for t, name in enumerate(names):
        for i, res in enumerate(results):
            report.rows.append(
                RunRow(name, i, config.master_seed + i, res.best_costs[t], res.wall_time * 1000, config)
            )
    return report


def _check(res: RunResult, tasks: Sequence[ClusteredGraph]) -> None:
    for t, task in enumerate(tasks):
        trace = res.traces[t]
        if any(b > a for a, b in zip(trace, trace[1:])):
            raise InvariantViolation(f"best-cost trace increased for task {task.id!r}")
        report = validate_solution(res.best_solutions[t], task)
        if not report.ok:
            raise InvariantViolation(f"invalid best solution for {task.id!r}: {report}")


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def write_report(report: BenchReport, out: str | os.PathLike, json_path=None, trace_dir=None) -> None:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.to_csv())
    out.with_name(out.stem + ".summary.csv").write_text(report.summary_csv())
    if json_path:
        Path(json_path).write_text(report.to_json())
    if trace_dir:
        d = Path(trace_dir)
        d.mkdir(parents=True, exist_ok=True)
        for (name, i), trace in report.traces.items():
            lines = ["generation,best_cost"] + [f"{g},{c!r}" for g, c in enumerate(trace)]
            (d / f"{_safe(name)}_run{i}.csv").write_text("\n".join(lines) + "\n")
