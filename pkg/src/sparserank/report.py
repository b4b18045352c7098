"""Solve reports, convergence traces and benchmark rows.

Reports are plain JSON documents (lossless float round trip via repr-style
serialization), traces are CSV with columns iter,elapsed_ns,f_value. Wall time
covers the iteration loop only; generation, init and verification are excluded.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field


@dataclass
class SolveReport:
    method: str  # "NL1", "FW" or "GK"
    problem: dict
    config: dict
    iterations: int
    wall_time_ns: int
    final_residual_two: float
    final_residual_inf: float
    success: bool
    status: str  # "converged", "max_iters", "stalled" or "finished"
    trace: list = field(default_factory=list)  # rows (iter, elapsed_ns, f_value)
    tree_metrics: dict | None = None
    gk_diagnostics: dict | None = None
    seed: int | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SolveReport":
        d = json.loads(text)
        d["trace"] = [tuple(row) for row in d.get("trace", [])]
        return cls(**d)


def write_trace_csv(trace, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["iter", "elapsed_ns", "f_value"])
        for it, ns, fv in trace:
            w.writerow([it, ns, repr(float(fv))])


@dataclass
class BenchRow:
    family: str
    n: int
    param: int  # n_d for the diagonal family, s for the random one
    method: str
    time_s: float
    iterations: int


BENCH_COLUMNS = ["family", "n", "param", "method", "time_s", "iterations"]


def write_bench_csv(rows, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(BENCH_COLUMNS)
        for r in rows:
            w.writerow([r.family, r.n, r.param, r.method, repr(r.time_s), r.iterations])
