"""Command line front end: generate, solve, bench, plotdata.

Exit codes: 0 when the requested solve succeeded (and always for generate,
bench and plotdata when they complete), 1 when a solver finished without
reaching its target, 2 for usage or data errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .fw import FwConfig, fw_solve
from .gk import GkConfig, gk_solve
from .nl1 import Nl1Config, nl1_solve
from .problems import DIAGONAL, RANDOM_DS, WEBGRAPH, ProblemSpec, build_problem, load_snap_edgelist, webgraph_to_P
from .report import BenchRow, write_bench_csv, write_trace_csv
from .sparse import DualSparseMatrix, load_dsm, pagerank_operator, save_dsm, sparsity_stats

_FAMILY_ALIASES = {"diagonal": DIAGONAL, "diag": DIAGONAL, "random": RANDOM_DS, "random_ds": RANDOM_DS, "web": WEBGRAPH, "webgraph": WEBGRAPH}


def _print_stats(label: str, M: DualSparseMatrix) -> None:
    st = sparsity_stats(M)
    print(
        f"{label}: n={M.n} nnz={M.nnz} "
        f"row_nnz min/avg/max = {st.row_nnz_min}/{st.row_nnz_avg:.2f}/{st.row_nnz_max} "
        f"col_nnz min/avg/max = {st.col_nnz_min}/{st.col_nnz_avg:.2f}/{st.col_nnz_max}"
    )


def _spec_from_args(args) -> ProblemSpec:
    fam = _FAMILY_ALIASES.get(args.family)
    if fam is None:
        raise ValueError(f"unknown family {args.family!r}")
    if fam == DIAGONAL:
        return ProblemSpec(fam, n=args.n, n_d=args.nd, seed=args.seed, random_weights=getattr(args, "random_weights", False))
    if fam == RANDOM_DS:
        return ProblemSpec(fam, n=args.n, s=args.s, seed=args.seed)
    if not args.snap:
        raise ValueError("web family needs --snap <edge list>")
    g = load_snap_edgelist(args.snap)
    return ProblemSpec(fam, n=g.n_nodes, source_path=args.snap)


def _row_sums(M: DualSparseMatrix) -> np.ndarray:
    counts = np.diff(M.by_rows.row_start)
    ids = np.repeat(np.arange(M.n), counts)
    return np.bincount(ids, weights=M.by_rows.value, minlength=M.n)


def _load_matrix(path: str, kind: str) -> tuple[DualSparseMatrix, str]:
    """Read a DSM file as either a stochastic matrix or an operator.

    auto: nonnegative entries with every row summing to 1 (within 1e-9) is a
    stochastic matrix and gets turned into its residual operator; anything
    else, including the zero matrix, is the operator itself. The two readings
    are disjoint: an operator built from a stochastic matrix has zero column
    sums, so a nonzero one always has a negative entry.
    """
    M = load_dsm(path)
    M.n  # squareness check
    if kind == "P":
        return pagerank_operator(M), "P"
    if kind == "A":
        return M, "A"
    if M.nnz and M.by_rows.value.min() >= 0.0 and np.abs(_row_sums(M) - 1.0).max() <= 1e-9:
        return pagerank_operator(M), "P"
    return M, "A"


def _solve_one(A: DualSparseMatrix, method: str, args, problem: dict):
    if method == "nl1":
        cfg = Nl1Config(epsilon=args.eps, gamma=args.gamma, step_denominator=args.step_denominator, start_vertex=args.start_vertex, check_stride=args.check_stride)
        if args.max_iters is not None:
            cfg.max_iters = args.max_iters
        return nl1_solve(A, cfg, problem)
    if method == "fw":
        cfg = FwConfig(epsilon=args.eps, max_iters=args.max_iters, start_vertex=args.start_vertex, check_stride=args.check_stride)
        return fw_solve(A, cfg, problem)
    if method == "gk":
        cfg = GkConfig(epsilon=args.eps, sigma=args.sigma, seed=args.seed, override_N=args.max_iters)
        return gk_solve(A, cfg, problem)
    raise ValueError(f"unknown method {method!r}")


def _print_report(rep) -> None:
    n = rep.problem.get("n", "?")
    print(
        f"method={rep.method} n={n} iterations={rep.iterations} "
        f"wall_s={rep.wall_time_ns / 1e9:.3f} "
        f"resid_two={rep.final_residual_two:.6e} resid_inf={rep.final_residual_inf:.6e} "
        f"status={rep.status} success={rep.success}"
    )
    if rep.gk_diagnostics is not None:
        d = rep.gk_diagnostics
        print(
            f"  gk: N={d['N']} regret_B={d['regret_B']:.6e} duality_gap={d['duality_gap']:.6e} "
            f"rescales={d['rescales_B'] + d['rescales_A']}"
        )


def _cmd_generate(args) -> int:
    spec = _spec_from_args(args)
    P = build_problem(spec)
    A = pagerank_operator(P)
    _print_stats("P", P)
    _print_stats("A", A)
    if args.out:
        save_dsm(P, args.out)
        print(f"wrote {args.out}")
    if args.operator_out:
        save_dsm(A, args.operator_out)
        print(f"wrote {args.operator_out}")
    return 0


def _problem_for_solve(args) -> tuple[DualSparseMatrix, dict]:
    if args.matrix:
        A, kind = _load_matrix(args.matrix, args.matrix_kind)
        return A, {"family": "file", "source_path": args.matrix, "kind": kind, "n": A.n}
    spec = _spec_from_args(args)
    P = build_problem(spec)
    return pagerank_operator(P), spec.summary()


def _cmd_solve(args) -> int:
    A, problem = _problem_for_solve(args)
    _print_stats("A", A)
    if args.gamma_sweep:
        if args.method != "nl1":
            raise ValueError("--gamma-sweep applies to the nl1 method only")
        gammas = [float(t) for t in args.gamma_sweep.split(",") if t]
        if not gammas:
            raise ValueError("--gamma-sweep needs at least one value")
        reports = []
        for g in gammas:
            args.gamma = g
            _, rep = _solve_one(A, "nl1", args, dict(problem, gamma=g))
            print(f"gamma={g}:")
            _print_report(rep)
            reports.append(rep)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write("[\n" + ",\n".join(r.to_json() for r in reports) + "\n]\n")
        if args.trace:
            write_trace_csv(reports[-1].trace, args.trace)
        return 0 if all(r.success for r in reports) else 1
    _, rep = _solve_one(A, args.method, args, problem)
    _print_report(rep)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(rep.to_json() + "\n")
    if args.trace:
        write_trace_csv(rep.trace, args.trace)
    return 0 if rep.success else 1


def _bench_jobs(args) -> list[tuple[str, int, str, str, ProblemSpec]]:
    sizes = [int(float(t)) for t in args.sizes.split(",") if t]
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    jobs = []
    if args.suite == "diag":
        nds = [int(t) for t in args.nd.split(",") if t]
        for n in sizes:
            for nd in nds:
                for m in methods:
                    jobs.append(("diag", n, str(nd), m, ProblemSpec(DIAGONAL, n=n, n_d=nd, seed=args.seed)))
    elif args.suite == "random":
        ss = [int(t) for t in args.s.split(",") if t]
        for n in sizes:
            for s in ss:
                for m in methods:
                    jobs.append(("random", n, str(s), m, ProblemSpec(RANDOM_DS, n=n, s=s, seed=args.seed)))
    else:
        if not args.snap:
            raise ValueError("web suite needs --snap <edge list>")
        g = load_snap_edgelist(args.snap)
        spec = ProblemSpec(WEBGRAPH, n=g.n_nodes, source_path=args.snap)
        for m in methods:
            jobs.append(("web", g.n_nodes, os.path.basename(args.snap), m, spec))
    return jobs


def _cmd_bench(args) -> int:
    jobs = _bench_jobs(args)
    threads = int(os.environ.get("SOLVER_THREADS", "1"))

    def run(job) -> BenchRow:
        family, n, param, method, spec = job
        A = pagerank_operator(build_problem(spec))
        ns = argparse.Namespace(
            eps=args.eps, gamma=1.0, step_denominator=8.0, sigma=0.1, seed=args.seed,
            max_iters=None, start_vertex=0, check_stride=0,
        )
        _, rep = _solve_one(A, method, ns, spec.summary())
        return BenchRow(family, n, param, method, rep.wall_time_ns / 1e9, rep.iterations)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(run, jobs))
    else:
        rows = [run(j) for j in jobs]
    rows.sort(key=lambda r: (r.family, r.n, r.param, r.method))
    for r in rows:
        print(f"{r.family} n={r.n} param={r.param} {r.method}: {r.time_s:.4f}s {r.iterations} iters")
    if args.out:
        write_bench_csv(rows, args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_plotdata(args) -> int:
    from .report import SolveReport

    with open(args.report) as fh:
        rep = SolveReport.from_json(fh.read())
    if not rep.trace:
        raise ValueError("report has an empty trace; rerun the solve with tracing on")
    with open(args.out_prefix + "_iters.txt", "w") as fh:
        for it, _, fv in rep.trace:
            fh.write(f"{it} {fv!r}\n")
    with open(args.out_prefix + "_time.txt", "w") as fh:
        for _, ns, fv in rep.trace:
            fh.write(f"{ns / 1e9!r} {fv!r}\n")
    print(f"wrote {args.out_prefix}_iters.txt and {args.out_prefix}_time.txt")
    return 0


def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", default="diagonal", help="diagonal | random | web")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--nd", type=int, default=3, help="band width for the diagonal family (odd)")
    p.add_argument("--s", type=int, default=3, help="nonzeros per row and column for the random family")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snap", help="edge list file for the web family")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="sparserank", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("generate", help="build a problem matrix and optionally save it")
    _add_problem_flags(g)
    g.add_argument("--random-weights", action="store_true", help="uniform random band weights instead of equal")
    g.add_argument("--out", help="write the stochastic matrix here (DSM)")
    g.add_argument("--operator-out", help="write the residual operator here (DSM)")
    g.set_defaults(fn=_cmd_generate)

    s = sub.add_parser("solve", help="run one solver on a generated or loaded matrix")
    _add_problem_flags(s)
    s.add_argument("--random-weights", action="store_true")
    s.add_argument("--matrix", help="DSM file to solve instead of generating")
    s.add_argument("--matrix-kind", choices=("auto", "P", "A"), default="auto")
    s.add_argument("--method", choices=("nl1", "fw", "gk"), default="nl1")
    s.add_argument("--eps", type=float, default=1e-4)
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--step-denominator", type=float, default=8.0)
    s.add_argument("--sigma", type=float, default=0.1)
    s.add_argument("--max-iters", type=int, default=None, help="iteration cap; for gk this overrides the horizon")
    s.add_argument("--start-vertex", type=int, default=0)
    s.add_argument("--check-stride", type=int, default=1024)
    s.add_argument("--gamma-sweep", help="comma list of penalty strengths to run nl1 over")
    s.add_argument("--out", help="write the report JSON here")
    s.add_argument("--trace", help="write the trace CSV here")
    s.set_defaults(fn=_cmd_solve)

    b = sub.add_parser("bench", help="run a timing suite and emit CSV rows")
    b.add_argument("--suite", choices=("diag", "random", "web"), default="diag")
    b.add_argument("--sizes", default="100,1000,10000,100000", help="comma list of n")
    b.add_argument("--nd", default="3,11")
    b.add_argument("--s", default="3,11")
    b.add_argument("--methods", default="nl1,fw")
    b.add_argument("--eps", type=float, default=1e-4)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--snap")
    b.add_argument("--out", help="write the CSV here")
    b.set_defaults(fn=_cmd_bench)

    pd = sub.add_parser("plotdata", help="turn a report's trace into plain text plot columns")
    pd.add_argument("--report", required=True)
    pd.add_argument("--out-prefix", required=True)
    pd.set_defaults(fn=_cmd_plotdata)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
