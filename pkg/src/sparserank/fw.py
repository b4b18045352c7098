"""Pairwise-free vertex stepping with a lazily scaled iterate.

Minimizes f(x) = 1/2 ||Ax||_2^2 over the simplex by moving toward the vertex
with the smallest gradient coordinate: x_{k+1} = (1-g_k) x_k + g_k e_i with
g_k = 2/(k+1), i = argmin (A^T A x_k). The iterate is stored as x_k =
beta * x_hat so a step costs one coordinate event instead of a full rescale:
beta absorbs the (1-g_k) factor and the vertex insertion becomes
x_hat[i] += g_k / beta_next, which for this schedule is exactly the integer k.

The first step has g_1 = 1 and is realized as two coordinate events (-1 at the
start vertex, +1 at the chosen one) with beta staying 1, avoiding a zero
multiplier. beta also has the closed form 2/((m-1) m) at iterate index m >= 2;
the running product is compared against it at every chunk boundary (rel 1e-9)
and resynchronized so rounding drift cannot accumulate across chunks.

f is tracked incrementally in the scaled representation: a step first applies
f *= (1-g_k)^2, then adds beta^2 * (b_new*db - db^2/2) per changed entry of
b_hat = A x_hat. The decrease envelope f <= 16/(k+1) after k steps is asserted
at every logged trace row.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from numba import njit

from .report import SolveReport
from .sparse import DualSparseMatrix, _dual_from_arrays, spmv, spmv_t
from .trees import MIN, ArgExtremeTree, _ext_refresh, _ext_update
from .verify import IncrementalDriftError, check_scalar, check_vector

_DEFAULT_CHUNK = 16384

_RUNNING, _CONVERGED = 0, 1


def fw_iteration_bound(epsilon: float) -> int:
    """Iterations guaranteed to reach f <= eps^2/2 under the 16/(k+1) envelope."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return math.ceil(32.0 / (epsilon * epsilon))


@dataclass
class FwConfig:
    epsilon: float
    max_iters: int | None = None  # None: the eps-derived bound; lower caps it
    start_vertex: int = 0
    check_stride: int = 1024

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters is not None and self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.check_stride < 0:
            raise ValueError("check_stride must be nonnegative")


@dataclass(eq=False)
class FwState:
    A: DualSparseMatrix
    cfg: FwConfig
    x_hat: np.ndarray  # x = beta_hat * x_hat; integer-valued event counts
    beta_hat: float
    b_hat: np.ndarray  # A x_hat
    g_hat: np.ndarray  # A^T b_hat; argmin unaffected by the scaling
    min_tree: ArgExtremeTree
    f_true: float  # objective of the unscaled iterate
    k: int  # iterate index, starts at 1; completed steps = k - 1
    iter_cap: int
    f_init: float
    raw_writes: np.ndarray  # per column: gradient writes one step there costs


@njit(cache=True, nogil=True, inline="always")
def _fw_apply(rp, ri, rv, cp, ci, cv, xh, bh, gh, mn_i, mn_k, cap, prune, i, dxh, beta2, f, ups, lev):
    xh[i] += dxh
    acc = 0.0
    for t in range(cp[i], cp[i + 1]):
        r = ci[t]
        db = cv[t] * dxh
        bn = bh[r] + db
        bh[r] = bn
        acc += bn * db - 0.5 * db * db
        for u in range(rp[r], rp[r + 1]):
            c = ri[u]
            gc = gh[c] + rv[u] * db
            gh[c] = gc
            lev += _ext_update(mn_i, mn_k, cap, c, gc, prune)
            ups += 1
    return f + beta2 * acc, ups, lev


@njit(cache=True, nogil=True, inline="always")
def _fw_apply_wide(rp, ri, rv, cp, ci, cv, xh, bh, gh, cap, i, dxh, beta2, f, ups):
    # gh aliases the tree's leaf row, so these writes are the leaf updates;
    # the caller refreshes the internal nodes in one sweep afterwards
    xh[i] += dxh
    acc = 0.0
    for t in range(cp[i], cp[i + 1]):
        r = ci[t]
        db = cv[t] * dxh
        bn = bh[r] + db
        bh[r] = bn
        acc += bn * db - 0.5 * db * db
        for u in range(rp[r], rp[r + 1]):
            c = ri[u]
            gh[c] += rv[u] * db
            ups += 1
    return f + beta2 * acc, ups


@njit(cache=True, nogil=True)
def _fw_run(rp, ri, rv, cp, ci, cv, craw, xh, bh, gh, mn_i, mn_k, cap, n, mn_m, prune, v0, beta, f, k, n_iters, f_stop):
    done = 0
    last = -1
    ups = 0
    lev = 0
    wide_cut = cap >> 2  # full refresh beats this many climbs
    refresh_nodes = (cap + n - 1) >> 1
    status = _RUNNING
    while done < n_iters:
        if f <= f_stop:
            status = _CONVERGED
            break
        i = mn_i[1]
        if k == 1:
            # gamma_1 = 1 replaces the iterate outright; beta stays 1
            if i != v0:
                f, ups, lev = _fw_apply(rp, ri, rv, cp, ci, cv, xh, bh, gh, mn_i, mn_k, cap, prune, v0, -1.0, 1.0, f, ups, lev)
                f, ups, lev = _fw_apply(rp, ri, rv, cp, ci, cv, xh, bh, gh, mn_i, mn_k, cap, prune, i, 1.0, 1.0, f, ups, lev)
        else:
            gam = 2.0 / (k + 1.0)
            om = 1.0 - gam
            beta = beta * om
            f = f * om * om
            if craw[i] >= wide_cut:
                f, ups = _fw_apply_wide(rp, ri, rv, cp, ci, cv, xh, bh, gh, cap, i, float(k), beta * beta, f, ups)
                _ext_refresh(mn_i, mn_k, cap, n)
                lev += refresh_nodes
            else:
                f, ups, lev = _fw_apply(rp, ri, rv, cp, ci, cv, xh, bh, gh, mn_i, mn_k, cap, prune, i, float(k), beta * beta, f, ups, lev)
        last = i
        k += 1
        done += 1
    mn_m[0] += ups
    mn_m[1] += lev
    return beta, f, k, done, last, status


def _run_state(state: FwState, n_iters: int, f_stop: float):
    A = state.A
    br, bc = A.by_rows, A.by_cols
    mn = state.min_tree
    beta, f, k, done, last, st = _fw_run(
        br.row_start, br.col_index, br.value,
        bc.row_start, bc.col_index, bc.value,
        state.raw_writes,
        state.x_hat, state.b_hat, state.g_hat,
        mn._idx, mn._key, mn.capacity, A.n, mn._metrics, mn.prune,
        state.cfg.start_vertex, state.beta_hat, state.f_true,
        state.k, n_iters, f_stop,
    )
    state.beta_hat = float(beta)
    state.f_true = float(f)
    state.k = int(k)
    return done, last, st


def fw_init(A: DualSparseMatrix, cfg: FwConfig) -> FwState:
    n = A.n
    if not 0 <= cfg.start_vertex < n:
        raise ValueError("start_vertex out of range")
    x_hat = np.zeros(n)
    x_hat[cfg.start_vertex] = 1.0
    b_hat = np.zeros(n)
    rows_v, vals_v = A.by_cols.row(cfg.start_vertex)
    b_hat[rows_v] = vals_v
    g_hat = np.zeros(n)
    for r, bv in zip(rows_v, vals_v):
        cols_r, vals_r = A.by_rows.row(r)
        g_hat[cols_r] += bv * vals_r
    f = 0.5 * float(np.dot(b_hat, b_hat))
    bound = fw_iteration_bound(cfg.epsilon)
    cap = bound if cfg.max_iters is None else min(cfg.max_iters, bound)
    row_len = np.diff(A.by_rows.row_start)
    raw = np.zeros(n, np.int64)
    np.add.at(raw, np.repeat(np.arange(n), np.diff(A.by_cols.row_start)), row_len[A.by_cols.col_index])
    tree = ArgExtremeTree(g_hat, MIN)
    # the solver's gradient array aliases the tree's leaf row (MIN keys are
    # the values themselves), so a gradient write IS the leaf update
    g_view = tree._key[tree.capacity : tree.capacity + n]
    return FwState(A, cfg, x_hat, 1.0, b_hat, g_view, tree, f, 1, cap, f, raw)


def fw_extract(state: FwState) -> np.ndarray:
    """The actual iterate x_k = beta_hat * x_hat."""
    return state.beta_hat * state.x_hat


def fw_step(state: FwState) -> int:
    """One vertex step; returns the chosen vertex index."""
    done, last, st = _run_state(state, 1, -np.inf)
    return int(last)


def _beta_resync(state: FwState):
    m = state.k
    if m < 2:
        return
    exact = 2.0 / ((m - 1.0) * m)
    if abs(state.beta_hat - exact) > 1e-9 * exact:
        raise IncrementalDriftError(
            f"scale factor drifted: running product {state.beta_hat!r} vs closed form {exact!r} at iterate {m}"
        )
    state.beta_hat = exact


def _honest_recheck(state: FwState) -> tuple[np.ndarray, float]:
    b_fresh = spmv(state.A, state.x_hat)
    check_vector(state.b_hat, b_fresh, "fw b_hat = A x_hat")
    check_vector(state.g_hat, spmv_t(state.A, b_fresh), "fw gradient image")
    bf = state.beta_hat * b_fresh
    f_fresh = 0.5 * float(np.dot(bf, bf))
    check_scalar(state.f_true, f_fresh, state.f_init, "fw objective")
    return bf, f_fresh


def _envelope_check(f: float, iters_done: int):
    if f > 16.0 / (iters_done + 1.0):
        raise RuntimeError(f"decrease envelope violated: f={f!r} after {iters_done} steps exceeds 16/(k+1)")


_warmed = False


def _warm():
    global _warmed
    if _warmed:
        return
    A = _dual_from_arrays([0, 0, 1, 1], [0, 1, 0, 1], [-1.0, 1.0, 1.0, -1.0], 2, 2)
    st = fw_init(A, FwConfig(epsilon=1.0, check_stride=0))
    _run_state(st, 1, -np.inf)
    _warmed = True


def fw_solve(A: DualSparseMatrix, cfg: FwConfig, problem: dict | None = None) -> tuple[FwState, SolveReport]:
    """Step until f <= eps^2/2 or the iteration cap.

    The cap never exceeds the eps-derived bound, the decrease envelope is
    asserted at every trace row, and the final residuals come from a fresh
    matvec of the extracted iterate.
    """
    _warm()
    state = fw_init(A, cfg)
    thresh = 0.5 * cfg.epsilon * cfg.epsilon
    chunk = cfg.check_stride if cfg.check_stride > 0 else _DEFAULT_CHUNK
    wall = 0
    trace = [(0, 0, state.f_true)]
    _envelope_check(state.f_true, 0)
    status = "running"
    while True:
        iters = state.k - 1
        if state.f_true <= thresh:
            status = "converged"
            break
        if iters >= state.iter_cap:
            status = "max_iters"
            break
        m = min(chunk, state.iter_cap - iters)
        t0 = time.perf_counter_ns()
        done, last, st = _run_state(state, m, thresh)
        wall += time.perf_counter_ns() - t0
        trace.append((state.k - 1, wall, state.f_true))
        _envelope_check(state.f_true, state.k - 1)
        _beta_resync(state)
        if cfg.check_stride > 0:
            _honest_recheck(state)
        if st == _CONVERGED:
            status = "converged"
            break
    b_final, f_fresh = _honest_recheck(state)
    mt = state.min_tree.metrics
    report = SolveReport(
        method="FW",
        problem=problem or {"n": A.n},
        config={
            "epsilon": cfg.epsilon,
            "max_iters": state.iter_cap,
            "start_vertex": cfg.start_vertex,
            "check_stride": cfg.check_stride,
        },
        iterations=state.k - 1,
        wall_time_ns=wall,
        final_residual_two=f_fresh,
        final_residual_inf=float(np.abs(b_final).max(initial=0.0)),
        success=status == "converged",
        status=status,
        trace=trace,
        tree_metrics={
            "updates": mt.updates,
            "total_levels_climbed": mt.total_levels_climbed,
            "full_height": mt.full_height,
            "avg_levels_climbed": mt.avg_levels_climbed,
        },
        gk_diagnostics=None,
        seed=(problem or {}).get("seed"),
    )
    return state, report
