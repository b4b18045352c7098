"""Sampled two-player updates for min over the simplex of max_i |(Ax)_i|.

The residual problem is the matrix game min_{x in S_n} max_{w in S_2n}
<w, A2 x> with A2 = [A; -A] stacking the operator and its negation, so the
row player's best response value is the infinity norm of Ax. Both players run
multiplicative weights over exact-sum trees: the column player keeps n
weights, the row player 2n. Each step draws one pure column j and one pure
row i from the current mixed strategies, then reweights the opponent-facing
payoffs along the sparse support of the drawn row and column only.

Learning rates are sqrt(2 ln n / N) and sqrt(2 ln 2n / N) for a horizon of
N = ceil(16 (ln 2n + 8 ln(2/sigma)) / eps^2) steps. The averaged strategies
are the empirical draw frequencies; the reported column-player regret is the
averaged sampled payoff minus the best fixed column against the row player's
empirical average.

Weights only ever shrink or grow through exp factors, so after enough steps a
tree root can approach overflow; when the root passes rescale_threshold the
whole tree is multiplied by a power of two chosen to bring the root into
[1/2, 1). A power-of-two factor changes only exponents, never mantissas, so
sampling and every subsequent update are bit-identical to the unrescaled
trajectory and replays stay deterministic.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .report import SolveReport
from .sparse import DualSparseMatrix, _dual_from_arrays, spmv, spmv_t
from .trees import WeightTree, _wt_descend, _wt_set

_STATUS_OK = 0
_GENERATOR = "PCG64"


def _gk_raw(n: int, epsilon: float, sigma: float) -> float:
    """Horizon before the ceiling; halving eps exactly quadruples this."""
    if n < 1:
        raise ValueError("n must be positive")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not 0 < sigma < 2:
        raise ValueError("sigma must lie in (0, 2)")
    return 16.0 * (math.log(2.0 * n) + 8.0 * math.log(2.0 / sigma)) / (epsilon * epsilon)


def gk_iterations(n: int, epsilon: float, sigma: float) -> int:
    return math.ceil(_gk_raw(n, epsilon, sigma))


@dataclass
class GkConfig:
    epsilon: float
    sigma: float = 0.1
    seed: int = 0
    rescale_threshold: float = 1e150
    override_N: int | None = None
    alternating: bool = False  # update the row weights before drawing the row

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.sigma < 2:
            raise ValueError("sigma must lie in (0, 2)")
        if not self.rescale_threshold > 0:
            raise ValueError("rescale_threshold must be positive")
        if self.override_N is not None and self.override_N < 0:
            raise ValueError("override_N must be nonnegative")


@dataclass(eq=False)
class GkState:
    A: DualSparseMatrix
    cfg: GkConfig
    wB: WeightTree  # n leaves, column player
    wA: WeightTree  # 2n leaves, row player over [A; -A]
    counts_x: np.ndarray  # int64, draws of each column
    counts_w: np.ndarray  # int64, draws of each stacked row
    etaB: float
    etaA: float
    N: int
    k: int
    rng: np.random.Generator
    loss_sum: float = 0.0
    diagnostics: dict = field(default_factory=lambda: {"rescales_B": 0, "rescales_A": 0, "checkpoints": []})


@njit(cache=True, nogil=True)
def _row_entry(rp, ri, rv, row, j):
    # binary search: column indices are ascending within a row
    lo = rp[row]
    hi = rp[row + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        c = ri[mid]
        if c == j:
            return rv[mid]
        if c < j:
            lo = mid + 1
        else:
            hi = mid
    return 0.0


@njit(cache=True, nogil=True)
def _rescale_pow2(w):
    fr, e = math.frexp(w[1])
    for q in range(w.shape[0]):
        w[q] = math.ldexp(w[q], -e)


@njit(cache=True, nogil=True)
def _gk_update_B(rp, ri, rv, n, wB, capB, etaB, i2):
    row = i2 if i2 < n else i2 - n
    sign = 1.0 if i2 < n else -1.0
    for t in range(rp[row], rp[row + 1]):
        jj = ri[t]
        fac = math.exp(-etaB * sign * rv[t])
        _wt_set(wB, capB, jj, wB[capB + jj] * fac)


@njit(cache=True, nogil=True)
def _gk_update_A(cp, ci, cv, n, wA, capA, etaA, j):
    for t in range(cp[j], cp[j + 1]):
        ii = ci[t]
        a = cv[t]
        _wt_set(wA, capA, ii, wA[capA + ii] * math.exp(etaA * a))
        _wt_set(wA, capA, ii + n, wA[capA + ii + n] * math.exp(-etaA * a))
    return 0


@njit(cache=True, nogil=True)
def _gk_run(rp, ri, rv, cp, ci, cv, n, wB, capB, wA, capA, counts_x, counts_w, etaB, etaA, thresh, us, m, alternating, loss_sum, rescB, rescA):
    for t in range(m):
        uB = us[2 * t]
        uA = us[2 * t + 1]
        j = _wt_descend(wB, capB, uB)
        counts_x[j] += 1
        if alternating:
            _gk_update_A(cp, ci, cv, n, wA, capA, etaA, j)
            i2 = _wt_descend(wA, capA, uA)
        else:
            i2 = _wt_descend(wA, capA, uA)
            _gk_update_A(cp, ci, cv, n, wA, capA, etaA, j)
        counts_w[i2] += 1
        row = i2 if i2 < n else i2 - n
        sign = 1.0 if i2 < n else -1.0
        loss_sum += sign * _row_entry(rp, ri, rv, row, j)
        _gk_update_B(rp, ri, rv, n, wB, capB, etaB, i2)
        if wB[1] > thresh:
            _rescale_pow2(wB)
            rescB += 1
        if wA[1] > thresh:
            _rescale_pow2(wA)
            rescA += 1
    return loss_sum, rescB, rescA


def _run_state(state: GkState, A: DualSparseMatrix, us: np.ndarray, m: int):
    br, bc = A.by_rows, A.by_cols
    wB, wA = state.wB, state.wA
    loss, rb, ra = _gk_run(
        br.row_start, br.col_index, br.value,
        bc.row_start, bc.col_index, bc.value,
        A.n, wB._w, wB.capacity, wA._w, wA.capacity,
        state.counts_x, state.counts_w,
        state.etaB, state.etaA, state.cfg.rescale_threshold,
        us, m, state.cfg.alternating,
        state.loss_sum, state.diagnostics["rescales_B"], state.diagnostics["rescales_A"],
    )
    state.loss_sum = float(loss)
    state.diagnostics["rescales_B"] = int(rb)
    state.diagnostics["rescales_A"] = int(ra)
    state.k += m


def gk_init(A: DualSparseMatrix, cfg: GkConfig) -> GkState:
    n = A.n
    if A.nnz and float(np.abs(A.by_rows.value).max()) > 1.0 + 1e-12:
        raise ValueError("entries must lie in [-1, 1] for these learning rates")
    N = cfg.override_N if cfg.override_N is not None else gk_iterations(n, cfg.epsilon, cfg.sigma)
    etaB = math.sqrt(2.0 * math.log(n) / N) if N > 0 and n > 1 else 0.0
    etaA = math.sqrt(2.0 * math.log(2.0 * n) / N) if N > 0 else 0.0
    return GkState(
        A, cfg,
        WeightTree(np.ones(n)), WeightTree(np.ones(2 * n)),
        np.zeros(n, np.int64), np.zeros(2 * n, np.int64),
        etaB, etaA, N, 0,
        np.random.default_rng(cfg.seed),
    )


def gk_step(state: GkState, A: DualSparseMatrix):
    """One sampled step: draw a column and a stacked row, reweight both trees."""
    us = state.rng.random(2)
    _run_state(state, A, us, 1)


def _finite_or_die(state: GkState):
    if not (np.isfinite(state.wB._w).all() and np.isfinite(state.wA._w).all()):
        raise ValueError("weight tree lost finiteness; lower rescale_threshold")


def _x_bar(state: GkState) -> np.ndarray:
    k = max(state.k, 1)
    return state.counts_x / k


def _checkpoint(state: GkState):
    wB, wA = state.wB._w, state.wA._w
    xb = _x_bar(state)
    pos = xb[xb > 0]
    state.diagnostics["checkpoints"].append({
        "k": state.k,
        "wB_root": float(wB[1]),
        "wA_root": float(wA[1]),
        "wB_max_leaf": float(wB[state.wB.capacity:state.wB.capacity + state.A.n].max()),
        "wA_max_leaf": float(wA[state.wA.capacity:state.wA.capacity + 2 * state.A.n].max()),
        "x_bar_entropy": float(-(pos * np.log(pos)).sum()),
        "rescales_B": state.diagnostics["rescales_B"],
        "rescales_A": state.diagnostics["rescales_A"],
    })


_warmed = False


def _warm():
    global _warmed
    if _warmed:
        return
    A = _dual_from_arrays([0, 0, 1, 1], [0, 1, 0, 1], [-1.0, 1.0, 1.0, -1.0], 2, 2)
    st = gk_init(A, GkConfig(epsilon=1.0, override_N=1))
    _run_state(st, A, st.rng.random(2), 1)
    _warmed = True


def gk_solve(A: DualSparseMatrix, cfg: GkConfig, problem: dict | None = None) -> tuple[GkState, SolveReport]:
    """Run the fixed horizon N and average the sampled strategies.

    Success means the averaged column strategy has residual infinity norm at
    most eps; the report always carries the averaged strategies, the
    column-player regret and the empirical duality gap. Uniform draws are
    buffered per chunk from the same PCG64 stream single stepping would use,
    so per-seed trajectories are identical either way.
    """
    _warm()
    state = gk_init(A, cfg)
    n = A.n
    chunk = min(65536, max(1024, state.N // 32)) if state.N else 1
    wall = 0
    trace = []
    while state.k < state.N:
        m = min(chunk, state.N - state.k)
        us = state.rng.random(2 * m)
        t0 = time.perf_counter_ns()
        _run_state(state, A, us, m)
        wall += time.perf_counter_ns() - t0
        _finite_or_die(state)
        _checkpoint(state)
        trace.append((state.k, wall, float(np.abs(spmv(A, _x_bar(state))).max(initial=0.0))))
    if int(state.counts_x.sum()) != state.N or int(state.counts_w.sum()) != state.N:
        raise RuntimeError("draw counts do not sum to the horizon")
    x_bar = _x_bar(state)
    w_bar = state.counts_w / max(state.N, 1)
    r = spmv(A, x_bar)
    resid_inf = float(np.abs(r).max(initial=0.0))
    resid_two = 0.5 * float(np.dot(r, r))
    best_col = spmv_t(A, w_bar[:n] - w_bar[n:])
    min_response = float(best_col.min())
    avg_loss = state.loss_sum / state.N if state.N else 0.0
    diag = {
        "N": state.N,
        "etaB": state.etaB,
        "etaA": state.etaA,
        "generator": _GENERATOR,
        "x_bar": x_bar.tolist(),
        "w_bar": w_bar.tolist(),
        "avg_loss": avg_loss,
        "best_column_value": min_response,
        "regret_B": avg_loss - min_response,
        "duality_gap": resid_inf - min_response,
        "rescales_B": state.diagnostics["rescales_B"],
        "rescales_A": state.diagnostics["rescales_A"],
        "checkpoints": state.diagnostics["checkpoints"],
    }
    report = SolveReport(
        method="GK",
        problem=problem or {"n": n},
        config={
            "epsilon": cfg.epsilon,
            "sigma": cfg.sigma,
            "seed": cfg.seed,
            "rescale_threshold": cfg.rescale_threshold,
            "override_N": cfg.override_N,
            "alternating": cfg.alternating,
        },
        iterations=state.N,
        wall_time_ns=wall,
        final_residual_two=resid_two,
        final_residual_inf=resid_inf,
        success=resid_inf <= cfg.epsilon,
        status="finished",
        trace=trace,
        tree_metrics=None,
        gk_diagnostics=diag,
        seed=cfg.seed,
    )
    return state, report
