"""Benchmark matrix families and web-graph ingestion.

Three sources of row-stochastic P: a banded family with a configurable number
of diagonals, a random family built from disjoint permutations (exactly s
nonzeros per row and per column, hence doubly stochastic with a known uniform
stationary vector), and random-walk matrices of web graphs given as edge lists.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .sparse import DualSparseMatrix, _csr_from_sorted, _dual_from_arrays, _transpose_csr

DIAGONAL = "diagonal"
RANDOM_DS = "random_ds"
WEBGRAPH = "webgraph"


@dataclass
class ProblemSpec:
    family: str
    n: int
    n_d: int | None = None
    s: int | None = None
    seed: int = 0
    source_path: str | None = None
    random_weights: bool = False

    def __post_init__(self):
        if self.family not in (DIAGONAL, RANDOM_DS, WEBGRAPH):
            raise ValueError(f"unknown family {self.family!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.family == DIAGONAL:
            if self.n_d is None or self.n_d < 1 or self.n_d % 2 == 0:
                raise ValueError("n_d must be odd and >= 1")
            if self.n_d > self.n:
                raise ValueError("n_d must not exceed n")
        if self.family == RANDOM_DS:
            if self.s is None or not 1 <= self.s <= self.n:
                raise ValueError("s must satisfy 1 <= s <= n")
        if self.family == WEBGRAPH and not self.source_path:
            raise ValueError("webgraph family needs source_path")

    def summary(self) -> dict:
        return asdict(self)


@dataclass
class EdgeList:
    n_nodes: int
    edges: np.ndarray  # (m, 2) int64, ids already compacted to [0, n_nodes)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])


def gen_diagonal(
    n: int, n_d: int, seed: int = 0, random_weights: bool = False, wrap: bool = False
) -> DualSparseMatrix:
    """Band matrix P with half-width (n_d-1)/2, no wraparound by default.

    Boundary rows simply have fewer entries, so row sizes range over
    [(n_d-1)/2 + 1, n_d]. Row values are equal by default (1/band size);
    with random_weights they are drawn positive and row-normalized.

    With wrap=True the band is periodic: row i covers columns (i-h..i+h)
    mod n, so every row and column holds exactly n_d entries and the
    construction is translation invariant. That removes all boundary
    effects, which is what makes solver iteration counts independent of n
    on this family.
    """
    if n_d % 2 == 0 or n_d < 1:
        raise ValueError("n_d must be odd and >= 1")
    if n_d > n:
        raise ValueError("n_d must not exceed n")
    h = (n_d - 1) // 2
    i = np.arange(n, dtype=np.int64)
    if wrap:
        counts = np.full(n, n_d, dtype=np.int64)
        total = n * n_d
        rows = np.repeat(i, n_d)
        cols = (rows + np.tile(np.arange(-h, h + 1, dtype=np.int64), n)) % n
    else:
        lo = np.maximum(0, i - h)
        hi = np.minimum(n - 1, i + h)
        counts = hi - lo + 1
        total = int(counts.sum())
        rows = np.repeat(i, counts)
        offsets = np.zeros(n, dtype=np.int64)
        np.cumsum(counts[:-1], out=offsets[1:])
        cols = np.repeat(lo, counts) + (np.arange(total, dtype=np.int64) - np.repeat(offsets, counts))
    if random_weights:
        rng = np.random.default_rng(seed)
        w = rng.uniform(0.1, 1.0, total)
        sums = np.bincount(rows, weights=w, minlength=n)
        vals = w / np.repeat(sums, counts)
    else:
        vals = np.repeat(1.0 / counts, counts)
    if wrap:
        return _dual_from_arrays(rows, cols, vals, n, n)
    by_rows = _csr_from_sorted(rows, cols, vals, n, n)
    return DualSparseMatrix(by_rows, _transpose_csr(by_rows))


def _try_disjoint_perm(rng: np.random.Generator, prev: np.ndarray, n: int):
    # Repair collisions against the already fixed permutations by random
    # transpositions; give up (return None) after bounded work.
    for _attempt in range(8):
        sigma = rng.permutation(n).astype(np.int64)
        if prev.shape[0] == 0:
            return sigma
        for _pass in range(64):
            coll = np.flatnonzero((prev == sigma[None, :]).any(axis=0))
            if coll.size == 0:
                return sigma
            for i in coll:
                for _swap in range(16):
                    j = int(rng.integers(n))
                    si, sj = sigma[i], sigma[j]
                    if (prev[:, i] != sj).all() and (prev[:, j] != si).all():
                        sigma[i], sigma[j] = sj, si
                        break
    return None


def gen_random_ds(n: int, s: int, seed: int = 0) -> DualSparseMatrix:
    """P = (1/s) * sum of s pairwise disjoint random permutation matrices.

    Exactly s nonzeros of value 1/s in every row and every column, so P is
    doubly stochastic and the uniform vector is stationary (the solvers are
    not told this). Deterministic per seed.
    """
    if not 1 <= s <= n:
        raise ValueError("s must satisfy 1 <= s <= n")
    rng = np.random.default_rng(seed)
    perms = np.empty((s, n), dtype=np.int64)
    for k in range(s):
        sigma = _try_disjoint_perm(rng, perms[:k], n)
        if sigma is None:
            # guaranteed completion: cyclic shifts of one random permutation
            # are pairwise disjoint for any s <= n
            pi = rng.permutation(n).astype(np.int64)
            base = np.arange(n, dtype=np.int64)
            perms = np.stack([pi[(base + r) % n] for r in range(s)])
            break
        perms[k] = sigma
    rows = np.tile(np.arange(n, dtype=np.int64), s)
    cols = perms.reshape(-1)
    vals = np.full(s * n, 1.0 / s)
    # disjointness makes duplicates impossible; the builder would refuse them
    return _dual_from_arrays(rows, cols, vals, n, n)


def load_snap_edgelist(path) -> EdgeList:
    """Parse a '#'-commented whitespace-separated edge list.

    Node ids are compacted to [0, n) in order of first appearance; duplicate
    edges collapse to one.
    """
    srcs: list[int] = []
    dsts: list[int] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            t = line.strip()
            if not t or t.startswith("#"):
                continue
            parts = t.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected two node ids, got {line.rstrip()!r}")
            try:
                a, b = int(parts[0]), int(parts[1])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-integer node id in {line.rstrip()!r}") from None
            if a < 0 or b < 0:
                raise ValueError(f"{path}:{lineno}: negative node id")
            srcs.append(a)
            dsts.append(b)
    if not srcs:
        raise ValueError(f"{path}: empty graph")
    flat = np.empty(2 * len(srcs), dtype=np.int64)
    flat[0::2] = srcs
    flat[1::2] = dsts
    uniq, first_pos = np.unique(flat, return_index=True)
    rank = np.empty(uniq.size, dtype=np.int64)
    rank[np.argsort(first_pos, kind="stable")] = np.arange(uniq.size)
    mapped = rank[np.searchsorted(uniq, flat)]
    edges = np.unique(np.stack([mapped[0::2], mapped[1::2]], axis=1), axis=0)
    return EdgeList(n_nodes=int(uniq.size), edges=edges)


def webgraph_to_P(g: EdgeList) -> DualSparseMatrix:
    """Random-walk matrix: P[i, j] = 1/outdeg(i) per edge i->j.

    A node with no outgoing edges becomes its own absorbing state via a
    self-loop of weight 1; a uniform teleport row would destroy the sparsity
    the solvers rely on.
    """
    n = g.n_nodes
    src = g.edges[:, 0]
    dst = g.edges[:, 1]
    outdeg = np.bincount(src, minlength=n)
    dangling = np.flatnonzero(outdeg == 0)
    rows = np.concatenate([src, dangling])
    cols = np.concatenate([dst, dangling])
    vals = np.concatenate([1.0 / outdeg[src], np.ones(dangling.size)])
    return _dual_from_arrays(rows, cols, vals, n, n)


def build_problem(spec: ProblemSpec) -> DualSparseMatrix:
    """The stochastic P described by spec."""
    if spec.family == DIAGONAL:
        return gen_diagonal(spec.n, spec.n_d, seed=spec.seed, random_weights=spec.random_weights)
    if spec.family == RANDOM_DS:
        return gen_random_ds(spec.n, spec.s, seed=spec.seed)
    return webgraph_to_P(load_snap_edgelist(spec.source_path))
