"""Flat-array index trees: pruned argmin/argmax tournaments and a weighted sampler.

Both structures are complete binary trees over leaves padded to a power of two,
stored heap-style in one contiguous array (node v has children 2v and 2v+1,
leaves occupy [capacity, 2*capacity)). Contiguous storage keeps updates cache
friendly; the update kernels climb only the root path and the tournament climb
stops early once a recomputed node is unchanged, which is what makes solver
iterations cheap in practice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

MIN = "min"
MAX = "max"

_PAD_INDEX = -1  # sentinel index stored on padding leaves


@dataclass
class TreeUpdateMetrics:
    updates: int
    total_levels_climbed: int
    full_height: int

    @property
    def avg_levels_climbed(self) -> float:
        return self.total_levels_climbed / self.updates if self.updates else 0.0


def _capacity_for(n: int) -> int:
    if n < 1:
        raise ValueError("tree needs at least one leaf")
    return 1 << (n - 1).bit_length()


@njit(cache=True, nogil=True, inline="always")
def _ext_update(idx, key, cap, i, new_key, prune):
    # Leaf write, then climb while the recomputed winner differs from the
    # stored one. With prune off the climb always reaches the root; winners
    # are identical either way. Leaf idx entries are fixed at build time.
    # Returns the number of levels climbed so callers can account for work
    # without a memory round trip per call.
    v = cap + i
    key[v] = new_key
    levels = 0
    v >>= 1
    while v >= 1:
        left = v + v
        right = left + 1
        kl = key[left]
        kr = key[right]
        il = idx[left]
        ir = idx[right]
        lw = (kl < kr) | ((kl == kr) & (il <= ir))
        wk = kl if lw else kr
        wi = il if lw else ir
        levels += 1
        if prune & (wk == key[v]) & (wi == idx[v]):
            return levels
        key[v] = wk
        idx[v] = wi
        v >>= 1
    return levels


@njit(cache=True, nogil=True)
def _ext_refresh(idx, key, cap, n):
    # Recompute internal nodes from already-written leaves, level by level,
    # skipping the trailing nodes whose descendants are all padding (those
    # never change). Produces exactly the tree the climb path would; callers
    # use it when a step touches a large fraction of the leaves, where one
    # branch-free sweep is cheaper than many climbs. Each level is an
    # independent vectorizable loop.
    hi = cap + n - 1
    lo = cap
    while lo > 1:
        lo >>= 1
        hi >>= 1
        for v in range(lo, hi + 1):
            left = v + v
            right = left + 1
            kl = key[left]
            kr = key[right]
            il = idx[left]
            ir = idx[right]
            lw = (kl < kr) | ((kl == kr) & (il <= ir))
            key[v] = kl if lw else kr
            idx[v] = il if lw else ir


class ArgExtremeTree:
    """Tournament tree answering argmin or argmax in O(1) with O(log n) updates.

    Internal nodes hold the winning (index, value) pair of their children; ties
    break toward the lower index so traces are reproducible. Values are stored
    sign-flipped for MAX so that one comparison kernel serves both directions.
    Padding leaves hold (sentinel, +inf after sign flip) and can never beat a
    real leaf.
    """

    def __init__(self, values, direction: str, prune: bool = True):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("values must be a nonempty 1-d array")
        if not np.isfinite(values).all():
            raise ValueError("values must be finite")
        if direction not in (MIN, MAX):
            raise ValueError(f"direction must be {MIN!r} or {MAX!r}")
        self.direction = direction
        self.prune = bool(prune)
        self._sign = 1.0 if direction == MIN else -1.0
        self.n = values.size
        self.capacity = _capacity_for(self.n)
        self._key = np.full(2 * self.capacity, np.inf, dtype=np.float64)
        self._idx = np.full(2 * self.capacity, _PAD_INDEX, dtype=np.int64)
        self._key[self.capacity : self.capacity + self.n] = self._sign * values
        self._idx[self.capacity : self.capacity + self.n] = np.arange(self.n)
        self._metrics = np.zeros(2, dtype=np.int64)
        self._rebuild()

    def _rebuild(self):
        key, idx = self._key, self._idx
        lo = self.capacity
        while lo > 1:
            lo >>= 1
            hi = 2 * lo
            ck = key[2 * lo : 2 * hi]
            ci = idx[2 * lo : 2 * hi]
            kl, kr = ck[0::2], ck[1::2]
            il, ir = ci[0::2], ci[1::2]
            left_wins = (kl < kr) | ((kl == kr) & (il <= ir))
            key[lo:hi] = np.where(left_wins, kl, kr)
            idx[lo:hi] = np.where(left_wins, il, ir)

    @property
    def full_height(self) -> int:
        return self.capacity.bit_length() - 1

    @property
    def metrics(self) -> TreeUpdateMetrics:
        return TreeUpdateMetrics(int(self._metrics[0]), int(self._metrics[1]), self.full_height)

    def reset_metrics(self) -> None:
        self._metrics[:] = 0

    def top(self) -> tuple[int, float]:
        """The extremum (index, value), lowest index on ties."""
        return int(self._idx[1]), float(self._sign * self._key[1])

    def value(self, i: int) -> float:
        if not 0 <= i < self.n:
            raise IndexError(f"leaf index {i} out of range")
        return float(self._sign * self._key[self.capacity + i])

    def values(self) -> np.ndarray:
        return self._sign * self._key[self.capacity : self.capacity + self.n]

    def update(self, i: int, v: float) -> None:
        if not 0 <= i < self.n:
            raise IndexError(f"leaf index {i} out of range")
        v = float(v)
        if not np.isfinite(v):
            raise ValueError("leaf value must be finite")
        self._metrics[0] += 1
        self._metrics[1] += _ext_update(self._idx, self._key, self.capacity, i, self._sign * v, self.prune)


def tree_build(values, direction: str, prune: bool = True) -> ArgExtremeTree:
    return ArgExtremeTree(values, direction, prune=prune)


def tree_update(t: ArgExtremeTree, i: int, v: float) -> None:
    t.update(i, v)


def tree_top(t: ArgExtremeTree) -> tuple[int, float]:
    return t.top()


@njit(cache=True, nogil=True)
def _wt_set(w, cap, i, val):
    v = cap + i
    w[v] = val
    v >>= 1
    while v >= 1:
        w[v] = w[v + v] + w[v + v + 1]
        v >>= 1


@njit(cache=True, nogil=True)
def _wt_descend(w, cap, u):
    # u uniform in [0, 1); one draw decides the whole path. Left branch is
    # taken when r <= left weight, but never into a zero-weight subtree, so a
    # zero-weight or padding leaf cannot be returned.
    r = u * w[1]
    v = 1
    while v < cap:
        left = v + v
        a = w[left]
        if a > 0.0 and r <= a:
            v = left
        else:
            r -= a
            v = left + 1
    return v - cap


@njit(cache=True, nogil=True)
def _wt_sample_many(w, cap, us, out):
    for t in range(us.shape[0]):
        out[t] = _wt_descend(w, cap, us[t])


class WeightTree:
    """Sum tree over nonnegative leaf weights for O(log n) categorical sampling.

    Every internal node holds exactly the sum of its children as computed, so
    the root is always consistent with the leaves without any periodic
    renormalization pass.
    """

    def __init__(self, weights):
        weights = np.asarray(weights, dtype=np.float64)
        if weights.ndim != 1 or weights.size == 0:
            raise ValueError("weights must be a nonempty 1-d array")
        if not np.isfinite(weights).all() or (weights < 0).any():
            raise ValueError("weights must be finite and nonnegative")
        if not (weights > 0).any():
            raise ValueError("at least one weight must be positive")
        self.n = weights.size
        self.capacity = _capacity_for(self.n)
        self._w = np.zeros(2 * self.capacity, dtype=np.float64)
        self._w[self.capacity : self.capacity + self.n] = weights
        lo = self.capacity
        w = self._w
        while lo > 1:
            lo >>= 1
            hi = 2 * lo
            cw = w[2 * lo : 2 * hi]
            w[lo:hi] = cw[0::2] + cw[1::2]

    @property
    def total(self) -> float:
        return float(self._w[1])

    def weights(self) -> np.ndarray:
        return self._w[self.capacity : self.capacity + self.n].copy()

    def update(self, i: int, weight: float) -> None:
        if not 0 <= i < self.n:
            raise IndexError(f"leaf index {i} out of range")
        weight = float(weight)
        if not np.isfinite(weight) or weight < 0.0:
            raise ValueError("weight must be finite and nonnegative")
        _wt_set(self._w, self.capacity, i, weight)

    def sample(self, rng: np.random.Generator) -> int:
        """One leaf index, P(i) = weight_i / total; consumes one uniform draw."""
        if not self._w[1] > 0.0:
            raise ValueError("cannot sample from a zero-total tree")
        return int(_wt_descend(self._w, self.capacity, rng.random()))

    def sample_many(self, rng: np.random.Generator, m: int) -> np.ndarray:
        if not self._w[1] > 0.0:
            raise ValueError("cannot sample from a zero-total tree")
        us = rng.random(m)
        out = np.empty(m, dtype=np.int64)
        _wt_sample_many(self._w, self.capacity, us, out)
        return out

    def scale_all(self, factor: float) -> None:
        """Multiply every node by factor; sampling probabilities unchanged."""
        factor = float(factor)
        if not np.isfinite(factor) or factor <= 0.0:
            raise ValueError("scale factor must be finite and positive")
        self._w *= factor


def wt_build(weights) -> WeightTree:
    return WeightTree(weights)


def wt_update(t: WeightTree, i: int, w: float) -> None:
    t.update(i, w)


def wt_sample(t: WeightTree, rng: np.random.Generator) -> int:
    return t.sample(rng)


def wt_scale_all(t: WeightTree, factor: float) -> None:
    t.scale_all(factor)
